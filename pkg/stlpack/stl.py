"""
Signal temporal logic over discrete-time traces, restricted to the three level fragment

    spec  := G[0,Te](phi) | F[0,Te](phi)
    phi   := sub-formulae G[ts,te](inner) / F[ts,te](inner) combined with && and ||
    inner := predicates a.x <= b combined with !, && and ||

A trace is a `(length, n_x)` float array; one dimensional input is read as a scalar signal.
"""

import re
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from stlpack.errors import ParseError, StlPackError, WindowError

GLOBALLY = 'G'
FINALLY = 'F'
TEMPORAL_OPS = (GLOBALLY, FINALLY)


@dataclass(frozen=True)
class Predicate:
    """Affine predicate `coeffs . x <= bound`.
    """
    coeffs: tuple
    bound: float

    def __post_init__(self):
        object.__setattr__(self, 'coeffs', tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, 'bound', float(self.bound))
        if not any(c != 0.0 for c in self.coeffs):
            raise StlPackError('Predicate needs at least one nonzero coefficient')

    @property
    def n_x(self):
        return len(self.coeffs)


@dataclass(frozen=True)
class Not:
    child: object


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


@dataclass(frozen=True)
class SubFormula:
    """Temporal sub-formula `op[t_start, t_end](body)` whose body has no temporal operator.
    """
    op: str
    t_start: int
    t_end: int
    body: object

    def __post_init__(self):
        if self.op not in TEMPORAL_OPS:
            raise StlPackError('Unknown temporal operator: %s' % self.op)
        if not 0 <= self.t_start <= self.t_end:
            raise StlPackError('Invalid interval [%s,%s]' % (self.t_start, self.t_end))


@dataclass(frozen=True)
class Phi:
    """And/Or combination of sub-formulae. `subs` lists the distinct leaves in document order.
    """
    root: object
    subs: tuple = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'subs', tuple(_leaves(self.root)))


@dataclass(frozen=True)
class Spec:
    """Outer specification `outer_op[0, horizon_end](phi)`.

    `tau` is the state window length hrz(phi) + 1 and `total_horizon` is T = horizon_end + tau - 1.
    """
    outer_op: str
    horizon_end: int
    phi: Phi
    tau: int = field(init=False, compare=False)
    total_horizon: int = field(init=False, compare=False)

    def __post_init__(self):
        if self.outer_op not in TEMPORAL_OPS:
            raise StlPackError('Unknown temporal operator: %s' % self.outer_op)
        if self.horizon_end < 0:
            raise StlPackError('Negative horizon: %s' % self.horizon_end)
        tau = horizon(self.phi) + 1
        object.__setattr__(self, 'tau', tau)
        object.__setattr__(self, 'total_horizon', self.horizon_end + tau - 1)

    @property
    def subs(self):
        return self.phi.subs

    def __str__(self):
        return format_formula(self)


def _leaves(node):
    seen = []
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, SubFormula):
            if current not in seen:
                seen.append(current)
        elif isinstance(current, (And, Or)):
            stack.extend(reversed(current.children))
        else:
            raise StlPackError('Not a sub-formula combination: %r' % (current,))
    return seen


def _combine(kind, items):
    flat = []
    for item in items:
        if isinstance(item, kind):
            flat.extend(item.children)
        else:
            flat.append(item)
    if len(flat) == 1:
        return flat[0]
    return kind(tuple(flat))


def conjunction(*items):
    """Builds a flattened n-ary `And`."""
    return _combine(And, items)


def disjunction(*items):
    """Builds a flattened n-ary `Or`."""
    return _combine(Or, items)


def decompose(phi):
    """Returns the sub-formulae of `phi` in canonical (document) order, the order used by the flag vector.
    """
    if isinstance(phi, Spec):
        phi = phi.phi
    return list(phi.subs)


def horizon(f):
    """Number of steps after the evaluation instant that formula `f` needs.
    """
    if isinstance(f, Predicate):
        return 0
    if isinstance(f, Not):
        return horizon(f.child)
    if isinstance(f, (And, Or)):
        return max(horizon(c) for c in f.children)
    if isinstance(f, SubFormula):
        return f.t_end + horizon(f.body)
    if isinstance(f, Phi):
        return horizon(f.root)
    if isinstance(f, Spec):
        return f.horizon_end + horizon(f.phi)
    raise StlPackError('Not a formula: %r' % (f,))


def as_trace(trace):
    """Converts a sequence of states into a `(length, n_x)` float array.
    """
    arr = np.asarray(trace, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise WindowError('A trace needs at least one state, got shape %s' % (arr.shape,))
    return arr


def _affine(states, pred):
    if states.shape[1] != pred.n_x:
        raise WindowError('Predicate over %s variables applied to states of dimension %s'
                          % (pred.n_x, states.shape[1]))
    # fixed summation order keeps robustness and satisfaction on the same rounding
    h = np.zeros(states.shape[0])
    for i, c in enumerate(pred.coeffs):
        if c != 0.0:
            h = h + c * states[:, i]
    return h


def _window_reduce(signal, t_start, t_end, reduce):
    count = len(signal) - t_end
    if count <= 0:
        return signal[:0]
    windows = sliding_window_view(signal[t_start:], t_end - t_start + 1)[:count]
    return reduce(windows, axis=1)


def robustness_signal(states, f):
    """Robustness of `f` at every start index `t` with `t + horizon(f) < len(states)`.

    Args:
        states (numpy.ndarray): `(length, n_x)` trace.
        f: Any formula level.

    Returns:
        numpy.ndarray: Array of length `len(states) - horizon(f)` (empty if the trace is too short).
    """
    if isinstance(f, Predicate):
        return f.bound - _affine(states, f)
    if isinstance(f, Not):
        return -robustness_signal(states, f.child)
    if isinstance(f, (And, Or)):
        count = max(len(states) - horizon(f), 0)
        signals = np.stack([robustness_signal(states, c)[:count] for c in f.children])
        return signals.min(axis=0) if isinstance(f, And) else signals.max(axis=0)
    if isinstance(f, SubFormula):
        reduce = np.min if f.op == GLOBALLY else np.max
        return _window_reduce(robustness_signal(states, f.body), f.t_start, f.t_end, reduce)
    if isinstance(f, Phi):
        return robustness_signal(states, f.root)
    if isinstance(f, Spec):
        reduce = np.min if f.outer_op == GLOBALLY else np.max
        return _window_reduce(robustness_signal(states, f.phi), 0, f.horizon_end, reduce)
    raise StlPackError('Not a formula: %r' % (f,))


def satisfaction_signal(states, f):
    """Boolean satisfaction of `f` at every admissible start index, computed without robustness values.
    """
    if isinstance(f, Predicate):
        return _affine(states, f) <= f.bound
    if isinstance(f, Not):
        return ~satisfaction_signal(states, f.child)
    if isinstance(f, (And, Or)):
        count = max(len(states) - horizon(f), 0)
        signals = np.stack([satisfaction_signal(states, c)[:count] for c in f.children])
        return signals.all(axis=0) if isinstance(f, And) else signals.any(axis=0)
    if isinstance(f, SubFormula):
        reduce = np.all if f.op == GLOBALLY else np.any
        return _window_reduce(satisfaction_signal(states, f.body), f.t_start, f.t_end, reduce)
    if isinstance(f, Phi):
        return satisfaction_signal(states, f.root)
    if isinstance(f, Spec):
        reduce = np.all if f.outer_op == GLOBALLY else np.any
        return _window_reduce(satisfaction_signal(states, f.phi), 0, f.horizon_end, reduce)
    raise StlPackError('Not a formula: %r' % (f,))


def _window(trace, t, f):
    states = as_trace(trace)
    hrz = horizon(f)
    if t < 0 or t + hrz >= len(states):
        raise WindowError('Formula with horizon %s at t=%s needs %s states, trace has %s'
                          % (hrz, t, t + hrz + 1, len(states)))
    return states[t:t + hrz + 1]


def robustness(trace, t, f):
    """Quantitative semantics of `f` on `trace` at time index `t`.

    Raises:
        WindowError: Raised when `t + horizon(f)` falls outside the trace.
    """
    return float(robustness_signal(_window(trace, t, f), f)[0])


def satisfies(trace, t, f):
    """Boolean semantics of `f` on `trace` at time index `t`.

    Raises:
        WindowError: Raised when `t + horizon(f)` falls outside the trace.
    """
    return bool(satisfaction_signal(_window(trace, t, f), f)[0])


# Parsing

_TOKEN_RE = re.compile(r'''
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<var>x\d+)
  | (?P<temporal>[GF])
  | (?P<op>&&|\|\||<=|>=|[!()\[\],*+-])
''', re.VERBOSE)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError('Unexpected character %r' % text[pos], pos, text)
        kind = match.lastgroup
        if kind != 'ws':
            tokens.append((kind, match.group(), pos))
        pos = match.end()
    tokens.append(('end', '', len(text)))
    return tokens


class _Parser:

    def __init__(self, text, n_x):
        self.text = text
        self.n_x = n_x
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self, value=None, kind=None):
        tok_kind, tok_value, _ = self.tokens[self.index]
        if kind is not None and tok_kind != kind:
            return False
        if value is not None and tok_value != value:
            return False
        return True

    def take(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, value=None, kind=None):
        if not self.peek(value, kind):
            self.error('Expected %s' % (repr(value) if value else kind))
        return self.take()

    def error(self, msg):
        kind, value, pos = self.tokens[self.index]
        found = 'end of input' if kind == 'end' else repr(value)
        raise ParseError('%s, found %s' % (msg, found), pos, self.text)

    def spec(self):
        head_pos = self.tokens[self.index][2]
        op, t_start, t_end = self.temporal_head()
        if t_start != 0:
            raise ParseError('The outer interval must start at 0', head_pos, self.text)
        self.expect('(')
        phi = Phi(self.phi_or())
        self.expect(')')
        self.expect(kind='end')
        return Spec(op, t_end, phi)

    def temporal_head(self):
        op = self.expect(kind='temporal')[1]
        self.expect('[')
        start_pos = self.tokens[self.index][2]
        t_start = self.integer()
        self.expect(',')
        t_end = self.integer()
        self.expect(']')
        if t_start > t_end:
            raise ParseError('Interval start %s is after its end %s' % (t_start, t_end), start_pos, self.text)
        return op, t_start, t_end

    def integer(self):
        if not self.peek(kind='num') or not self.tokens[self.index][1].isdigit():
            self.error('Expected a non-negative integer time step')
        return int(self.take()[1])

    def number(self):
        sign = 1.0
        if self.peek('-'):
            self.take()
            sign = -1.0
        elif self.peek('+'):
            self.take()
        return sign * float(self.expect(kind='num')[1])

    def phi_or(self):
        items = [self.phi_and()]
        while self.peek('||'):
            self.take()
            items.append(self.phi_and())
        return disjunction(*items)

    def phi_and(self):
        items = [self.phi_term()]
        while self.peek('&&'):
            self.take()
            items.append(self.phi_term())
        return conjunction(*items)

    def phi_term(self):
        if self.peek(kind='temporal'):
            op, t_start, t_end = self.temporal_head()
            self.expect('(')
            body = self.inner_or()
            self.expect(')')
            return SubFormula(op, t_start, t_end, body)
        if self.peek('('):
            self.take()
            node = self.phi_or()
            self.expect(')')
            return node
        # a state formula at this level is G[0,0](...), which has the same meaning
        return SubFormula(GLOBALLY, 0, 0, self.inner_atom())

    def inner_or(self):
        items = [self.inner_and()]
        while self.peek('||'):
            self.take()
            items.append(self.inner_and())
        return disjunction(*items)

    def inner_and(self):
        items = [self.inner_atom()]
        while self.peek('&&'):
            self.take()
            items.append(self.inner_atom())
        return conjunction(*items)

    def inner_atom(self):
        if self.peek(kind='temporal'):
            self.error('Temporal operator nested inside a sub-formula is outside the supported fragment')
        if self.peek('!'):
            self.take()
            return Not(self.inner_atom())
        if self.peek('('):
            self.take()
            node = self.inner_or()
            self.expect(')')
            return node
        return self.predicate()

    def predicate(self):
        start = self.index
        coeffs = [0.0] * self.n_x
        sign = 1.0
        if self.peek('-'):
            self.take()
            sign = -1.0
        while True:
            coef = 1.0
            if self.peek(kind='num'):
                coef = float(self.take()[1])
                self.expect('*')
            var_pos = self.tokens[self.index][2]
            var = self.expect(kind='var')[1]
            idx = int(var[1:])
            if idx >= self.n_x:
                raise ParseError('Variable %s is out of range for a %s-dimensional state' % (var, self.n_x),
                                 var_pos, self.text)
            coeffs[idx] += sign * coef
            if self.peek('+') or self.peek('-'):
                sign = 1.0 if self.take()[1] == '+' else -1.0
                continue
            break
        if self.peek('<='):
            flip = False
        elif self.peek('>='):
            flip = True
        else:
            self.error('Expected <= or >=')
        self.take()
        bound = self.number()
        if not any(c != 0.0 for c in coeffs):
            self.index = start
            self.error('Predicate has no nonzero coefficient')
        if flip:
            coeffs = [-c for c in coeffs]
            bound = -bound
        return Predicate(tuple(coeffs), bound)


def parse_stl(text, n_x):
    """Parses the text form of a specification.

    Args:
        text (str): Formula such as `G[0,900](F[0,99](x0>=3.75 && x0<=5) && F[0,99](x1<=2.5))`.
        n_x (int): State dimension; variables are `x0 .. x{n_x-1}`.

    Returns:
        Spec: Parsed specification with `tau` and `total_horizon` computed.

    Raises:
        ParseError: Raised on syntax errors, temporal nesting outside the fragment, reversed
        intervals and out of range variables.
    """
    if n_x < 1:
        raise ParseError('State dimension must be positive, got %s' % n_x)
    return _Parser(text, n_x).spec()


# Printing

def _num(value):
    return repr(float(value))


def _format_predicate(pred):
    nonzero = [(i, c) for i, c in enumerate(pred.coeffs) if c != 0.0]
    if len(nonzero) == 1 and nonzero[0][1] == 1.0:
        return 'x%d<=%s' % (nonzero[0][0], _num(pred.bound))
    if len(nonzero) == 1 and nonzero[0][1] == -1.0:
        return 'x%d>=%s' % (nonzero[0][0], _num(-pred.bound))
    parts = []
    for i, c in nonzero:
        term = '%s*x%d' % (_num(abs(c)), i)
        if not parts:
            parts.append(term if c > 0 else '-' + term)
        else:
            parts.append(('+ ' if c > 0 else '- ') + term)
    return '%s <= %s' % (' '.join(parts), _num(pred.bound))


def format_formula(f):
    """Renders any formula level in the syntax accepted by `parse_stl`.
    """
    if isinstance(f, Predicate):
        return _format_predicate(f)
    if isinstance(f, Not):
        child = format_formula(f.child)
        if isinstance(f.child, (And, Or)):
            child = '(%s)' % child
        return '!' + child
    if isinstance(f, And):
        return ' && '.join('(%s)' % format_formula(c) if isinstance(c, Or) else format_formula(c)
                           for c in f.children)
    if isinstance(f, Or):
        return ' || '.join(format_formula(c) for c in f.children)
    if isinstance(f, SubFormula):
        return '%s[%d,%d](%s)' % (f.op, f.t_start, f.t_end, format_formula(f.body))
    if isinstance(f, Phi):
        return format_formula(f.root)
    if isinstance(f, Spec):
        return '%s[0,%d](%s)' % (f.outer_op, f.horizon_end, format_formula(f.phi))
    raise StlPackError('Not a formula: %r' % (f,))
