"""
Extended state of the delay-aware MDP: the last `tau` states plus the last `d` decided actions.
"""

import math

import numpy as np

from stlpack.errors import DimensionError, StlPackError
from stlpack.plant import step
from stlpack.stl import FINALLY, GLOBALLY, robustness, robustness_signal


class ExtendedState:
    """Immutable pair `(window, history)`; row 0 is the oldest entry of both arrays.
    """

    def __init__(self, window, history):
        window = np.array(window, dtype=np.float64)
        history = np.array(history, dtype=np.float64)
        if window.ndim != 2 or window.shape[0] < 1:
            raise DimensionError('window should be a non-empty (tau, n_x) array, got %s' % (window.shape,))
        if history.ndim != 2:
            raise DimensionError('history should be a (d, n_u) array, got %s' % (history.shape,))
        window.flags.writeable = False
        history.flags.writeable = False
        self.window = window
        self.history = history

    @property
    def tau(self):
        return self.window.shape[0]

    @property
    def d(self):
        return self.history.shape[0]

    @property
    def n_x(self):
        return self.window.shape[1]

    @property
    def n_u(self):
        return self.history.shape[1]

    @property
    def current(self):
        return self.window[-1]

    def __repr__(self):
        return 'ExtendedState(tau=%s, d=%s)' % (self.tau, self.d)


class RewardParams:

    def __init__(self, beta, outer_op):
        if not beta > 0:
            raise StlPackError('beta must be positive, got %s' % beta)
        if outer_op not in (GLOBALLY, FINALLY):
            raise StlPackError('Unknown outer operator: %s' % outer_op)
        self.beta = float(beta)
        self.outer_op = outer_op


def init_extended(x0, tau, d, n_u):
    """Initial extended state: `tau` copies of `x0` and `d` zero actions.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim != 1:
        raise DimensionError('x0 should be a vector, got shape %s' % (x0.shape,))
    return ExtendedState(np.tile(x0, (tau, 1)), np.zeros((d, n_u)))


def advance_extended(z, new_x, new_a):
    """Shifts both sequences left by one and appends `new_x` and `new_a`.

    Raises:
        DimensionError: Raised when `new_x` or `new_a` have the wrong size.
    """
    new_x = np.asarray(new_x, dtype=np.float64)
    new_a = np.asarray(new_a, dtype=np.float64)
    if new_x.shape != (z.n_x,):
        raise DimensionError('new_x should have shape (%s,), got %s' % (z.n_x, new_x.shape))
    if new_a.shape != (z.n_u,):
        raise DimensionError('new_a should have shape (%s,), got %s' % (z.n_u, new_a.shape))
    window = np.vstack([z.window[1:], new_x])
    history = np.vstack([z.history[1:], new_a]) if z.d else z.history
    return ExtendedState(window, history)


def flatten(z):
    """Window rows followed by history rows; length `tau * n_x + d * n_u`.
    """
    return np.concatenate([z.window.ravel(), z.history.ravel()])


def reward(z, phi, params):
    """STL reward of the extended state, computed from the window only.

    Globally-outer specs give `-exp(-beta * 1(rho))`, finally-outer specs `exp(beta * 1(rho))`,
    where `rho` is the robustness of `phi` at the window start and `1(rho)` is 1 for `rho >= 0`.
    """
    rho = robustness(z.window, 0, phi)
    # a -0.0 tie under negation counts as met here although satisfies() reports a violation
    return _reward_value(params, 1.0 if rho >= 0 else 0.0)


def _reward_value(params, indicator):
    if params.outer_op == GLOBALLY:
        return -math.exp(-params.beta * indicator)
    return math.exp(params.beta * indicator)


def transition(z, a, model, delays, rng):
    """Samples the successor of `z` under action `a` directly from the extended-state dynamics.

    The plant receives the action decided `d_sc + d_ca` decisions ago (zero before that).

    Returns:
        tuple: `(z', applied_input)`.
    """
    a = np.asarray(a, dtype=np.float64)
    if z.d < delays.total_delay:
        raise StlPackError('History of length %s cannot cover a delay of %s' % (z.d, delays.total_delay))
    pending = np.vstack([z.history, a])
    applied = pending[z.d - delays.total_delay]
    x_next = step(model, z.current, applied, rng)
    return advance_extended(z, x_next, a), applied


def window_at(states, k, tau):
    """Window of decision `k` from a state sequence, padded with `x_0` before the start.
    """
    states = np.asarray(states, dtype=np.float64)
    idx = np.clip(np.arange(k - tau + 1, k + 1), 0, None)
    return states[idx]


def rewards_along(states, phi, params, tau):
    """Rewards of the extended states `z_0 .. z_{len(states)-1}` of one trajectory.

    Equal to calling `reward` on every `window_at(states, k, tau)`, computed in one pass.
    """
    states = np.asarray(states, dtype=np.float64)
    padded = np.vstack([np.tile(states[0], (tau - 1, 1)), states])
    rho = robustness_signal(padded, phi)
    return np.where(rho >= 0, _reward_value(params, 1.0), _reward_value(params, 0.0))
