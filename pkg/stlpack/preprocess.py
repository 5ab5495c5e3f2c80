"""
Flag-based compression of the extended state.

Each sub-formula gets a flag in `(0, 1]` or `-inf` describing where in its interval the
inner formula was met; transformed flags `f - 1/2` (or `-1/2`) replace the state window
as network input.
"""

import numpy as np

from stlpack.errors import StlPackError, WindowError
from stlpack.mdp import flatten
from stlpack.stl import GLOBALLY, as_trace, satisfaction_signal


class FlagVector:

    def __init__(self, raw):
        self.raw = np.asarray(raw, dtype=np.float64)
        self.transformed = np.array([transform_flag(f) for f in self.raw])

    def __len__(self):
        return len(self.raw)


class PreprocessedState:
    """Network-side state `[current state, transformed flags, action history]`.
    """

    def __init__(self, current_state, flags, action_history):
        self.current_state = np.asarray(current_state, dtype=np.float64)
        self.flags = flags
        self.action_history = np.asarray(action_history, dtype=np.float64)

    def as_vector(self, input_shift=None):
        """Flattened state; `input_shift` is subtracted from the current state only.
        """
        current = self.current_state if input_shift is None else self.current_state - input_shift
        return np.concatenate([current, self.flags.transformed, self.action_history.ravel()])

    def __len__(self):
        return len(self.current_state) + len(self.flags) + self.action_history.size


def flag_value(window, sub):
    """Flag of sub-formula `sub` over a state window.

    For `G[ts,te]` the flag is the fraction of the interval covered by the longest run of
    satisfied steps ending at `te`; for `F[ts,te]` it is the normalised position of the last
    satisfied step. Both are `-inf` when no step qualifies.

    Raises:
        WindowError: Raised when the window is shorter than `sub.t_end + 1`.
    """
    window = as_trace(window)
    if len(window) < sub.t_end + 1:
        raise WindowError('Flag of %s[%s,%s] needs %s states, window has %s'
                          % (sub.op, sub.t_start, sub.t_end, sub.t_end + 1, len(window)))
    sat = satisfaction_signal(window[sub.t_start:sub.t_end + 1], sub.body)
    width = sub.t_end - sub.t_start + 1
    if sub.op == GLOBALLY:
        if not sat[-1]:
            return float('-inf')
        misses = np.flatnonzero(~sat)
        run = width - (misses[-1] + 1) if misses.size else width
        return float(run / width)
    hits = np.flatnonzero(sat)
    if not hits.size:
        return float('-inf')
    return float((hits[-1] + 1) / width)


def transform_flag(f):
    """Centers a flag: `f - 1/2` for finite flags, `-1/2` for `-inf`.
    """
    if np.isfinite(f):
        return f - 0.5
    return -0.5


def preprocess_state(z, subs):
    """Computes the flag of every sub-formula and assembles the preprocessed state.

    Raises:
        StlPackError: Raised when `subs` is empty.
    """
    if not subs:
        raise StlPackError('Preprocessing needs at least one sub-formula')
    flags = FlagVector([flag_value(z.window, sub) for sub in subs])
    return PreprocessedState(z.current, flags, z.history)


class InputEncoder:
    """Turns extended states into network inputs.

    With `use_flags` the input is the preprocessed state, otherwise the flattened extended
    state. States are shifted by `input_shift`; flags and actions are left untouched.
    """

    def __init__(self, subs, tau, d, n_x, n_u, use_flags=True, input_shift=None):
        self.subs = list(subs)
        self.tau = tau
        self.d = d
        self.n_x = n_x
        self.n_u = n_u
        self.use_flags = use_flags
        self.input_shift = np.zeros(n_x) if input_shift is None else np.asarray(input_shift, dtype=np.float64)

    @property
    def dim(self):
        if self.use_flags:
            return self.n_x + len(self.subs) + self.d * self.n_u
        return self.tau * self.n_x + self.d * self.n_u

    def encode(self, z):
        if self.use_flags:
            return preprocess_state(z, self.subs).as_vector(self.input_shift)
        shifted = z.window - self.input_shift
        return flatten(type(z)(shifted, z.history))
