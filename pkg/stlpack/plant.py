"""
Stochastic discrete-time plants `x' = f(x, u) + noise_gain . w` with `w` standard normal.
"""

import logging

import numpy as np

from stlpack.errors import DimensionError, StlPackError

logger = logging.getLogger(__name__)


def make_rng(seed):
    """Seeded random stream; the same seed always yields the same draws.
    """
    return np.random.default_rng(seed)


class PlantModel:
    """Plant definition shared read-only by every rollout.
    """

    def __init__(self, name, n_x, n_u, dynamics, noise_gain, init_low, init_high,
                 action_low, action_high, input_shift=None):
        """
        Args:
            name (str): Registry name.
            n_x (int): State dimension.
            n_u (int): Input dimension.
            dynamics (callable): Deterministic map `f(x, u)` returning the next state.
            noise_gain (array): `(n_x, n_x)` matrix applied to standard normal noise.
            init_low (array): Lower corner of the initial state box.
            init_high (array): Upper corner of the initial state box.
            action_low (array): Lower corner of the input box.
            action_high (array): Upper corner of the input box.
            input_shift (array, optional): Offset subtracted from states before they reach a network.
        """
        self.name = name
        self.n_x = n_x
        self.n_u = n_u
        self.dynamics = dynamics
        self.noise_gain = _matrix(noise_gain, n_x, 'noise_gain')
        self.init_low = _vector(init_low, n_x, 'init_low')
        self.init_high = _vector(init_high, n_x, 'init_high')
        self.action_low = _vector(action_low, n_u, 'action_low')
        self.action_high = _vector(action_high, n_u, 'action_high')
        if input_shift is None:
            input_shift = np.zeros(n_x)
        self.input_shift = _vector(input_shift, n_x, 'input_shift')
        if np.any(self.init_low > self.init_high):
            raise StlPackError('init_low must not exceed init_high')
        if np.any(self.action_low > self.action_high):
            raise StlPackError('action_low must not exceed action_high')
        if abs(np.linalg.det(self.noise_gain)) == 0.0:
            logger.warning('Plant %s has a singular noise gain, steps are not fully stochastic', name)

    def clamp(self, u):
        """Clamps an input componentwise onto the action box.
        """
        u = _vector(u, self.n_u, 'u')
        return np.minimum(np.maximum(u, self.action_low), self.action_high)

    def normalize(self, x):
        """Network-side view of a state; rewards and STL evaluation keep the raw state.
        """
        return np.asarray(x, dtype=np.float64) - self.input_shift

    def __repr__(self):
        return 'PlantModel(%s, n_x=%s, n_u=%s)' % (self.name, self.n_x, self.n_u)


def _vector(value, size, name):
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (size,):
        raise DimensionError('%s should have shape (%s,), got %s' % (name, size, arr.shape))
    return arr


def _matrix(value, size, name):
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr * np.eye(size)
    if arr.shape != (size, size):
        raise DimensionError('%s should have shape (%s, %s), got %s' % (name, size, size, arr.shape))
    return arr


def sample_initial(model, rng):
    """Draws an initial state uniformly from the model's initial box.
    """
    return rng.uniform(model.init_low, model.init_high)


def step(model, x, u, rng):
    """Advances the plant by one step.

    The input is clamped onto the action box before integration. Noise is always drawn,
    also with a zero gain, so that streams stay aligned between runs.

    Args:
        model (PlantModel): The plant.
        x (array): Current state.
        u (array): Applied input.
        rng (numpy.random.Generator): Noise stream.

    Returns:
        numpy.ndarray: The next state.

    Raises:
        DimensionError: Raised when `x` or `u` have the wrong size.
    """
    x = _vector(x, model.n_x, 'x')
    u = model.clamp(u)
    w = rng.standard_normal(model.n_x)
    return np.asarray(model.dynamics(x, u), dtype=np.float64) + model.noise_gain @ w


def unicycle(dt=0.1, noise_scale=0.01, init_low=None, init_high=None, action_low=None, action_high=None,
             input_shift=None):
    """Two-wheeled robot `(x, y, heading)` driven by `(speed, turn rate)`; the heading is not wrapped.

    The default input shift centres network inputs on the 5 x 5 arena.
    """
    def dynamics(x, u):
        return np.array([
            x[0] + dt * u[0] * np.cos(x[2]),
            x[1] + dt * u[0] * np.sin(x[2]),
            x[2] + dt * u[1],
        ])

    return PlantModel(
        'unicycle', 3, 2, dynamics,
        noise_gain=noise_scale * np.eye(3),
        init_low=init_low if init_low is not None else [0.0, 0.0, -np.pi / 2],
        init_high=init_high if init_high is not None else [2.5, 2.5, np.pi / 2],
        action_low=action_low if action_low is not None else [-1.0, -1.0],
        action_high=action_high if action_high is not None else [1.0, 1.0],
        input_shift=input_shift if input_shift is not None else [2.5, 2.5, 0.0],
    )


def double_integrator(dt=0.1, noise_scale=0.01, init_low=None, init_high=None, action_low=None, action_high=None,
                      input_shift=None):
    """Point mass `(position, velocity)` driven by an acceleration.
    """
    def dynamics(x, u):
        return np.array([x[0] + dt * x[1], x[1] + dt * u[0]])

    return PlantModel(
        'double_integrator', 2, 1, dynamics,
        noise_gain=noise_scale * np.eye(2),
        init_low=init_low if init_low is not None else [-1.0, 0.0],
        init_high=init_high if init_high is not None else [1.0, 0.0],
        action_low=action_low if action_low is not None else [-1.0],
        action_high=action_high if action_high is not None else [1.0],
        input_shift=input_shift,
    )


PLANTS = {
    'unicycle': unicycle,
    'double_integrator': double_integrator,
}


def build_plant(name, **params):
    """Instantiates a registered plant.

    Raises:
        StlPackError: Raised for an unknown plant name.
    """
    try:
        factory = PLANTS[name]
    except KeyError:
        raise StlPackError('Unknown plant: %s (known: %s)' % (name, ', '.join(sorted(PLANTS))))
    return factory(**params)
