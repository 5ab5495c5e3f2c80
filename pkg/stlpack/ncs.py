"""
Networked control loop with constant sensor-to-controller and controller-to-actuator delays.

The actuator applies the zero input until the first action arrives and then holds the last
delivered action. Messages are kept in FIFO channels tagged with their delivery step.
"""

from collections import deque

import numpy as np

from stlpack.errors import ChannelError, StlPackError
from stlpack.plant import sample_initial, step


class DelayConfig:
    """True delays and their known bounds, in steps. `d` is always `d_sc_max + d_ca_max`.
    """

    def __init__(self, d_sc, d_ca, d_sc_max, d_ca_max, hold_until_max=False):
        """
        Args:
            d_sc (int): Sensor to controller delay.
            d_ca (int): Controller to actuator delay.
            d_sc_max (int): Known bound of `d_sc`.
            d_ca_max (int): Known bound of `d_ca`.
            hold_until_max (bool, optional): Worst-case timing: observations are handed to the agent
                `d_sc_max` steps after sampling and actions applied `d` steps after it.
        """
        for name, value in (('d_sc', d_sc), ('d_ca', d_ca), ('d_sc_max', d_sc_max), ('d_ca_max', d_ca_max)):
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
                raise StlPackError('%s must be a non-negative integer, got %r' % (name, value))
        if d_sc > d_sc_max:
            raise StlPackError('d_sc=%s exceeds its bound %s' % (d_sc, d_sc_max))
        if d_ca > d_ca_max:
            raise StlPackError('d_ca=%s exceeds its bound %s' % (d_ca, d_ca_max))
        self.d_sc = int(d_sc)
        self.d_ca = int(d_ca)
        self.d_sc_max = int(d_sc_max)
        self.d_ca_max = int(d_ca_max)
        self.hold_until_max = hold_until_max

    @property
    def d(self):
        return self.d_sc_max + self.d_ca_max

    @property
    def sensor_delay(self):
        """Steps between sampling a state and handing it to the agent."""
        return self.d_sc_max if self.hold_until_max else self.d_sc

    @property
    def actuator_delay(self):
        """Steps between sending an action and applying it."""
        return self.d_ca_max if self.hold_until_max else self.d_ca

    @property
    def total_delay(self):
        return self.sensor_delay + self.actuator_delay

    def __repr__(self):
        return 'DelayConfig(d_sc=%s, d_ca=%s, d_sc_max=%s, d_ca_max=%s%s)' % (
            self.d_sc, self.d_ca, self.d_sc_max, self.d_ca_max, ', hold_until_max' if self.hold_until_max else '')


class LoopState:
    """Mutable state of one episode. Owned by a single episode runner.
    """

    def __init__(self, model, delays, x0):
        self.model = model
        self.delays = delays
        self.t = 0
        self.x = x0
        self.sensor_channel = deque()
        self.actuator_channel = deque()
        self.held_input = np.zeros(model.n_u)
        self.sent = set()
        self.states = [x0]
        self.inputs = []

    @property
    def sensor_depth(self):
        return len(self.sensor_channel)

    @property
    def actuator_depth(self):
        return len(self.actuator_channel)


def begin_episode(model, delays, rng, x0=None):
    """Starts an episode: samples `x_0` (unless given) and puts it on the sensor channel.

    Returns:
        LoopState: Loop at `t = 0` with the zero input held.
    """
    if x0 is None:
        x0 = sample_initial(model, rng)
    x0 = np.array(x0, dtype=np.float64)
    loop = LoopState(model, delays, x0)
    loop.sensor_channel.append((0, x0, delays.sensor_delay))
    return loop


def poll_observation(loop):
    """Receives the observation due at the current step.

    Returns:
        tuple: `(k, x_k)` or `None` when nothing arrives.
    """
    if loop.sensor_channel and loop.sensor_channel[0][2] <= loop.t:
        k, x, _ = loop.sensor_channel.popleft()
        return k, x
    return None


def send_action(loop, k, a):
    """Sends action `a_k` to the actuator; it is applied `actuator_delay` steps from now.

    Raises:
        ChannelError: Raised when an action with index `k` was already sent.
    """
    if k in loop.sent:
        raise ChannelError('Action %s was already sent' % k)
    loop.sent.add(k)
    loop.actuator_channel.append((k, loop.model.clamp(a), loop.t + loop.delays.actuator_delay))


def advance(loop, model, rng):
    """Delivers due actions, steps the plant with the held input and ships the new state.

    Returns:
        tuple: `(x_{t+1}, u_t)`.
    """
    while loop.actuator_channel and loop.actuator_channel[0][2] <= loop.t:
        _, a, _ = loop.actuator_channel.popleft()
        loop.held_input = a
    u = loop.held_input
    x_next = step(model, loop.x, u, rng)
    loop.inputs.append(u)
    loop.states.append(x_next)
    loop.x = x_next
    loop.t += 1
    loop.sensor_channel.append((loop.t, x_next, loop.t + loop.delays.sensor_delay))
    return x_next, u
