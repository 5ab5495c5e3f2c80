"""
Soft actor-critic over network inputs built from extended states.

The actor is a tanh-squashed Gaussian, the critics are a clipped double pair with soft-updated
targets, and the entropy temperature is learned in log space. Every update is one Adam step.
"""

import json
import logging
import math
import os

import numpy as np

from stlpack.errors import CheckpointError, DimensionError, NonFiniteError
from stlpack.neural import (AdamState, adam_state, adam_step, backward, copy_params, forward, init,
                            load_params, save_params)

logger = logging.getLogger(__name__)

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _log1m_tanh2(u):
    # log(1 - tanh(u)^2) without cancellation for large |u|
    return 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


def _rows(x):
    x = np.asarray(x, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x


class PolicySample:
    """Everything one reparameterised draw needs for its backward pass."""

    def __init__(self, **values):
        self.__dict__.update(values)


class Actor:
    """Gaussian policy network mapping an input to `(mean, log std)` per action dimension.
    """

    def __init__(self, params, action_low, action_high, lr=3e-4):
        self.params = params
        self.action_low = np.asarray(action_low, dtype=np.float64)
        self.action_high = np.asarray(action_high, dtype=np.float64)
        self.scale = (self.action_high - self.action_low) / 2.0
        self.offset = (self.action_high + self.action_low) / 2.0
        if params.layer_sizes[-1] != 2 * len(self.scale):
            raise DimensionError('Actor output %s does not fit %s action dimensions'
                                 % (params.layer_sizes[-1], len(self.scale)))
        self.opt = adam_state(params, lr=lr)

    @classmethod
    def create(cls, obs_dim, action_low, action_high, hidden_sizes, rng, lr=3e-4):
        n_u = len(action_low)
        params = init([obs_dim] + list(hidden_sizes) + [2 * n_u], 'identity', rng)
        return cls(params, action_low, action_high, lr=lr)

    @property
    def n_u(self):
        return len(self.scale)

    def snapshot(self):
        """Read-only copy used for evaluation."""
        return Actor(copy_params(self.params), self.action_low, self.action_high, lr=self.opt.lr)

    def policy(self, obs, eps):
        """Reparameterised draw `a = scale * tanh(mu + sigma * eps) + offset` with its log density.
        """
        out, cache = forward(self.params, _rows(obs))
        mu = out[:, :self.n_u]
        raw_log_std = out[:, self.n_u:]
        log_std = np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX)
        std = np.exp(log_std)
        eps = _rows(eps)
        u = mu + std * eps
        tanh_u = np.tanh(u)
        action = self.scale * tanh_u + self.offset
        log_prob = np.sum(-0.5 * eps ** 2 - log_std - _HALF_LOG_2PI - _log1m_tanh2(u) - np.log(self.scale), axis=1)
        return PolicySample(mu=mu, raw_log_std=raw_log_std, log_std=log_std, std=std, eps=eps, u=u,
                            tanh_u=tanh_u, action=action, log_prob=log_prob, cache=cache)


def sample_action(actor, z_hat, rng, deterministic=False):
    """Draws an action for one input vector or a batch of them.

    In deterministic mode the action is `scale * tanh(mu) + offset` and the log density is
    taken at that point.

    Returns:
        tuple: `(action, log_prob)`.
    """
    obs = np.asarray(z_hat, dtype=np.float64)
    batch = _rows(obs)
    if deterministic:
        eps = np.zeros((batch.shape[0], actor.n_u))
    else:
        eps = rng.standard_normal((batch.shape[0], actor.n_u))
    sample = actor.policy(batch, eps)
    if obs.ndim == 1:
        return sample.action[0], float(sample.log_prob[0])
    return sample.action, sample.log_prob


class Critics:
    """Two Q-networks over `[input, action]` and their target copies.
    """

    def __init__(self, q1, q2, lr=3e-4):
        self.q1 = q1
        self.q2 = q2
        self.q1_target = copy_params(q1)
        self.q2_target = copy_params(q2)
        self.opt1 = adam_state(q1, lr=lr)
        self.opt2 = adam_state(q2, lr=lr)

    @classmethod
    def create(cls, obs_dim, n_u, hidden_sizes, rng, lr=3e-4):
        sizes = [obs_dim + n_u] + list(hidden_sizes) + [1]
        return cls(init(sizes, 'identity', rng), init(sizes, 'identity', rng), lr=lr)


def q_value(params, obs, act):
    out, cache = forward(params, np.hstack([_rows(obs), _rows(act)]))
    return out[:, 0], cache


def target_value(critics, actor, alpha, next_obs, rng, eps=None):
    """Single-sample soft value `min(Q1', Q2')(z', a') - alpha * log pi(a'|z')` with `a' ~ pi(.|z')`.
    """
    next_obs = _rows(next_obs)
    if eps is None:
        eps = rng.standard_normal((next_obs.shape[0], actor.n_u))
    sample = actor.policy(next_obs, eps)
    q1, _ = q_value(critics.q1_target, next_obs, sample.action)
    q2, _ = q_value(critics.q2_target, next_obs, sample.action)
    return np.minimum(q1, q2) - alpha * sample.log_prob


def critic_loss_and_grads(params, obs, act, y):
    """Mean squared error `mean((Q(z, a) - y)^2)` and its parameter gradients; `y` is a constant."""
    q, cache = q_value(params, obs, act)
    diff = q - y
    loss = float(np.mean(diff ** 2))
    grads, _ = backward(params, cache, (2.0 * diff / len(diff))[:, None])
    return loss, grads


def update_critics(critics, batch, actor, alpha, gamma, rng, check_finite=False):
    """One Adam step on both critics towards `y = r + gamma * V'(z')`.

    Returns:
        float: Sum of the two critic losses.
    """
    y = batch.rewards + gamma * target_value(critics, actor, alpha, batch.next_obs, rng)
    loss1, grads1 = critic_loss_and_grads(critics.q1, batch.obs, batch.actions, y)
    loss2, grads2 = critic_loss_and_grads(critics.q2, batch.obs, batch.actions, y)
    adam_step(critics.q1, grads1, critics.opt1, check_finite)
    adam_step(critics.q2, grads2, critics.opt2, check_finite)
    return loss1 + loss2


def actor_loss_and_grads(actor, critics, obs, eps, alpha):
    """Loss `mean(alpha * log pi(a|z) - min(Q1, Q2)(z, a))` with `a` reparameterised by `eps`.

    Gradients flow through the action into the actor; critic parameters are only read.

    Returns:
        tuple: `(loss, actor_grads, log_probs)`.
    """
    obs = _rows(obs)
    s = actor.policy(obs, eps)
    batch = obs.shape[0]
    q1, cache1 = q_value(critics.q1, obs, s.action)
    q2, cache2 = q_value(critics.q2, obs, s.action)
    use_first = q1 <= q2
    min_q = np.where(use_first, q1, q2)
    loss = float(np.mean(alpha * s.log_prob - min_q))

    g1 = np.where(use_first, -1.0 / batch, 0.0)[:, None]
    g2 = np.where(use_first, 0.0, -1.0 / batch)[:, None]
    _, in1 = backward(critics.q1, cache1, g1)
    _, in2 = backward(critics.q2, cache2, g2)
    d_action = in1[:, obs.shape[1]:] + in2[:, obs.shape[1]:]

    # d log pi / du = 2 tanh(u) from the squashing correction
    d_u = d_action * actor.scale * (1.0 - s.tanh_u ** 2) + (alpha / batch) * 2.0 * s.tanh_u
    d_mu = d_u
    d_log_std = d_u * s.std * s.eps - alpha / batch
    inside = (s.raw_log_std > LOG_STD_MIN) & (s.raw_log_std < LOG_STD_MAX)
    grads, _ = backward(actor.params, s.cache, np.hstack([d_mu, d_log_std * inside]))
    return loss, grads, s.log_prob


def update_actor(actor, critics, batch, alpha, rng, check_finite=False):
    """One Adam step on the actor with critics frozen.

    Returns:
        tuple: `(loss, log_probs)`; the log densities feed the temperature update.
    """
    eps = rng.standard_normal((len(batch.rewards), actor.n_u))
    loss, grads, log_probs = actor_loss_and_grads(actor, critics, batch.obs, eps, alpha)
    adam_step(actor.params, grads, actor.opt, check_finite)
    return loss, log_probs


class EntropyTemp:
    """Entropy temperature `alpha = exp(log_alpha)` with target entropy `target_entropy`.
    """

    def __init__(self, initial_alpha=1.0, target_entropy=-2.0, lr=3e-4):
        self.log_alpha = np.array([math.log(initial_alpha)])
        self.target_entropy = target_entropy
        self.opt = AdamState([self.log_alpha], lr=lr)

    @property
    def alpha(self):
        return float(np.exp(self.log_alpha[0]))


def alpha_loss_and_grad(log_alpha, log_probs, target_entropy):
    """Loss `mean(alpha * (-log pi - H0))` and its derivative in `log_alpha`; `log pi` is a constant."""
    alpha = math.exp(log_alpha)
    excess = float(np.mean(-np.asarray(log_probs) - target_entropy))
    return alpha * excess, alpha * excess


def update_alpha(temp, batch_log_probs):
    """One Adam step on `log_alpha`.

    Returns:
        float: The temperature loss before the step.
    """
    loss, grad = alpha_loss_and_grad(float(temp.log_alpha[0]), batch_log_probs, temp.target_entropy)
    adam_step([temp.log_alpha], [np.array([grad])], temp.opt)
    return loss


def soft_update(critics, xi=0.01):
    """Moves both target critics towards the main critics: `target <- xi * main + (1 - xi) * target`."""
    for target, main in ((critics.q1_target, critics.q1), (critics.q2_target, critics.q2)):
        for t, m in zip(target.arrays(), main.arrays()):
            t[...] = xi * m + (1.0 - xi) * t
        target.version += 1


class Batch:

    def __init__(self, obs, actions, next_obs, rewards):
        self.obs = obs
        self.actions = actions
        self.next_obs = next_obs
        self.rewards = rewards

    def __len__(self):
        return len(self.rewards)


class ReplayBuffer:
    """Ring buffer of transitions `(z_hat, a, z_hat', r)`; storage is allocated on the first push.
    """

    def __init__(self, capacity=100000, batch_size=64):
        self.capacity = capacity
        self.batch_size = batch_size
        self.size = 0
        self.cursor = 0
        self.obs = None
        self.actions = None
        self.next_obs = None
        self.rewards = None

    def __len__(self):
        return self.size

    def push(self, obs, action, next_obs, reward):
        if self.obs is None:
            self.obs = np.zeros((self.capacity, len(obs)))
            self.actions = np.zeros((self.capacity, len(action)))
            self.next_obs = np.zeros((self.capacity, len(next_obs)))
            self.rewards = np.zeros(self.capacity)
        i = self.cursor
        self.obs[i] = obs
        self.actions[i] = action
        self.next_obs[i] = next_obs
        self.rewards[i] = reward
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng, batch_size=None):
        """Uniform sample with replacement, `None` while fewer than `batch_size` items are stored."""
        batch_size = batch_size or self.batch_size
        if self.size < batch_size:
            return None
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(self.obs[idx], self.actions[idx], self.next_obs[idx], self.rewards[idx])


def replay_push(buffer, obs, action, next_obs, reward):
    buffer.push(obs, action, next_obs, reward)


def replay_sample(buffer, rng):
    return buffer.sample(rng)


class SacAgent:
    """Actor, critics and temperature trained together.
    """

    def __init__(self, obs_dim, action_low, action_high, rng, hidden_sizes=(256, 256), gamma=0.99, xi=0.01,
                 lr=3e-4, initial_alpha=1.0, target_entropy=-2.0, check_finite=False):
        self.obs_dim = obs_dim
        self.gamma = gamma
        self.xi = xi
        self.check_finite = check_finite
        self.actor = Actor.create(obs_dim, action_low, action_high, hidden_sizes, rng, lr=lr)
        self.critics = Critics.create(obs_dim, len(action_low), hidden_sizes, rng, lr=lr)
        self.temp = EntropyTemp(initial_alpha, target_entropy, lr=lr)

    @property
    def alpha(self):
        return self.temp.alpha

    def act(self, z_hat, rng, deterministic=False):
        action, _ = sample_action(self.actor, z_hat, rng, deterministic)
        return action

    def update(self, batch, rng):
        """Critic, actor and temperature steps followed by the target soft update.

        Returns:
            dict: `critic_loss`, `actor_loss`, `alpha_loss` and the new `alpha`.

        Raises:
            NonFiniteError: Raised when a loss is not finite.
        """
        alpha = self.temp.alpha
        critic_loss = update_critics(self.critics, batch, self.actor, alpha, self.gamma, rng, self.check_finite)
        actor_loss, log_probs = update_actor(self.actor, self.critics, batch, alpha, rng, self.check_finite)
        alpha_loss = update_alpha(self.temp, log_probs)
        soft_update(self.critics, self.xi)
        losses = {'critic_loss': critic_loss, 'actor_loss': actor_loss, 'alpha_loss': alpha_loss,
                  'alpha': self.temp.alpha}
        if not all(math.isfinite(v) for v in losses.values()):
            raise NonFiniteError('Non-finite training values: %s' % losses)
        return losses


_NETWORKS = ('actor', 'q1', 'q2', 'q1_target', 'q2_target')


def save_agent(agent, directory):
    """Writes one checkpoint per network, the optimizer moments with `log_alpha`, and a JSON summary.

    Returns:
        str: Path of the actor checkpoint.
    """
    os.makedirs(directory, exist_ok=True)
    networks = {
        'actor': agent.actor.params,
        'q1': agent.critics.q1,
        'q2': agent.critics.q2,
        'q1_target': agent.critics.q1_target,
        'q2_target': agent.critics.q2_target,
    }
    for name in _NETWORKS:
        save_params(networks[name], os.path.join(directory, name + '.bin'))
    state = {'log_alpha': agent.temp.log_alpha}
    for name, opt in (('actor', agent.actor.opt), ('q1', agent.critics.opt1), ('q2', agent.critics.opt2),
                      ('alpha', agent.temp.opt)):
        state['%s_step' % name] = np.array([opt.step])
        for i, (m, v) in enumerate(zip(opt.m, opt.v)):
            state['%s_m%d' % (name, i)] = m
            state['%s_v%d' % (name, i)] = v
    np.savez(os.path.join(directory, 'optimizer.npz'), **state)
    with open(os.path.join(directory, 'agent.json'), 'w', encoding='utf-8') as fh:
        json.dump({
            'obs_dim': agent.obs_dim,
            'action_low': agent.actor.action_low.tolist(),
            'action_high': agent.actor.action_high.tolist(),
            'gamma': agent.gamma,
            'xi': agent.xi,
            'alpha': agent.temp.alpha,
            'target_entropy': agent.temp.target_entropy,
        }, fh, indent=2)
    logger.debug('Saved agent checkpoint to %s', directory)
    return os.path.join(directory, 'actor.bin')


def load_actor(path, action_low=None, action_high=None, lr=3e-4):
    """Rebuilds an actor from a checkpoint written by `save_agent`.

    Action bounds default to the ones recorded in `agent.json` next to the checkpoint.

    Raises:
        CheckpointError: Raised when the checkpoint is unreadable or the bounds are unknown.
    """
    params = load_params(path)
    if action_low is None or action_high is None:
        summary = os.path.join(os.path.dirname(os.path.abspath(path)), 'agent.json')
        try:
            with open(summary, 'r', encoding='utf-8') as fh:
                meta = json.load(fh)
            action_low, action_high = meta['action_low'], meta['action_high']
        except (OSError, ValueError, KeyError) as ex:
            raise CheckpointError('Cannot read action bounds from %s: %s' % (summary, ex))
    try:
        return Actor(params, action_low, action_high, lr=lr)
    except DimensionError as ex:
        raise CheckpointError('%s does not hold an actor: %s' % (path, ex))
