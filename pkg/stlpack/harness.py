"""
Episode runner, evaluation and the training loop.

An episode runs the networked loop for `t = 0 .. T`. Whenever the delayed observation of
`x_k` arrives, the agent forms its extended state `z_k`, stores the experience of its previous
decision and sends `a_k`. Training updates run after every plant step.
"""

import logging
import os

import numpy as np

from stlpack.config import ABLATION_NO_PREPROCESS, ABLATION_TAU_MDP
from stlpack.errors import NonFiniteError, StlPackError
from stlpack.mdp import RewardParams, advance_extended, init_extended, reward, rewards_along
from stlpack.metrics import EvalReport, emit_metrics, write_trace
from stlpack.ncs import advance, begin_episode, poll_observation, send_action
from stlpack.plant import make_rng, sample_initial
from stlpack.preprocess import InputEncoder
from stlpack.sac import ReplayBuffer, SacAgent, sample_action, save_agent
from stlpack.stl import satisfies

logger = logging.getLogger(__name__)


class Experiment:
    """Plant, specification, delays and the agent's view of them.

    Example:

    ```python
    exp = Experiment(double_integrator(), parse_stl('F[0,30](x0<=0.3 && x0>=-0.3)', 2),
                     DelayConfig(0, 0, 0, 0), beta=2.0)
    ```
    """

    def __init__(self, model, spec, delays, beta=100.0, gamma=0.99, d_agent=None, use_flags=True,
                 normalize=True):
        """
        Args:
            model (PlantModel): The plant.
            spec (Spec): Specification to satisfy.
            delays (DelayConfig): Channel delays.
            beta (float, optional): Reward sharpness.
            gamma (float, optional): Discount of evaluation returns.
            d_agent (int, optional): Action history length seen by the agent. Defaults to `delays.d`.
            use_flags (bool, optional): Feed flags instead of the flattened state window.
            normalize (bool, optional): Apply the plant's input shift to network inputs.
        """
        self.model = model
        self.spec = spec
        self.delays = delays
        self.gamma = gamma
        self.reward_params = RewardParams(beta, spec.outer_op)
        self.d_agent = delays.d if d_agent is None else d_agent
        self.encoder = InputEncoder(spec.subs, spec.tau, self.d_agent, model.n_x, model.n_u,
                                    use_flags=use_flags, input_shift=model.input_shift if normalize else None)

    @classmethod
    def from_config(cls, config):
        """Builds the experiment of a validated `TrainerConfig`, honouring its ablation switch."""
        model = config.build_plant()
        delays = config.build_delays()
        ablation = config.run.ablation
        return cls(
            model, config.build_spec(model.n_x), delays,
            beta=config.sac.beta,
            gamma=config.sac.gamma,
            d_agent=0 if ablation == ABLATION_TAU_MDP else delays.d,
            use_flags=ablation != ABLATION_NO_PREPROCESS,
            normalize=config.plant.normalize,
        )

    @property
    def tau(self):
        return self.spec.tau

    @property
    def horizon(self):
        """Last time step `T` of an episode."""
        return self.spec.total_horizon

    @property
    def obs_dim(self):
        return self.encoder.dim


class EpisodeLog:
    """What happened in one episode.

    `states` holds `x_0 .. x_T` and `inputs` the applied `u_0 .. u_T`; `decisions` pairs every
    decision index `k` with the step `t` it was taken at, `transitions` lists the decision
    pairs `(k, k + 1)` of stored experiences.
    """

    def __init__(self, states, inputs, decisions, transitions, sensor_depths, actuator_depths):
        self.states = states
        self.inputs = inputs
        self.decisions = decisions
        self.transitions = transitions
        self.sensor_depths = sensor_depths
        self.actuator_depths = actuator_depths


def run_episode(exp, rng, choose_action, x0=None, on_experience=None, after_step=None):
    """Runs one delayed episode of `T + 1` steps.

    Args:
        exp (Experiment): The experiment.
        rng (numpy.random.Generator): Stream for the initial state and plant noise.
        choose_action (callable): Maps a network input to an action.
        x0 (array, optional): Initial state; sampled from the initial box when omitted.
        on_experience (callable, optional): Called as `(obs, action, next_obs, reward)` for every
            decision that has a successor.
        after_step (callable, optional): Called with `t` after every plant step.

    Returns:
        EpisodeLog: The episode record.
    """
    loop = begin_episode(exp.model, exp.delays, rng, x0)
    z = prev = None
    decisions, transitions, sensor_depths, actuator_depths = [], [], [], []
    for t in range(exp.horizon + 1):
        observation = poll_observation(loop)
        if observation is not None:
            k, x_k = observation
            if k == 0:
                z = init_extended(x_k, exp.tau, exp.d_agent, exp.model.n_u)
            else:
                z = advance_extended(z, x_k, prev[2])
            z_hat = exp.encoder.encode(z)
            if prev is not None:
                if on_experience is not None:
                    on_experience(prev[1], prev[2], z_hat, reward(prev[0], exp.spec.phi, exp.reward_params))
                transitions.append((k - 1, k))
            action = exp.model.clamp(choose_action(z_hat))
            send_action(loop, k, action)
            decisions.append((k, t))
            prev = (z, z_hat, action)
        sensor_depths.append(loop.sensor_depth)
        actuator_depths.append(loop.actuator_depth)
        advance(loop, exp.model, rng)
        if after_step is not None:
            after_step(t)
    horizon = exp.horizon
    return EpisodeLog(np.array(loop.states[:horizon + 1]), np.array(loop.inputs[:horizon + 1]), decisions,
                      transitions, sensor_depths, actuator_depths)


class Policy:
    """Deterministic policy over a frozen copy of an actor."""

    def __init__(self, actor):
        self.actor = actor.snapshot()

    def __call__(self, z_hat):
        action, _ = sample_action(self.actor, z_hat, None, deterministic=True)
        return action


def discounted_return(exp, states):
    """Sum of `gamma^k R(z_k)` over the decisions whose actions reach the plant, `k = 0 .. T - d_sc - d_ca`.
    """
    last = exp.horizon - exp.delays.total_delay
    if last < 0:
        return 0.0
    rewards = rewards_along(states[:last + 1], exp.spec.phi, exp.reward_params, exp.tau)
    return float(np.sum(exp.gamma ** np.arange(last + 1) * rewards))


def evaluate(policy, exp, n, rng, step=0, initial_states=None, episodes=None):
    """Runs `n` episodes with a deterministic policy.

    Args:
        policy (callable): Maps a network input to an action; see `Policy`.
        exp (Experiment): The experiment.
        n (int): Number of trajectories.
        rng (numpy.random.Generator): Plant noise, and initial states when `initial_states` is omitted.
        step (int, optional): Training step recorded in the report.
        initial_states (list, optional): At least `n` initial states.
        episodes (list, optional): Receives the `EpisodeLog` of every trajectory.

    Returns:
        EvalReport: Per-trajectory returns and satisfaction.

    Raises:
        StlPackError: Raised when `n < 1` or too few initial states are given.
    """
    if n < 1:
        raise StlPackError('Evaluation needs at least one trajectory, got %s' % n)
    if initial_states is None:
        initial_states = [sample_initial(exp.model, rng) for _ in range(n)]
    if len(initial_states) < n:
        raise StlPackError('Evaluation of %s trajectories got %s initial states' % (n, len(initial_states)))
    returns, satisfied = [], []
    for i in range(n):
        log = run_episode(exp, rng, policy, x0=initial_states[i])
        returns.append(discounted_return(exp, log.states))
        satisfied.append(satisfies(log.states, 0, exp.spec))
        if episodes is not None:
            episodes.append(log)
    return EvalReport(step, returns, satisfied)


def write_episode_trace(exp, log, path):
    rewards = rewards_along(log.states, exp.spec.phi, exp.reward_params, exp.tau)
    write_trace(path, log.states, log.inputs, rewards, log.sensor_depths, log.actuator_depths)


class Trainer:
    """Soft actor-critic training of one experiment.

    Every artefact goes to `out`: the agent checkpoint directory, `metrics.csv`, `metrics.svg`,
    `config.json` and, with tracing, `trace.csv`.
    """

    def __init__(self, config, out=None):
        self.config = config
        self.out = out or config.run.out
        self.exp = Experiment.from_config(config)
        seed = config.run.seed
        self.rng = make_rng(seed)
        sac = config.sac
        self.agent = SacAgent(self.exp.obs_dim, self.exp.model.action_low, self.exp.model.action_high, self.rng,
                              hidden_sizes=sac.hidden_sizes, gamma=sac.gamma, xi=sac.xi, lr=sac.lr,
                              initial_alpha=sac.initial_alpha, target_entropy=sac.target_entropy,
                              check_finite=config.run.debug)
        self.buffer = ReplayBuffer(sac.buffer_capacity, sac.batch_size)
        init_rng = make_rng([seed, 1])
        self.initial_states = [sample_initial(self.exp.model, init_rng) for _ in range(config.eval.trajectories)]
        self.step = 0
        self.losses = {}
        self.reports = []

    @property
    def episodes(self):
        return max(1, self.config.sac.total_steps // (self.exp.horizon + 1))

    def run(self):
        """Runs every episode, evaluating at the configured cadence and once at the end.

        Returns:
            dict: Output directory, checkpoint path, step count and the evaluation reports.

        Raises:
            NonFiniteError: Raised after writing a diagnostic checkpoint when training diverges.
        """
        os.makedirs(self.out, exist_ok=True)
        with open(os.path.join(self.out, 'config.json'), 'w', encoding='utf-8') as fh:
            fh.write(self.config.to_json(indent=2))
        logger.debug('Configuration: %s', self.config)
        logger.info('Training %s episodes of %s steps, input size %s, actor with %s parameters, into %s',
                    self.episodes, self.exp.horizon + 1, self.exp.obs_dim, self.agent.actor.params.n_params, self.out)
        try:
            for episode in range(self.episodes):
                log = run_episode(self.exp, self.rng, self._act, on_experience=self.buffer.push,
                                  after_step=self._after_step)
                logger.info('Episode %s/%s done at step %s, %s experiences stored',
                            episode + 1, self.episodes, self.step, len(log.transitions))
            if not self.reports or self.reports[-1].step != self.step:
                self._evaluate(final=True)
            elif self.config.run.trace:
                self._write_trace()
        except NonFiniteError as ex:
            logger.error('Training diverged at step %s: %s', self.step, ex)
            save_agent(self.agent, os.path.join(self.out, 'diagnostic'))
            raise
        checkpoint = save_agent(self.agent, os.path.join(self.out, 'checkpoint'))
        emit_metrics(self.reports, os.path.join(self.out, 'metrics.csv'), os.path.join(self.out, 'metrics.svg'))
        return {
            'out': self.out,
            'checkpoint': checkpoint,
            'steps': self.step,
            'reports': [report.to_dict() for report in self.reports],
        }

    def _act(self, z_hat):
        return self.agent.act(z_hat, self.rng)

    def _after_step(self, t):
        self.step += 1
        batch = self.buffer.sample(self.rng)
        if batch is not None:
            self.losses = self.agent.update(batch, self.rng)
        if self.step % self.config.eval.every == 0:
            self._evaluate()

    def _evaluate(self, final=False):
        seed = self.config.run.seed
        initial_states = self.initial_states
        if self.config.eval.resample:
            init_rng = make_rng([seed, 3, self.step])
            initial_states = [sample_initial(self.exp.model, init_rng) for _ in range(self.config.eval.trajectories)]
        episodes = [] if final and self.config.run.trace else None
        report = evaluate(Policy(self.agent.actor), self.exp, self.config.eval.trajectories,
                          make_rng([seed, 2, self.step]), step=self.step, initial_states=initial_states,
                          episodes=episodes)
        report.alpha = self.agent.alpha
        report.critic_loss = self.losses.get('critic_loss')
        report.actor_loss = self.losses.get('actor_loss')
        self.reports.append(report)
        logger.info('Step %s: mean return %.4f, success rate %.2f, alpha %.4f',
                    self.step, report.mean_return, report.success_rate, report.alpha)
        if episodes:
            write_episode_trace(self.exp, episodes[0], os.path.join(self.out, 'trace.csv'))

    def _write_trace(self):
        episodes = []
        evaluate(Policy(self.agent.actor), self.exp, 1, make_rng([self.config.run.seed, 2, self.step]),
                 step=self.step, initial_states=self.initial_states[:1], episodes=episodes)
        write_episode_trace(self.exp, episodes[0], os.path.join(self.out, 'trace.csv'))


def run_training(config, out=None):
    """Validates `config` and trains one agent; see `Trainer.run`.

    Raises:
        MultiValidationError: Raised before any episode when the configuration is invalid.
    """
    config.validate()
    return Trainer(config, out).run()

