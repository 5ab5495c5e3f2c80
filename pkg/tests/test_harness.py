import csv
import math
import os

import numpy as np
import pytest
from stlpack.config import ABLATION_NO_PREPROCESS, ABLATION_TAU_MDP, TrainerConfig
from stlpack.errors import StlPackError
from stlpack.harness import Experiment, Policy, discounted_return, evaluate, run_episode, run_training
from stlpack.metrics import read_metrics, read_trace
from stlpack.ncs import DelayConfig
from stlpack.plant import double_integrator, make_rng
from stlpack.sac import SacAgent
from stlpack.stl import parse_stl


def zero_action(z_hat):
    return np.zeros(1)


def small_experiment(delays=None, formula='G[0,20](F[0,2](x0<=0.5))', **kwargs):
    model = double_integrator()
    return Experiment(model, parse_stl(formula, model.n_x), delays or DelayConfig(2, 1, 3, 3), **kwargs)


def tiny_config(tmp_path, seed=0):
    config = TrainerConfig.load_dict({
        'spec': {'formula': 'F[0,5](x0<=0.3 && x0>=-0.3)'},
        'plant': {'name': 'double_integrator'},
        'delays': {'d_sc': 1, 'd_ca': 1, 'd_sc_max': 1, 'd_ca_max': 1},
        'sac': {'buffer_capacity': 100, 'batch_size': 4, 'total_steps': 30, 'hidden_sizes': [8], 'beta': 2.0,
                'target_entropy': -1.0},
        'eval': {'every': 12, 'trajectories': 3},
        'run': {'seed': seed, 'out': str(tmp_path), 'trace': True},
    })
    return config


def test_episode_alignment():
    # Given: sensor delay 2, actuator delay 1, bounds 3 and 3
    exp = small_experiment()
    experiences = []

    # When: running one episode
    log = run_episode(exp, make_rng(0), zero_action, on_experience=lambda *e: experiences.append(e))

    # Then: decision k is taken at t = k + 2 and stored once its successor exists
    horizon = exp.horizon
    assert horizon == 22
    assert log.decisions == [(k, k + 2) for k in range(horizon - 1)]
    assert log.transitions == [(k - 1, k) for k in range(1, horizon - 1)]
    assert len(experiences) == len(log.transitions)
    assert log.states.shape == (horizon + 1, 2)
    assert log.inputs.shape == (horizon + 1, 1)
    assert len(log.sensor_depths) == len(log.actuator_depths) == horizon + 1


def test_experiences_chain():
    # Given: experiment with observation size 2 + 1 + 6
    exp = small_experiment()
    experiences = []

    # When: running one episode
    run_episode(exp, make_rng(1), zero_action, on_experience=lambda *e: experiences.append(e))

    # Then: the next input of one experience is the input of the following one
    assert exp.obs_dim == 9
    for (_, _, next_obs, reward), (obs, _, _, _) in zip(experiences, experiences[1:]):
        assert np.array_equal(next_obs, obs)
        assert reward in (-1.0, -math.exp(-100.0))


def test_actions_are_clamped():
    # Given: agent asking for too much
    exp = small_experiment(delays=DelayConfig(0, 0, 0, 0))
    actions = []

    # When: running an episode
    run_episode(exp, make_rng(0), lambda z_hat: np.array([7.0]),
                on_experience=lambda obs, action, next_obs, reward: actions.append(action))

    # Then: stored and applied actions lie in the box
    assert all(a.tolist() == [1.0] for a in actions)


@pytest.mark.parametrize('delays, last', [
    (DelayConfig(1, 2, 2, 2), 7),
    (DelayConfig(0, 0, 0, 0), 10)
])
def test_return_of_violated_spec_is_geometric(delays, last):
    # Given: unreachable globally-outer spec with horizon 10 and gamma 0.9
    exp = small_experiment(delays=delays, formula='G[0,10](x0>=100)', gamma=0.9, beta=1.0)

    # When: evaluating any policy
    report = evaluate(zero_action, exp, 2, make_rng(0))

    # Then: every counted reward is -1, summed up to T - d_sc - d_ca
    expected = -(1 - 0.9 ** (last + 1)) / (1 - 0.9)
    assert report.returns == pytest.approx([expected, expected])
    assert report.success_rate == 0.0


def test_return_is_zero_when_delays_exceed_horizon():
    exp = small_experiment(delays=DelayConfig(3, 3, 3, 3), formula='G[0,4](x0>=100)')
    assert discounted_return(exp, np.zeros((5, 2))) == 0.0


def test_satisfied_spec():
    # Given: spec every state satisfies
    exp = small_experiment(formula='G[0,10](x0<=100)', beta=1.0)

    # When: evaluating
    report = evaluate(zero_action, exp, 3, make_rng(0))

    # Then: full success
    assert report.success_rate == 1.0
    assert report.mean_return < 0.0


@pytest.mark.parametrize('n, initial_states', [
    (0, None),
    (3, [np.zeros(2)])
])
def test_evaluate_bad_arguments_raise_error(n, initial_states):
    with pytest.raises(StlPackError):
        evaluate(zero_action, small_experiment(), n, make_rng(0), initial_states=initial_states)


def test_evaluation_uses_given_initial_states():
    # Given: fixed initial states
    exp = small_experiment()
    starts = [np.array([0.5, 0.0]), np.array([-0.5, 0.0])]
    episodes = []

    # When: evaluating
    evaluate(zero_action, exp, 2, make_rng(0), initial_states=starts, episodes=episodes)

    # Then: every episode starts where asked
    assert [log.states[0].tolist() for log in episodes] == [[0.5, 0.0], [-0.5, 0.0]]


def test_evaluation_does_not_change_the_agent():
    # Given: agent and a policy built from it
    exp = small_experiment()
    agent = SacAgent(exp.obs_dim, exp.model.action_low, exp.model.action_high, make_rng(0), hidden_sizes=(8,))
    before = [a.copy() for a in agent.actor.params.arrays()]

    # When: evaluating and then changing the agent
    policy = Policy(agent.actor)
    report_a = evaluate(policy, exp, 2, make_rng(5))
    agent.actor.params.weights[0] += 1.0
    report_b = evaluate(policy, exp, 2, make_rng(5))

    # Then: the agent was untouched and the policy kept its snapshot
    assert report_a.returns == report_b.returns
    agent.actor.params.weights[0] -= 1.0
    for a, b in zip(agent.actor.params.arrays(), before):
        assert np.allclose(a, b)


@pytest.mark.parametrize('ablation, dim', [
    (None, 3 + 2 + 10 * 2),
    (ABLATION_TAU_MDP, 3 + 2),
    (ABLATION_NO_PREPROCESS, 100 * 3 + 10 * 2)
])
def test_ablation_input_sizes(ablation, dim):
    # Given: reference configuration with an ablation switch
    config = TrainerConfig()
    if ablation:
        config.run.ablation = ablation

    # When: building the experiment
    exp = Experiment.from_config(config)

    # Then: network input size of that variant
    assert exp.obs_dim == dim


def test_run_training_writes_outputs(tmp_path):
    # Given: tiny configuration of 30 steps with evaluations every 12 steps
    config = tiny_config(tmp_path)

    # When: training
    result = run_training(config)

    # Then: evaluations at 12, 24 and the final step, with every artefact on disk
    assert result['steps'] == 30
    assert [r['step'] for r in result['reports']] == [12, 24, 30]
    rows = read_metrics(str(tmp_path / 'metrics.csv'))
    assert [row['step'] for row in rows] == [12.0, 24.0, 30.0]
    assert all(0.0 <= row['success_rate'] <= 1.0 for row in rows)
    for name in ('metrics.svg', 'config.json', 'trace.csv', 'checkpoint/actor.bin', 'checkpoint/agent.json'):
        assert (tmp_path / name).exists(), name
    trace = read_trace(str(tmp_path / 'trace.csv'))
    assert trace.shape == (6, 2)
    with open(tmp_path / 'trace.csv') as fh:
        header = next(csv.reader(fh))
    assert header == ['t', 'x0', 'x1', 'u0', 'reward', 'sensor_queue', 'actuator_queue']


def test_training_is_reproducible(tmp_path):
    # Given: two runs with the same seed
    outputs = []
    for name in ('a', 'b'):
        out = tmp_path / name
        run_training(tiny_config(out, seed=3))
        outputs.append(out)

    # When: comparing their files
    # Then: metrics and checkpoints are byte identical
    for name in ('metrics.csv', 'metrics.svg', 'checkpoint/actor.bin'):
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes(), name


def test_invalid_configuration_is_rejected_before_training(tmp_path):
    config = tiny_config(tmp_path)
    config.delays.d_sc = 4
    with pytest.raises(StlPackError):
        run_training(config)
    assert not (tmp_path / 'metrics.csv').exists()


def preset(name, out, seed=0, ablation=None):
    config = TrainerConfig.load_ini(os.path.join(os.path.dirname(__file__), os.pardir, 'configs', name))
    config.run.out = str(out)
    config.run.seed = seed
    if ablation:
        config.run.ablation = ablation
    return config


@pytest.mark.slow
def test_sanity_preset_learns(tmp_path):
    # Given: the delay-free double integrator preset and three seeds
    # When: training each seed to the end
    finals = [run_training(preset('sanity.ini', tmp_path / str(seed), seed))['reports'][-1]['success_rate']
              for seed in range(3)]

    # Then: at least two final policies reach the band 90% of the time
    assert sum(rate >= 0.9 for rate in finals) >= 2, finals


@pytest.mark.slow
def test_full_model_beats_both_ablations(tmp_path):
    # Given: the half-size unicycle preset, three seeds per variant
    variants = {}
    for ablation in (None, ABLATION_TAU_MDP, ABLATION_NO_PREPROCESS):
        # When: training every variant
        rates = [run_training(preset('scaled.ini', tmp_path / ('%s-%d' % (ablation, seed)), seed, ablation))
                 ['reports'][-1]['success_rate'] for seed in range(3)]
        variants[ablation] = float(np.mean(rates))

    # Then: the seed-averaged final success rate leads each ablation by 0.15
    full = variants.pop(None)
    assert all(full - rate >= 0.15 for rate in variants.values()), (full, variants)
