"""
Managed operations behind the command line. Each service declares its inputs as fields and
runs through the `PackService` lifecycle.
"""

import logging
import os

from stlpack import validators
from stlpack.config import ABLATIONS, TrainerConfig
from stlpack.errors import DimensionError, SkipError, ValidationError
from stlpack.fields import BoolField, ChoiceField, IntField, ListField, StrField
from stlpack.harness import Experiment, Policy, Trainer, evaluate
from stlpack.metrics import plot_curves, read_metrics, read_trace
from stlpack.plant import make_rng, sample_initial
from stlpack.sac import load_actor
from stlpack.service import PackService
from stlpack.stl import format_formula, parse_stl, robustness, satisfies

logger = logging.getLogger(__name__)


def load_config(path=None, seed=None, ablation=None, out=None):
    """Reads a configuration file (defaults when `path` is `None`), applies overrides and validates it.

    Raises:
        MultiValidationError: Raised when any value is invalid.
        ParamError: Raised for an unknown section or key.
    """
    config = TrainerConfig.load_ini(path) if path else TrainerConfig()
    if seed is not None:
        config.run.seed = seed
    if ablation is not None:
        config.run.ablation = ablation
    if out is not None:
        config.run.out = out
    config.validate()
    return config


class TrainService(PackService):
    """Trains one agent. Skipped when the output directory already holds `metrics.csv`."""
    config = StrField(required=False, min_length=1)
    seed = IntField(required=False, min_value=0)
    ablation = ChoiceField(ABLATIONS, required=False)
    out = StrField(required=False, min_length=1)
    overwrite = BoolField(default=False)

    def pre_fire(self):
        self.trainer_config = load_config(self.config, self.seed, self.ablation, self.out)
        metrics = os.path.join(self.trainer_config.run.out, 'metrics.csv')
        if os.path.exists(metrics) and not self.overwrite:
            raise SkipError('%s exists' % metrics)

    def fire(self, **kwargs):
        return Trainer(self.trainer_config).run()

    def post_fire(self, fired, exc):
        if fired and exc is None:
            logger.info('Training finished, results in %s', self.trainer_config.run.out)


class EvaluateService(PackService):
    """Evaluates a saved actor with the deterministic policy."""
    checkpoint = StrField(min_length=1)
    config = StrField(required=False, min_length=1)
    n = IntField(default=100, min_value=1)
    seed = IntField(required=False, min_value=0)

    def fire(self, **kwargs):
        config = load_config(self.config, self.seed)
        exp = Experiment.from_config(config)
        actor = load_actor(self.checkpoint, exp.model.action_low, exp.model.action_high)
        if actor.params.layer_sizes[0] != exp.obs_dim:
            raise DimensionError('Checkpoint expects inputs of size %s, the configuration gives %s'
                                 % (actor.params.layer_sizes[0], exp.obs_dim))
        seed = config.run.seed
        init_rng = make_rng([seed, 1])
        initial_states = [sample_initial(exp.model, init_rng) for _ in range(self.n)]
        report = evaluate(Policy(actor), exp, self.n, make_rng([seed, 2, 0]), initial_states=initial_states)
        logger.info('Evaluated %s trajectories: mean return %.4f, success rate %.2f',
                    self.n, report.mean_return, report.success_rate)
        return report


class MonitorService(PackService):
    """Checks a recorded trace against a formula."""
    spec = StrField(min_length=1)
    trace = StrField(min_length=1)
    t = IntField(default=0, min_value=0)

    def fire(self, **kwargs):
        states = read_trace(self.trace)
        spec = parse_stl(self.spec, states.shape[1])
        return {
            'spec': format_formula(spec),
            't': self.t,
            'robustness': robustness(states, self.t, spec),
            'satisfied': satisfies(states, self.t, spec),
        }


class PlotService(PackService):
    """Draws several metrics files into one figure; files sharing a label are aggregated."""
    metrics = ListField(StrField(min_length=1), min_length=1)
    labels = ListField(StrField(min_length=1), required=False)
    out = StrField(default='curves.svg', validators=[validators.length(min_length=1)])

    def pre_fire(self):
        if self.labels is not None and len(self.labels) != len(self.metrics):
            raise ValidationError('labels', 'Needs one label per metrics file')

    def fire(self, **kwargs):
        labels = self.labels or ['run'] * len(self.metrics)
        series = {}
        for label, path in zip(labels, self.metrics):
            series.setdefault(label, []).append(read_metrics(path))
        plot_curves(series, self.out)
        return self.out
