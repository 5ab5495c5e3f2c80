"""
Training configuration. Every key has the default of the reference unicycle experiment; files
are INI-style with the sections `spec`, `plant`, `delays`, `sac`, `eval` and `run`.
"""

import logging

from stlpack import validators
from stlpack.data import PackData
from stlpack.errors import ParseError, StlPackError, ValidationError
from stlpack.fields import BoolField, ChoiceField, FloatField, IntField, ListField, StrField
from stlpack.ncs import DelayConfig
from stlpack.plant import PLANTS, build_plant
from stlpack.stl import FINALLY, parse_stl

logger = logging.getLogger(__name__)

REFERENCE_FORMULA = ('G[0,900](F[0,99](x0>=3.75 && x0<=5 && x1>=3.75 && x1<=5) && '
                     'F[0,99](x0>=3.75 && x0<=5 && x1>=1.25 && x1<=2.5))')

ABLATION_NONE = 'none'
ABLATION_TAU_MDP = 'tau-mdp'
ABLATION_NO_PREPROCESS = 'no-preprocess'
ABLATIONS = (ABLATION_NONE, ABLATION_TAU_MDP, ABLATION_NO_PREPROCESS)

# beyond this exp(beta) rewards of finally-outer specs dwarf everything else
F_OUTER_BETA_WARNING = 30.0


class SpecSection(PackData):
    formula = StrField(default=REFERENCE_FORMULA, min_length=1)


class PlantSection(PackData):
    name = ChoiceField(sorted(PLANTS), default='unicycle')
    dt = FloatField(default=0.1, validators=[validators.interval(min_value=0.0, exclusive_min=True)])
    noise_scale = FloatField(default=0.01, min_value=0.0)
    action_low = ListField(FloatField(), required=False, min_length=1, validators=[validators.finite()])
    action_high = ListField(FloatField(), required=False, min_length=1, validators=[validators.finite()])
    init_low = ListField(FloatField(), required=False)
    init_high = ListField(FloatField(), required=False)
    input_shift = ListField(FloatField(), required=False, validators=[validators.finite()])
    normalize = BoolField(default=True)

    def check(self):
        errors = []
        if self.action_low and self.action_high:
            if len(self.action_low) != len(self.action_high):
                errors.append(ValidationError('action_high', 'Length differs from action_low'))
            elif any(lo > hi for lo, hi in zip(self.action_low, self.action_high)):
                errors.append(ValidationError('action_low', 'Exceeds action_high'))
        if (self.init_low is None) != (self.init_high is None):
            errors.append(ValidationError('init_high', 'init_low and init_high must be given together'))
        return errors


class DelaySection(PackData):
    d_sc = IntField(default=3, min_value=0)
    d_ca = IntField(default=4, min_value=0)
    d_sc_max = IntField(default=5, min_value=0)
    d_ca_max = IntField(default=5, min_value=0)
    hold_until_max = BoolField(default=False)

    @property
    def d(self):
        return self.d_sc_max + self.d_ca_max

    def check(self):
        errors = []
        if None not in (self.d_sc, self.d_sc_max) and self.d_sc > self.d_sc_max:
            errors.append(ValidationError('d_sc', 'Exceeds d_sc_max=%s' % self.d_sc_max))
        if None not in (self.d_ca, self.d_ca_max) and self.d_ca > self.d_ca_max:
            errors.append(ValidationError('d_ca', 'Exceeds d_ca_max=%s' % self.d_ca_max))
        return errors


class SacSection(PackData):
    gamma = FloatField(default=0.99, min_value=0.0, validators=[validators.interval(max_value=0.999999)])
    xi = FloatField(default=0.01, min_value=0.0, max_value=1.0)
    lr = FloatField(default=3e-4, validators=[validators.interval(min_value=0.0, exclusive_min=True)])
    buffer_capacity = IntField(default=100000, min_value=1)
    batch_size = IntField(default=64, min_value=1)
    target_entropy = FloatField(default=-2.0, validators=[validators.finite()])
    initial_alpha = FloatField(default=1.0, validators=[validators.interval(min_value=0.0, exclusive_min=True)])
    total_steps = IntField(default=600000, min_value=1)
    hidden_sizes = ListField(IntField(min_value=1), default=[256, 256], min_length=1)
    beta = FloatField(default=100.0, validators=[validators.interval(min_value=0.0, exclusive_min=True)])

    def check(self):
        errors = []
        if None not in (self.batch_size, self.buffer_capacity) and self.batch_size > self.buffer_capacity:
            errors.append(ValidationError('batch_size', 'Exceeds buffer_capacity=%s' % self.buffer_capacity))
        return errors


class EvalSection(PackData):
    every = IntField(default=10000, min_value=1)
    trajectories = IntField(default=100, min_value=1)
    resample = BoolField(default=False)


class RunSection(PackData):
    seed = IntField(default=0, min_value=0)
    out = StrField(default='runs', min_length=1)
    ablation = ChoiceField(ABLATIONS, default=ABLATION_NONE)
    trace = BoolField(default=False)
    debug = BoolField(default=False)


class TrainerConfig(PackData):
    """Complete training configuration.

    Example:

    ```python
    config = TrainerConfig.load_ini('configs/reference.ini')
    config.run.seed = 3
    config.validate()
    ```
    """
    spec = SpecSection()
    plant = PlantSection()
    delays = DelaySection()
    sac = SacSection()
    eval = EvalSection()
    run = RunSection()

    def check(self):
        errors = []
        try:
            model = self.build_plant()
        except (StlPackError, TypeError, ValueError) as ex:
            return [ValidationError('plant', str(ex), prefix='Section')]
        try:
            spec = self.build_spec(model.n_x)
        except ParseError as ex:
            errors.append(ValidationError('spec.formula', str(ex)))
        else:
            if spec.outer_op == FINALLY and self.sac.beta is not None and self.sac.beta > F_OUTER_BETA_WARNING:
                logger.warning('beta=%s with a finally-outer spec gives rewards up to exp(%s)',
                               self.sac.beta, self.sac.beta)
        return errors

    def build_plant(self):
        params = {'dt': self.plant.dt, 'noise_scale': self.plant.noise_scale}
        if self.plant.action_low is not None:
            params['action_low'] = self.plant.action_low
        if self.plant.action_high is not None:
            params['action_high'] = self.plant.action_high
        if self.plant.init_low is not None:
            params['init_low'] = self.plant.init_low
            params['init_high'] = self.plant.init_high
        if self.plant.input_shift is not None:
            params['input_shift'] = self.plant.input_shift
        return build_plant(self.plant.name, **params)

    def build_spec(self, n_x):
        return parse_stl(self.spec.formula, n_x)

    def build_delays(self):
        return DelayConfig(self.delays.d_sc, self.delays.d_ca, self.delays.d_sc_max, self.delays.d_ca_max,
                           hold_until_max=self.delays.hold_until_max)
