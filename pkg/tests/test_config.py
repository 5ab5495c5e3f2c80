import logging
import os

import numpy as np
import pytest
from stlpack.config import ABLATION_NONE, REFERENCE_FORMULA, TrainerConfig
from stlpack.errors import MultiValidationError, ParamError, StlPackError
from stlpack.stl import GLOBALLY

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, 'configs')


def preset(name):
    return os.path.join(CONFIGS, name)


def write_ini(tmp_path, text):
    path = tmp_path / 'run.ini'
    path.write_text(text)
    return str(path)


def error_fields(ex):
    return sorted(e.field for e in ex.value.errors)


def test_defaults_are_the_reference_experiment():
    # Given: configuration without a file
    config = TrainerConfig()

    # When: validating and building its parts
    config.validate()
    model = config.build_plant()
    spec = config.build_spec(model.n_x)
    delays = config.build_delays()

    # Then: unicycle, the two-region spec and delays 3 and 4 bounded by 5
    assert config.spec.formula == REFERENCE_FORMULA
    assert model.name == 'unicycle'
    assert spec.outer_op == GLOBALLY and spec.tau == 100 and spec.total_horizon == 999
    assert (delays.d_sc, delays.d_ca, delays.d) == (3, 4, 10)
    assert config.sac.hidden_sizes == [256, 256]
    assert config.sac.total_steps == 600000
    assert config.run.ablation == ABLATION_NONE


def test_reference_preset_matches_defaults():
    # Given: the shipped reference preset
    config = TrainerConfig.load_ini(preset('reference.ini'))

    # When: validating
    config.validate()
    defaults = TrainerConfig()

    # Then: every section but the output directory equals the defaults
    for section in ('spec', 'delays', 'sac', 'eval'):
        assert getattr(config, section).to_dict() == getattr(defaults, section).to_dict()
    model, default_model = config.build_plant(), defaults.build_plant()
    assert np.array_equal(model.action_low, default_model.action_low)
    assert np.array_equal(model.action_high, default_model.action_high)
    assert config.run.out == 'runs/reference'


@pytest.mark.parametrize('name', ['sanity.ini', 'scaled.ini'])
def test_presets_validate(name):
    config = TrainerConfig.load_ini(preset(name))
    config.validate()
    assert config.build_spec(config.build_plant().n_x).subs


def test_scaled_preset_initial_box():
    config = TrainerConfig.load_ini(preset('scaled.ini'))
    model = config.build_plant()
    assert np.array_equal(model.init_high[:2], [1.25, 1.25])
    assert model.normalize([0.625, 0.625, 0.3]) == pytest.approx([-0.625, -0.625, 0.3])
    assert np.array_equal(model.input_shift, [1.25, 1.25, 0.0])
    assert config.build_delays().d == 4


def test_sanity_preset_uses_double_integrator():
    config = TrainerConfig.load_ini(preset('sanity.ini'))
    assert config.plant.name == 'double_integrator'
    assert config.build_delays().total_delay == 0
    assert config.sac.target_entropy == -1.0


@pytest.mark.parametrize('text, fields', [
    ('[delays]\nd_sc = 6\n', ['delays.d_sc']),
    ('[delays]\nd_ca = 1\nd_ca_max = 0\n', ['delays.d_ca']),
    ('[sac]\nbatch_size = 64\nbuffer_capacity = 10\n', ['sac.batch_size']),
    ('[plant]\naction_low = -1\naction_high = 1\n', ['plant']),
    ('[plant]\ninput_shift = 1, 1\n', ['plant']),
    ('[spec]\nformula = G[0,5](F[0,3](x7<=1))\n', ['spec.formula']),
    ('[sac]\ngamma = 1.0\n', ['sac.gamma']),
])
def test_cross_checks(tmp_path, text, fields):
    # Given: inconsistent configuration
    config = TrainerConfig.load_ini(write_ini(tmp_path, text))

    # When: validating
    # Then: every problem is reported with its section
    with pytest.raises(MultiValidationError) as ex:
        config.validate()
    assert error_fields(ex) == fields


def test_unparsable_values_are_collected(tmp_path):
    # Given: values of the wrong type in two sections
    path = write_ini(tmp_path, '[sac]\nbatch_size = many\n[eval]\nevery = 2.5\n')

    # When: loading
    # Then: both errors are reported
    with pytest.raises(MultiValidationError) as ex:
        TrainerConfig.load_ini(path)
    assert len(ex.value.errors) == 2


@pytest.mark.parametrize('text', [
    '[sac]\nlearning_rate = 0.1\n',
    '[network]\nsize = 3\n'
])
def test_unknown_key_raises_error(tmp_path, text):
    with pytest.raises(ParamError):
        TrainerConfig.load_ini(write_ini(tmp_path, text))


def test_missing_file_raises_error(tmp_path):
    with pytest.raises(StlPackError):
        TrainerConfig.load_ini(str(tmp_path / 'missing.ini'))


def test_scientific_notation_for_integers(tmp_path):
    config = TrainerConfig.load_ini(write_ini(tmp_path, '[sac]\ntotal_steps = 2e4\n'))
    assert config.sac.total_steps == 20000


@pytest.mark.parametrize('beta, warns', [
    (100.0, True),
    (10.0, False)
])
def test_large_beta_with_finally_outer_spec_warns(tmp_path, caplog, beta, warns):
    # Given: finally-outer specification
    path = write_ini(tmp_path, '[spec]\nformula = F[0,30](x0<=0.3)\n[plant]\nname = double_integrator\n'
                               '[sac]\nbeta = %s\n' % beta)
    config = TrainerConfig.load_ini(path)

    # When: validating
    with caplog.at_level(logging.WARNING, logger='stlpack.config'):
        config.validate()

    # Then: a warning only for large beta
    assert any('beta' in r.getMessage() for r in caplog.records) == warns


def test_sections_are_independent_between_instances():
    a, b = TrainerConfig(), TrainerConfig()
    a.sac.hidden_sizes.append(8)
    a.run.seed = 4
    assert b.sac.hidden_sizes == [256, 256]
    assert b.run.seed == 0
