import math

import pytest
from stlpack.validators import choice, finite, interval, length
from stlpack.fields import BoolField, ChoiceField, FloatField, IntField, ListField, NumericField, StrField
from stlpack.errors import ValidationError

FIELD_NAME = 'a'


def init_field_holder(field_instance):
    class FieldHolder:
        a = field_instance

    return FieldHolder()


@pytest.mark.parametrize('field, value', [
    (BoolField(), 1),
    (StrField(), 1),
    (NumericField(), 'a'),
    (NumericField(), True),
    (IntField(), 1.5),
    (FloatField(), '1.0'),
    (ChoiceField(['none', 'tau-mdp']), 'other'),
    (ListField(StrField()), {})
])
def test_default_validation_raises_error(field, value):
    # Given: required is True
    fh = init_field_holder(field)

    # When: init with invalid value type
    setattr(fh, FIELD_NAME, value)

    # Then: raise error
    with pytest.raises(ValidationError):
        field._run_validation(getattr(fh, FIELD_NAME))


@pytest.mark.parametrize('field', [
    BoolField(required=True),
    StrField(required=True),
    NumericField(required=True),
    IntField(required=True),
    FloatField(required=True),
    ListField(IntField(required=True), required=True)
])
def test_required_field_empty_raises_error(field):
    # Given: required is True
    fh = init_field_holder(field)

    # When: value is None
    setattr(fh, FIELD_NAME, None)

    # Then: raise error
    with pytest.raises(ValidationError):
        field._run_validation(None)


@pytest.mark.parametrize('field, value', [
    (BoolField(), True),
    (StrField(), 'x0<=1'),
    (NumericField(), 1),
    (NumericField(), 1.0),
    (IntField(), 1),
    (FloatField(), 1.5),
    (ChoiceField(['unicycle', 'double_integrator']), 'unicycle'),
    (ListField(IntField()), [256, 256])
])
def test_returns_valid_value(field, value):
    # Given: required is True
    fh = init_field_holder(field)

    # When: init with valid value
    setattr(fh, FIELD_NAME, value)

    # Then: return value and pass validation
    assert getattr(fh, FIELD_NAME) == value
    field._run_validation(getattr(fh, FIELD_NAME))


@pytest.mark.parametrize('field, value, expected', [
    (FloatField(), 1, 1.0),
    (ListField(FloatField()), [-1, 1], [-1.0, 1.0])
])
def test_float_field_stores_integers_as_floats(field, value, expected):
    # Given: float field
    fh = init_field_holder(field)

    # When: an integer is assigned
    setattr(fh, FIELD_NAME, value)

    # Then: the stored value is a float and validates
    stored = getattr(fh, FIELD_NAME)
    assert stored == expected
    assert all(isinstance(v, float) for v in (stored if isinstance(stored, list) else [stored]))
    field._run_validation(stored)


@pytest.mark.parametrize('field', [
    BoolField(default=True),
    StrField(default='runs'),
    NumericField(default=1.0),
    IntField(default=1),
    FloatField(default=1.5),
    ListField(IntField(), default=[256, 256])
])
def test_returns_default_value(field):
    # Given: required is True and default is provided
    fh = init_field_holder(field)

    # When: value is None
    setattr(fh, FIELD_NAME, None)

    # Then: return default value
    assert getattr(fh, FIELD_NAME) == field.options['default']


def test_list_default_is_not_shared():
    # Given: two holders of the same list field with a default
    field = ListField(IntField(), default=[256, 256])
    first = init_field_holder(field)
    second = type(first)()
    setattr(first, FIELD_NAME, None)
    setattr(second, FIELD_NAME, None)

    # When: one value is mutated
    first.a.append(1)

    # Then: the other one and the default are untouched
    assert second.a == [256, 256]
    assert field.options['default'] == [256, 256]


@pytest.mark.parametrize('field', [
    BoolField(required=False),
    StrField(required=False),
    NumericField(required=False),
    IntField(required=False),
    FloatField(required=False),
    ListField(StrField(required=False), required=False)
])
def test_returns_none_when_value_not_required(field):
    # Given: required is False
    fh = init_field_holder(field)

    # When: value is None
    setattr(fh, FIELD_NAME, None)

    # Then: return None
    assert getattr(fh, FIELD_NAME) is None


def always_error_validator(name, value):
    raise ValidationError(name, '')


@pytest.mark.parametrize('field, value', [
    (BoolField(validators=[always_error_validator]), True),
    (StrField(validators=[always_error_validator]), 'aa'),
    (IntField(validators=[always_error_validator]), 1),
    (FloatField(validators=[always_error_validator]), 1.0),
    (ListField(StrField(), validators=[always_error_validator]), ['a', 'b', 'c'])
])
def test_custom_validation_raises_error(field, value):
    # Given: field with custom validator
    fh = init_field_holder(field)

    # When: using a valid value
    setattr(fh, FIELD_NAME, value)

    # Then: raise error because of custom validator
    with pytest.raises(ValidationError):
        field._run_validation(value)


@pytest.mark.parametrize('field, value', [
    (IntField(validators=[interval(min_value=0)]), -1),
    (FloatField(validators=[interval(min_value=2.0)]), 1.0),
    (FloatField(validators=[interval(min_value=0.0, exclusive_min=True)]), 0.0),
    (IntField(validators=[interval(max_value=1)]), 2),
    (FloatField(max_value=1.0), 2.0)
])
def test_interval_violation_raises_error(field, value):
    # Given: interval option
    fh = init_field_holder(field)

    # When: value outside the interval
    setattr(fh, FIELD_NAME, value)

    # Then: raise error
    with pytest.raises(ValidationError):
        field._run_validation(value)


@pytest.mark.parametrize('field, value', [
    (StrField(validators=[length(min_length=2)]), 'a'),
    (ListField(IntField(), validators=[length(min_length=2)]), [1]),
    (StrField(validators=[length(max_length=2)]), 'aaa'),
    (ListField(IntField(), max_length=2), [1, 2, 3])
])
def test_length_violation_raises_error(field, value):
    # Given: length option
    fh = init_field_holder(field)

    # When: value length outside the bounds
    setattr(fh, FIELD_NAME, value)

    # Then: raise error
    with pytest.raises(ValidationError):
        field._run_validation(value)


@pytest.mark.parametrize('validator, value', [
    (finite(), math.inf),
    (finite(), [1.0, math.nan]),
    (choice(('G', 'F')), 'U')
])
def test_validators_raise_error(validator, value):
    # Given: validator and an invalid value
    # When: validating
    # Then: raise error naming the field
    with pytest.raises(ValidationError) as ex:
        validator(FIELD_NAME, value)
    assert ex.value.field == FIELD_NAME


@pytest.mark.parametrize('field, value', [
    (ListField(ListField(IntField(max_value=0))), [[1, 2], [3, 4]]),
    (ListField(ListField(IntField())), [[[1, 2], [3, 4]]]),
    (ListField(ListField(StrField(min_length=3))), [['aaaa', 'bbb'], ['c', 'd']])
])
def test_nested_list_violation_raises_error(field, value):
    # Given: field with nested list field
    fh = init_field_holder(field)

    # When: initialize with nested list value violating validation
    setattr(fh, FIELD_NAME, value)

    # Then: raise error
    with pytest.raises(ValidationError):
        field._run_validation(value)


@pytest.mark.parametrize('field, text, expected', [
    (BoolField(), 'true', True),
    (BoolField(), ' No ', False),
    (BoolField(), '1', True),
    (StrField(), ' runs ', 'runs'),
    (IntField(), '42', 42),
    (IntField(), '6e5', 600000),
    (FloatField(), '3e-4', 3e-4),
    (FloatField(), '-2', -2.0),
    (ListField(IntField()), '256, 256', [256, 256]),
    (ListField(FloatField()), '-1,-1', [-1.0, -1.0]),
    (IntField(), '', None)
])
def test_parse(field, text, expected):
    # Given: field named like a config key
    init_field_holder(field)

    # When: parsing the raw text of a config file
    value = field.parse(text)

    # Then: return the Python value
    assert value == expected
    assert type(value) is type(expected)


@pytest.mark.parametrize('field, text', [
    (BoolField(), 'maybe'),
    (IntField(), '1.5'),
    (FloatField(), 'abc'),
    (ListField(IntField()), '1, x')
])
def test_parse_invalid_text_raises_error(field, text):
    # Given: field
    init_field_holder(field)

    # When: text is not of the field's type
    # Then: raise error
    with pytest.raises(ValidationError):
        field.parse(text)
