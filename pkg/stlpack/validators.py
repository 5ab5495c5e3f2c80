"""
These are the inbuilt validators shipped with `stlpack` fields.
"""

import math
from stlpack.errors import ValidationError


def length(*, min_length=None, max_length=None):
    """Checks value length using *__len__*

    Args:
        min_length (int, optional): If given, provided value's length should not be less than this.
        max_length (int, optional): If given, provided value's length should not be greater than this.

    Raises:
        `ValidationError`
    """
    def _length(name, value):
        length = len(value)
        if min_length is not None and length < min_length:
            raise ValidationError(name, 'Provided length: %s is less than min length: %s' % (length, min_length))
        if max_length is not None and length > max_length:
            raise ValidationError(name, 'Provided length: %s is greater than max length: %s' % (length, max_length))
    return _length


def interval(*, min_value=None, max_value=None, exclusive_min=False):
    """Checks if value falls within a range.

    Args:
        min_value (float, optional): If given, provided value should not be less than this value.
        max_value (float, optional): If given, provided value should not be greater than this value.
        exclusive_min (bool, optional): If set, the value must be strictly greater than `min_value`.

    Raises:
        `ValidationError`
    """
    def _interval(name, value):
        if min_value is not None:
            if exclusive_min and value <= min_value:
                raise ValidationError(name, 'Given value: %s is not greater than: %s' % (value, min_value))
            if value < min_value:
                raise ValidationError(name, 'Given value: %s is less than min: %s' % (value, min_value))
        if max_value is not None and value > max_value:
            raise ValidationError(name, 'Given value: %s is greater than max: %s' % (value, max_value))
    return _interval


def choice(options):
    """Checks that the value is one of `options`.

    Raises:
        `ValidationError`
    """
    def _choice(name, value):
        if value not in options:
            raise ValidationError(name, 'Given value: %s is not one of: %s' % (value, ', '.join(map(str, options))))
    return _choice


def finite():
    """Checks that a number, or every number of a list, is finite.

    Raises:
        `ValidationError`
    """
    def _finite(name, value):
        values = value if isinstance(value, (list, tuple)) else [value]
        for v in values:
            if not math.isfinite(v):
                raise ValidationError(name, 'Given value: %s is not finite' % v)
    return _finite
