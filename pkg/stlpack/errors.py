class StlPackError(Exception):
    """Base class for `stlpack` errors.
    """


class SkipError(StlPackError):
    """Raising this error inside `pre_fire` skips the execution of a service.
    """


class ValidationError(StlPackError):
    """This exception contains one invalid configuration or input value.
    """
    def __init__(self, field, msg, prefix='Field'):
        """
        Args:
            field (str): The name of the field.
            msg (str): The error description.
            prefix (str, optional): Label printed before the field name. Defaults to 'Field'.
        """
        super().__init__('%s "%s": %s' % (prefix, field, msg))
        self.field = field
        self.msg = msg


class MultiValidationError(StlPackError):
    """This exception contains list of ValidationError exception instances.
    """
    def __init__(self, errors):
        super().__init__('; '.join(str(e) for e in errors))
        self.errors = errors
        """The `errors` attribute is a list of `ValidationError` which contains `field` and `msg` attributes.
        """


class ParamError(StlPackError):
    """This error is raised when input contains a key which doesn't match any declared fields.
    """
    def __init__(self, field, msg='Not declared in class'):
        super().__init__('%s: %s' % (field, msg))
        self.field = field
        self.msg = msg


class ParseError(StlPackError):
    """Raised when an STL formula cannot be parsed or lies outside the supported fragment.
    """
    def __init__(self, msg, position=None, text=None):
        """
        Args:
            msg (str): The error description.
            position (int, optional): Character offset in `text` where the error was detected.
            text (str, optional): The formula text.
        """
        if position is None:
            super().__init__(msg)
        else:
            super().__init__('%s at position %s' % (msg, position))
        self.msg = msg
        self.position = position
        self.text = text


class WindowError(StlPackError):
    """Raised when a trace is too short to evaluate a formula at the requested time index.
    """


class DimensionError(StlPackError):
    """Raised when vector or matrix dimensions do not match.
    """


class StaleCacheError(StlPackError):
    """Raised when a backward pass receives a forward cache computed with older parameters.
    """


class ChannelError(StlPackError):
    """Raised when the actuator channel receives the same action index twice.
    """


class NonFiniteError(StlPackError):
    """Raised when training produces non-finite parameters or losses.
    """


class CheckpointError(StlPackError):
    """Raised when a checkpoint file is malformed or incompatible.
    """
