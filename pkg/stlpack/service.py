import logging
from stlpack.fields import Field
from stlpack.errors import ValidationError, MultiValidationError, ParamError, SkipError

logger = logging.getLogger(__name__)


class PackService:
    """Class which manages the execution of an operation. Subclass it and declare the inputs as `Field` attributes.

    Example:

    ```python
    class Monitor(PackService):
        spec = StrField()
        trace = StrField()

        def fire(self, **kwargs):
            return check(self.spec, self.trace)

    Monitor().call({'spec': 'F[0,3](x0<=1)', 'trace': 'trace.csv'})
    ```
    """
    def call(self, input_dict, exact=True, **kwargs):
        """This method should be called to start the execution of the service.

        Args:
            input_dict (dict): Dictionary of input values which maps to `Field` properties of the service class.
            exact (bool, optional): If set to `True`, any key in `input_dict` which doesn't map to a declared `Field` raises `ParamError`. Defaults to True.

        Returns:
            object: Return value of `fire()` method, `None` when skipped.

        Raises:
            ParamError: Raised when any key in `input_dict` doesn't match one of the declared `Field` properties and `exact` is set to `True`.
            MultiValidationError: Raised when `Field` values contain validation errors.
        """

        assert isinstance(input_dict, dict), 'input_dict should be of type dict'
        self._process_input(input_dict, exact)
        try:
            self.pre_fire()
        except SkipError as ex:
            logger.info('%s skipped: %s', type(self).__name__, ex)
            self.post_fire(False, ex)
            return

        try:
            ret_value = self.fire(**kwargs)
        except Exception as ex:
            self.post_fire(True, ex)
            raise
        else:
            self.post_fire(True, None)
            return ret_value

    def _process_input(self, input_dict, exact):
        fields = self._get_fields(type(self))

        field_names = [name for name, _ in fields]
        for key in input_dict.keys():
            if key not in field_names and exact:
                raise ParamError(key)

        errors = []
        for name, desc_obj in fields:
            desc_obj.__set__(self, input_dict.get(name))
            try:
                desc_obj._run_validation(desc_obj.__get__(self, type(self)))
            except ValidationError as ex:
                errors.append(ex)
            except SkipError:
                pass

        if errors:
            raise MultiValidationError(errors)

    @staticmethod
    def _get_fields(subclass):
        return [(name, desc_obj) for name, desc_obj in subclass.__dict__.items() if isinstance(desc_obj, Field)]

    def pre_fire(self):
        """Method called before the execution of the service, that is, before the `fire()` method.
        Raise `SkipError` here to prevent the execution of `fire()`.
        """
        pass

    def fire(self, **kwargs):
        """The entry point of the service. Any exception raised inside this method is re-raised after `post_fire` is called.

        Raises:
            NotImplementedError: Raised if subclass does not implement this method.
        """
        raise NotImplementedError

    def post_fire(self, fired, exc):
        """Method called after execution of `fire`, even when it raised. Usable for logging/cleanup.

        Args:
            fired (bool): `True` if `fire` was executed, `False` otherwise.
            exc (Exception, optional): Any exception raised inside `fire` or the `SkipError` raised by `pre_fire`.
        """
        pass
