import configparser
import json
from stlpack.fields import _null
from stlpack.fields import Field
from stlpack.errors import StlPackError, SkipError, ValidationError, MultiValidationError, ParamError


class PackData:
    """Structured, validated container for configuration sections.
    Declared `Field` attributes hold values, declared `PackData` attributes hold nested sections.

    Example:

    ```python
    class DelaySection(PackData):
        d_sc = IntField(default=3, min_value=0)


    class RunConfig(PackData):
        delays = DelaySection()


    c = RunConfig()
    c.delays.d_sc = 1
    print(c.to_dict())  # {'delays': {'d_sc': 1}}
    ```
    """

    def __new__(cls, *args, **kwargs):
        # fields start at their defaults, nested sections are fresh instances
        instance = super(PackData, cls).__new__(cls)
        for name, obj in cls._get_attrs():
            if isinstance(obj, Field):
                obj.__set__(instance, None)
            else:
                instance.__dict__[name] = type(obj)()
        return instance

    def to_json(self, contain_unset=False, **kwargs):
        """Converts `PackData` instance to a JSON string.

        Args:
            contain_unset (bool, optional): If set to True then fields not set will also be included. Defaults to False.

        Returns:
            str: JSON string.
        """

        dct_data = self.to_dict(contain_unset=contain_unset)
        return json.dumps(dct_data, **kwargs)

    def to_dict(self, contain_unset=False):
        """Converts `PackData` instance to a `dict`.

        Args:
            contain_unset (bool, optional): If set to True then fields not set will also be included. Defaults to False.

        Returns:
            dict: Dictionary with key as the `Field` name and value as the `Field` value.
        """

        self.validate()
        dct = dict()
        for name, obj in self._get_attrs():
            # read the instance dict directly, the descriptor maps _null to None
            value = self.__dict__.get(name, _null)
            if isinstance(obj, PackData):
                value = value.to_dict(contain_unset=contain_unset)
            elif isinstance(value, tuple):
                value = list(value)
            if (value is _null or value is None) and not contain_unset:
                continue
            dct[name] = None if value is _null else value
        return dct

    @classmethod
    def load(cls, data):
        """Takes a data value in either string or dict format and converts it into a `PackData` instance.

        Args:
            data: A data value. Can be of `str` (json), `dict` or `PackData` type.

        Returns:
            `PackData`: Initialized `PackData` instance.
        """
        if isinstance(data, dict):
            return cls.load_dict(data)
        if isinstance(data, str):
            return cls.load_json(data)
        if isinstance(data, PackData):
            return cls.load_dict(data.to_dict())
        raise StlPackError('Need a valid type which is either str, dict or of `PackData` type')

    @classmethod
    def load_json(cls, json_data, exact=True):
        """Takes a JSON string and converts it into a `PackData` instance.

        Args:
            json_data (str): JSON string.
            exact (bool, optional): If set to `True`, unknown keys raise `ParamError`. Defaults to True.

        Returns:
            `PackData`: Initialized `PackData` instance.
        """

        assert isinstance(json_data, str), 'JSON should be of type str'
        return cls._load_data_from_dict(json.loads(json_data), exact, parse=False)

    @classmethod
    def load_dict(cls, data_dict, exact=True, parse=False):
        """Takes a `dict` and converts it into a `PackData` instance with each declared attribute mapping to the corresponding key.

        Args:
            data_dict (dict): Dictionary input, nested dictionaries fill nested sections.
            exact (bool, optional): If set to `True`, unknown keys raise `ParamError`. Defaults to True.
            parse (bool, optional): If set to `True`, string values are converted with `Field.parse`. Defaults to False.

        Returns:
            `PackData`: Initialized `PackData` instance.
        """

        return cls._load_data_from_dict(data_dict, exact, parse)

    @classmethod
    def load_ini(cls, path, exact=True):
        """Reads an INI-style configuration file whose sections map to the nested `PackData` attributes.

        Args:
            path (str): File path.
            exact (bool, optional): If set to `True`, unknown sections and keys raise `ParamError`. Defaults to True.

        Returns:
            `PackData`: Initialized `PackData` instance.

        Raises:
            StlPackError: Raised when the file cannot be read.
        """
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, 'r', encoding='utf-8') as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as ex:
            raise StlPackError('Cannot read config %s: %s' % (path, ex))
        data = {section: dict(parser[section]) for section in parser.sections()}
        return cls._load_data_from_dict(data, exact, parse=True)

    @classmethod
    def _load_data_from_dict(cls, data, exact, parse):
        assert isinstance(data, dict), 'Should be of dict type'

        attrs_map = dict(cls._get_attrs())
        obj = cls()
        errors = []
        for name, value in data.items():
            if name not in attrs_map:
                if exact:
                    raise ParamError(name)
                continue
            attr = attrs_map[name]
            if isinstance(attr, PackData):
                if not isinstance(value, dict):
                    raise StlPackError('Cannot load section: %s with value: %s' % (name, value))
                try:
                    value = type(attr)._load_data_from_dict(value, exact, parse)
                except MultiValidationError as ex:
                    errors.extend(ex.errors)
                    continue
                obj.__dict__[name] = value
                continue
            if parse and isinstance(value, str):
                try:
                    value = attr.parse(value)
                except ValidationError as ex:
                    errors.append(ex)
                    continue
            setattr(obj, name, value)
        if errors:
            raise MultiValidationError(errors)
        return obj

    @classmethod
    def _get_attrs(cls):
        def is_valid(obj):
            return isinstance(obj, Field) or isinstance(obj, PackData)
        attrs = []
        seen = set()
        for klass in cls.__mro__:
            for name, obj in klass.__dict__.items():
                if is_valid(obj) and name not in seen:
                    seen.add(name)
                    attrs.append((name, obj))
        return attrs

    def validate(self):
        """Validates all declared attributes in this `PackData` instance, nested sections included.

        Raises:
            MultiValidationError: Raised when `Field` values contain validation errors.
        """

        errors = []
        for name, obj in self._get_attrs():
            value = self.__dict__.get(name)
            if isinstance(obj, PackData):
                if value is None:
                    errors.append(ValidationError(name, 'Section not initialized', prefix='Section'))
                    continue
                try:
                    value.validate()
                except MultiValidationError as ex:
                    errors.extend(ValidationError('%s.%s' % (name, e.field), e.msg) for e in ex.errors)
            else:
                try:
                    obj._run_validation(obj.__get__(self, type(self)))
                except ValidationError as ex:
                    errors.append(ex)
                except SkipError:
                    pass
        errors.extend(self.check())
        if errors:
            raise MultiValidationError(errors)

    def check(self):
        """Hook for cross-field checks, called by `validate` after the per-field validation.

        Returns:
            list: `ValidationError` instances, empty when everything is consistent.
        """
        return []

    def __str__(self):
        parts = []
        for name, obj in self._get_attrs():
            value = self.__dict__.get(name, _null)
            if value is _null or value is None:
                continue
            if isinstance(value, PackData):
                parts.append('%s=[%s]' % (name, value))
            else:
                parts.append('%s=%s' % (name, value))
        return ' '.join(parts)
