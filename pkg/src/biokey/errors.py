"""Exception hierarchy shared across the package."""


class BiokeyError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(BiokeyError):
    """A file or payload does not match the expected schema."""


class IntegrityError(BiokeyError):
    """Data is schema-valid but violates an internal consistency rule
    (unpaired markers, up-before-down key events, ...)."""


class ParameterError(BiokeyError):
    """An argument is outside its documented domain."""


class InsufficientDataError(BiokeyError):
    """Not enough samples to perform the requested computation."""


class StateError(BiokeyError):
    """An object is used before it reached the required state
    (e.g. predicting with an untrained model)."""


class ConfigurationError(BiokeyError):
    """A run configuration is impossible for the given data
    (e.g. a class with fewer samples than folds)."""
