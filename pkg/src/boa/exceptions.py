class BoaError(Exception):
    """Base class for errors raised by this package."""


class SchemaError(BoaError, ValueError):
    """Invalid schema, configuration or hyperparameters."""


class DataError(BoaError, ValueError):
    """Input data does not conform to its schema."""


class PoolError(BoaError, ValueError):
    """A pattern set is inconsistent with the candidate pool it is scored against."""
