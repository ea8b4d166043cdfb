"""Exception hierarchy.

Every library error derives from :class:`WsnFaultError`. The CLI maps
:class:`ConfigError` to exit code 1, :class:`DataError` to 2 and
:class:`NumericalError` to 3.
"""


class WsnFaultError(Exception):
    """Base class for all package errors."""


class ConfigError(WsnFaultError):
    """Invalid configuration or argument combination (usage error)."""


class DataError(WsnFaultError):
    """Problem with input data or its shape/content."""


class NumericalError(WsnFaultError):
    """Numerical procedure failed (non-convergence, non-finite values)."""


# -- dataset ---------------------------------------------------------------

class MissingFile(DataError):
    pass


class MalformedRow(DataError):
    pass


class UnknownLabelValue(DataError):
    pass


class InvalidCount(DataError):
    pass


class ConstantColumn(DataError):
    pass


class TooFewSamples(DataError):
    pass


class TooFewSamplesPerClass(DataError):
    pass


class ColumnOutOfRange(DataError):
    pass


# -- linear algebra / pca --------------------------------------------------

class ZeroVarianceColumn(DataError):
    pass


class TooFewRows(DataError):
    pass


class NotSymmetric(DataError):
    pass


class NoConvergence(NumericalError):
    pass


class DegenerateSpectrum(DataError):
    pass


# -- network / optimizer ---------------------------------------------------

class DimensionMismatch(DataError):
    pass


class NonFiniteCost(NumericalError):
    pass


# -- metrics ---------------------------------------------------------------

class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class SingleClassInput(DataError):
    pass


class TooFewValues(DataError):
    pass


class ZeroVarianceDifferences(DataError):
    pass
