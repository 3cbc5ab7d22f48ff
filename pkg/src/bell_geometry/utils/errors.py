"""Exception hierarchy shared by models and controllers.

Every error carries the process exit code the command line reports for it:
input problems map to 2, numerical aborts to 3.
"""


class BellGeometryError(Exception):
    """Base class for all library errors"""

    exit_code = 1


class InputError(BellGeometryError):
    """Invalid user or caller input"""

    exit_code = 2


class NumericalError(BellGeometryError):
    """A computation could not be completed reliably"""

    exit_code = 3


class InvalidDimensionError(InputError):
    pass


class InvalidCoordinatesError(InputError):
    pass


class ParameterCountError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class SymmetryViolationError(InputError):
    pass


class IndexOrderError(InputError):
    pass


class NotHermitianError(InputError):
    pass


class NormalizationError(InputError):
    pass


class SizeGuardError(InputError):
    pass


class UnknownBoundaryError(InputError):
    pass


class UnknownFamilyError(InputError):
    pass


class ScanJobError(InputError):
    pass


class ConfigError(InputError):
    pass


class InternalConsistencyError(NumericalError):
    pass


class OptimizerAbortError(NumericalError):
    pass


class NoViolationDirectionError(NumericalError):
    pass


class NoBoundaryCrossingError(NumericalError):
    pass


class NumericalDegeneracyError(NumericalError):
    pass
