"""Exception hierarchy shared by the library and the command line.

Each class carries the process exit code the CLI uses for it and a short
machine-parsable tag printed as the first token of the error line.
"""


class GbnFusionError(Exception):
    exit_code = 1
    tag = "error"


class ValidationError(GbnFusionError, ValueError):
    """Arguments or structures that violate a documented precondition."""

    exit_code = 2
    tag = "validation"


class DataError(GbnFusionError, ValueError):
    """Malformed or degenerate input data (bad CSV, constant column, ...)."""

    exit_code = 3
    tag = "data"


class NumericalError(GbnFusionError, ArithmeticError):
    """Singular systems and other numerical failures."""

    exit_code = 4
    tag = "numerical"


class CycleError(ValidationError):
    tag = "cycle"


class DuplicateArcError(ValidationError):
    tag = "duplicate-arc"


class AntiparallelArcError(ValidationError):
    tag = "antiparallel-arc"


def with_slice(exc, slice_id):
    """Return a copy of ``exc`` whose message is prefixed by the slice id."""
    new = type(exc)(f"slice {slice_id}: {exc}")
    new.__cause__ = exc
    return new
