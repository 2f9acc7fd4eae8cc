"""Exception hierarchy shared by every module.

Each class carries a stable ``code`` string; the CLI prints it in the
machine-readable error document and maps every subclass to exit status 2.
"""


class DynamicsError(Exception):
    code = "NUMERIC_FAILURE"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def to_dict(self):
        ctx = {k: _jsonable(v) for k, v in self.context.items()}
        return {"error": self.code, "message": str(self), "context": ctx}


def _jsonable(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    return repr(value)


class NoConvergence(DynamicsError):
    code = "NO_CONVERGENCE"


class ResourceLimit(DynamicsError):
    code = "RESOURCE"


class Ambiguous(DynamicsError):
    code = "AMBIGUOUS"


class NotParabolic(DynamicsError):
    code = "NOT_PARABOLIC"


class Degenerate(DynamicsError):
    code = "DEGENERATE"


class NotInBasin(DynamicsError):
    code = "NOT_IN_BASIN"


class OutOfDomain(DynamicsError):
    code = "OUT_OF_DOMAIN"


class OrbitOverflow(DynamicsError):
    """An iterate left the representable range; signals escape, not a bug."""

    code = "OVERFLOW"


class Pole(DynamicsError):
    code = "POLE"


class NoFixedPoint(DynamicsError):
    code = "NO_FIXED_POINT"


class NoN0(DynamicsError):
    code = "NO_N0"
