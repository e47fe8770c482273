# bzinfo/src/errors.py
from typing import Optional

from .definitions import ErrorKind, ExitCode


class BzinfoError(Exception):
    """所有业务异常的基类，kind 给机器读，exit_code 给 CLI 用"""

    kind: str = ErrorKind.numerical
    exit_code: int = ExitCode.check_failure

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": str(self)}


class DimensionMismatchError(BzinfoError):
    kind = ErrorKind.dimension_mismatch


class InvariantViolationError(BzinfoError):
    """Hermiticity、正定性、迹、完备性、保迹等不变量被破坏"""

    kind = ErrorKind.invariant_violation


class UnsupportedDimensionError(BzinfoError):
    kind = ErrorKind.unsupported


class ParameterRangeError(BzinfoError):
    kind = ErrorKind.range

    def __init__(self, message: str, max_feasible: Optional[float] = None):
        super().__init__(message)
        self.max_feasible = max_feasible

    def to_dict(self) -> dict:
        data = super().to_dict()
        if self.max_feasible is not None:
            data["max_feasible"] = self.max_feasible
        return data


class EigenDecompositionError(BzinfoError):
    kind = ErrorKind.numerical


class ParseError(BzinfoError):
    kind = ErrorKind.parse
    exit_code = ExitCode.io_or_parse


class InconsistentEstimateError(BzinfoError):
    kind = ErrorKind.inconsistent


class UsageError(BzinfoError):
    kind = ErrorKind.usage
    exit_code = ExitCode.usage
