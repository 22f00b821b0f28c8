"""
Error hierarchy for the selective zero-shot toolkit.

Every error carries a stable machine code so the command-line surface can
report failures on a single parsable line.
"""
from typing import Optional


class SZSCError(Exception):
    """Base class for all toolkit errors"""
    code = "E_GENERIC"

    def __init__(self, message: str, **kwargs):
        super().__init__(message)
        self.message = message
        for key, value in kwargs.items():
            setattr(self, key, value)

    def one_line(self) -> str:
        """Render as `error <CODE>: <message>` with newlines folded."""
        text = " ".join(str(self.message).split())
        return f"error {self.code}: {text}"


class InputError(SZSCError, ValueError):
    """Dimension mismatch, out-of-range parameter or unknown label"""
    code = "E_INPUT"


class NumericalError(SZSCError, ArithmeticError):
    """Singular system, non-finite objective or non-converged dual"""
    code = "E_NUMERICAL"

    def __init__(
        self,
        message: str,
        dimension: Optional[int] = None,
        iteration: Optional[int] = None,
        duality_gap: Optional[float] = None,
    ):
        super().__init__(message, dimension=dimension, iteration=iteration, duality_gap=duality_gap)


class EmptyCoverageError(SZSCError):
    """Risk requested where no sample was accepted"""
    code = "E_EMPTY_COVERAGE"


class FormatError(SZSCError, ValueError):
    """Malformed matrix, config or prediction file"""
    code = "E_FORMAT"


class ArchiveError(SZSCError):
    """Model archive manifest, version or dimension mismatch"""
    code = "E_ARCHIVE"


EXIT_CODES = {
    InputError: 2,
    FormatError: 2,
    ArchiveError: 2,
    NumericalError: 3,
    EmptyCoverageError: 4,
}


def exit_code_for(error: SZSCError) -> int:
    for cls, status in EXIT_CODES.items():
        if isinstance(error, cls):
            return status
    return 1
