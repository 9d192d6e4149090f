"""Error types raised across the toolkit.

Every error carries a ``context`` dictionary that the command line prints
as machine-readable JSON next to the error name.
"""

from typing import Any, Dict, Optional


class QMomentError(Exception):
    """Base class for all toolkit errors."""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = dict(context or {})

    def to_dict(self) -> Dict[str, Any]:
        """Return the ``{error, context}`` payload."""
        return {
            "error": type(self).__name__,
            "context": {"message": self.message, **self.context},
        }


class CutoffTooSmall(QMomentError, ValueError):
    """Fock truncation would lose norm or clip populated levels."""


class InvalidParameter(QMomentError, ValueError):
    """A state or model parameter is outside its domain."""


class OrderingMismatch(QMomentError, ValueError):
    """A moment table has the wrong operator ordering."""


class InsufficientDegree(QMomentError, ValueError):
    """A moment table does not reach the required degree."""


class GridTooCoarse(QMomentError, ValueError):
    """A tomogram grid cannot resolve the requested moments."""


class DegenerateDirection(QMomentError, ValueError):
    """Symplectic tomogram evaluated with mu**2 + nu**2 close to zero."""


class GainTooSmall(QMomentError, ValueError):
    """Amplifier gain too close to one."""


class OutOfDomain(QMomentError, ValueError):
    """Argument outside the domain of a scalar function."""


class MissingAngles(QMomentError, ValueError):
    """Tomographic moments are not available at a required phase."""


class InvalidGamma(QMomentError, ValueError):
    """Damping coefficient outside the open interval (0, 1)."""


class DimensionMismatch(QMomentError, ValueError):
    """Moment table and generator disagree on the lattice size."""


class TooFewSamples(QMomentError, ValueError):
    """Measurement record too short for the estimator."""


class SingularSystem(QMomentError, RuntimeError):
    """Linear system too ill-conditioned to solve."""


class PurityNotConverged(QMomentError, RuntimeError):
    """Purity series has not converged at the stored degree."""


class MalformedFile(QMomentError, OSError):
    """An input file cannot be parsed into the expected structure."""
