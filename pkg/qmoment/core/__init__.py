"""Core value types, schemas and errors."""

from .exceptions import QMomentError
from .models import (
    AmplifierModel,
    EvolutionGenerator,
    FockState,
    GeneratorKind,
    HeterodyneRecord,
    HomodyneRecord,
    MomentEstimate,
    MomentTable,
    NoiseMoments,
    Ordering,
    Port,
    ShiftOp,
    TomogramGrid,
    TomographicMoments,
)
from .schemas import (
    CalibrationReport,
    CrosscheckReport,
    MomentTableSchema,
    PurityReport,
    RunConfig,
    StateSpec,
    UncertaintyReport,
)

__all__ = [
    # Errors
    "QMomentError",
    # Models
    "AmplifierModel",
    "EvolutionGenerator",
    "FockState",
    "GeneratorKind",
    "HeterodyneRecord",
    "HomodyneRecord",
    "MomentEstimate",
    "MomentTable",
    "NoiseMoments",
    "Ordering",
    "Port",
    "ShiftOp",
    "TomogramGrid",
    "TomographicMoments",
    # Schemas
    "CalibrationReport",
    "CrosscheckReport",
    "MomentTableSchema",
    "PurityReport",
    "RunConfig",
    "StateSpec",
    "UncertaintyReport",
]
