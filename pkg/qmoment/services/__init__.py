"""Services for the qmoment toolkit."""

from .amplifier import AmplifierService
from .crosscheck import crosscheck
from .evolution import EvolutionService
from .fock_oracle import FockOracleService
from .moments import MomentService
from .simulate import SimulationService
from .tomography import TomographyService
from .uncertainty import UncertaintyService

__all__ = [
    "AmplifierService",
    "EvolutionService",
    "FockOracleService",
    "MomentService",
    "SimulationService",
    "TomographyService",
    "UncertaintyService",
    "crosscheck",
]
