"""Service and repository factories for the command line."""

from qmoment.repositories import RecordRepository, TableRepository
from qmoment.services import (
    AmplifierService,
    EvolutionService,
    FockOracleService,
    MomentService,
    SimulationService,
    TomographyService,
    UncertaintyService,
)


def get_moment_service() -> MomentService:
    """Get moment service instance."""
    return MomentService()


def get_oracle_service() -> FockOracleService:
    """Get Fock oracle service instance."""
    return FockOracleService()


def get_tomography_service() -> TomographyService:
    """Get tomography service instance."""
    return TomographyService(get_moment_service())


def get_amplifier_service() -> AmplifierService:
    """Get amplifier service instance."""
    return AmplifierService(get_moment_service())


def get_uncertainty_service() -> UncertaintyService:
    """Get uncertainty service instance."""
    return UncertaintyService(get_moment_service())


def get_evolution_service() -> EvolutionService:
    """Get evolution service instance."""
    return EvolutionService(get_moment_service())


def get_simulation_service() -> SimulationService:
    """Get simulation service instance."""
    return SimulationService(get_oracle_service())


def get_table_repository() -> TableRepository:
    """Get JSON repository instance rooted at the working directory."""
    return TableRepository()


def get_record_repository() -> RecordRepository:
    """Get CSV repository instance."""
    return RecordRepository(get_table_repository())
