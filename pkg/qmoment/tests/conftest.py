"""Test configuration and fixtures."""

import pytest

from qmoment.config import get_settings
from qmoment.core.models import Ordering
from qmoment.core.schemas import StateSpec
from qmoment.services import (
    AmplifierService,
    EvolutionService,
    FockOracleService,
    MomentService,
    SimulationService,
    TomographyService,
    UncertaintyService,
)

# Catalogue states paired with a cutoff that makes the oracle exact to 1e-10.
CATALOGUE = [
    (StateSpec.fock(0), 12),
    (StateSpec.fock(1), 12),
    (StateSpec.fock(2), 12),
    (StateSpec.fock(3), 12),
    (StateSpec.coherent(0.5), 40),
    (StateSpec.coherent(0.6 - 0.8j), 40),
    (StateSpec.even(0.5), 40),
    (StateSpec.odd(0.5), 40),
    (StateSpec.even(1.0j), 40),
    (StateSpec.thermal(0.5), 60),
    (StateSpec.thermal(1.0), 60),
]


@pytest.fixture(autouse=True)
def fresh_settings():
    """Drop cached settings so environment changes in a test do not leak."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def moment_service() -> MomentService:
    """Moment service instance."""
    return MomentService()


@pytest.fixture
def oracle() -> FockOracleService:
    """Fock oracle instance."""
    return FockOracleService()


@pytest.fixture
def tomography(moment_service) -> TomographyService:
    """Tomography service sharing the moment service."""
    return TomographyService(moment_service)


@pytest.fixture
def amplifier(moment_service) -> AmplifierService:
    """Amplifier service sharing the moment service."""
    return AmplifierService(moment_service)


@pytest.fixture
def uncertainty(moment_service) -> UncertaintyService:
    """Uncertainty service sharing the moment service."""
    return UncertaintyService(moment_service)


@pytest.fixture
def evolution(moment_service) -> EvolutionService:
    """Evolution service sharing the moment service."""
    return EvolutionService(moment_service)


@pytest.fixture
def simulation(oracle) -> SimulationService:
    """Simulation service backed by the oracle."""
    return SimulationService(oracle)


@pytest.fixture
def coherent_table(moment_service):
    """Normal-ordered Coherent(0.5) table of degree 6."""
    return moment_service.closed_form_moments(StateSpec.coherent(0.5), Ordering.NORMAL, 6)


@pytest.fixture
def thermal_table(moment_service):
    """Normal-ordered Thermal(T=0.5) table of degree 16."""
    return moment_service.closed_form_moments(StateSpec.thermal(0.5), Ordering.NORMAL, 16)
