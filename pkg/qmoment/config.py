"""Configuration management for the qmoment toolkit."""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from QMOMENT_* environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="QMOMENT_", env_file=".env", env_file_encoding="utf-8"
    )

    # Runtime
    debug: bool = Field(default=False, description="Debug logging")
    log_level: str = Field(
        default="INFO",
        pattern=r"^(DEBUG|INFO|WARNING|ERROR)$",
        description="Log level when debug is off",
    )
    threads: int = Field(
        default=4, ge=1, le=256, description="Cap on worker threads (QMOMENT_THREADS)"
    )

    # Fock oracle
    default_cutoff: int = Field(
        default=40, ge=1, le=400, description="Fock cutoff used when none is given"
    )
    truncation_tolerance: float = Field(
        default=1e-10,
        gt=0.0,
        le=1e-3,
        description="Allowed norm lost to truncation and clipped population",
    )

    # Tolerances
    analytic_tolerance: float = Field(
        default=1e-10, gt=0.0, description="Tolerance for analytic identities"
    )
    quadrature_tolerance: float = Field(
        default=1e-6, gt=0.0, description="Tolerance for quadrature round trips"
    )
    hermiticity_tolerance: float = Field(
        default=1e-10, gt=0.0, description="Hermiticity drift before a warning"
    )

    # Tomogram grids
    grid_thetas: int = Field(
        default=64, ge=1, le=4096, description="Default number of phases"
    )
    grid_x_nodes: int = Field(
        default=80, ge=2, le=400, description="Default Gauss-Hermite node count"
    )

    # Moment functionals
    purity_convergence_tolerance: float = Field(
        default=1e-9, gt=0.0, description="Last-shell size accepted as converged"
    )

    # Amplifier
    min_tomogram_gain: float = Field(
        default=10.0, gt=1.0, description="Smallest gain for the amplified tomogram"
    )
    gain_epsilon: float = Field(
        default=1e-9, gt=0.0, description="Smallest admissible g - 1"
    )
    condition_limit: float = Field(
        default=1e12, gt=1.0, description="Condition number treated as singular"
    )

    # Evolution
    expm_max_degree: int = Field(
        default=12, ge=0, le=64, description="Largest R using the dense exponential"
    )
    ode_tolerance: float = Field(
        default=1e-10, gt=0.0, description="Local tolerance of adaptive integration"
    )

    # Simulation
    homodyne_cdf_points: int = Field(
        default=4096, ge=64, le=1_000_000, description="Inverse-CDF grid size"
    )
    heterodyne_box: float = Field(
        default=7.0, gt=0.0, le=50.0, description="Half-width of the rejection box"
    )
    heterodyne_batch: int = Field(
        default=100_000, ge=1000, description="Proposals per rejection batch"
    )
    jackknife_blocks: int = Field(
        default=20, ge=2, le=1000, description="Blocks for jackknife errors"
    )
    min_samples: int = Field(
        default=100, ge=1, description="Smallest record accepted by estimators"
    )


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
