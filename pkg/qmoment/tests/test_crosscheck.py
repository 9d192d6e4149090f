"""Tests for the heterodyne/homodyne consistency check."""

import numpy as np
import pytest

from qmoment.core.exceptions import InsufficientDegree, OrderingMismatch
from qmoment.core.models import MomentEstimate, MomentTable, Ordering
from qmoment.core.schemas import StateSpec
from qmoment.services.crosscheck import crosscheck

COHERENT = StateSpec.coherent(0.5)


def estimates(simulation, seed: int, n: int, max_degree: int = 2):
    """Heterodyne and homodyne antinormal estimates of one state."""
    heterodyne = simulation.estimate_antinormal_moments(
        simulation.sample_heterodyne(COHERENT, n, seed=seed, cutoff=30), max_degree
    )
    homodyne = simulation.estimate_moments_from_homodyne(
        simulation.sample_homodyne(COHERENT, 2 * max_degree + 1, n, seed=seed + 1000, cutoff=30),
        Ordering.ANTINORMAL,
        max_degree,
    )
    return heterodyne, homodyne


def exact_estimate(table: MomentTable, error: float) -> MomentEstimate:
    """Estimate with a uniform standard error."""
    return MomentEstimate(table, np.full(table.values.shape, error))


class TestCrosscheck:
    """Test cases for comparing estimates."""

    def test_entries_cover_upper_triangle(self, moment_service):
        """Test entries with i >= j and degree >= 1 are compared."""
        table = moment_service.closed_form_moments(COHERENT, Ordering.ANTINORMAL, 3)
        report = crosscheck(exact_estimate(table, 0.1), exact_estimate(table, 0.1), 3)
        assert [(e.i, e.j) for e in report.entries] == [
            (1, 0), (2, 0), (1, 1), (3, 0), (2, 1)
        ]
        assert report.consistent
        assert all(e.z == 0.0 for e in report.entries)

    def test_inconsistent_entry(self, moment_service, caplog):
        """Test a shifted entry is flagged."""
        table = moment_service.closed_form_moments(COHERENT, Ordering.ANTINORMAL, 2)
        shifted = table.with_entries({(1, 1): table.entry(1, 1) + 1.0})
        report = crosscheck(exact_estimate(table, 0.1), exact_estimate(shifted, 0.1), 2)
        assert not report.consistent
        worst = max(report.entries, key=lambda e: e.z)
        assert (worst.i, worst.j) == (1, 1)
        assert worst.z == pytest.approx(1.0 / np.hypot(0.1, 0.1))
        assert "Cross-check failed" in caplog.text

    def test_requires_antinormal(self, moment_service):
        """Test normal-ordered estimates are rejected."""
        normal = moment_service.closed_form_moments(COHERENT, Ordering.NORMAL, 2)
        antinormal = moment_service.convert_ordering(normal)
        with pytest.raises(OrderingMismatch):
            crosscheck(exact_estimate(normal, 0.1), exact_estimate(antinormal, 0.1), 2)

    def test_requires_degree(self, moment_service):
        """Test estimates must reach the compared degree."""
        table = moment_service.closed_form_moments(COHERENT, Ordering.ANTINORMAL, 2)
        with pytest.raises(InsufficientDegree):
            crosscheck(exact_estimate(table, 0.1), exact_estimate(table, 0.1), 3)

    def test_simulated_records_agree(self, simulation):
        """Test both detection schemes agree on a coherent state."""
        heterodyne, homodyne = estimates(simulation, seed=42, n=20_000)
        report = crosscheck(heterodyne, homodyne, 2)
        assert report.consistent

    @pytest.mark.slow
    def test_pass_rate_over_seeds(self, simulation):
        """Test at least 95% of seeds pass at four standard errors with 10^5 samples."""
        passed = sum(
            crosscheck(*estimates(simulation, seed=seed, n=100_000), 2).consistent
            for seed in range(50)
        )
        assert passed >= 48
