"""Tests for tomogram and tomographic-moment transforms."""

import math

import numpy as np
import pytest

from qmoment.core.exceptions import (
    DegenerateDirection,
    GridTooCoarse,
    InsufficientDegree,
    MissingAngles,
    OrderingMismatch,
)
from qmoment.core.models import MomentTable, Ordering, TomographicMoments
from qmoment.core.schemas import StateSpec
from qmoment.services.tomography import (
    check_equispaced,
    equispaced_thetas,
    hermite_nodes,
    hermite_power_coefficients,
    trapezoid_weights,
)


class TestHermite:
    """Test cases for Hermite helpers."""

    def test_fourth_order_value(self, tomography):
        """Test H_4(1.3) = 16x^4 - 48x^2 + 12."""
        assert tomography.hermite(4, 1.3) == pytest.approx(-23.4224, abs=1e-10)

    def test_negative_order(self, tomography):
        """Test negative orders are rejected."""
        with pytest.raises(ValueError):
            tomography.hermite(-1, 0.0)

    @pytest.mark.parametrize(
        "power,order,expected",
        [
            (2, 0, math.sqrt(math.pi) / 2.0),
            (2, 2, 2.0 * math.sqrt(math.pi)),
            (3, 2, 0.0),
            (1, 3, 0.0),
        ],
    )
    def test_moment_integral(self, tomography, power, order, expected):
        """Test closed-form integrals of X^r H_N e^{-X^2}."""
        assert tomography.hermite_moment_integral(power, order) == pytest.approx(expected)

    def test_power_coefficients(self):
        """Test the monomial table reproduces H_3 = 8x^3 - 12x."""
        table = hermite_power_coefficients(3)
        assert np.allclose(table[3], [0.0, -12.0, 0.0, 8.0])
        assert np.allclose(table[0], [1.0, 0.0, 0.0, 0.0])

    def test_hermite_weights_integrate_gaussian(self):
        """Test rescaled Gauss-Hermite weights integrate e^{-X^2}."""
        xs, weights = hermite_nodes(40)
        assert np.sum(weights * np.exp(-(xs**2))) == pytest.approx(math.sqrt(math.pi))

    def test_trapezoid_weights(self):
        """Test trapezoid weights on a uniform grid."""
        assert np.allclose(trapezoid_weights(np.array([0.0, 1.0, 2.0])), [0.5, 1.0, 0.5])


class TestTomogram:
    """Test cases for tomograms predicted by moments."""

    def test_fock_matches_oracle(self, moment_service, tomography, oracle):
        """Test the Fock(2) tomogram against the number-basis oracle."""
        table = moment_service.closed_form_moments(StateSpec.fock(2), Ordering.NORMAL, 4)
        state = oracle.realize(StateSpec.fock(2), 12)
        xs = np.linspace(-4.0, 4.0, 41)
        for theta in (0.0, 0.7, 2.0):
            predicted = tomography.tomogram_values(table, theta, xs)
            assert np.allclose(predicted, oracle.tomogram_values(state, theta, xs), atol=1e-10)

    def test_antinormal_input_is_converted(self, moment_service, tomography):
        """Test both orderings give the same tomogram."""
        spec = StateSpec.fock(1)
        normal = moment_service.closed_form_moments(spec, Ordering.NORMAL, 4)
        antinormal = moment_service.closed_form_moments(spec, Ordering.ANTINORMAL, 4)
        assert tomography.tomogram_from_moments(normal, 0.3, 0.8) == pytest.approx(
            tomography.tomogram_from_moments(antinormal, 0.3, 0.8)
        )

    def test_vacuum_row_norm(self, tomography):
        """Test every grid row of the vacuum integrates to one."""
        grid = tomography.grid_from_moments(MomentTable.vacuum(Ordering.NORMAL, 2), 8, 20)
        assert np.allclose(grid.row_norms(), 1.0)

    def test_symplectic_reduces_to_optical(self, tomography, coherent_table):
        """Test mu = cos(theta), nu = sin(theta) gives the optical tomogram."""
        theta, x = 0.9, 0.4
        symplectic = tomography.symplectic_tomogram_from_moments(
            coherent_table, x, math.cos(theta), math.sin(theta)
        )
        assert symplectic == pytest.approx(tomography.tomogram_from_moments(coherent_table, theta, x))

    def test_symplectic_scaling(self, tomography, coherent_table):
        """Test w(X, l mu, l nu) = w(X / l, mu, nu) / l."""
        scaled = tomography.symplectic_tomogram_from_moments(coherent_table, 0.6, 1.2, 0.9)
        base = tomography.symplectic_tomogram_from_moments(coherent_table, 0.2, 0.4, 0.3)
        assert scaled == pytest.approx(base / 3.0)

    def test_symplectic_degenerate_direction(self, tomography, coherent_table):
        """Test a vanishing direction raises DegenerateDirection."""
        with pytest.raises(DegenerateDirection, match="vanish"):
            tomography.symplectic_tomogram_from_moments(coherent_table, 0.1, 0.0, 0.0)


class TestInversion:
    """Test cases for recovering ordered moments."""

    @pytest.mark.parametrize("ordering", [Ordering.NORMAL, Ordering.ANTINORMAL])
    def test_grid_round_trip(self, moment_service, tomography, coherent_table, ordering):
        """Test moments -> grid -> moments at degree 6."""
        grid = tomography.grid_from_moments(coherent_table, 16, 40)
        recovered = tomography.moments_from_tomogram(grid, ordering, 6)
        expected = moment_service.as_ordering(coherent_table, ordering)
        assert recovered.max_difference(expected) < 1e-6

    def test_oracle_grid_inversion(self, moment_service, tomography, oracle):
        """Test inverting an oracle grid of the even cat."""
        spec = StateSpec.even(0.5)
        grid = oracle.oracle_grid(oracle.realize(spec, 40), 16, 60)
        recovered = tomography.moments_from_tomogram(grid, Ordering.NORMAL, 4)
        expected = moment_service.closed_form_moments(spec, Ordering.NORMAL, 4)
        assert recovered.max_difference(expected) < 1e-6

    def test_too_few_phases(self, tomography, coherent_table):
        """Test 2R + 1 phases are required."""
        grid = tomography.grid_from_moments(coherent_table, 8, 40)
        with pytest.raises(GridTooCoarse, match="too few phases"):
            tomography.moments_from_tomogram(grid, Ordering.NORMAL, 6)

    def test_too_few_nodes(self, tomography, coherent_table):
        """Test R + 1 quadrature nodes are required."""
        grid = tomography.grid_from_moments(coherent_table, 16, 4)
        with pytest.raises(GridTooCoarse, match="X nodes"):
            tomography.moments_from_tomogram(grid, Ordering.NORMAL, 6)

    def test_uneven_phases(self):
        """Test non-uniform phases are rejected."""
        with pytest.raises(GridTooCoarse, match="equispaced"):
            check_equispaced(np.array([0.0, 0.1, 0.5, 2.0, 4.0]), 3)


class TestTomographicMoments:
    """Test cases for quadrature moments <X_theta^r>."""

    def test_fock_one_values(self, moment_service, tomography):
        """Test <X^2> = 1.5 and <X^4> = 3.75 for Fock(1)."""
        table = moment_service.closed_form_moments(StateSpec.fock(1), Ordering.NORMAL, 4)
        values = tomography.tomographic_moments_from_normal_moments(table, 0.4, 4)
        assert np.allclose(values, [1.0, 0.0, 1.5, 0.0, 3.75])

    def test_coherent_mean(self, tomography, coherent_table):
        """Test <X_0> = sqrt(2) Re(alpha)."""
        values = tomography.tomographic_moments_from_normal_moments(coherent_table, 0.0, 1)
        assert values[1] == pytest.approx(math.sqrt(2.0) * 0.5)

    def test_requires_normal_ordering(self, moment_service, tomography, coherent_table):
        """Test antinormal tables are rejected."""
        antinormal = moment_service.convert_ordering(coherent_table)
        with pytest.raises(OrderingMismatch):
            tomography.tomographic_moments_from_normal_moments(antinormal, 0.0, 2)

    def test_order_beyond_degree(self, tomography, coherent_table):
        """Test orders above the table degree are rejected."""
        with pytest.raises(InsufficientDegree):
            tomography.tomographic_moments_from_normal_moments(coherent_table, 0.0, 7)

    def test_grid_quadrature_matches_series(self, tomography, coherent_table):
        """Test quadrature over a grid agrees with the series."""
        grid = tomography.grid_from_moments(coherent_table, 8, 40)
        from_grid = tomography.tomographic_moments_from_grid(grid, 4)
        predicted = tomography.tomographic_moments_at(coherent_table, grid.thetas, 4)
        assert np.allclose(from_grid.values, predicted.values, atol=1e-9)

    @pytest.mark.parametrize("ordering", [Ordering.NORMAL, Ordering.ANTINORMAL])
    def test_round_trip_is_exact(self, moment_service, tomography, ordering):
        """Test 13 phases recover a degree-6 table exactly."""
        table = moment_service.closed_form_moments(StateSpec.even(0.5), Ordering.NORMAL, 6)
        moments = tomography.tomographic_moments_at(table, equispaced_thetas(13), 6)
        recovered = tomography.moments_from_tomographic_moments(moments, ordering, 6)
        expected = moment_service.as_ordering(table, ordering)
        assert recovered.max_difference(expected) < 1e-10

    def test_round_trip_needs_order(self, tomography, coherent_table):
        """Test tomographic moments must reach order R."""
        moments = tomography.tomographic_moments_at(coherent_table, equispaced_thetas(13), 4)
        with pytest.raises(InsufficientDegree):
            tomography.moments_from_tomographic_moments(moments, Ordering.NORMAL, 6)

    def test_missing_phase(self):
        """Test looking up an absent phase raises MissingAngles."""
        moments = TomographicMoments(np.array([0.0, 1.0]), np.ones((2, 3)))
        assert moments.row_at(2.0 * math.pi + 1.0)[0] == 1.0
        with pytest.raises(MissingAngles):
            moments.row_at(0.5)
