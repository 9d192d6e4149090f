"""Tests for the amplifier chain."""

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from qmoment.config import Settings
from qmoment.core.exceptions import GainTooSmall, InsufficientDegree, SingularSystem
from qmoment.core.models import MomentTable, Ordering, Port, TomographicMoments
from qmoment.core.schemas import StateSpec
from qmoment.services.tomography import equispaced_thetas


class TestForwardModel:
    """Test cases for amplifying moments."""

    @pytest.mark.parametrize("port", [Port.SIGNAL, Port.IDLER])
    def test_vacuum_output_photon_number(self, amplifier, port):
        """Test <b b^+> = g with vacuum signal and vacuum noise."""
        noise_ordering = Ordering.NORMAL if port is Port.SIGNAL else Ordering.ANTINORMAL
        amp = amplifier.model(3.0, port, noise=MomentTable.vacuum(noise_ordering, 2))
        output = amplifier.amplify_moments(MomentTable.vacuum(Ordering.NORMAL, 2), amp, 2)
        assert output.ordering is Ordering.ANTINORMAL
        assert output.entry(1, 1).real == pytest.approx(3.0)

    def test_thermal_noise_adds_photons(self, amplifier):
        """Test <b b^+> = g + (g - 1) n for thermal noise at the signal port."""
        amp = amplifier.model(2.0, noise_temperature=1.0)
        output = amplifier.amplify_moments(MomentTable.vacuum(Ordering.NORMAL, 2), amp, 2)
        occupation = 1.0 / math.expm1(1.0)
        assert output.entry(1, 1).real == pytest.approx(2.0 + occupation)

    def test_coherent_mean_is_scaled(self, amplifier, coherent_table):
        """Test <b> = sqrt(g) alpha at the signal port."""
        amp = amplifier.model(4.0, noise_temperature=0.5)
        output = amplifier.amplify_moments(coherent_table, amp, 3)
        assert output.entry(1, 0) == pytest.approx(2.0 * 0.5)

    def test_forward_matrix_is_lower_triangular(self, amplifier):
        """Test outputs never depend on higher-degree inputs."""
        matrix = amplifier.forward_matrix(amplifier.model(2.5, noise_temperature=0.3), 4)
        assert np.allclose(np.triu(matrix, 1), 0.0)

    def test_signal_degree_too_low(self, amplifier, coherent_table):
        """Test amplifying past the signal degree raises InsufficientDegree."""
        amp = amplifier.model(2.0, noise_temperature=1.0)
        with pytest.raises(InsufficientDegree):
            amplifier.amplify_moments(coherent_table, amp, 8)

    def test_gain_at_one_rejected(self, amplifier):
        """Test a unit gain cannot build a model."""
        with pytest.raises(GainTooSmall, match="exceed one"):
            amplifier.model(1.0, noise_temperature=1.0)


class TestCalibration:
    """Test cases for noise calibration and deamplification."""

    @pytest.mark.parametrize("gain", [2.0, 4.0, 10.0])
    @pytest.mark.parametrize("temperature", [0.3, 1.0])
    def test_round_trip(self, moment_service, amplifier, coherent_table, gain, temperature):
        """Test amplify -> calibrate -> deamplify recovers the signal."""
        truth = amplifier.model(gain, noise_temperature=temperature)
        response = amplifier.amplify_moments(MomentTable.vacuum(Ordering.NORMAL, 4), truth, 4)
        noise = amplifier.calibrate_noise(response, gain, 4)
        expected_noise = moment_service.closed_form_moments(
            StateSpec.thermal(temperature), Ordering.NORMAL, 4
        )
        assert noise.max_difference(expected_noise) < 1e-8

        amplified = amplifier.amplify_moments(coherent_table, truth, 4)
        recovered = amplifier.deamplify_moments(amplified, amplifier.model(gain, noise=noise), 4)
        assert recovered.ordering is Ordering.ANTINORMAL
        expected = moment_service.convert_ordering(coherent_table.truncated(4))
        assert recovered.max_difference(expected) < 1e-8

    def test_idler_round_trip(self, moment_service, amplifier):
        """Test the idler port returns a normal-ordered signal."""
        signal = moment_service.closed_form_moments(StateSpec.fock(1), Ordering.NORMAL, 4)
        truth = amplifier.model(3.0, Port.IDLER, noise_temperature=0.4)
        response = amplifier.amplify_moments(MomentTable.vacuum(Ordering.NORMAL, 4), truth, 4)
        noise = amplifier.calibrate_noise(response, 3.0, 4, Port.IDLER)
        assert noise.ordering is Ordering.ANTINORMAL
        recovered = amplifier.deamplify_moments(
            amplifier.amplify_moments(signal, truth, 4),
            amplifier.model(3.0, Port.IDLER, noise=noise),
            4,
        )
        assert recovered.ordering is Ordering.NORMAL
        assert recovered.max_difference(signal) < 1e-8

    def test_report_carries_conditions(self, amplifier):
        """Test the calibration report lists one condition number per degree."""
        truth = amplifier.model(2.0, noise_temperature=1.0)
        response = amplifier.amplify_moments(MomentTable.vacuum(Ordering.NORMAL, 3), truth, 3)
        report = amplifier.calibration_report(response, 2.0, 3)
        assert len(report.condition_numbers) == 4
        assert report.condition_numbers[0] == pytest.approx(1.0)
        model = amplifier.model_from_report(report)
        assert model.noise.max_degree == 3

    def test_gain_too_small(self, amplifier):
        """Test calibration refuses g - 1 below the threshold."""
        with pytest.raises(GainTooSmall, match="too close to one"):
            amplifier.calibrate_noise(MomentTable.vacuum(Ordering.ANTINORMAL, 2), 1.0, 2)

    def test_ill_conditioned_system(self, amplifier):
        """Test a tight condition limit raises SingularSystem."""
        truth = amplifier.model(4.0, noise_temperature=1.0)
        response = amplifier.amplify_moments(MomentTable.vacuum(Ordering.NORMAL, 4), truth, 4)
        amplifier.settings = Settings(condition_limit=2.0)
        with pytest.raises(SingularSystem, match="ill-conditioned"):
            amplifier.calibrate_noise(response, 4.0, 4)


class TestTomographicAmplifier:
    """Test cases for the Gaussian-kernel tomogram model."""

    def test_low_gain_rejected(self, tomography, amplifier):
        """Test the tomogram model refuses gains below the minimum."""
        grid = tomography.grid_from_moments(MomentTable.vacuum(Ordering.NORMAL, 2), 4, 20)
        with pytest.raises(GainTooSmall, match="large gain"):
            amplifier.amplified_tomogram(grid, 4.0, 1.0)

    def test_low_gain_override_warns(self, tomography, amplifier, caplog):
        """Test the override evaluates and logs a warning."""
        grid = tomography.grid_from_moments(MomentTable.vacuum(Ordering.NORMAL, 2), 4, 20)
        amplifier.amplified_tomogram(grid, 4.0, 1.0, allow_low_gain=True, n_out=101)
        assert "low gain" in caplog.text

    def test_zero_sigma_unit_gain_is_identity(self, tomography, amplifier, coherent_table):
        """Test g = 1 with sigma = 0 leaves the grid unchanged."""
        grid = tomography.grid_from_moments(coherent_table, 4, 20)
        out = amplifier.amplified_tomogram(grid, 1.0, 0.0, allow_low_gain=True)
        assert np.allclose(out.xs, grid.xs)
        assert np.allclose(out.values, grid.values)

    def test_vacuum_variance(self, tomography, amplifier):
        """Test the amplified vacuum has variance g (1/2 + sigma^2)."""
        grid = tomography.grid_from_moments(MomentTable.vacuum(Ordering.NORMAL, 2), 4, 40)
        out = amplifier.amplified_tomogram(grid, 100.0, 1.0)
        moments = tomography.tomographic_moments_from_grid(out, 2)
        assert np.allclose(moments.values[:, 0], 1.0, atol=1e-6)
        assert np.allclose(moments.values[:, 2], 150.0, rtol=1e-6)

    def test_fock_one_matches_direct_convolution(self, tomography, amplifier, moment_service):
        """Test the Fock(1) tomogram at g = 100, sigma = 1 against a direct quadrature."""
        gain, sigma = 100.0, 1.0
        table = moment_service.closed_form_moments(StateSpec.fock(1), Ordering.NORMAL, 2)
        out = amplifier.amplified_tomogram(tomography.grid_from_moments(table, 4, 40), gain, sigma)

        xs = np.linspace(-12.0, 12.0, 6001)
        density = 2.0 / math.sqrt(math.pi) * xs**2 * np.exp(-(xs**2))
        scaled = out.xs[:, None] / math.sqrt(gain)
        kernel = np.exp(-0.5 * ((scaled - xs[None, :]) / sigma) ** 2) / (math.sqrt(2.0 * math.pi) * sigma)
        expected = trapezoid(density[None, :] * kernel, xs, axis=1) / math.sqrt(gain)

        assert np.allclose(out.values, expected[None, :], atol=1e-9)
        assert np.allclose(out.row_norms(), 1.0, atol=1e-6)

    def test_grid_and_moment_paths_commute(self, tomography, amplifier, coherent_table):
        """Test amplifying the grid then taking X moments equals amplifying the X moments."""
        grid = tomography.grid_from_moments(coherent_table, 4, 40)
        from_grid = tomography.tomographic_moments_from_grid(
            amplifier.amplified_tomogram(grid, 100.0, 1.0), 4
        )
        predicted = amplifier.amplified_tomographic_moments(
            tomography.tomographic_moments_at(coherent_table, grid.thetas, 4), 100.0, 1.0
        )
        assert np.allclose(from_grid.values, predicted.values, rtol=1e-6, atol=1e-6)

    def test_tomographic_moments_vacuum(self, amplifier):
        """Test <X^2> = 100 (0.5 + 1) for the vacuum at g = 100, sigma = 1."""
        vacuum = TomographicMoments(np.array([0.0]), np.array([[1.0, 0.0, 0.5]]))
        out = amplifier.amplified_tomographic_moments(vacuum, 100.0, 1.0)
        assert out.values[0, 2] == pytest.approx(150.0)
        assert out.values[0, 0] == pytest.approx(1.0)

    def test_tomographic_moments_inverse(self, tomography, amplifier, coherent_table):
        """Test deamplification undoes amplification of tomographic moments."""
        moments = tomography.tomographic_moments_at(coherent_table, equispaced_thetas(5), 6)
        out = amplifier.amplified_tomographic_moments(moments, 20.0, 0.8)
        back = amplifier.deamplified_tomographic_moments(out, 20.0, 0.8)
        assert np.allclose(back.values, moments.values, atol=1e-9)
