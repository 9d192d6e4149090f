"""Tests for the Fock oracle."""

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from qmoment.core.exceptions import CutoffTooSmall
from qmoment.core.models import Ordering, Port
from qmoment.core.schemas import StateSpec
from qmoment.services.fock_oracle import annihilation, coherent_amplitudes, wavefunctions

from .conftest import CATALOGUE


class TestRealize:
    """Test cases for state realization."""

    def test_fock_state_is_projector(self, oracle):
        """Test Fock(2) puts all weight on level 2."""
        state = oracle.realize(StateSpec.fock(2), cutoff=5)
        assert state.rho[2, 2] == 1.0
        assert np.count_nonzero(state.rho) == 1

    def test_coherent_state_is_normalized_and_pure(self, oracle):
        """Test the truncated coherent state keeps unit trace and purity."""
        state = oracle.realize(StateSpec.coherent(0.5 + 0.5j), cutoff=40)
        assert np.trace(state.rho).real == pytest.approx(1.0, abs=1e-12)
        assert np.trace(state.rho @ state.rho).real == pytest.approx(1.0, abs=1e-12)

    def test_odd_cat_has_only_odd_levels(self, oracle):
        """Test the odd cat populates odd number states only."""
        state = oracle.realize(StateSpec.odd(0.5), cutoff=30)
        assert np.allclose(state.populations[::2], 0.0)

    def test_thermal_populations(self, oracle):
        """Test thermal populations follow the Boltzmann ratio."""
        state = oracle.realize(StateSpec.thermal(0.5), cutoff=60)
        ratios = state.populations[1:5] / state.populations[:4]
        assert np.allclose(ratios, math.exp(-2.0))

    def test_fock_above_cutoff_raises(self, oracle):
        """Test a Fock level beyond the cutoff is rejected."""
        with pytest.raises(CutoffTooSmall, match="Fock level above cutoff"):
            oracle.realize(StateSpec.fock(5), cutoff=3)

    def test_lost_norm_raises(self, oracle):
        """Test a large coherent amplitude at a small cutoff is rejected."""
        with pytest.raises(CutoffTooSmall, match="loses too much norm") as info:
            oracle.realize(StateSpec.coherent(3.0), cutoff=5)
        assert info.value.context["achieved_norm"] < 1.0


class TestOracleMoments:
    """Test cases for moments by matrix traces."""

    def test_fock_normal_moments(self, oracle):
        """Test <(a^+)^n a^n> = N!/(N-n)! for Fock(2)."""
        table = oracle.oracle_moments(oracle.realize(StateSpec.fock(2), 6), Ordering.NORMAL, 4)
        assert table.entry(1, 1) == pytest.approx(2.0)
        assert table.entry(2, 2) == pytest.approx(2.0)
        assert table.entry(1, 0) == 0.0

    def test_fock_antinormal_moments(self, oracle):
        """Test <a^k (a^+)^k> = (N+k)!/N! for Fock(2)."""
        table = oracle.oracle_moments(oracle.realize(StateSpec.fock(2), 6), Ordering.ANTINORMAL, 4)
        assert table.entry(1, 1) == pytest.approx(3.0)
        assert table.entry(2, 2) == pytest.approx(12.0)

    def test_antinormal_headroom_guard(self, oracle):
        """Test antinormal products that would clip populated levels are rejected."""
        state = oracle.realize(StateSpec.fock(2), 4)
        with pytest.raises(CutoffTooSmall, match="clip populated levels"):
            oracle.oracle_moments(state, Ordering.ANTINORMAL, 4)

    def test_normal_degree_above_cutoff(self, oracle):
        """Test a normal-ordered degree above the cutoff is rejected."""
        with pytest.raises(CutoffTooSmall, match="degree exceeds cutoff"):
            oracle.oracle_moments(oracle.realize(StateSpec.fock(1), 3), Ordering.NORMAL, 4)

    def test_coherent_moments_factorize(self, oracle):
        """Test coherent normal moments equal conj(alpha)^n alpha^m."""
        alpha = 0.3 + 0.4j
        table = oracle.oracle_moments(oracle.realize(StateSpec.coherent(alpha), 40), Ordering.NORMAL, 3)
        assert table.entry(2, 1) == pytest.approx(alpha.conjugate() ** 2 * alpha, abs=1e-12)


class TestPhaseSpace:
    """Test cases for tomograms and Husimi functions."""

    def test_wavefunctions_are_orthonormal(self):
        """Test the recurrence wavefunctions integrate to the identity."""
        xs = np.linspace(-12.0, 12.0, 4001)
        psi = wavefunctions(6, xs)
        gram = trapezoid(psi[:, None, :] * psi[None, :, :], xs, axis=2)
        assert np.allclose(gram, np.eye(7), atol=1e-9)

    def test_vacuum_tomogram_is_gaussian(self, oracle):
        """Test the vacuum tomogram is exp(-x^2)/sqrt(pi) at every phase."""
        state = oracle.realize(StateSpec.fock(0), 10)
        xs = np.array([-1.0, 0.0, 0.7])
        for theta in (0.0, 1.1, 2.5):
            assert np.allclose(
                oracle.tomogram_values(state, theta, xs), np.exp(-(xs**2)) / math.sqrt(math.pi)
            )

    def test_fock_one_tomogram_vanishes_at_origin(self, oracle):
        """Test the Fock(1) tomogram has a node at X = 0."""
        state = oracle.realize(StateSpec.fock(1), 10)
        assert oracle.oracle_tomogram(state, 0.3, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_coherent_tomogram_mean_follows_phase(self, oracle):
        """Test <X_theta> = sqrt(2) Re(alpha e^{-i theta}) on the oracle grid."""
        alpha = 0.5j
        grid = oracle.oracle_grid(oracle.realize(StateSpec.coherent(alpha), 40), 8, 80)
        means = grid.values @ (grid.weights * grid.xs)
        expected = math.sqrt(2.0) * np.real(alpha * np.exp(-1j * grid.thetas))
        assert np.allclose(means, expected, atol=1e-9)

    def test_grid_rows_are_normalized(self, oracle):
        """Test every oracle grid row integrates to one."""
        grid = oracle.oracle_grid(oracle.realize(StateSpec.even(0.5), 40))
        assert np.allclose(grid.row_norms(), 1.0, atol=1e-10)

    def test_vacuum_husimi_peak(self, oracle):
        """Test Q(0, 0) = 1/pi for the vacuum."""
        state = oracle.realize(StateSpec.fock(0), 10)
        assert oracle.oracle_husimi(state, 0.0, 0.0) == pytest.approx(1.0 / math.pi)

    def test_coherent_husimi_peaks_at_amplitude(self, oracle):
        """Test the coherent Husimi function peaks at q + ip = sqrt(2) alpha."""
        alpha = 0.4 - 0.3j
        state = oracle.realize(StateSpec.coherent(alpha), 40)
        q, p = math.sqrt(2.0) * alpha.real, math.sqrt(2.0) * alpha.imag
        assert oracle.oracle_husimi(state, q, p) == pytest.approx(1.0 / math.pi, abs=1e-12)

    def test_vacuum_husimi_off_origin(self, oracle):
        """Test Q = e^{-2}/pi for the vacuum at q = p = sqrt(2)."""
        state = oracle.realize(StateSpec.fock(0), 10)
        root = math.sqrt(2.0)
        assert oracle.oracle_husimi(state, root, root) == pytest.approx(math.exp(-2.0) / math.pi, abs=1e-15)

    def test_fock_one_husimi_vanishes_at_origin(self, oracle):
        """Test Fock(1) has Q(0, 0) = 0."""
        state = oracle.realize(StateSpec.fock(1), 10)
        assert oracle.oracle_husimi(state, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("spec,cutoff", CATALOGUE, ids=[s.label() for s, _ in CATALOGUE])
    def test_husimi_nonnegative_on_grid(self, oracle, spec, cutoff):
        """Test Q >= 0 on a 41x41 grid over [-4, 4]^2."""
        axis = np.linspace(-4.0, 4.0, 41)
        qs, ps = np.meshgrid(axis, axis, indexing="ij")
        values = oracle.husimi_values(oracle.realize(spec, cutoff), qs, ps)
        assert values.shape == (41, 41)
        assert values.min() >= -1e-14
        assert values.max() <= 1.0 / math.pi + 1e-12

    def test_coherent_amplitudes_match_ladder(self):
        """Test a|alpha> = alpha|alpha> away from the truncation edge."""
        alpha = 0.7
        amplitudes = coherent_amplitudes(alpha, 30)
        lowered = annihilation(30) @ amplitudes
        assert np.allclose(lowered[:20], alpha * amplitudes[:20])


class TestTwoModeOracle:
    """Test cases for the product-space amplifier oracle."""

    def test_vacuum_through_vacuum_noise(self, oracle):
        """Test <b b^+> = g for vacuum signal and vacuum noise."""
        vacuum = oracle.realize(StateSpec.fock(0), 6)
        table = oracle.oracle_two_mode_moments(vacuum, vacuum, 3.0, Port.SIGNAL, 2)
        assert table.entry(1, 1) == pytest.approx(3.0, abs=1e-12)

    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_signal_port_matches_forward_map(self, oracle, amplifier, n):
        """Test the forward moment map against the product-space traces."""
        signal = oracle.realize(StateSpec.fock(n), 6)
        noise = oracle.realize(StateSpec.thermal(0.3), 6)
        gain = 2.5
        expected = oracle.oracle_two_mode_moments(signal, noise, gain, Port.SIGNAL, 3)

        amp = amplifier.model(gain, Port.SIGNAL, noise=oracle.oracle_moments(noise, Ordering.NORMAL, 3))
        signal_table = oracle.oracle_moments(signal, Ordering.ANTINORMAL, 3)
        actual = amplifier.amplify_moments(signal_table, amp, 3)
        assert actual.max_difference(expected) < 1e-9

    def test_idler_port_matches_forward_map(self, oracle, amplifier):
        """Test the idler-port map against the product-space traces."""
        signal = oracle.realize(StateSpec.fock(2), 6)
        noise = oracle.realize(StateSpec.thermal(0.1), 6)
        gain = 4.0
        expected = oracle.oracle_two_mode_moments(signal, noise, gain, Port.IDLER, 3)

        amp = amplifier.model(gain, Port.IDLER, noise=oracle.oracle_moments(noise, Ordering.ANTINORMAL, 3))
        signal_table = oracle.oracle_moments(signal, Ordering.NORMAL, 3)
        actual = amplifier.amplify_moments(signal_table, amp, 3)
        assert actual.max_difference(expected) < 1e-9
