"""Brute-force ground truth in a truncated number basis."""

import logging
from typing import Optional

import numpy as np

from qmoment.config import get_settings
from qmoment.core.exceptions import CutoffTooSmall, InvalidParameter
from qmoment.core.lattice import index_arrays, lattice_size
from qmoment.core.models import FockState, MomentTable, Ordering, Port, TomogramGrid
from qmoment.core.schemas import StateSpec

logger = logging.getLogger(__name__)


def annihilation(cutoff: int) -> np.ndarray:
    """Truncated annihilation operator on |0>..|cutoff>."""
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1).astype(complex)


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """<n|alpha> for n = 0..cutoff, by the ratio recurrence."""
    amplitudes = np.empty(cutoff + 1, dtype=complex)
    amplitudes[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, cutoff + 1):
        amplitudes[n] = amplitudes[n - 1] * alpha / np.sqrt(n)
    return amplitudes


def wavefunctions(cutoff: int, xs: np.ndarray) -> np.ndarray:
    """Oscillator eigenfunctions psi_n(x), shape (cutoff + 1, len(xs)).

    Uses the normalized three-term recurrence, so no factorial or Hermite
    value is ever formed explicitly.
    """
    xs = np.asarray(xs, dtype=float)
    psi = np.zeros((cutoff + 1,) + xs.shape)
    psi[0] = np.pi ** (-0.25) * np.exp(-0.5 * xs**2)
    if cutoff >= 1:
        psi[1] = np.sqrt(2.0) * xs * psi[0]
    for n in range(1, cutoff):
        psi[n + 1] = (
            np.sqrt(2.0 / (n + 1)) * xs * psi[n] - np.sqrt(n / (n + 1)) * psi[n - 1]
        )
    return psi


class FockOracleService:
    """Service that realizes catalogue states and evaluates them directly.

    Every quantity here is computed from the density matrix by operator
    products, wavefunctions or coherent-state overlaps, independently of the
    closed forms used elsewhere.
    """

    def __init__(self) -> None:
        """Initialize the oracle service."""
        self.settings = get_settings()

    def realize(self, spec: StateSpec, cutoff: Optional[int] = None) -> FockState:
        """
        Build the truncated density matrix of a catalogue state.

        Args:
            spec: State description
            cutoff: Highest number state kept (settings default when omitted)

        Returns:
            Normalized FockState

        Raises:
            CutoffTooSmall: If truncation drops more norm than allowed
        """
        cutoff = cutoff or self.settings.default_cutoff
        tolerance = self.settings.truncation_tolerance

        if spec.kind == "fock":
            if spec.n > cutoff:
                raise CutoffTooSmall(
                    "Fock level above cutoff",
                    {"n": spec.n, "cutoff": cutoff, "achieved_norm": 0.0},
                )
            rho = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
            rho[spec.n, spec.n] = 1.0
            return FockState(cutoff, rho)

        if spec.kind == "thermal":
            ratio = np.exp(-1.0 / spec.temperature)
            populations = (1.0 - ratio) * ratio ** np.arange(cutoff + 1)
            norm = float(populations.sum())
            self._check_norm(spec, cutoff, norm, tolerance)
            return FockState(cutoff, np.diag(populations / norm).astype(complex))

        alpha = spec.alpha
        amplitudes = coherent_amplitudes(alpha, cutoff)
        if spec.kind in ("even", "odd"):
            sign = 1.0 if spec.kind == "even" else -1.0
            overlap = np.exp(-2.0 * abs(alpha) ** 2)
            if 1.0 + sign * overlap <= 0.0:
                raise InvalidParameter("cat state undefined", {"alpha": str(alpha)})
            parity = 1.0 + sign * (-1.0) ** np.arange(cutoff + 1)
            amplitudes = amplitudes * parity / np.sqrt(2.0 * (1.0 + sign * overlap))
        norm = float(np.sum(np.abs(amplitudes) ** 2))
        self._check_norm(spec, cutoff, norm, tolerance)
        amplitudes = amplitudes / np.sqrt(norm)
        return FockState(cutoff, np.outer(amplitudes, amplitudes.conj()))

    @staticmethod
    def _check_norm(spec: StateSpec, cutoff: int, norm: float, tolerance: float) -> None:
        if norm < 1.0 - tolerance:
            raise CutoffTooSmall(
                "truncated state loses too much norm",
                {"state": spec.label(), "cutoff": cutoff, "achieved_norm": norm},
            )
        logger.debug("Realized %s at cutoff %d, captured norm %.15f", spec.label(), cutoff, norm)

    def _check_headroom(self, state: FockState, raise_by: int) -> None:
        """Raise if raising by ``raise_by`` quanta would clip populated levels."""
        if raise_by > state.cutoff:
            raise CutoffTooSmall(
                "degree exceeds cutoff", {"degree": raise_by, "cutoff": state.cutoff}
            )
        clipped = float(state.populations[state.cutoff - raise_by + 1 :].sum())
        if clipped > self.settings.truncation_tolerance:
            raise CutoffTooSmall(
                "ladder products would clip populated levels",
                {"cutoff": state.cutoff, "degree": raise_by, "clipped_population": clipped},
            )

    def oracle_moments(
        self, state: FockState, ordering: Ordering, max_degree: int
    ) -> MomentTable:
        """
        Ordered moments by direct matrix traces.

        Args:
            state: Truncated state
            ordering: Normal or antinormal
            max_degree: Largest total degree R

        Returns:
            MomentTable of Tr[rho M] for each ordered ladder product M

        Raises:
            CutoffTooSmall: If the products would clip populated levels
        """
        ordering = Ordering(ordering)
        if ordering is Ordering.ANTINORMAL:
            self._check_headroom(state, max_degree)
        elif max_degree > state.cutoff:
            raise CutoffTooSmall(
                "degree exceeds cutoff", {"degree": max_degree, "cutoff": state.cutoff}
            )

        lower = annihilation(state.cutoff)
        lowers = [np.eye(state.cutoff + 1, dtype=complex)]
        for _ in range(max_degree):
            lowers.append(lowers[-1] @ lower)
        raises = [power.conj().T for power in lowers]

        values = np.empty(lattice_size(max_degree), dtype=complex)
        first, second = index_arrays(max_degree)
        for position, (i, j) in enumerate(zip(first, second)):
            if ordering is Ordering.NORMAL:
                product = raises[i] @ lowers[j]
            else:
                product = lowers[i] @ raises[j]
            values[position] = np.sum(state.rho.T * product)
        values[0] = 1.0
        return MomentTable(ordering, max_degree, values)

    def tomogram_values(self, state: FockState, theta: float, xs: np.ndarray) -> np.ndarray:
        """w(X, theta) = sum rho_nm e^{-i(n-m)theta} psi_n(X) psi_m(X) on an array of X."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        phases = np.exp(-1j * theta * np.arange(state.cutoff + 1))
        rotated = phases[:, None] * wavefunctions(state.cutoff, xs)
        return np.real(np.sum(rotated * (state.rho @ rotated.conj()), axis=0))

    def oracle_tomogram(self, state: FockState, theta: float, x: float) -> float:
        """Optical tomogram of ``state`` at a single point."""
        return float(self.tomogram_values(state, theta, np.array([x]))[0])

    def oracle_grid(
        self,
        state: FockState,
        n_thetas: Optional[int] = None,
        n_x: Optional[int] = None,
    ) -> TomogramGrid:
        """Tomogram sampled on the default (theta, Gauss-Hermite X) grid."""
        from qmoment.services.tomography import grid_from_rows

        return grid_from_rows(
            lambda theta, xs: self.tomogram_values(state, theta, xs),
            n_thetas or self.settings.grid_thetas,
            n_x or self.settings.grid_x_nodes,
        )

    def husimi_values(self, state: FockState, qs: np.ndarray, ps: np.ndarray) -> np.ndarray:
        """Q = <alpha|rho|alpha>/pi with alpha = (q + ip)/sqrt(2), elementwise."""
        alphas = (np.asarray(qs, dtype=float) + 1j * np.asarray(ps, dtype=float)) / np.sqrt(2.0)
        shape = alphas.shape
        alphas = alphas.reshape(-1)
        amplitudes = np.empty((alphas.size, state.cutoff + 1), dtype=complex)
        amplitudes[:, 0] = np.exp(-0.5 * np.abs(alphas) ** 2)
        for n in range(1, state.cutoff + 1):
            amplitudes[:, n] = amplitudes[:, n - 1] * alphas / np.sqrt(n)
        values = np.real(np.sum(amplitudes.conj() * (amplitudes @ state.rho.T), axis=1))
        return values.reshape(shape) / np.pi

    def oracle_husimi(self, state: FockState, q: float, p: float) -> float:
        """Husimi function of ``state`` at a single phase-space point."""
        return float(self.husimi_values(state, np.array([q]), np.array([p]))[0])

    def oracle_two_mode_moments(
        self,
        signal: FockState,
        noise: FockState,
        gain: float,
        port: Port,
        max_degree: int,
    ) -> MomentTable:
        """
        Antinormal moments of the amplifier output on the product space.

        The output mode is sqrt(g) a + sqrt(g - 1) h^+ at the signal port and
        sqrt(g - 1) a^+ + sqrt(g) h at the idler port.

        Args:
            signal: Signal-mode state
            noise: Noise-mode state
            gain: Amplifier gain g
            port: Measured port
            max_degree: Largest total degree R

        Returns:
            Antinormal table of <b^k (b^+)^l>

        Raises:
            CutoffTooSmall: If antinormal factors would clip populated levels
        """
        port = Port(port)
        # Antinormal factors act on the signal at the signal port and on the
        # noise at the idler port; normal factors are exact under truncation.
        self._check_headroom(signal if port is Port.SIGNAL else noise, max_degree)

        a = np.kron(annihilation(signal.cutoff), np.eye(noise.cutoff + 1))
        h = np.kron(np.eye(signal.cutoff + 1), annihilation(noise.cutoff))
        if port is Port.SIGNAL:
            b = np.sqrt(gain) * a + np.sqrt(gain - 1.0) * h.conj().T
        else:
            b = np.sqrt(gain - 1.0) * a.conj().T + np.sqrt(gain) * h
        rho = np.kron(signal.rho, noise.rho)

        lowers = [np.eye(rho.shape[0], dtype=complex)]
        for _ in range(max_degree):
            lowers.append(lowers[-1] @ b)
        raises = [power.conj().T for power in lowers]
        first, second = index_arrays(max_degree)
        values = np.array(
            [np.sum(rho.T * (lowers[k] @ raises[l])) for k, l in zip(first, second)]
        )
        values[0] = 1.0
        return MomentTable(Ordering.ANTINORMAL, max_degree, values)
