"""Synthetic homodyne and heterodyne records and their estimators."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import eval_hermite

from qmoment.config import get_settings
from qmoment.core.exceptions import InvalidParameter, TooFewSamples
from qmoment.core.lattice import index_arrays
from qmoment.core.models import (
    AmplifierModel,
    FockState,
    HeterodyneRecord,
    HomodyneRecord,
    MomentEstimate,
    MomentTable,
    Ordering,
    Port,
    TomogramGrid,
    TomographicMoments,
)
from qmoment.core.schemas import StateSpec
from qmoment.services.fock_oracle import FockOracleService, annihilation
from qmoment.services.tomography import (
    check_equispaced,
    equispaced_thetas,
    moments_from_hermite_means,
)

logger = logging.getLogger(__name__)

LOW_ACCEPTANCE = 0.005


def jackknife(samples: np.ndarray, blocks: int) -> Tuple[np.ndarray, np.ndarray]:
    """Mean over axis 0 and its delete-one-block jackknife standard error.

    Args:
        samples: Array of shape (n, ...) of per-sample values
        blocks: Number of contiguous blocks

    Returns:
        (mean, stderr) with the trailing shape of ``samples``
    """
    count = samples.shape[0]
    blocks = min(blocks, count)
    edges = np.linspace(0, count, blocks + 1).astype(int)
    sums = np.add.reduceat(samples, edges[:-1], axis=0)
    sizes = np.diff(edges).reshape((-1,) + (1,) * (samples.ndim - 1))
    total = sums.sum(axis=0)
    mean = total / count
    replicas = (total[None, ...] - sums) / (count - sizes)
    spread = np.abs(replicas - replicas.mean(axis=0)) ** 2
    stderr = np.sqrt((blocks - 1) / blocks * spread.sum(axis=0))
    return mean, stderr


class SimulationService:
    """Service producing measurement records and estimating moments from them.

    Every sampler is deterministic given its seed: the seed's
    ``SeedSequence`` spawns one independent stream per phase or batch.
    """

    def __init__(self, oracle: Optional[FockOracleService] = None) -> None:
        """Initialize the simulation service."""
        self.settings = get_settings()
        self.oracle = oracle or FockOracleService()

    @staticmethod
    def _streams(seed: int, count: int) -> list:
        return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(count)]

    @staticmethod
    def _thermal_amp(amp: AmplifierModel) -> AmplifierModel:
        if amp.port is not Port.SIGNAL or not amp.is_thermal:
            raise InvalidParameter(
                "sampling supports a thermal idler measured at the signal port",
                {"port": amp.port.value, "thermal": amp.is_thermal},
            )
        return amp

    def _half_width(self, state: FockState) -> float:
        mean_number = float(np.dot(np.arange(state.cutoff + 1), state.populations))
        return 8.0 + np.sqrt(2.0 * mean_number + 1.0)

    def _quadrature_samples(
        self, state: FockState, theta: float, count: int, rng: np.random.Generator
    ) -> np.ndarray:
        half_width = self._half_width(state)
        xs = np.linspace(-half_width, half_width, self.settings.homodyne_cdf_points)
        density = np.clip(self.oracle.tomogram_values(state, theta, xs), 0.0, None)
        cdf = cumulative_trapezoid(density, xs, initial=0.0)
        cdf /= cdf[-1]
        return np.interp(rng.random(count), cdf, xs)

    def sample_homodyne(
        self,
        spec: StateSpec,
        phases: Union[int, Sequence[float]],
        n_per_phase: int,
        seed: int,
        cutoff: Optional[int] = None,
        amp: Optional[AmplifierModel] = None,
    ) -> HomodyneRecord:
        """
        Draw rotated-quadrature outcomes by inverse-CDF sampling of the tomogram.

        With ``amp`` the outcome is sqrt(g) (X + Y), Y ~ N(0, sigma^2), the
        Gaussian-kernel amplifier of the tomogram.

        Args:
            spec: State to measure
            phases: Phase count (equispaced on [0, 2 pi)) or explicit phases
            n_per_phase: Samples per phase
            seed: Seed of the record
            cutoff: Fock cutoff of the oracle state
            amp: Optional thermal amplifier at the signal port

        Returns:
            HomodyneRecord ordered phase by phase

        Raises:
            InvalidParameter: If n_per_phase < 1 or the amplifier is unsupported
        """
        if n_per_phase < 1:
            raise InvalidParameter("n_per_phase must be positive", {"n": n_per_phase})
        if amp is not None:
            self._thermal_amp(amp)
        phase_array = (
            equispaced_thetas(phases) if isinstance(phases, int) else np.asarray(phases, dtype=float)
        )
        state = self.oracle.realize(spec, cutoff)
        streams = self._streams(seed, phase_array.size)

        def draw(index: int) -> np.ndarray:
            rng = streams[index]
            xs = self._quadrature_samples(state, phase_array[index], n_per_phase, rng)
            if amp is not None:
                xs = np.sqrt(amp.gain) * (xs + rng.normal(0.0, amp.sigma, n_per_phase))
            return xs

        workers = max(1, min(self.settings.threads, phase_array.size))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(draw, range(phase_array.size)))

        logger.info(
            "Sampled %d homodyne outcomes of %s at %d phases",
            n_per_phase * phase_array.size, spec.label(), phase_array.size,
        )
        return HomodyneRecord(
            phases=phase_array,
            thetas=np.repeat(phase_array, n_per_phase),
            xs=np.concatenate(outcomes) if outcomes else np.empty(0),
            seed=seed,
            metadata={"state": spec.label(), "amp": amp},
        )

    def _husimi_samples(
        self, state: FockState, count: int, rng: np.random.Generator
    ) -> Tuple[np.ndarray, np.ndarray]:
        mean_amplitude = abs(np.trace(state.rho @ annihilation(state.cutoff)))
        mean_number = float(np.dot(np.arange(state.cutoff + 1), state.populations))
        half_width = self.settings.heterodyne_box * np.sqrt(1.0 + mean_number) + np.sqrt(2.0) * mean_amplitude
        bound = 1.0 / (2.0 * np.pi)
        batch = self.settings.heterodyne_batch

        accepted_q, accepted_p, accepted, proposed = [], [], 0, 0
        while accepted < count:
            qs = rng.uniform(-half_width, half_width, batch)
            ps = rng.uniform(-half_width, half_width, batch)
            # Density in (q, p) is Q(alpha) / 2, which never exceeds 1 / (2 pi).
            keep = rng.uniform(0.0, bound, batch) < 0.5 * self.oracle.husimi_values(state, qs, ps)
            accepted_q.append(qs[keep])
            accepted_p.append(ps[keep])
            accepted += int(keep.sum())
            proposed += batch
        rate = accepted / proposed
        if rate < LOW_ACCEPTANCE:
            logger.warning("Heterodyne rejection acceptance is low: %.4f", rate)
        return np.concatenate(accepted_q)[:count], np.concatenate(accepted_p)[:count]

    def sample_heterodyne(
        self,
        spec: StateSpec,
        n: int,
        seed: int,
        cutoff: Optional[int] = None,
        amp: Optional[AmplifierModel] = None,
    ) -> HeterodyneRecord:
        """
        Draw envelope samples S = q + ip from the Husimi function.

        With ``amp`` each amplitude becomes sqrt(g) alpha + sqrt(g - 1) eta*,
        eta drawn from the thermal idler's Gaussian P-function.

        Args:
            spec: State to measure
            n: Number of samples
            seed: Seed of the record
            cutoff: Fock cutoff of the oracle state
            amp: Optional thermal amplifier at the signal port

        Returns:
            HeterodyneRecord

        Raises:
            InvalidParameter: If n < 1 or the amplifier is unsupported
        """
        if n < 1:
            raise InvalidParameter("n must be positive", {"n": n})
        if amp is not None:
            self._thermal_amp(amp)
        state = self.oracle.realize(spec, cutoff)
        sampling, noise = self._streams(seed, 2)
        qs, ps = self._husimi_samples(state, n, sampling)

        if amp is not None:
            mean_number = 1.0 / np.expm1(1.0 / amp.noise_temperature)
            eta = np.sqrt(0.5 * mean_number) * (noise.normal(size=n) + 1j * noise.normal(size=n))
            beta = np.sqrt(amp.gain) * (qs + 1j * ps) / np.sqrt(2.0) + np.sqrt(amp.gain - 1.0) * eta.conj()
            qs, ps = np.sqrt(2.0) * beta.real, np.sqrt(2.0) * beta.imag

        logger.info("Sampled %d heterodyne outcomes of %s", n, spec.label())
        return HeterodyneRecord(qs=qs, ps=ps, seed=seed, metadata={"state": spec.label(), "amp": amp})

    def _require(self, count: int) -> None:
        if count < self.settings.min_samples:
            raise TooFewSamples(
                "record too short for estimation",
                {"samples": int(count), "minimum": self.settings.min_samples},
            )

    def estimate_antinormal_moments(self, rec: HeterodyneRecord, max_degree: int) -> MomentEstimate:
        """
        Antinormal moments as sample means of alpha^k (alpha*)^l.

        Args:
            rec: Heterodyne record
            max_degree: Largest total degree R

        Returns:
            MomentEstimate with jackknife standard errors

        Raises:
            TooFewSamples: If the record holds fewer than the minimum samples
        """
        alphas = rec.alphas
        self._require(alphas.size)
        first, second = index_arrays(max_degree)
        samples = alphas[:, None] ** first[None, :] * alphas.conj()[:, None] ** second[None, :]
        mean, stderr = jackknife(samples, self.settings.jackknife_blocks)
        mean[0], stderr[0] = 1.0, 0.0
        return MomentEstimate(MomentTable(Ordering.ANTINORMAL, max_degree, mean), stderr)

    def _phase_samples(self, rec: HomodyneRecord) -> list:
        samples = [rec.samples_at(index) for index in range(rec.phases.size)]
        self._require(min((s.size for s in samples), default=0))
        return samples

    def estimate_tomogram(self, rec: HomodyneRecord, x_bins: Union[int, Sequence[float]] = 64) -> TomogramGrid:
        """
        Histogram estimate of the tomogram, normalized per phase.

        Args:
            rec: Homodyne record
            x_bins: Bin count over the sample range, or explicit bin edges

        Returns:
            TomogramGrid at bin centres with bin widths as weights

        Raises:
            TooFewSamples: If a phase holds fewer than the minimum samples
        """
        samples = self._phase_samples(rec)
        if isinstance(x_bins, int):
            edges = np.linspace(rec.xs.min(), rec.xs.max(), x_bins + 1)
        else:
            edges = np.asarray(x_bins, dtype=float)
        values = np.vstack([np.histogram(s, bins=edges, density=True)[0] for s in samples])
        return TomogramGrid(rec.phases, 0.5 * (edges[1:] + edges[:-1]), np.diff(edges), values)

    def estimate_tomographic_moments(self, rec: HomodyneRecord, max_order: int) -> TomographicMoments:
        """
        Empirical <X_theta^r> per phase with jackknife standard errors.

        Raises:
            TooFewSamples: If a phase holds fewer than the minimum samples
        """
        powers = np.arange(max_order + 1)
        values, errors = [], []
        for s in self._phase_samples(rec):
            mean, stderr = jackknife(s[:, None] ** powers[None, :], self.settings.jackknife_blocks)
            mean[0], stderr[0] = 1.0, 0.0
            values.append(mean)
            errors.append(stderr)
        return TomographicMoments(rec.phases, np.vstack(values), np.vstack(errors))

    def estimate_moments_from_homodyne(
        self, rec: HomodyneRecord, ordering: Ordering, max_degree: int
    ) -> MomentEstimate:
        """
        Ordered moments from per-phase means of H_N(X), N = 0..R.

        Standard errors come from deleting the same block at every phase.

        Args:
            rec: Homodyne record with at least 2R + 1 equispaced phases
            ordering: Requested ordering
            max_degree: Largest total degree R

        Returns:
            MomentEstimate

        Raises:
            GridTooCoarse: If the phases cannot resolve degree R
            TooFewSamples: If a phase holds fewer than the minimum samples
        """
        ordering = Ordering(ordering)
        check_equispaced(rec.phases, 2 * max_degree + 1)
        samples = self._phase_samples(rec)
        count = min(s.size for s in samples)
        orders = np.arange(max_degree + 1)
        # (samples, phases, orders) with an equal number of samples per phase.
        hermite = np.stack(
            [eval_hermite(orders[None, :], s[:count, None]) for s in samples], axis=1
        )

        blocks = min(self.settings.jackknife_blocks, count)
        edges = np.linspace(0, count, blocks + 1).astype(int)
        sums = np.add.reduceat(hermite, edges[:-1], axis=0)
        total = sums.sum(axis=0)
        sizes = np.diff(edges)

        values = moments_from_hermite_means(rec.phases, total / count, ordering, max_degree)
        replicas = np.array(
            [
                moments_from_hermite_means(
                    rec.phases, (total - sums[b]) / (count - sizes[b]), ordering, max_degree
                )
                for b in range(blocks)
            ]
        )
        spread = np.abs(replicas - replicas.mean(axis=0)) ** 2
        stderr = np.sqrt((blocks - 1) / blocks * spread.sum(axis=0))
        values[0], stderr[0] = 1.0, 0.0
        logger.debug("Homodyne estimate to degree %d from %d samples per phase", max_degree, count)
        return MomentEstimate(MomentTable(ordering, max_degree, values), stderr)

