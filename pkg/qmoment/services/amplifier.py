"""Linear-amplifier measurement chain: forward map, calibration, inversion."""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from qmoment.config import get_settings
from qmoment.core.exceptions import (
    GainTooSmall,
    InsufficientDegree,
    InvalidParameter,
    SingularSystem,
)
from qmoment.core.lattice import (
    binomial,
    flat_index,
    index_arrays,
    lattice_size,
    odd_double_factorial,
)
from qmoment.core.models import (
    AmplifierModel,
    MomentTable,
    NoiseMoments,
    Ordering,
    Port,
    TomogramGrid,
    TomographicMoments,
)
from qmoment.core.schemas import CalibrationReport, MomentTableSchema, StateSpec
from qmoment.services.moments import MomentService
from qmoment.services.tomography import trapezoid_weights

logger = logging.getLogger(__name__)

# Index mapping of the two ports (b is the measured output mode):
#   signal port  b = sqrt(g) a + sqrt(g-1) h^+
#       <b^k b^+l> = sum C(k,i) C(l,j) g^((i+j)/2) (g-1)^((k+l-i-j)/2)
#                    <a^i a^+j> <h^+(k-i) h^(l-j)>
#       signal antinormal (i, j), noise normal (k-i, l-j)
#   idler port   b = sqrt(g-1) a^+ + sqrt(g) h
#       <b^k b^+l> = sum C(k,i) C(l,j) (g-1)^((i+j)/2) g^((k+l-i-j)/2)
#                    <a^+i a^j> <h^(k-i) h^+(l-j)>
#       signal normal (i, j), noise antinormal (k-i, l-j)
SIGNAL_ORDERING = {Port.SIGNAL: Ordering.ANTINORMAL, Port.IDLER: Ordering.NORMAL}
NOISE_ORDERING = {Port.SIGNAL: Ordering.NORMAL, Port.IDLER: Ordering.ANTINORMAL}


class AmplifierService:
    """Service for the amplifier forward model and its inversions.

    All moment-domain maps are lower-triangular in degree-major storage:
    output (k, l) depends only on signal entries (i, j) with i <= k, j <= l,
    and its own coefficient on the diagonal is the port's pure-gain factor.
    """

    def __init__(self, moment_service: Optional[MomentService] = None) -> None:
        """Initialize the amplifier service."""
        self.settings = get_settings()
        self.moments = moment_service or MomentService()

    def model(
        self,
        gain: float,
        port: Port = Port.SIGNAL,
        noise: Optional[NoiseMoments] = None,
        noise_temperature: Optional[float] = None,
    ) -> AmplifierModel:
        """Build an AmplifierModel using the configured gain threshold."""
        return AmplifierModel(
            gain=gain,
            port=port,
            noise=noise,
            noise_temperature=noise_temperature,
            gain_epsilon=self.settings.gain_epsilon,
        )

    def _check_gain(self, gain: float) -> None:
        if gain - 1.0 < self.settings.gain_epsilon:
            raise GainTooSmall(
                "gain too close to one for a stable inversion",
                {"g": gain, "g_minus_1": gain - 1.0, "scale": (max(gain - 1.0, 0.0)) ** 0.5},
            )

    def noise_table(self, amp: AmplifierModel, ordering: Ordering, max_degree: int) -> NoiseMoments:
        """
        Noise-mode moments of ``amp`` in the requested ordering.

        Raises:
            InsufficientDegree: If the stored noise table stops below degree R
        """
        if amp.is_thermal:
            return self.moments.closed_form_moments(
                StateSpec.thermal(amp.noise_temperature), ordering, max_degree
            )
        if amp.noise.max_degree < max_degree:
            raise InsufficientDegree(
                "noise moments do not reach the requested degree",
                {"noise_degree": amp.noise.max_degree, "max_degree": max_degree},
            )
        return self.moments.as_ordering(amp.noise.truncated(max_degree), ordering)

    def forward_matrix(self, amp: AmplifierModel, max_degree: int) -> np.ndarray:
        """Dense map from signal moments (port ordering) to output antinormal moments."""
        noise = self.noise_table(amp, NOISE_ORDERING[amp.port], max_degree)
        gain = amp.gain
        if amp.port is Port.SIGNAL:
            signal_root, noise_root = math.sqrt(gain), math.sqrt(gain - 1.0)
        else:
            signal_root, noise_root = math.sqrt(gain - 1.0), math.sqrt(gain)

        size = lattice_size(max_degree)
        matrix = np.zeros((size, size), dtype=complex)
        first, second = index_arrays(max_degree)
        for row, (k, l) in enumerate(zip(first, second)):
            k, l = int(k), int(l)
            for i in range(k + 1):
                for j in range(l + 1):
                    coefficient = (
                        binomial(k, i)
                        * binomial(l, j)
                        * signal_root ** (i + j)
                        * noise_root ** (k + l - i - j)
                    )
                    matrix[row, flat_index(i, j)] += coefficient * noise.entry(k - i, l - j)
        return matrix

    def amplify_moments(
        self, signal: MomentTable, amp: AmplifierModel, max_degree: int
    ) -> MomentTable:
        """
        Antinormal moments of the amplifier output.

        Args:
            signal: Signal table of either ordering
            amp: Amplifier model
            max_degree: Largest total degree R

        Returns:
            Antinormal MomentTable of the output mode

        Raises:
            InsufficientDegree: If signal or noise stop below degree R
        """
        if signal.max_degree < max_degree:
            raise InsufficientDegree(
                "signal moments do not reach the requested degree",
                {"signal_degree": signal.max_degree, "max_degree": max_degree},
            )
        signal = self.moments.as_ordering(signal.truncated(max_degree), SIGNAL_ORDERING[amp.port])
        values = self.forward_matrix(amp, max_degree) @ signal.values
        values[0] = 1.0
        return MomentTable(Ordering.ANTINORMAL, max_degree, values)

    def _condition_numbers(self, matrix: np.ndarray, max_degree: int) -> List[float]:
        return [
            float(np.linalg.cond(matrix[: lattice_size(degree), : lattice_size(degree)]))
            for degree in range(max_degree + 1)
        ]

    def _solve(
        self, matrix: np.ndarray, rhs: np.ndarray, max_degree: int, what: str
    ) -> Tuple[np.ndarray, List[float]]:
        conditions = self._condition_numbers(matrix, max_degree)
        if conditions[-1] > self.settings.condition_limit or not np.isfinite(conditions[-1]):
            raise SingularSystem(
                f"{what} system is too ill-conditioned",
                {"condition_numbers": conditions, "limit": self.settings.condition_limit},
            )
        for degree, condition in enumerate(conditions):
            logger.debug("%s degree %d condition %.3e", what, degree, condition)
        return solve_triangular(matrix, rhs, lower=True), conditions

    def vacuum_response_matrix(self, gain: float, port: Port, max_degree: int) -> np.ndarray:
        """Map from noise moments (port noise ordering) to the vacuum-signal response."""
        vacuum = MomentTable.vacuum(SIGNAL_ORDERING[port], max_degree)
        if port is Port.SIGNAL:
            signal_root, noise_root = math.sqrt(gain), math.sqrt(gain - 1.0)
        else:
            signal_root, noise_root = math.sqrt(gain - 1.0), math.sqrt(gain)
        size = lattice_size(max_degree)
        matrix = np.zeros((size, size))
        first, second = index_arrays(max_degree)
        for row, (k, l) in enumerate(zip(first, second)):
            k, l = int(k), int(l)
            for i in range(min(k, l) + 1):
                coefficient = (
                    binomial(k, i)
                    * binomial(l, i)
                    * signal_root ** (2 * i)
                    * noise_root ** (k + l - 2 * i)
                    * vacuum.entry(i, i).real
                )
                matrix[row, flat_index(k - i, l - i)] += coefficient
        return matrix

    def _calibrate(
        self, vacuum_response: MomentTable, gain: float, max_degree: int, port: Port
    ) -> Tuple[NoiseMoments, List[float]]:
        port = Port(port)
        self._check_gain(gain)
        if vacuum_response.max_degree < max_degree:
            raise InsufficientDegree(
                "vacuum response does not reach the requested degree",
                {"response_degree": vacuum_response.max_degree, "max_degree": max_degree},
            )
        response = self.moments.as_ordering(vacuum_response, Ordering.ANTINORMAL).truncated(max_degree)
        matrix = self.vacuum_response_matrix(gain, port, max_degree)
        values, conditions = self._solve(matrix, response.values, max_degree, "calibration")
        values[0] = 1.0
        logger.info("Calibrated %s-port noise to degree %d at g=%g", port.value, max_degree, gain)
        return MomentTable(NOISE_ORDERING[port], max_degree, values), conditions

    def calibrate_noise(
        self,
        vacuum_response: MomentTable,
        gain: float,
        max_degree: int,
        port: Port = Port.SIGNAL,
    ) -> NoiseMoments:
        """
        Noise moments from the amplifier's response to a vacuum signal.

        Args:
            vacuum_response: Output moments measured with vacuum at the input
            gain: Amplifier gain g
            max_degree: Largest total degree R
            port: Measured port

        Returns:
            Noise table (normal for the signal port, antinormal for the idler)

        Raises:
            GainTooSmall: If g - 1 is below the configured threshold
            SingularSystem: If the triangular system is ill-conditioned
        """
        noise, _ = self._calibrate(vacuum_response, gain, max_degree, port)
        return noise

    def calibration_report(
        self,
        vacuum_response: MomentTable,
        gain: float,
        max_degree: int,
        port: Port = Port.SIGNAL,
    ) -> CalibrationReport:
        """Calibration result with per-degree condition numbers."""
        noise, conditions = self._calibrate(vacuum_response, gain, max_degree, port)
        return CalibrationReport(
            g=gain,
            port=Port(port),
            noise_moments=MomentTableSchema.from_table(noise),
            condition_numbers=conditions,
        )

    def model_from_report(self, report: CalibrationReport) -> AmplifierModel:
        """Amplifier model carrying the calibrated noise moments."""
        return self.model(report.g, report.port, noise=report.noise_moments.to_table())

    def deamplify_moments(
        self, amplified: MomentTable, amp: AmplifierModel, max_degree: int
    ) -> MomentTable:
        """
        Signal moments recovered from amplified moments.

        Args:
            amplified: Output table (converted to antinormal if needed)
            amp: Amplifier model with known noise
            max_degree: Largest total degree R

        Returns:
            Signal table, antinormal for the signal port and normal for the idler

        Raises:
            GainTooSmall: If g - 1 is below the configured threshold
            SingularSystem: If the triangular system is ill-conditioned
        """
        self._check_gain(amp.gain)
        if amplified.max_degree < max_degree:
            raise InsufficientDegree(
                "amplified moments do not reach the requested degree",
                {"amplified_degree": amplified.max_degree, "max_degree": max_degree},
            )
        output = self.moments.as_ordering(amplified, Ordering.ANTINORMAL).truncated(max_degree)
        matrix = self.forward_matrix(amp, max_degree)
        values, _ = self._solve(matrix, output.values, max_degree, "deamplification")
        values[0] = 1.0
        return MomentTable(SIGNAL_ORDERING[amp.port], max_degree, values)

    def amplified_tomogram(
        self,
        grid: TomogramGrid,
        gain: float,
        sigma: float,
        allow_low_gain: bool = False,
        n_out: int = 801,
    ) -> TomogramGrid:
        """
        Tomogram after amplification with a thermal idler.

        The input is rescaled by sqrt(g) after convolution with a Gaussian of
        variance sigma^2. The convolution integral uses the input grid's own
        quadrature; the output lives on a uniform grid with trapezoid weights.

        Args:
            grid: Input tomogram
            gain: Amplifier gain g
            sigma: Noise kernel width
            allow_low_gain: Accept g below the configured minimum with a warning
            n_out: Output X points per phase

        Returns:
            Amplified TomogramGrid

        Raises:
            GainTooSmall: If g is below the minimum and not overridden
        """
        if sigma < 0:
            raise InvalidParameter("sigma must be non-negative", {"sigma": sigma})
        if gain < self.settings.min_tomogram_gain:
            if not allow_low_gain:
                raise GainTooSmall(
                    "amplified tomogram needs a large gain",
                    {"g": gain, "minimum": self.settings.min_tomogram_gain},
                )
            logger.warning("Amplified tomogram evaluated at low gain g=%g", gain)
        root = math.sqrt(gain)

        if sigma == 0:
            return TomogramGrid(grid.thetas, root * grid.xs, root * grid.weights, grid.values / root)

        half_width = root * (float(np.max(np.abs(grid.xs))) + 8.0 * sigma)
        xs = np.linspace(-half_width, half_width, n_out)
        scaled = xs / root
        kernel = np.exp(-0.5 * ((scaled[:, None] - grid.xs[None, :]) / sigma) ** 2)
        kernel /= math.sqrt(2.0 * math.pi) * sigma
        values = (grid.values * grid.weights) @ kernel.T / root
        return TomogramGrid(grid.thetas, xs, trapezoid_weights(xs), values)

    @staticmethod
    def _tomographic_gain_matrix(max_order: int, gain: float, sigma: float) -> np.ndarray:
        matrix = np.zeros((max_order + 1, max_order + 1))
        for power in range(max_order + 1):
            for half in range(power // 2 + 1):
                matrix[power, power - 2 * half] = (
                    gain ** (power / 2.0)
                    * binomial(power, 2 * half)
                    * odd_double_factorial(half)
                    * sigma ** (2 * half)
                )
        return matrix

    def amplified_tomographic_moments(
        self, moments: TomographicMoments, gain: float, sigma: float
    ) -> TomographicMoments:
        """Tomographic moments after the Gaussian-kernel amplifier."""
        matrix = self._tomographic_gain_matrix(moments.max_order, gain, sigma)
        return TomographicMoments(moments.thetas, moments.values @ matrix.T)

    def deamplified_tomographic_moments(
        self, moments: TomographicMoments, gain: float, sigma: float
    ) -> TomographicMoments:
        """Inverse of :meth:`amplified_tomographic_moments`."""
        matrix = self._tomographic_gain_matrix(moments.max_order, gain, sigma)
        values = solve_triangular(matrix, moments.values.T, lower=True).T
        return TomographicMoments(moments.thetas, values)

