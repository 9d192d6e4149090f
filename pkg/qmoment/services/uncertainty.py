"""Uncertainty relations and moment-matrix positivity checks."""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from qmoment.config import get_settings
from qmoment.core.exceptions import InsufficientDegree, OutOfDomain, PurityNotConverged
from qmoment.core.models import MomentTable, Ordering, TomographicMoments
from qmoment.core.schemas import UncertaintyReport, VerdictSchema
from qmoment.services.moments import MomentService, SeriesResult

logger = logging.getLogger(__name__)

PASS_TOLERANCE = 1e-9
PURITY_BOUND_TOLERANCE = 1e-6
PSD_RELATIVE_TOLERANCE = 1e-8
MIN_PURITY = 1e-3


def purity_phi(purity: float) -> float:
    """Approximate Phi(purity) of the purity-dependent uncertainty bound (1% accurate)."""
    return (4.0 + math.sqrt(16.0 + 9.0 * purity * purity)) / (9.0 * purity)


class UncertaintyService:
    """Service validating measured moment tables against quantum constraints."""

    def __init__(self, moment_service: Optional[MomentService] = None) -> None:
        """Initialize the uncertainty service."""
        self.settings = get_settings()
        self.moments = moment_service or MomentService()

    def _normal(self, table: MomentTable, degree: int) -> MomentTable:
        if table.max_degree < degree:
            raise InsufficientDegree(
                "table degree too low", {"max_degree": table.max_degree, "needed": degree}
            )
        return self.moments.as_ordering(table, Ordering.NORMAL)

    def ur_simple(self, table: MomentTable) -> float:
        """
        Left side of the Schrodinger-Robertson relation in moment form.

        Args:
            table: Moment table of degree at least 2

        Returns:
            Value that is non-negative for every physical state

        Raises:
            InsufficientDegree: If the table stops below degree 2
        """
        normal = self._normal(table, 2)
        mean = normal.entry(0, 1)
        number = normal.entry(1, 1).real - abs(mean) ** 2
        squeeze = normal.entry(0, 2) - mean**2
        return float(number + number**2 - abs(squeeze) ** 2)

    @staticmethod
    def ur_tomographic(moments: TomographicMoments, theta: float) -> float:
        """
        Determinant form of the relation from quadrature variances, minus 1/4.

        Needs second-order moments at theta, theta + pi/4 and theta + pi/2.

        Raises:
            MissingAngles: If one of the three phases is absent
            InsufficientDegree: If the moments stop below order 2
        """
        if moments.max_order < 2:
            raise InsufficientDegree("second-order tomographic moments required")

        def variance(phase: float) -> float:
            row = moments.row_at(phase)
            return float(row[2] - row[1] ** 2)

        along = variance(theta)
        across = variance(theta + math.pi / 2.0)
        covariance = variance(theta + math.pi / 4.0) - 0.5 * (along + across)
        return along * across - covariance**2 - 0.25

    def ur_purity_dependent(
        self, table: MomentTable, convergence_tolerance: Optional[float] = None
    ) -> Tuple[float, float]:
        """
        Purity-strengthened relation: returns (lhs, bound).

        Args:
            table: Moment table of degree at least 2
            convergence_tolerance: Accepted size of the last purity shells

        Returns:
            Left side and (Phi^2 - 1) / 4

        Raises:
            PurityNotConverged: If the purity series has not converged
            OutOfDomain: If the purity is below 1e-3
        """
        normal = self._normal(table, 2)
        return self._purity_relation(
            normal, self.moments.purity_series(normal), convergence_tolerance
        )

    def _purity_relation(
        self, normal: MomentTable, series: SeriesResult, convergence_tolerance: Optional[float]
    ) -> Tuple[float, float]:
        if convergence_tolerance is None:
            tolerance = self.settings.purity_convergence_tolerance
        else:
            tolerance = convergence_tolerance
        if series.last_shell > tolerance:
            raise PurityNotConverged(
                "purity series not converged",
                {"last_shell": series.last_shell, "tolerance": tolerance, "purity": series.value},
            )
        purity = series.value
        if purity < MIN_PURITY:
            raise OutOfDomain("purity too small for the bound", {"purity": purity})
        phi = purity_phi(purity)
        return self.ur_simple(normal), (phi * phi - 1.0) / 4.0

    def gram_matrix(self, table: MomentTable, order: int) -> np.ndarray:
        """
        Gram matrix <B_i^+ B_j> over the basis 1, a, a^+, a^2, (a^+)^2, ...

        Raises:
            InsufficientDegree: If the table stops below degree 2 * order
        """
        normal = self._normal(table, 2 * order)
        antinormal = self.moments.as_ordering(table, Ordering.ANTINORMAL)
        basis = [("a", 0)]
        for power in range(1, order + 1):
            basis.extend([("a", power), ("c", power)])

        size = len(basis)
        gram = np.zeros((size, size), dtype=complex)
        for row, (left_kind, p) in enumerate(basis):
            for col, (right_kind, q) in enumerate(basis):
                if left_kind == "a" and right_kind == "a":
                    value = normal.entry(p, q)
                elif left_kind == "a":
                    value = normal.entry(p + q, 0)
                elif right_kind == "a":
                    value = normal.entry(0, p + q)
                else:
                    value = antinormal.entry(p, q)
                gram[row, col] = value
        return gram

    @staticmethod
    def leading_minors(matrix: np.ndarray) -> List[float]:
        """Determinants of the leading (k+1) x (k+1) blocks."""
        return [float(np.linalg.det(matrix[: k + 1, : k + 1]).real) for k in range(matrix.shape[0])]

    def moment_matrix_psd(self, table: MomentTable, order: int) -> UncertaintyReport:
        """
        Positivity test of the order-``order`` moment matrix.

        Args:
            table: Moment table of degree at least 2 * order
            order: Highest power of a in the basis

        Returns:
            UncertaintyReport with minors, eigenvalues and verdicts

        Raises:
            InsufficientDegree: If the table stops below degree 2 * order
        """
        gram = self.gram_matrix(table, order)
        hermitian = 0.5 * (gram + gram.conj().T)
        eigenvalues = np.linalg.eigvalsh(hermitian)
        scale = float(np.linalg.norm(hermitian, 2))
        minors = self.leading_minors(hermitian)

        threshold = -PSD_RELATIVE_TOLERANCE * max(scale, 1.0)
        psd_ok = bool(eigenvalues.min() >= threshold)
        first_violated, violated_value = None, None
        if not psd_ok:
            for index, minor in enumerate(minors):
                if minor < -PASS_TOLERANCE * max(scale, 1.0) ** (index + 1):
                    first_violated, violated_value = index, minor
                    break
            if first_violated is None:
                violated_value = float(eigenvalues.min())
            logger.info("Moment matrix of order %d is not PSD (min eigenvalue %.3e)", order, eigenvalues.min())

        simple = self.ur_simple(table)
        return UncertaintyReport(
            order=order,
            simple_lhs=simple,
            psd_minors=minors,
            eigenvalues=[float(v) for v in eigenvalues],
            verdicts={
                "simple": VerdictSchema(passed=simple >= -PASS_TOLERANCE, value=simple),
                "psd": VerdictSchema(
                    passed=psd_ok, first_violated=first_violated, value=violated_value
                ),
            },
        )

    def full_report(
        self,
        table: MomentTable,
        order: int,
        convergence_tolerance: Optional[float] = None,
    ) -> UncertaintyReport:
        """Moment-matrix report extended with the purity-dependent relation when available."""
        report = self.moment_matrix_psd(table, order)
        normal = self._normal(table, 2)
        series = self.moments.purity_series(normal)
        report.purity = series.value
        try:
            lhs, bound = self._purity_relation(normal, series, convergence_tolerance)
        except (PurityNotConverged, OutOfDomain) as e:
            logger.warning("Purity-dependent relation skipped: %s", e.message)
            return report
        report.purity_lhs, report.purity_bound = lhs, bound
        report.verdicts["purity"] = VerdictSchema(
            passed=lhs >= bound - PURITY_BOUND_TOLERANCE, value=lhs - bound
        )
        return report
