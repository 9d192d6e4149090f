"""Closed-form moments, ordering conversion and moment-domain functionals."""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from qmoment.config import get_settings
from qmoment.core.exceptions import InvalidParameter, OrderingMismatch, OutOfDomain
from qmoment.core.lattice import binomial, factorial, flat_index, index_arrays, lattice_size
from qmoment.core.models import MomentTable, Ordering
from qmoment.core.schemas import StateSpec

logger = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def ordering_matrix(source: Ordering, max_degree: int) -> np.ndarray:
    """Dense matrix converting a flat table of ordering ``source`` to the other one.

    Normal to antinormal:
        <a^k (a^+)^l> = sum_p C(k,p) C(l,p) p! <(a^+)^(l-p) a^(k-p)>
    Antinormal to normal carries an extra (-1)^p with the index roles swapped.
    """
    size = lattice_size(max_degree)
    matrix = np.zeros((size, size))
    first, second = index_arrays(max_degree)
    sign = 1.0 if source is Ordering.NORMAL else -1.0
    for row, (i, j) in enumerate(zip(first, second)):
        i, j = int(i), int(j)
        for p in range(min(i, j) + 1):
            coefficient = sign**p * binomial(i, p) * binomial(j, p) * factorial(p)
            matrix[row, flat_index(j - p, i - p)] = coefficient
    matrix.flags.writeable = False
    return matrix


@dataclass(frozen=True)
class SeriesResult:
    """Truncated overlap series with its per-shell contributions.

    Shell d collects the terms whose larger index degree max(n+m, k+l) is d.
    """

    value: float
    shells: np.ndarray
    converged: bool

    @property
    def last_shell(self) -> float:
        return float(np.sum(np.abs(self.shells[-2:])))


class MomentService:
    """Service for the moment-table data model."""

    def __init__(self) -> None:
        """Initialize the moment service."""
        self.settings = get_settings()

    def closed_form_moments(
        self, spec: StateSpec, ordering: Ordering, max_degree: int
    ) -> MomentTable:
        """
        Moments of a catalogue state from closed-form expressions.

        Args:
            spec: State description
            ordering: Normal or antinormal
            max_degree: Largest total degree R

        Returns:
            MomentTable of the requested ordering

        Raises:
            InvalidParameter: If the state parameters are outside their domain
        """
        ordering = Ordering(ordering)
        if max_degree < 0:
            raise InvalidParameter("max_degree must be non-negative", {"max_degree": max_degree})

        if spec.kind == "fock":
            number = spec.n

            def entry(i: int, j: int) -> complex:
                if i != j:
                    return 0.0
                if ordering is Ordering.NORMAL:
                    return factorial(number) / factorial(number - i) if i <= number else 0.0
                return factorial(number + i) / factorial(number)

            return MomentTable.from_function(ordering, max_degree, entry)

        if spec.kind == "thermal":
            if spec.temperature is None or spec.temperature <= 0:
                raise InvalidParameter("temperature must be positive", {"T": spec.temperature})
            inverse = 1.0 / spec.temperature
            if ordering is Ordering.NORMAL:
                base = 1.0 / math.expm1(inverse)
            else:
                base = 1.0 / -math.expm1(-inverse)
            return MomentTable.from_function(
                ordering,
                max_degree,
                lambda i, j: factorial(i) * base**i if i == j else 0.0,
            )

        normal = self._coherent_family_normal(spec, max_degree)
        if ordering is Ordering.NORMAL:
            return normal
        return self.convert_ordering(normal)

    @staticmethod
    def _coherent_family_normal(spec: StateSpec, max_degree: int) -> MomentTable:
        alpha = spec.alpha
        conj = alpha.conjugate()
        if spec.kind == "coherent":
            return MomentTable.from_function(
                Ordering.NORMAL, max_degree, lambda n, m: conj**n * alpha**m
            )
        sign = 1.0 if spec.kind == "even" else -1.0
        overlap = math.exp(-2.0 * abs(alpha) ** 2)
        norm_sq = 1.0 / (2.0 * (1.0 + sign * overlap))

        def entry(n: int, m: int) -> complex:
            bracket = 1.0 + (-1.0) ** (n + m) + sign * overlap * ((-1.0) ** n + (-1.0) ** m)
            return norm_sq * conj**n * alpha**m * bracket

        return MomentTable.from_function(Ordering.NORMAL, max_degree, entry)

    def convert_ordering(self, table: MomentTable) -> MomentTable:
        """Re-express a table in the opposite operator ordering."""
        matrix = ordering_matrix(table.ordering, table.max_degree)
        return MomentTable(table.ordering.opposite, table.max_degree, matrix @ table.values)

    def as_ordering(self, table: MomentTable, ordering: Ordering) -> MomentTable:
        """``table`` in the requested ordering, converting only when needed."""
        if table.ordering is Ordering(ordering):
            return table
        return self.convert_ordering(table)

    def overlap_series(self, first: MomentTable, second: MomentTable) -> SeriesResult:
        """
        Tr[rho1 rho2] as a truncated series in normal-ordered moments.

        Args:
            first: Normal-ordered table
            second: Normal-ordered table

        Returns:
            SeriesResult with value, shell contributions and convergence flag

        Raises:
            OrderingMismatch: If either table is not normal-ordered
        """
        for table in (first, second):
            if table.ordering is not Ordering.NORMAL:
                raise OrderingMismatch(
                    "overlap needs normal-ordered tables", {"ordering": table.ordering.value}
                )
        degree = min(first.max_degree, second.max_degree)
        shells = np.zeros(degree + 1)
        total = 0.0
        rows, cols = index_arrays(degree)
        for n, m in zip(rows, cols):
            n, m = int(n), int(m)
            left = first.entry(n, m)
            if left == 0:
                continue
            # The delta forces l = n + k - m.
            for k in range(max(0, m - n), degree + 1):
                l = n + k - m
                if k + l > degree:
                    break
                right = second.entry(k, l)
                if right == 0:
                    continue
                coefficient = (-1.0) ** (m + k) * factorial(n + k) / (
                    factorial(n) * factorial(m) * factorial(k) * factorial(l)
                )
                term = (coefficient * left * right).real
                total += term
                shells[max(n + m, k + l)] += term
        tail = float(np.sum(np.abs(shells[-2:])))
        converged = tail <= self.settings.purity_convergence_tolerance
        return SeriesResult(value=float(total), shells=shells, converged=converged)

    def overlap(self, first: MomentTable, second: MomentTable) -> float:
        """Tr[rho1 rho2] from two normal-ordered tables."""
        result = self.overlap_series(first, second)
        if not result.converged:
            logger.warning(
                "Overlap series not converged at degree %d: last shells %.3e",
                result.shells.size - 1,
                result.last_shell,
            )
        return result.value

    def purity_series(self, table: MomentTable) -> SeriesResult:
        """Purity series of one table."""
        return self.overlap_series(table, table)

    def purity(self, table: MomentTable) -> float:
        """Tr[rho^2] from a normal-ordered table."""
        return self.overlap(table, table)

    @staticmethod
    def effective_temperature(purity: float) -> float:
        """
        Temperature of the thermal state with the given purity.

        Raises:
            OutOfDomain: If purity is not strictly between 0 and 1
        """
        if not 0.0 < purity < 1.0:
            raise OutOfDomain("purity must lie in (0, 1)", {"purity": purity})
        return 1.0 / (2.0 * math.atanh(purity))

    def vacuum_fidelity(self, table: MomentTable) -> float:
        """<0|rho|0> = sum_k (-1)^k <(a^+)^k a^k> / k!."""
        table = self.as_ordering(table, Ordering.NORMAL)
        return float(
            sum(
                (-1.0) ** k * table.entry(k, k).real / factorial(k)
                for k in range(table.max_degree // 2 + 1)
            )
        )
