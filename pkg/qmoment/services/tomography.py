"""Transforms between tomograms, tomographic moments and ordered moments."""

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.hermite import herm2poly, hermgauss
from scipy.special import eval_hermite

from qmoment.config import get_settings
from qmoment.core.exceptions import (
    DegenerateDirection,
    GridTooCoarse,
    InsufficientDegree,
    OrderingMismatch,
)
from qmoment.core.lattice import factorial, index_arrays, lattice_size
from qmoment.core.models import MomentTable, Ordering, TomogramGrid, TomographicMoments
from qmoment.services.moments import MomentService

logger = logging.getLogger(__name__)


def equispaced_thetas(count: int) -> np.ndarray:
    """``count`` uniform phases on [0, 2 pi)."""
    return 2.0 * np.pi * np.arange(count) / count


def hermite_nodes(count: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes with weights rescaled for plain dX integrals."""
    nodes, weights = hermgauss(count)
    return nodes, weights * np.exp(nodes**2)


def trapezoid_weights(xs: np.ndarray) -> np.ndarray:
    """Trapezoid weights for samples at increasing positions ``xs``."""
    xs = np.asarray(xs, dtype=float)
    weights = np.zeros_like(xs)
    gaps = np.diff(xs)
    weights[:-1] += 0.5 * gaps
    weights[1:] += 0.5 * gaps
    return weights


def grid_from_rows(
    row: Callable[[float, np.ndarray], np.ndarray], n_thetas: int, n_x: int
) -> TomogramGrid:
    """Evaluate ``row(theta, xs)`` on equispaced phases and Gauss-Hermite nodes."""
    thetas = equispaced_thetas(n_thetas)
    xs, weights = hermite_nodes(n_x)
    values = np.vstack([row(theta, xs) for theta in thetas])
    return TomogramGrid(thetas, xs, weights, values)


def hermite_power_coefficients(max_order: int) -> np.ndarray:
    """Row N holds the monomial coefficients of H_N, padded to max_order + 1."""
    table = np.zeros((max_order + 1, max_order + 1))
    for order in range(max_order + 1):
        unit = np.zeros(order + 1)
        unit[order] = 1.0
        coefficients = herm2poly(unit)
        table[order, : coefficients.size] = coefficients
    return table


def check_equispaced(thetas: np.ndarray, needed: int) -> None:
    """Raise GridTooCoarse unless ``thetas`` are uniform with at least ``needed`` phases."""
    count = thetas.size
    if count < needed:
        raise GridTooCoarse(
            "too few phases for the requested degree",
            {"phases": int(count), "needed": int(needed)},
        )
    steps = np.diff(np.sort(np.mod(thetas, 2.0 * np.pi)))
    if count > 1 and np.max(np.abs(steps - 2.0 * np.pi / count)) > 1e-9:
        raise GridTooCoarse("phases are not equispaced on [0, 2 pi)", {"phases": int(count)})


def moments_from_hermite_means(
    thetas: np.ndarray, means: np.ndarray, ordering: Ordering, max_degree: int
) -> np.ndarray:
    """Ordered moments from <H_N(X_theta)>, N = 0..R, at equispaced phases.

    ``means`` has shape (phases, R + 1). Returns the flat lattice values.
    """
    first, second = index_arrays(max_degree)
    values = np.empty(lattice_size(max_degree), dtype=complex)
    for position, (i, j) in enumerate(zip(first, second)):
        i, j = int(i), int(j)
        degree = i + j
        if ordering is Ordering.NORMAL:
            # <(a^+)^n a^m> from the phase average of e^{i(m-n)theta} H_{n+m}.
            kernel = means[:, degree] / factorial(degree)
            harmonic = np.exp(1j * (j - i) * thetas)
        else:
            # <a^k (a^+)^l> mixes H_{k+l-2p} with weights 2^p / (p! (k+l-2p)!).
            kernel = sum(
                2.0**p * means[:, degree - 2 * p] / (factorial(p) * factorial(degree - 2 * p))
                for p in range(degree // 2 + 1)
            )
            harmonic = np.exp(1j * (i - j) * thetas)
        scale = factorial(i) * factorial(j) / math.sqrt(2.0**degree)
        values[position] = scale * np.mean(harmonic * kernel)
    return values


class TomographyService:
    """Service for tomogram and moment transforms.

    Tables with antinormal ordering are routed through the ordering
    conversion before any series in normal moments is summed.
    """

    def __init__(self, moment_service: Optional[MomentService] = None) -> None:
        """Initialize the tomography service."""
        self.settings = get_settings()
        self.moments = moment_service or MomentService()

    @staticmethod
    def hermite(order: int, x):
        """Physicists' Hermite polynomial H_N(x)."""
        if order < 0:
            raise ValueError("Hermite order must be non-negative")
        return eval_hermite(order, x)

    @staticmethod
    def hermite_moment_integral(power: int, order: int) -> float:
        """Integral of X^r H_N(X) e^{-X^2} over the real line."""
        if order > power or (power - order) % 2:
            return 0.0
        half = (power - order) // 2
        return math.sqrt(math.pi) * factorial(power) / (2.0 ** (power - order) * factorial(half))

    def _normal(self, table: MomentTable) -> MomentTable:
        if table.ordering is Ordering.NORMAL:
            return table
        return self.moments.convert_ordering(table)

    def tomogram_values(self, table: MomentTable, theta: float, xs) -> np.ndarray:
        """
        Tomogram predicted by a moment table, truncated at its degree.

        Args:
            table: Moment table of either ordering
            theta: Phase
            xs: Quadrature values

        Returns:
            Array of w(X, theta)
        """
        table = self._normal(table)
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        first, second = index_arrays(table.max_degree)
        series = np.zeros(xs.shape, dtype=complex)
        for (n, m), moment in zip(zip(first, second), table.values):
            if moment == 0:
                continue
            n, m = int(n), int(m)
            weight = moment * np.exp(1j * (n - m) * theta)
            weight /= math.sqrt(2.0 ** (n + m)) * factorial(n) * factorial(m)
            series += weight * eval_hermite(n + m, xs)
        return np.exp(-(xs**2)) / math.sqrt(math.pi) * series.real

    def tomogram_from_moments(self, table: MomentTable, theta: float, x: float) -> float:
        """Tomogram predicted by ``table`` at one point."""
        return float(self.tomogram_values(table, theta, [x])[0])

    def symplectic_tomogram_from_moments(
        self, table: MomentTable, x: float, mu: float, nu: float
    ) -> float:
        """
        Symplectic tomogram w(X, mu, nu) from ordered moments.

        Args:
            table: Moment table of either ordering
            x: Value of mu q + nu p
            mu: Scaling of q
            nu: Scaling of p

        Returns:
            Tomogram value

        Raises:
            DegenerateDirection: If mu^2 + nu^2 is below 1e-12
        """
        scale_sq = mu * mu + nu * nu
        if scale_sq < 1e-12:
            raise DegenerateDirection("mu and nu both vanish", {"mu": mu, "nu": nu})
        table = self._normal(table)
        scale = math.sqrt(scale_sq)
        plus, minus = complex(mu, nu), complex(mu, -nu)
        first, second = index_arrays(table.max_degree)
        total = 0.0 + 0.0j
        for (n, m), moment in zip(zip(first, second), table.values):
            if moment == 0:
                continue
            n, m = int(n), int(m)
            term = moment * plus**n * minus**m / (factorial(n) * factorial(m))
            term /= math.sqrt(2.0 ** (n + m) * scale_sq ** (n + m + 1))
            total += term * eval_hermite(n + m, x / scale)
        return float(math.exp(-x * x / scale_sq) / math.sqrt(math.pi) * total.real)

    def grid_from_moments(
        self,
        table: MomentTable,
        n_thetas: Optional[int] = None,
        n_x: Optional[int] = None,
    ) -> TomogramGrid:
        """Tomogram of ``table`` on the default (theta, Gauss-Hermite X) grid."""
        normal = self._normal(table)
        return grid_from_rows(
            lambda theta, xs: self.tomogram_values(normal, theta, xs),
            n_thetas or self.settings.grid_thetas,
            n_x or self.settings.grid_x_nodes,
        )

    def _check_grid(self, grid: TomogramGrid, max_degree: int) -> None:
        check_equispaced(grid.thetas, 2 * max_degree + 1)
        if grid.xs.size < max_degree + 1:
            raise GridTooCoarse(
                "too few X nodes for the requested degree",
                {"nodes": int(grid.xs.size), "needed": max_degree + 1},
            )

    def moments_from_tomogram(
        self, grid: TomogramGrid, ordering: Ordering, max_degree: int
    ) -> MomentTable:
        """
        Invert a tomogram grid into ordered moments.

        Args:
            grid: Tomogram samples with quadrature weights
            ordering: Requested ordering
            max_degree: Largest total degree R

        Returns:
            MomentTable accurate to quadrature error

        Raises:
            GridTooCoarse: If phases or X nodes cannot resolve degree R
        """
        ordering = Ordering(ordering)
        self._check_grid(grid, max_degree)
        hermite_rows = np.vstack([eval_hermite(order, grid.xs) for order in range(max_degree + 1)])
        means = (grid.values * grid.weights) @ hermite_rows.T
        values = moments_from_hermite_means(grid.thetas, means, ordering, max_degree)
        logger.debug(
            "Inverted %dx%d grid to degree %d (%s)",
            grid.thetas.size, grid.xs.size, max_degree, ordering.value,
        )
        return MomentTable(ordering, max_degree, values)

    def tomographic_moments_from_grid(
        self, grid: TomogramGrid, max_order: int
    ) -> TomographicMoments:
        """
        Moments <X_theta^r> of every grid row by quadrature over X.

        Raises:
            GridTooCoarse: If the X nodes cannot integrate order ``max_order``
        """
        if 2 * grid.xs.size - 1 < max_order:
            raise GridTooCoarse(
                "too few X nodes for the requested order",
                {"nodes": int(grid.xs.size), "order": max_order},
            )
        powers = grid.xs[None, :] ** np.arange(max_order + 1)[:, None]
        values = (grid.values * grid.weights) @ powers.T
        return TomographicMoments(grid.thetas, values)

    def tomographic_moments_from_normal_moments(
        self, table: MomentTable, theta: float, max_order: int
    ) -> np.ndarray:
        """
        Tomographic moments predicted by normal-ordered moments.

        Args:
            table: Normal-ordered table
            theta: Phase
            max_order: Largest power r

        Returns:
            Real array of <X_theta^r>, r = 0..max_order

        Raises:
            OrderingMismatch: If the table is not normal-ordered
            InsufficientDegree: If max_order exceeds the table degree
        """
        if table.ordering is not Ordering.NORMAL:
            raise OrderingMismatch("normal-ordered table required", {"ordering": table.ordering.value})
        if max_order > table.max_degree:
            raise InsufficientDegree(
                "table degree below requested order",
                {"max_degree": table.max_degree, "order": max_order},
            )
        result = np.zeros(max_order + 1)
        for power in range(max_order + 1):
            total = 0.0 + 0.0j
            for degree in range(power % 2, power + 1, 2):
                half = (power - degree) // 2
                common = factorial(power) * math.sqrt(2.0 ** (degree - 2 * power)) / factorial(half)
                for n in range(degree + 1):
                    m = degree - n
                    total += (
                        common
                        / (factorial(n) * factorial(m))
                        * table.entry(n, m)
                        * np.exp(1j * (n - m) * theta)
                    )
            result[power] = total.real
        return result

    def tomographic_moments_at(
        self, table: MomentTable, thetas: Sequence[float], max_order: int
    ) -> TomographicMoments:
        """TomographicMoments predicted by a table at the given phases."""
        normal = self._normal(table)
        thetas = np.asarray(thetas, dtype=float)
        values = np.vstack(
            [self.tomographic_moments_from_normal_moments(normal, theta, max_order) for theta in thetas]
        )
        return TomographicMoments(thetas, values)

    def moments_from_tomographic_moments(
        self, moments: TomographicMoments, ordering: Ordering, max_degree: int
    ) -> MomentTable:
        """
        Ordered moments from tomographic moments at equispaced phases.

        Each <H_N(X_theta)> is assembled from the tomographic moments using the
        monomial expansion of H_N, then inverted like a tomogram.

        Raises:
            GridTooCoarse: If there are fewer than 2R + 1 equispaced phases
            InsufficientDegree: If the tomographic moments stop below order R
        """
        ordering = Ordering(ordering)
        if moments.max_order < max_degree:
            raise InsufficientDegree(
                "tomographic moments stop below the requested degree",
                {"max_order": moments.max_order, "max_degree": max_degree},
            )
        check_equispaced(moments.thetas, 2 * max_degree + 1)
        coefficients = hermite_power_coefficients(max_degree)
        means = moments.values[:, : max_degree + 1] @ coefficients.T
        values = moments_from_hermite_means(moments.thetas, means, ordering, max_degree)
        return MomentTable(ordering, max_degree, values)
