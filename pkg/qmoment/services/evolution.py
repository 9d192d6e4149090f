"""Moment-lattice time evolution for the harmonic and damped oscillator."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.linalg import LinAlgError, expm, solve

from qmoment.config import get_settings
from qmoment.core.exceptions import (
    DimensionMismatch,
    InsufficientDegree,
    InvalidGamma,
    InvalidParameter,
    SingularSystem,
)
from qmoment.core.lattice import index_arrays, lattice_size
from qmoment.core.models import EvolutionGenerator, GeneratorKind, MomentTable, Ordering, ShiftOp
from qmoment.services.correspondence import eigen_operator
from qmoment.services.moments import MomentService

logger = logging.getLogger(__name__)


def damped_shift_ops(gamma: float) -> List[ShiftOp]:
    """Row terms of the normally ordered damped hierarchy."""
    omega = np.sqrt(1.0 - gamma**2)
    ratio = gamma / omega
    return [
        ShiftOp(0, 0, lambda n, m: 1j * (n - m) - gamma * (n + m)),
        ShiftOp(-1, 1, lambda n, m: gamma * n),
        ShiftOp(1, -1, lambda n, m: gamma * m),
        ShiftOp(-1, -1, lambda n, m: gamma * (1.0 / omega - 1.0) * n * m),
        ShiftOp(-2, 0, lambda n, m: 0.5 * gamma * (1.0 + 1j * ratio) * n * (n - 1)),
        ShiftOp(0, -2, lambda n, m: 0.5 * gamma * (1.0 - 1j * ratio) * m * (m - 1)),
    ]


class EvolutionService:
    """Service for building moment generators and propagating tables."""

    def __init__(self, moment_service: Optional[MomentService] = None) -> None:
        """Initialize the evolution service."""
        self.settings = get_settings()
        self.moments = moment_service or MomentService()

    def build_generator(
        self, kind: GeneratorKind, max_degree: int, gamma: Optional[float] = None
    ) -> EvolutionGenerator:
        """
        Build the generator d/dt on the flattened moment lattice.

        Args:
            kind: Harmonic (either ordering) or damped normal
            max_degree: Largest total degree R
            gamma: Damping coefficient in (0, 1), damped kind only

        Returns:
            EvolutionGenerator with a sparse matrix

        Raises:
            InvalidGamma: If gamma is missing or outside (0, 1) for the damped kind
            InvalidParameter: If max_degree is negative
        """
        kind = GeneratorKind(kind)
        if max_degree < 0:
            raise InvalidParameter("max_degree must be non-negative", {"R": max_degree})

        if kind is GeneratorKind.DAMPED_NORMAL:
            if gamma is None or not 0.0 < gamma < 1.0:
                raise InvalidGamma("gamma must lie in (0, 1)", {"gamma": gamma})
            matrix = sparse.csr_matrix((lattice_size(max_degree),) * 2, dtype=complex)
            for op in damped_shift_ops(gamma):
                matrix = matrix + op.matrix(max_degree, max_degree)
        else:
            first, second = index_arrays(max_degree)
            sign = 1.0 if kind is GeneratorKind.HARMONIC_NORMAL else -1.0
            matrix = sparse.diags(sign * 1j * (first - second).astype(complex), format="csr")
            gamma = None

        logger.debug("Built %s generator at R=%d (%d nonzeros)", kind.value, max_degree, matrix.nnz)
        return EvolutionGenerator(kind=kind, max_degree=max_degree, matrix=matrix.tocsr(), gamma=gamma)

    def _check(self, table: MomentTable, gen: EvolutionGenerator) -> None:
        if table.max_degree != gen.max_degree:
            raise DimensionMismatch(
                "table and generator degrees differ",
                {"table_R": table.max_degree, "generator_R": gen.max_degree},
            )

    def _evolve(self, values: np.ndarray, gen: EvolutionGenerator, t: float) -> np.ndarray:
        if gen.max_degree <= self.settings.expm_max_degree:
            return expm(t * gen.matrix.toarray()) @ values
        tolerance = self.settings.ode_tolerance
        solution = solve_ivp(
            lambda _, y: gen.matrix @ y,
            (0.0, t),
            values,
            method="DOP853",
            rtol=tolerance,
            atol=tolerance * 1e-2,
        )
        if not solution.success:
            raise RuntimeError(f"moment integration failed: {solution.message}")
        return solution.y[:, -1]

    def propagate(self, table: MomentTable, gen: EvolutionGenerator, t: float) -> MomentTable:
        """
        Propagate a moment table over time ``t``.

        The table is converted to the generator ordering and back, so the
        result has the ordering of the input.

        Args:
            table: Table of degree gen.max_degree
            gen: Generator from build_generator
            t: Non-negative time

        Returns:
            Propagated MomentTable

        Raises:
            DimensionMismatch: If the degrees differ
            InvalidParameter: If t is negative
        """
        self._check(table, gen)
        if t < 0:
            raise InvalidParameter("time must be non-negative", {"t": t})

        start = self.moments.as_ordering(table, gen.ordering)
        values = np.array(start.values) if t == 0 else self._evolve(start.values, gen, t)
        values[0] = 1.0
        result = MomentTable(gen.ordering, gen.max_degree, values)

        drift = result.invariant_violations(self.settings.hermiticity_tolerance)
        if "hermiticity" in drift:
            logger.warning("Hermiticity drift at t=%.4g exceeds tolerance", t)
        return self.moments.as_ordering(result, table.ordering)

    def eigen_check(self, table: MomentTable, ordering: Ordering, energy: float) -> float:
        """
        Residual of the oscillator eigen-relation at energy ``energy``.

        Args:
            table: Moment table of degree at least 2
            ordering: Ordering in which the relation is evaluated
            energy: Candidate eigenvalue E

        Returns:
            Largest |LHS - E * entry| over entries of degree up to R - 2

        Raises:
            InsufficientDegree: If the table stops below degree 2
        """
        if table.max_degree < 2:
            raise InsufficientDegree("eigen relation needs degree 2", {"R": table.max_degree})
        table = self.moments.as_ordering(table, Ordering(ordering))
        operator = eigen_operator(table.ordering, table.max_degree)
        lhs = operator @ table.values
        rhs = energy * table.values[: lattice_size(table.max_degree - 2)]
        return float(np.max(np.abs(lhs - rhs)))

    def stationary_moments(self, gen: EvolutionGenerator) -> MomentTable:
        """
        Fixed point of the hierarchy with entry (0, 0) pinned to one.

        Raises:
            SingularSystem: If the generator has more than one stationary state
        """
        dense = gen.matrix.toarray()
        try:
            rest = solve(dense[1:, 1:], -dense[1:, 0])
        except LinAlgError as e:
            raise SingularSystem(
                "generator has no unique stationary state", {"kind": gen.kind.value}
            ) from e
        return MomentTable(gen.ordering, gen.max_degree, np.concatenate([[1.0], rest]))

    def snapshot_series(
        self, table: MomentTable, gen: EvolutionGenerator, times: Sequence[float]
    ) -> List[MomentTable]:
        """Propagated tables at each of ``times``, evaluated in parallel."""
        self._check(table, gen)
        times = [float(t) for t in times]
        if not times:
            return []
        workers = min(self.settings.threads, len(times))
        logger.info("Propagating %d snapshots on %d threads", len(times), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda t: self.propagate(table, gen, t), times))
