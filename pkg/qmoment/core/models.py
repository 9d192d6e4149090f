"""Domain value types shared by the services.

All types are immutable after construction: arrays are copied and frozen
so values may be shared across threads.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from .exceptions import GainTooSmall, InvalidParameter, MissingAngles
from .lattice import factorial, flat_index, index_arrays, lattice_size


def _frozen(array: np.ndarray, dtype=None) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


class Ordering(str, Enum):
    """Operator ordering of a moment table."""

    NORMAL = "normal"
    ANTINORMAL = "antinormal"

    @property
    def opposite(self) -> "Ordering":
        return Ordering.ANTINORMAL if self is Ordering.NORMAL else Ordering.NORMAL


class Port(str, Enum):
    """Amplifier output port that is measured."""

    SIGNAL = "signal"
    IDLER = "idler"


class GeneratorKind(str, Enum):
    """Linear moment dynamics supported by the evolution service."""

    HARMONIC_NORMAL = "harmonic_normal"
    HARMONIC_ANTINORMAL = "harmonic_antinormal"
    DAMPED_NORMAL = "damped_normal"

    @property
    def ordering(self) -> Ordering:
        if self is GeneratorKind.HARMONIC_ANTINORMAL:
            return Ordering.ANTINORMAL
        return Ordering.NORMAL


@dataclass(frozen=True, eq=False)
class FockState:
    """Truncated density matrix in the number basis |0>..|cutoff>.

    Attributes:
        cutoff: Highest number state kept
        rho: Complex (cutoff+1) x (cutoff+1) density matrix
    """

    cutoff: int
    rho: np.ndarray

    def __post_init__(self) -> None:
        rho = _frozen(self.rho, dtype=complex)
        object.__setattr__(self, "rho", rho)
        if self.cutoff < 1:
            raise InvalidParameter("cutoff must be at least 1", {"cutoff": self.cutoff})
        if rho.shape != (self.cutoff + 1, self.cutoff + 1):
            raise InvalidParameter(
                "density matrix shape does not match cutoff",
                {"cutoff": self.cutoff, "shape": list(rho.shape)},
            )
        trace = np.trace(rho).real
        if abs(trace - 1.0) > 1e-12:
            raise InvalidParameter("density matrix trace is not one", {"trace": trace})
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise InvalidParameter("density matrix is not Hermitian")
        lowest = float(np.linalg.eigvalsh(rho).min())
        if lowest < -1e-10:
            raise InvalidParameter(
                "density matrix has a negative eigenvalue", {"eigenvalue": lowest}
            )

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real


@dataclass(frozen=True, eq=False)
class MomentTable:
    """Ordered moments on the triangular lattice i + j <= max_degree.

    For normal ordering entry (n, m) is <(a^+)^n a^m>; for antinormal
    ordering entry (k, l) is <a^k (a^+)^l>.

    Attributes:
        ordering: Operator ordering of every entry
        max_degree: Largest total degree stored
        values: Flat complex array in degree-major storage order
    """

    ordering: Ordering
    max_degree: int
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "ordering", Ordering(self.ordering))
        if self.max_degree < 0:
            raise InvalidParameter("max_degree must be non-negative")
        values = _frozen(self.values, dtype=complex).reshape(-1)
        if values.size != lattice_size(self.max_degree):
            raise InvalidParameter(
                "value count does not match the lattice size",
                {"max_degree": self.max_degree, "count": int(values.size)},
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls,
        ordering: Ordering,
        max_degree: int,
        entry: Callable[[int, int], complex],
    ) -> "MomentTable":
        """Build a table by evaluating ``entry(i, j)`` on every lattice site."""
        first, second = index_arrays(max_degree)
        values = np.array([entry(int(i), int(j)) for i, j in zip(first, second)])
        return cls(ordering, max_degree, values)

    @classmethod
    def vacuum(cls, ordering: Ordering, max_degree: int) -> "MomentTable":
        """Moments of the vacuum state."""
        ordering = Ordering(ordering)

        def entry(i: int, j: int) -> complex:
            if i != j:
                return 0.0
            if ordering is Ordering.NORMAL:
                return 1.0 if i == 0 else 0.0
            return factorial(i)

        return cls.from_function(ordering, max_degree, entry)

    def entry(self, i: int, j: int) -> complex:
        """Entry (i, j); zero when either index is negative."""
        if i < 0 or j < 0:
            return 0.0 + 0.0j
        if i + j > self.max_degree:
            raise IndexError(f"entry ({i}, {j}) beyond degree {self.max_degree}")
        return complex(self.values[flat_index(i, j)])

    def with_entries(self, updates: Dict[Tuple[int, int], complex]) -> "MomentTable":
        """Copy with entries replaced; the conjugate partner is set as well."""
        values = np.array(self.values, copy=True)
        for (i, j), value in updates.items():
            values[flat_index(i, j)] = value
            values[flat_index(j, i)] = np.conj(value)
        return MomentTable(self.ordering, self.max_degree, values)

    def truncated(self, max_degree: int) -> "MomentTable":
        """Restriction to a lower degree."""
        if max_degree > self.max_degree:
            raise IndexError(f"cannot extend a degree-{self.max_degree} table")
        return MomentTable(
            self.ordering, max_degree, self.values[: lattice_size(max_degree)]
        )

    def magnitude_matrix(self) -> np.ndarray:
        """|entry(i, j)| as a square array, NaN above the stored degree."""
        size = self.max_degree + 1
        out = np.full((size, size), np.nan)
        first, second = index_arrays(self.max_degree)
        out[first, second] = np.abs(self.values)
        return out

    def invariant_violations(self, tol: float = 1e-10) -> List[str]:
        """Names of violated table invariants at tolerance ``tol``."""
        problems = []
        if abs(self.values[0] - 1.0) > tol:
            problems.append("normalization")
        first, second = index_arrays(self.max_degree)
        mirrored = self.values[[flat_index(j, i) for i, j in zip(first, second)]]
        if np.max(np.abs(self.values - np.conj(mirrored))) > tol:
            problems.append("hermiticity")
        if self.ordering is Ordering.NORMAL:
            diagonal = self.values[first == second]
            if np.max(np.abs(diagonal.imag)) > tol or diagonal.real.min() < -tol:
                problems.append("diagonal")
        return problems

    def max_difference(self, other: "MomentTable") -> float:
        """Largest entrywise difference over the common degree."""
        degree = min(self.max_degree, other.max_degree)
        size = lattice_size(degree)
        return float(np.max(np.abs(self.values[:size] - other.values[:size])))


# Noise-mode moments share the table representation.
NoiseMoments = MomentTable


@dataclass(frozen=True, eq=False)
class TomogramGrid:
    """Sampled optical tomogram w(X, theta).

    Attributes:
        thetas: Equispaced phases in [0, 2 pi)
        xs: Quadrature nodes in X
        weights: Integration weights for plain dX integrals at ``xs``
        values: Tomogram values, one row per phase
    """

    thetas: np.ndarray
    xs: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        for name in ("thetas", "xs", "weights", "values"):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype=float))
        if self.xs.shape != self.weights.shape or self.xs.ndim != 1:
            raise InvalidParameter("xs and weights must be matching 1-D arrays")
        if self.values.shape != (self.thetas.size, self.xs.size):
            raise InvalidParameter(
                "values must have one row per phase and one column per node",
                {"shape": list(self.values.shape)},
            )

    def row_norms(self) -> np.ndarray:
        """Integral of w over X for every phase."""
        return self.values @ self.weights


@dataclass(frozen=True, eq=False)
class TomographicMoments:
    """Moments <X_theta^r>, r = 0..max_order, at a set of phases.

    Attributes:
        thetas: Phases of the rows
        values: Real array of shape (phases, max_order + 1)
        stderr: Optional standard errors with the same shape
    """

    thetas: np.ndarray
    values: np.ndarray
    stderr: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "thetas", _frozen(self.thetas, dtype=float).reshape(-1))
        values = _frozen(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != self.thetas.size:
            raise InvalidParameter("values must have one row per phase")
        object.__setattr__(self, "values", values)
        if self.stderr is not None:
            object.__setattr__(self, "stderr", _frozen(self.stderr, dtype=float))

    @property
    def max_order(self) -> int:
        return self.values.shape[1] - 1

    def row_at(self, theta: float, tol: float = 1e-9) -> np.ndarray:
        """Moment row at ``theta`` (matched modulo 2 pi)."""
        two_pi = 2.0 * np.pi
        gaps = np.abs((self.thetas - theta + np.pi) % two_pi - np.pi)
        best = int(np.argmin(gaps))
        if gaps[best] > tol:
            raise MissingAngles(
                "no tomographic moments at requested phase", {"theta": float(theta)}
            )
        return self.values[best]


@dataclass(frozen=True, eq=False)
class AmplifierModel:
    """Phase-insensitive linear amplifier b = sqrt(g) a + sqrt(g - 1) h^+.

    Either ``noise`` (any ordering) or ``noise_temperature`` (thermal idler)
    describes the noise mode.
    """

    gain: float
    port: Port = Port.SIGNAL
    noise: Optional[MomentTable] = None
    noise_temperature: Optional[float] = None
    gain_epsilon: float = 1e-9

    def __post_init__(self) -> None:
        object.__setattr__(self, "port", Port(self.port))
        if not self.gain > 1.0 + self.gain_epsilon:
            raise GainTooSmall(
                "amplifier gain must exceed one", {"g": self.gain, "g_minus_1": self.gain - 1.0}
            )
        if (self.noise is None) == (self.noise_temperature is None):
            raise InvalidParameter("give exactly one of noise moments or noise temperature")
        if self.noise_temperature is not None and self.noise_temperature <= 0:
            raise InvalidParameter(
                "noise temperature must be positive", {"T": self.noise_temperature}
            )

    @property
    def is_thermal(self) -> bool:
        return self.noise_temperature is not None

    @property
    def sigma(self) -> float:
        """Width of the Gaussian noise kernel for thermal noise."""
        if self.noise_temperature is None:
            raise InvalidParameter("sigma is defined only for thermal noise")
        return float(np.sqrt(0.5 / np.tanh(0.5 / self.noise_temperature)))


@dataclass(frozen=True)
class ShiftOp:
    """Index-shifting operator on the moment lattice.

    Row (n, m) receives ``coefficient(n, m)`` times entry (n + di, m + dj);
    shifts to negative indices contribute nothing.
    """

    di: int
    dj: int
    coefficient: Callable[[int, int], complex]

    def matrix(self, rows_degree: int, cols_degree: int) -> sparse.csr_matrix:
        """Sparse matrix from a degree-``cols_degree`` to a degree-``rows_degree`` lattice."""
        first, second = index_arrays(rows_degree)
        row_idx, col_idx, data = [], [], []
        for row, (n, m) in enumerate(zip(first, second)):
            i, j = int(n) + self.di, int(m) + self.dj
            if i < 0 or j < 0 or i + j > cols_degree:
                continue
            value = self.coefficient(int(n), int(m))
            if value != 0:
                row_idx.append(row)
                col_idx.append(flat_index(i, j))
                data.append(complex(value))
        shape = (lattice_size(rows_degree), lattice_size(cols_degree))
        return sparse.csr_matrix((data, (row_idx, col_idx)), shape=shape, dtype=complex)


@dataclass(frozen=True, eq=False)
class EvolutionGenerator:
    """Linear operator d/dt on the flattened moment lattice."""

    kind: GeneratorKind
    max_degree: int
    matrix: sparse.csr_matrix
    gamma: Optional[float] = None

    @property
    def ordering(self) -> Ordering:
        return self.kind.ordering

    @property
    def omega(self) -> Optional[float]:
        if self.gamma is None:
            return None
        return float(np.sqrt(1.0 - self.gamma**2))


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """Estimated moment table with per-entry standard errors."""

    table: MomentTable
    stderr: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "stderr", _frozen(self.stderr, dtype=float))

    def stderr_entry(self, i: int, j: int) -> float:
        return float(self.stderr[flat_index(i, j)])


@dataclass(frozen=True, eq=False)
class HomodyneRecord:
    """Rotated-quadrature samples.

    Attributes:
        phases: Declared finite set of phases
        thetas: Phase of every sample
        xs: Quadrature outcome of every sample
        seed: Seed that produced the record
    """

    phases: np.ndarray
    thetas: np.ndarray
    xs: np.ndarray
    seed: int
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("phases", "thetas", "xs"):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype=float))
        if self.thetas.shape != self.xs.shape:
            raise InvalidParameter("thetas and xs must have equal length")

    def samples_at(self, phase_index: int) -> np.ndarray:
        """Outcomes recorded at one declared phase."""
        return self.xs[np.isclose(self.thetas, self.phases[phase_index], atol=1e-12)]


@dataclass(frozen=True, eq=False)
class HeterodyneRecord:
    """Envelope samples S = q + ip."""

    qs: np.ndarray
    ps: np.ndarray
    seed: int
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("qs", "ps"):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype=float))
        if self.qs.shape != self.ps.shape:
            raise InvalidParameter("q and p samples must have equal length")
        if not (np.all(np.isfinite(self.qs)) and np.all(np.isfinite(self.ps))):
            raise InvalidParameter("heterodyne samples must be finite")

    @property
    def alphas(self) -> np.ndarray:
        """Complex amplitudes (q + ip) / sqrt(2)."""
        return (self.qs + 1j * self.ps) / np.sqrt(2.0)
