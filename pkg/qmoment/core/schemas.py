"""Pydantic schemas for state specifications, file formats and reports."""

from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .exceptions import InvalidParameter
from .lattice import flat_index, index_arrays, lattice_size
from .models import MomentEstimate, MomentTable, Ordering, Port, TomographicMoments

# Entries smaller than this are omitted from MomentTable JSON.
OMIT_BELOW = 1e-15


class StateSpec(BaseModel):
    """Catalogue state description.

    Attributes:
        kind: fock, coherent, thermal, even or odd
        n: Photon number of a Fock state
        alpha_re: Real part of the coherent amplitude
        alpha_im: Imaginary part of the coherent amplitude
        temperature: Unitless temperature of a thermal state
    """

    kind: Literal["fock", "coherent", "thermal", "even", "odd"]
    n: Optional[int] = Field(None, ge=0)
    alpha_re: float = 0.0
    alpha_im: float = 0.0
    temperature: Optional[float] = None

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_parameters(self) -> "StateSpec":
        if self.kind == "fock" and self.n is None:
            raise ValueError("fock state needs a photon number")
        if self.kind == "thermal" and (self.temperature is None or self.temperature <= 0):
            raise ValueError("thermal state needs a positive temperature")
        if self.kind == "odd" and self.alpha == 0:
            raise ValueError("odd coherent state is undefined at alpha = 0")
        return self

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_re, self.alpha_im)

    @classmethod
    def fock(cls, n: int) -> "StateSpec":
        return cls(kind="fock", n=n)

    @classmethod
    def coherent(cls, alpha: complex) -> "StateSpec":
        return cls(kind="coherent", alpha_re=complex(alpha).real, alpha_im=complex(alpha).imag)

    @classmethod
    def thermal(cls, temperature: float) -> "StateSpec":
        return cls(kind="thermal", temperature=temperature)

    @classmethod
    def even(cls, alpha: complex) -> "StateSpec":
        return cls(kind="even", alpha_re=complex(alpha).real, alpha_im=complex(alpha).imag)

    @classmethod
    def odd(cls, alpha: complex) -> "StateSpec":
        return cls(kind="odd", alpha_re=complex(alpha).real, alpha_im=complex(alpha).imag)

    @classmethod
    def parse(cls, text: str) -> "StateSpec":
        """Parse ``kind:value`` such as ``fock:2`` or ``coherent:0.3+0.4j``."""
        kind, _, value = text.strip().partition(":")
        kind = kind.lower()
        try:
            if kind == "fock":
                return cls.fock(int(value))
            if kind == "thermal":
                return cls.thermal(float(value))
            if kind in ("coherent", "even", "odd"):
                alpha = complex(value.replace(" ", "").replace("i", "j"))
                return getattr(cls, kind)(alpha)
        except ValueError as e:
            raise InvalidParameter("cannot parse state", {"state": text, "reason": str(e)}) from e
        raise InvalidParameter("unknown state kind", {"state": text})

    def label(self) -> str:
        """Inverse of :meth:`parse`."""
        if self.kind == "fock":
            return f"fock:{self.n}"
        if self.kind == "thermal":
            return f"thermal:{self.temperature!r}"
        return f"{self.kind}:{self.alpha!r}".replace("(", "").replace(")", "")


class MomentEntrySchema(BaseModel):
    """One stored moment."""

    i: int = Field(..., ge=0)
    j: int = Field(..., ge=0)
    re: float
    im: float


class MomentTableSchema(BaseModel):
    """MomentTable JSON; missing entries read as zero.

    Attributes:
        ordering: normal or antinormal
        max_degree: Largest total degree
        entries: Stored entries
        stderr: Optional standard errors in entry order
    """

    ordering: Ordering
    max_degree: int = Field(..., ge=0)
    entries: List[MomentEntrySchema] = []
    stderr: Optional[List[float]] = None

    @classmethod
    def from_table(
        cls, table: MomentTable, omit_below: float = OMIT_BELOW
    ) -> "MomentTableSchema":
        first, second = index_arrays(table.max_degree)
        entries = [
            MomentEntrySchema(i=int(i), j=int(j), re=float(v.real), im=float(v.imag))
            for i, j, v in zip(first, second, table.values)
            if abs(v) >= omit_below or (i == 0 and j == 0)
        ]
        return cls(ordering=table.ordering, max_degree=table.max_degree, entries=entries)

    @classmethod
    def from_estimate(cls, estimate: MomentEstimate) -> "MomentTableSchema":
        schema = cls.from_table(estimate.table, omit_below=0.0)
        schema.stderr = [float(s) for s in estimate.stderr]
        return schema

    def to_table(self) -> MomentTable:
        values = np.zeros(lattice_size(self.max_degree), dtype=complex)
        for entry in self.entries:
            if entry.i + entry.j > self.max_degree:
                raise InvalidParameter(
                    "entry beyond declared degree", {"i": entry.i, "j": entry.j}
                )
            values[flat_index(entry.i, entry.j)] = complex(entry.re, entry.im)
        return MomentTable(self.ordering, self.max_degree, values)


class TomographicMomentsSchema(BaseModel):
    """Tomographic moments <X_theta^r>, one row per phase."""

    thetas: List[float]
    values: List[List[float]]
    stderr: Optional[List[List[float]]] = None

    @classmethod
    def from_moments(cls, moments: TomographicMoments) -> "TomographicMomentsSchema":
        return cls(
            thetas=moments.thetas.tolist(),
            values=moments.values.tolist(),
            stderr=None if moments.stderr is None else moments.stderr.tolist(),
        )

    def to_moments(self) -> TomographicMoments:
        stderr = None if self.stderr is None else np.asarray(self.stderr)
        return TomographicMoments(np.asarray(self.thetas), np.asarray(self.values), stderr)


class PurityReport(BaseModel):
    """Purity of a normal-ordered table."""

    purity: float
    converged: bool
    last_shell: float
    effective_temperature: Optional[float] = None
    vacuum_fidelity: float


class CalibrationReport(BaseModel):
    """Noise calibration of an amplifier from its vacuum response.

    Attributes:
        g: Gain
        port: Measured port
        noise_moments: Recovered noise table (normal for signal port,
            antinormal for idler port)
        condition_numbers: Condition number of the system up to each degree
    """

    g: float = Field(..., gt=1.0)
    port: Port = Port.SIGNAL
    noise_moments: MomentTableSchema
    condition_numbers: List[float]


class VerdictSchema(BaseModel):
    """Outcome of one test with the first failing index if any."""

    passed: bool
    first_violated: Optional[int] = None
    value: Optional[float] = None


class UncertaintyReport(BaseModel):
    """Uncertainty-relation and moment-matrix checks of one table.

    Attributes:
        simple_lhs: Left side of the Schrodinger-Robertson moment form
        purity: Purity used for the strengthened bound
        purity_lhs: Left side of the purity-dependent form
        purity_bound: (Phi^2 - 1) / 4
        psd_minors: Leading principal minors, index k is the (k+1)x(k+1) block
        eigenvalues: Gram-matrix eigenvalues in ascending order
        verdicts: Per-test verdicts
    """

    order: int = Field(..., ge=1)
    simple_lhs: float
    purity: Optional[float] = None
    purity_lhs: Optional[float] = None
    purity_bound: Optional[float] = None
    psd_minors: List[float]
    eigenvalues: List[float]
    verdicts: Dict[str, VerdictSchema]


class CrosscheckEntry(BaseModel):
    """Difference between heterodyne and homodyne estimates of one moment."""

    i: int
    j: int
    heterodyne_re: float
    heterodyne_im: float
    homodyne_re: float
    homodyne_im: float
    delta: float
    combined_stderr: float
    z: float


class CrosscheckReport(BaseModel):
    """Consistency of the two detection schemes."""

    max_degree: int
    threshold: float
    entries: List[CrosscheckEntry]
    consistent: bool


class SnapshotManifest(BaseModel):
    """Index of a snapshot series written to disk."""

    gamma: Optional[float]
    kind: str
    times: List[float]
    R: int
    state: Optional[str] = None
    files: List[str]


class AmplifierSchema(BaseModel):
    """Amplifier parameters stored with records and configs."""

    g: float = Field(..., gt=1.0)
    noise_temperature: float = Field(..., gt=0.0)
    port: Port = Port.SIGNAL


class RecordSidecar(BaseModel):
    """JSON sidecar stored next to a record CSV."""

    mode: Literal["homodyne", "heterodyne"]
    state: str
    seed: int
    n: int = Field(..., ge=1)
    phases: Optional[List[float]] = None
    amp: Optional[AmplifierSchema] = None


class RunConfig(BaseModel):
    """Config file of the command line; flags override these values."""

    state: Optional[str] = None
    cutoff: Optional[int] = Field(None, ge=1, le=400)
    R: int = Field(4, ge=0, le=40)
    ordering: Ordering = Ordering.NORMAL
    grid_thetas: Optional[int] = Field(None, ge=1, le=4096)
    grid_x_nodes: Optional[int] = Field(None, ge=2, le=400)
    amp: Optional[AmplifierSchema] = None
    gamma: Optional[float] = Field(None, gt=0.0, lt=1.0)
    times: Optional[str] = None
    dt: float = Field(2.0, gt=0.0)
    seed: int = Field(0, ge=0)
    n: int = Field(100_000, ge=1)
    phases: int = Field(16, ge=1, le=4096)
    order: int = Field(2, ge=1, le=10)
    input: Optional[str] = None
    output: Optional[str] = None
