"""Repository for CSV data: measurement records, tomogram grids and snapshots."""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from qmoment.core.exceptions import MalformedFile
from qmoment.core.lattice import index_arrays
from qmoment.core.models import (
    AmplifierModel,
    HeterodyneRecord,
    HomodyneRecord,
    MomentTable,
    Ordering,
    TomogramGrid,
)
from qmoment.core.schemas import AmplifierSchema, RecordSidecar, SnapshotManifest
from qmoment.services.tomography import hermite_nodes, trapezoid_weights

from .table_repository import PathLike, TableRepository

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
HOMODYNE_COLUMNS = ["theta", "x"]
HETERODYNE_COLUMNS = ["q", "p"]
GRID_COLUMNS = ["theta", "x", "w"]
SNAPSHOT_COLUMNS = ["n", "m", "abs", "re", "im"]

Record = Union[HomodyneRecord, HeterodyneRecord]


def sidecar_path(path: Path) -> Path:
    """JSON sidecar that travels with a record CSV."""
    return path.with_name(path.stem + ".sidecar.json")


def amplifier_schema(amp: Optional[AmplifierModel]) -> Optional[AmplifierSchema]:
    if amp is None:
        return None
    return AmplifierSchema(g=amp.gain, noise_temperature=amp.noise_temperature, port=amp.port)


class RecordRepository:
    """Repository for tabular files written with full round-trip precision."""

    def __init__(self, tables: Optional[TableRepository] = None) -> None:
        """Initialize the repository, sharing the JSON repository's base directory."""
        self.tables = tables or TableRepository()

    def _write_csv(self, frame: pd.DataFrame, path: PathLike) -> Path:
        target = self.tables.resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(target, index=False, float_format=FLOAT_FORMAT)
        logger.info("Wrote %d rows to %s", len(frame), target)
        return target

    @staticmethod
    def _parse(source: Path, **kwargs) -> pd.DataFrame:
        try:
            return pd.read_csv(source, **kwargs)
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
            raise MalformedFile(f"cannot parse {source.name}", {"path": str(source)}) from e

    def _read_csv(self, path: PathLike, columns: Sequence[str]) -> pd.DataFrame:
        source = self.tables.resolve(path)
        frame = self._parse(source)
        if list(frame.columns) != list(columns):
            raise MalformedFile(
                "unexpected CSV header",
                {"path": str(source), "header": list(frame.columns), "expected": list(columns)},
            )
        try:
            values = frame.to_numpy(dtype=float)
        except ValueError as e:
            raise MalformedFile("CSV holds non-numeric values", {"path": str(source)}) from e
        if not np.all(np.isfinite(values)):
            raise MalformedFile("CSV holds non-finite values", {"path": str(source)})
        return frame

    def save_record(self, record: Record, path: PathLike) -> Path:
        """
        Write a record CSV and its JSON sidecar.

        Args:
            record: Homodyne or heterodyne record
            path: CSV path; the sidecar is written next to it

        Returns:
            Path of the CSV
        """
        metadata = record.metadata
        if isinstance(record, HomodyneRecord):
            frame = pd.DataFrame({"theta": record.thetas, "x": record.xs})
            sidecar = RecordSidecar(
                mode="homodyne",
                state=str(metadata.get("state", "unknown")),
                seed=record.seed,
                n=record.xs.size,
                phases=record.phases.tolist(),
                amp=amplifier_schema(metadata.get("amp")),
            )
        else:
            frame = pd.DataFrame({"q": record.qs, "p": record.ps})
            sidecar = RecordSidecar(
                mode="heterodyne",
                state=str(metadata.get("state", "unknown")),
                seed=record.seed,
                n=record.qs.size,
                amp=amplifier_schema(metadata.get("amp")),
            )
        target = self._write_csv(frame, path)
        self.tables.save_model(sidecar, sidecar_path(target))
        return target

    def load_record(self, path: PathLike) -> Record:
        """
        Read a record CSV; the mode follows from the header.

        Without a sidecar the seed reads as 0 and the homodyne phases are
        the distinct recorded angles.

        Raises:
            OSError: If the file cannot be read
            MalformedFile: If the header or values are invalid
        """
        source = self.tables.resolve(path)
        sidecar = None
        if sidecar_path(source).exists():
            sidecar = self.tables.load_model(sidecar_path(source), RecordSidecar)
        seed = sidecar.seed if sidecar else 0
        metadata = {"state": sidecar.state} if sidecar else {}

        header = list(self._parse(source, nrows=0).columns)
        if header == HETERODYNE_COLUMNS:
            frame = self._read_csv(source, HETERODYNE_COLUMNS)
            return HeterodyneRecord(
                qs=frame["q"].to_numpy(), ps=frame["p"].to_numpy(), seed=seed, metadata=metadata
            )
        frame = self._read_csv(source, HOMODYNE_COLUMNS)
        thetas = frame["theta"].to_numpy()
        if sidecar is not None and sidecar.phases is not None:
            phases = np.asarray(sidecar.phases)
        else:
            phases = np.unique(thetas)
        return HomodyneRecord(phases=phases, thetas=thetas, xs=frame["x"].to_numpy(), seed=seed, metadata=metadata)

    def save_grid(self, grid: TomogramGrid, path: PathLike) -> Path:
        """Write a tomogram grid as ``theta,x,w`` rows, phase-major."""
        frame = pd.DataFrame(
            {
                "theta": np.repeat(grid.thetas, grid.xs.size),
                "x": np.tile(grid.xs, grid.thetas.size),
                "w": grid.values.reshape(-1),
            }
        )
        return self._write_csv(frame, path)

    def load_grid(self, path: PathLike) -> TomogramGrid:
        """
        Read a tomogram grid.

        Integration weights are rebuilt: Gauss-Hermite weights when the X
        values are Gauss-Hermite nodes, trapezoid weights otherwise.

        Raises:
            MalformedFile: If the rows do not form a full phase-by-X grid
        """
        frame = self._read_csv(path, GRID_COLUMNS)
        thetas = pd.unique(frame["theta"])
        xs = pd.unique(frame["x"])
        if len(frame) != thetas.size * xs.size:
            raise MalformedFile(
                "grid rows do not form a full phase-by-X table",
                {"rows": len(frame), "phases": int(thetas.size), "nodes": int(xs.size)},
            )
        table = frame.pivot(index="theta", columns="x", values="w").loc[thetas, xs]
        if table.isna().to_numpy().any():
            raise MalformedFile("grid has missing (theta, x) pairs", {"path": str(path)})

        nodes, weights = hermite_nodes(xs.size)
        if not np.allclose(np.sort(xs), nodes, rtol=0.0, atol=1e-12):
            weights = trapezoid_weights(xs)
        else:
            weights = weights[np.argsort(np.argsort(xs))]
        return TomogramGrid(np.asarray(thetas), np.asarray(xs), weights, table.to_numpy())

    def save_snapshots(
        self,
        tables: Sequence[MomentTable],
        manifest: SnapshotManifest,
        directory: PathLike,
    ) -> List[Path]:
        """
        Write one ``n,m,abs,re,im`` CSV per table plus ``manifest.json``.

        Returns:
            Paths of the snapshot CSVs in time order
        """
        written = []
        for table, name in zip(tables, manifest.files):
            first, second = index_arrays(table.max_degree)
            frame = pd.DataFrame(
                {
                    "n": first,
                    "m": second,
                    "abs": np.abs(table.values),
                    "re": table.values.real,
                    "im": table.values.imag,
                }
            )
            written.append(self._write_csv(frame, Path(directory) / name))
        self.tables.save_model(manifest, Path(directory) / "manifest.json")
        return written

    def load_snapshot(self, path: PathLike, ordering: Ordering, max_degree: int) -> MomentTable:
        """Read one snapshot CSV back into a table."""
        frame = self._read_csv(path, SNAPSHOT_COLUMNS)
        first, second = index_arrays(max_degree)
        if len(frame) != first.size or not (
            np.array_equal(frame["n"].to_numpy(), first) and np.array_equal(frame["m"].to_numpy(), second)
        ):
            raise MalformedFile("snapshot rows do not match the lattice", {"path": str(path)})
        values = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
        return MomentTable(ordering, max_degree, values)
