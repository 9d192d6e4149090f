"""Repository for JSON documents: moment tables, reports and manifests."""

import json
import logging
from pathlib import Path
from typing import Optional, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from qmoment.core.exceptions import MalformedFile
from qmoment.core.models import MomentEstimate, MomentTable
from qmoment.core.schemas import MomentTableSchema, RunConfig

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)
PathLike = Union[str, Path]


class TableRepository:
    """Repository reading and writing pydantic documents as JSON files.

    Relative paths resolve against ``root``; parent directories are created
    on write.
    """

    def __init__(self, root: Optional[PathLike] = None) -> None:
        """Initialize the repository with a base directory."""
        self.root = Path(root) if root is not None else Path.cwd()

    def resolve(self, path: PathLike) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.root / path

    def save_model(self, model: BaseModel, path: PathLike) -> Path:
        """
        Write a pydantic model as indented JSON.

        Args:
            model: Document to write
            path: Target file

        Returns:
            Resolved path written
        """
        target = self.resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info("Wrote %s to %s", type(model).__name__, target)
        return target

    def load_model(self, path: PathLike, model_cls: Type[ModelT]) -> ModelT:
        """
        Read a JSON document into ``model_cls``.

        Raises:
            OSError: If the file cannot be read
            MalformedFile: If the content is not a valid document
        """
        source = self.resolve(path)
        text = source.read_text(encoding="utf-8")
        try:
            return model_cls.model_validate_json(text)
        except ValidationError as e:
            raise MalformedFile(
                f"{source.name} is not a valid {model_cls.__name__}",
                {"path": str(source), "errors": json.loads(e.json())},
            ) from e

    def save_table(self, table: MomentTable, path: PathLike) -> Path:
        """Write a moment table, omitting negligible entries."""
        return self.save_model(MomentTableSchema.from_table(table), path)

    def save_estimate(self, estimate: MomentEstimate, path: PathLike) -> Path:
        """Write an estimated table with its standard errors."""
        return self.save_model(MomentTableSchema.from_estimate(estimate), path)

    def load_table(self, path: PathLike) -> MomentTable:
        """Read a moment table; missing entries default to zero."""
        return self.load_model(path, MomentTableSchema).to_table()

    def load_estimate(self, path: PathLike) -> MomentEstimate:
        """
        Read a table written by :meth:`save_estimate`.

        Raises:
            MalformedFile: If the document carries no standard errors
        """
        schema = self.load_model(path, MomentTableSchema)
        if schema.stderr is None:
            raise MalformedFile("table has no standard errors", {"path": str(self.resolve(path))})
        return MomentEstimate(schema.to_table(), np.asarray(schema.stderr, dtype=float))

    def load_run_config(self, path: PathLike) -> RunConfig:
        """Read a run configuration file."""
        return self.load_model(path, RunConfig)
