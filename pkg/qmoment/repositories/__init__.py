"""File repositories for the qmoment toolkit."""

from .record_repository import RecordRepository
from .table_repository import TableRepository

__all__ = ["RecordRepository", "TableRepository"]
