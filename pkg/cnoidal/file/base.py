"""Artifact formats: CSV tables, JSON reports, NDJSON failure sidecars"""

from __future__ import annotations

import csv
import json
import logging
import os.path
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, List, Sequence, TextIO

# ndjson missing types: https://github.com/rhgrant10/ndjson/issues/10
import ndjson  # type: ignore

from cnoidal.models import ConsistencyError, ReportRecord
from cnoidal.util import format_float

logger = logging.getLogger(__name__)


def dumps(report: Any) -> str:
    """
    Deterministic JSON: sorted keys, NaN rejected. Floats use the shortest
    repr that parses back to the same double, so a report and a CSV table
    (17 significant digits) differ in text but not in value.
    """
    return json.dumps(report, sort_keys=True, allow_nan=False)


def _cell(value: Any) -> Any:
    if isinstance(value, float):
        return format_float(value)
    return value


class ArtifactFile(ABC):
    """One output file of a run, addressed by directory and file name"""

    extension: str = ""

    def __init__(self, path: Path | str, name: str, encoding: str = "utf-8"):
        self.path = path
        self.filename = name
        self.encoding = encoding

    @property
    def filepath(self) -> str:
        """Directory joined with the file name"""
        return os.path.join(self.path, self.filename)

    def exists(self) -> bool:
        """True once the file has been written"""
        return os.path.exists(self.filepath)

    @abstractmethod
    def columns(self) -> List[str]:
        """Column names of the records already on disk"""

    @abstractmethod
    def read(self, stream: TextIO) -> List[ReportRecord]:
        """Parses every record in `stream`"""

    @abstractmethod
    def dump(self, stream: TextIO, rows: Sequence[ReportRecord], header: bool) -> None:
        """Serialises `rows` onto `stream`"""

    def load(self) -> List[ReportRecord]:
        """Every record in the file"""
        with open(self.filepath, "r", encoding=self.encoding) as stream:
            return self.read(stream)

    def write(self, rows: Sequence[ReportRecord]) -> None:
        """Replaces the file with `rows`, header first"""
        with open(self.filepath, "w", encoding=self.encoding) as stream:
            self.dump(stream, rows, header=True)

    def append(self, rows: Sequence[ReportRecord]) -> None:
        """
        Adds `rows` after the existing records. A file that is not there yet
        is created; rows whose columns differ from the file raise.
        """
        if not self.exists():
            logger.debug(f"{self.filename} is new, writing instead of appending")
            self.write(rows)
            return
        self._check_columns(rows)
        with open(self.filepath, "a", encoding=self.encoding) as stream:
            self.dump(stream, rows, header=False)

    def _same_columns(self, existing: List[str], incoming: List[str]) -> bool:
        return sorted(existing) == sorted(incoming)

    def _check_columns(self, rows: Sequence[ReportRecord]) -> None:
        if not rows:
            return
        existing, incoming = self.columns(), list(rows[0])
        if not self._same_columns(existing, incoming):
            raise ConsistencyError(
                "artifact-columns",
                f"{self.filename} has {existing}, rows carry {incoming}",
            )


class CSVFile(ArtifactFile):
    """Sweep tables and distance series; floats carry 17 significant digits"""

    extension = ".csv"

    def columns(self) -> List[str]:
        with open(self.filepath, "r", encoding=self.encoding) as stream:
            return stream.readline().strip().split(",")

    def _same_columns(self, existing: List[str], incoming: List[str]) -> bool:
        # cells are positional
        return existing == incoming

    def read(self, stream: TextIO) -> List[ReportRecord]:
        # cells come back as strings
        return list(csv.DictReader(stream))

    def dump(self, stream: TextIO, rows: Sequence[ReportRecord], header: bool) -> None:
        if not rows:
            logger.warning(f"no rows for {self.filename}, table left without header")
            return
        writer = csv.writer(stream, lineterminator="\n")
        if header:
            writer.writerow(list(rows[0]))
        writer.writerows([_cell(value) for value in row.values()] for row in rows)


class JSONFile(ArtifactFile):
    """Single reports, or a list of them, written in one piece"""

    extension = ".json"

    def columns(self) -> List[str]:
        records = self.load()
        return list(records[0]) if records else []

    def read(self, stream: TextIO) -> List[ReportRecord]:
        loaded = json.load(stream)
        return loaded if isinstance(loaded, list) else [loaded]

    def dump(self, stream: TextIO, rows: Sequence[ReportRecord], header: bool) -> None:
        stream.write(dumps(rows[0] if len(rows) == 1 else list(rows)) + "\n")

    def append(self, rows: Sequence[ReportRecord]) -> None:
        if not self.exists():
            self.write(rows)
            return
        self._check_columns(rows)
        self.write(self.load() + list(rows))


class NDJSONFile(ArtifactFile):
    """Failure sidecar of a sweep: one JSON object per failed modulus"""

    extension = ".ndjson"

    def columns(self) -> List[str]:
        with open(self.filepath, "r", encoding=self.encoding) as stream:
            return list(json.loads(stream.readline()))

    def read(self, stream: TextIO) -> List[ReportRecord]:
        return list(ndjson.reader(stream))

    def dump(self, stream: TextIO, rows: Sequence[ReportRecord], header: bool) -> None:
        writer = ndjson.writer(stream, sort_keys=True)
        for row in rows:
            writer.writerow(row)
