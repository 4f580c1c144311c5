"""Output directory of a CLI run"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Sequence, Type

from cnoidal.file.base import ArtifactFile, CSVFile, JSONFile, NDJSONFile
from cnoidal.models import DomainError, ReportRecord

logger = logging.getLogger(__name__)

FORMATS: Dict[str, Type[ArtifactFile]] = {
    kind.extension: kind for kind in (CSVFile, JSONFile, NDJSONFile)
}


class ArtifactDir:
    """
    Directory receiving the artifacts of a run: CSV tables (sweeps and
    distance series), JSON reports and the NDJSON failure sidecar that
    grows by one line per modulus a sweep could not evaluate.
    """

    def __init__(self, path: Path | str, encoding: str = "utf-8"):
        if not os.path.exists(path):
            logger.info(f"creating output directory {path}")
            os.makedirs(path)
        self.path = path
        self.encoding = encoding

    @classmethod
    def for_target(cls, target: Path | str) -> ArtifactDir:
        """Directory holding the file `target` (the working directory if bare)"""
        return cls(Path(target).parent)

    def artifact(self, name: str) -> ArtifactFile:
        """Reader/writer for `name`, chosen by its extension"""
        kind = FORMATS.get(Path(name).suffix.lower())
        if kind is None:
            raise DomainError(
                f"unknown artifact type for {name}; expected one of {sorted(FORMATS)}"
            )
        return kind(self.path, name, self.encoding)

    def write_table(self, rows: Sequence[ReportRecord], name: str) -> None:
        CSVFile(self.path, name, self.encoding).write(rows)

    def write_report(self, report: Any, name: str) -> None:
        JSONFile(self.path, name, self.encoding).write([report])

    def append_failures(self, failures: Sequence[ReportRecord], name: str) -> None:
        if not failures:
            return
        logger.info(f"{len(failures)} failed sweep points recorded in {name}")
        NDJSONFile(self.path, name, self.encoding).append(failures)

    def load(self, name: str) -> List[ReportRecord]:
        return self.artifact(name).load()
