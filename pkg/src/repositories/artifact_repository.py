"""Artifact repository writing JSON and CSV outputs."""

import csv
import io
import logging
import os
import sys
from typing import Optional, Sequence

from pydantic import BaseModel

from src.repositories.curve_repository import canonical_json

logger = logging.getLogger(__name__)


class ArtifactRepository:
    """Writes artifacts to a file, or to stdout when no path is given."""

    def __init__(self, output: Optional[str] = None):
        """Initialize repository.

        Args:
            output: Output file path; None writes to stdout
        """
        self.output = output

    def _write(self, text: str) -> None:
        if self.output is None:
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        directory = os.path.dirname(self.output)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(self.output, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        logger.info(f"Artifact written: {self.output}")

    def write_json(self, model: BaseModel) -> str:
        """Write a model as canonical JSON and return the text."""
        text = canonical_json(model.model_dump())
        self._write(text)
        return text

    def write_text(self, text: str) -> str:
        self._write(text)
        return text

    def write_csv(self, header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
        """Write a CSV table with a header row and return the text.

        Example:
            repo.write_csv(["scale", "excess"], [[1.0, 0.5], [0.5, 0.25]])
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(value) if isinstance(value, float) else value for value in row])
        text = buffer.getvalue()
        self._write(text)
        return text
