"""Curve repository for JSON curve files."""

import json
import logging
import os
from typing import Any

from pydantic import ValidationError

from src.exceptions import ArtifactParseError
from src.models.files import AlgebraFile, CurveFile, PieceEntry
from src.models.group import GroupElement
from src.models.path import HorizontalPath
from src.repositories.algebra_repository import AlgebraRepository
from src.services import algebra_service, curve_service

logger = logging.getLogger(__name__)


def canonical_json(data: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


class CurveRepository:
    """Reads and writes horizontal curves.

    Loading then saving a file written by this repository reproduces it byte
    for byte.
    """

    def __init__(self, algebras: AlgebraRepository):
        """Initialize repository.

        Args:
            algebras: Repository resolving the algebra named in curve files
        """
        self.algebras = algebras

    def parse(self, text: str, source: str = "<string>") -> HorizontalPath:
        """Build a curve from JSON text.

        Raises:
            ArtifactParseError: If the text is not a valid curve file
            DimensionMismatchError: If controls or start have the wrong size
        """
        try:
            data = CurveFile.model_validate(json.loads(text))
        except (json.JSONDecodeError, ValidationError) as e:
            raise ArtifactParseError(f"cannot read curve {source}: {e}") from e
        if isinstance(data.algebra, AlgebraFile):
            algebra = self.algebras.from_table(data.algebra, source)
        else:
            algebra = self.algebras.get(data.algebra)
        start = GroupElement(algebra, data.start) if data.start is not None else GroupElement.identity(algebra)
        durations = [piece.dt for piece in data.pieces]
        controls = [piece.h for piece in data.pieces]
        if controls and any(len(h) != len(controls[0]) for h in controls):
            raise ArtifactParseError(f"cannot read curve {source}: controls have different lengths")
        curve = curve_service.lift(start, durations, controls, offset=data.a)
        logger.debug(f"Curve loaded from {source}: {curve.pieces} pieces on [{curve.a:.6g}, {curve.b:.6g}]")
        return curve

    def load(self, path: str) -> HorizontalPath:
        """Load a curve file.

        A relative path missing from the working directory is looked up
        under the output directory, where relative artifacts are written.

        Raises:
            ArtifactParseError: If the file cannot be read or parsed
        """
        output_dir = self.algebras.settings.output_dir
        if not os.path.isfile(path) and not os.path.isabs(path) and output_dir:
            candidate = os.path.join(output_dir, path)
            if os.path.isfile(candidate):
                path = candidate
        try:
            with open(path, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as e:
            raise ArtifactParseError(f"cannot read curve {path}: {e}") from e
        return self.parse(text, path)

    @staticmethod
    def to_file(curve: HorizontalPath) -> CurveFile:
        """Curve file; algebras without a built-in name are written inline."""
        name = curve.algebra.name
        return CurveFile(
            algebra=name if algebra_service.is_builtin_name(name) else AlgebraRepository.to_file(curve.algebra),
            start=curve.start.coords(),
            a=curve.a,
            pieces=[PieceEntry(dt=dt, h=list(h)) for dt, h in curve_service.piece_list(curve)],
        )

    def dumps(self, curve: HorizontalPath) -> str:
        """Canonical JSON of a curve."""
        return canonical_json(self.to_file(curve).model_dump(by_alias=True, exclude_none=True))
