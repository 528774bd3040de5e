"""Algebra repository for built-in algebras and table files."""

import json
import logging
import os
from typing import Dict

from pydantic import ValidationError

from src.config.settings import Settings
from src.exceptions import ArtifactParseError, ConfigurationError
from src.models.algebra import StratifiedAlgebra
from src.models.files import AlgebraFile, BracketEntry
from src.services import algebra_service

logger = logging.getLogger(__name__)


class AlgebraRepository:
    """Loads algebras by built-in name or from JSON bracket tables.

    Loaded algebras are cached by reference so repeated lookups share one
    object (paths then compare by identity).
    """

    def __init__(self, settings: Settings):
        """Initialize repository.

        Args:
            settings: Application settings (algebra_dir is searched for tables)
        """
        self.settings = settings
        self._cache: Dict[str, StratifiedAlgebra] = {}

    def get(self, ref: str) -> StratifiedAlgebra:
        """Algebra by built-in name, table path, or table name in algebra_dir.

        Args:
            ref: "heisenberg", "engel", "free(2,3)", a path to a .json table,
                or the stem of a table in the algebra directory

        Returns:
            Validated algebra

        Raises:
            ConfigurationError: If ref names nothing known
            ArtifactParseError: If the table file is malformed
            AlgebraValidationError: If the table fails validation

        Example:
            algebra = repo.get("free(2,3)")
        """
        if ref not in self._cache:
            self._cache[ref] = self._load(ref)
        return self._cache[ref]

    def _load(self, ref: str) -> StratifiedAlgebra:
        if algebra_service.is_builtin_name(ref):
            return algebra_service.builtin(ref)
        for candidate in (ref, os.path.join(self.settings.algebra_dir, f"{ref}.json")):
            if candidate and os.path.isfile(candidate):
                return self.load_file(candidate)
        raise ConfigurationError(f"unknown algebra '{ref}' (not built in and no table file found)")

    def load_file(self, path: str) -> StratifiedAlgebra:
        """Load and validate an algebra table file.

        Raises:
            ArtifactParseError: If the file is not valid JSON or misses fields
        """
        try:
            with open(path, "r", encoding="utf-8") as handle:
                table = AlgebraFile.model_validate(json.load(handle))
        except (OSError, json.JSONDecodeError, ValidationError) as e:
            raise ArtifactParseError(f"cannot read algebra table {path}: {e}") from e
        return self.from_table(table, path)

    def from_table(self, table: AlgebraFile, source: str = "<inline>") -> StratifiedAlgebra:
        """Validated algebra from a parsed table (a file or a table inlined in a curve file).

        Raises:
            AlgebraValidationError: If the table fails validation
        """
        algebra = algebra_service.from_table(
            table.layer_dims,
            [(entry.i, entry.j, entry.terms) for entry in table.brackets],
            name=table.name,
            labels=table.labels,
        )
        logger.info(f"Algebra loaded: {algebra.name} from {source}, layers {list(algebra.layer_dims)}")
        return algebra

    @staticmethod
    def to_file(algebra: StratifiedAlgebra) -> AlgebraFile:
        """Bracket table of an algebra."""
        return AlgebraFile(
            name=algebra.name,
            layer_dims=list(algebra.layer_dims),
            labels=list(algebra.labels),
            brackets=[BracketEntry(i=i, j=j, terms=terms) for i, j, terms in algebra_service.to_table(algebra)],
        )

    def dumps(self, algebra: StratifiedAlgebra) -> str:
        """Algebra table as JSON, brackets written with "coeffs"."""
        return json.dumps(self.to_file(algebra).model_dump(by_alias=True), indent=2, sort_keys=True) + "\n"
