"""Repository module for algebra, curve and artifact files."""

from src.repositories.algebra_repository import AlgebraRepository
from src.repositories.artifact_repository import ArtifactRepository
from src.repositories.curve_repository import CurveRepository

__all__ = ["AlgebraRepository", "ArtifactRepository", "CurveRepository"]
