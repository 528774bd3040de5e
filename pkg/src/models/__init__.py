"""Domain models."""

from src.models.algebra import StratifiedAlgebra
from src.models.group import GroupElement
from src.models.ledger import ShortenParams, SurgeryLedger
from src.models.path import HorizontalPath, Window

__all__ = ["StratifiedAlgebra", "GroupElement", "HorizontalPath", "Window", "ShortenParams", "SurgeryLedger"]
