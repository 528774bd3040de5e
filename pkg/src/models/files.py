"""JSON file formats for algebra tables and curves."""

from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator


class BracketEntry(BaseModel):
    """Nonzero bracket [X_i, X_j] = sum_k c_k X_k, 1-based, i < j.

    Read and written as "coeffs"; "terms" is accepted on input.
    """

    model_config = ConfigDict(populate_by_name=True)

    i: int = Field(description="First basis index (1-based)")
    j: int = Field(description="Second basis index (1-based), greater than i")
    terms: Dict[int, float] = Field(alias="coeffs", description="Target index k (1-based) to coefficient c_ijk")


class AlgebraFile(BaseModel):
    """User algebra table.

    Example:
        {"name": "heis", "layer_dims": [2, 1],
         "brackets": [{"i": 1, "j": 2, "coeffs": {"3": 1.0}}]}
    """

    name: str = Field(default="user-table", description="Algebra name")
    layer_dims: List[int] = Field(description="Layer dimensions, first layer first")
    labels: Optional[List[str]] = Field(default=None, description="Basis labels")
    brackets: List[BracketEntry] = Field(default_factory=list, description="Nonzero brackets, i < j")


class PieceEntry(BaseModel):
    """One constant-control piece of a curve."""

    dt: float = Field(description="Piece duration")
    h: List[float] = Field(description="First-layer control (r components)")

    @field_validator("dt")
    @classmethod
    def _nonnegative(cls, value: float) -> float:
        if value < 0:
            raise ValueError(f"piece duration must be nonnegative, got {value}")
        return value


class CurveFile(BaseModel):
    """Horizontal curve file.

    Example:
        {"algebra": "heisenberg", "start": [0, 0, 0], "a": 0.0,
         "pieces": [{"dt": 1.0, "h": [1, 0]}, {"dt": 1.0, "h": [0, 1]}]}
    """

    algebra: Union[str, AlgebraFile] = Field(
        description="Built-in algebra name, algebra table path, or an inline algebra table"
    )
    start: Optional[List[float]] = Field(
        default=None, description="Exponential coordinates of the initial point (identity when omitted)"
    )
    a: float = Field(default=0.0, description="Initial time of the domain")
    pieces: List[PieceEntry] = Field(description="Pieces in time order")
