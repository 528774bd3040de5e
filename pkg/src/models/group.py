"""Group elements in exponential coordinates."""

from dataclasses import dataclass, field
from typing import List

import numpy as np
import numpy.typing as npt

from src.models.algebra import AlgebraVector, StratifiedAlgebra


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Point exp(log) of the Carnot group of an algebra.

    Attributes:
        algebra: Lie algebra of the group
        log: Exponential coordinates in the adapted basis, layer-major
    """

    algebra: StratifiedAlgebra = field(repr=False)
    log: AlgebraVector

    def __post_init__(self) -> None:
        log = np.array(self.algebra.vector(self.log), dtype=np.float64)
        log.setflags(write=False)
        object.__setattr__(self, "log", log)

    @classmethod
    def identity(cls, algebra: StratifiedAlgebra) -> "GroupElement":
        return cls(algebra, np.zeros(algebra.n))

    @classmethod
    def exp(cls, algebra: StratifiedAlgebra, v: npt.ArrayLike) -> "GroupElement":
        return cls(algebra, np.asarray(v, dtype=np.float64))

    def inverse(self) -> "GroupElement":
        return GroupElement(self.algebra, -self.log)

    @property
    def is_identity(self) -> bool:
        return not np.any(self.log)

    def coords(self) -> List[float]:
        """Flat coordinate list for serialization."""
        return [float(x) for x in self.log]

    def __repr__(self) -> str:
        return f"<GroupElement({self.algebra.name}, log={np.array2string(self.log, precision=6)})>"
