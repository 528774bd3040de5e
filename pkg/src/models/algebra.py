"""Stratified nilpotent Lie algebra model."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Tuple

import numpy as np
import numpy.typing as npt

from src.exceptions import DimensionMismatchError, DomainError
from src.models.bch import dynkin_terms

AlgebraVector = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class StratifiedAlgebra:
    """Stratified Lie algebra g = g_1 + ... + g_s in an adapted orthonormal basis.

    Brackets are stored as dense structure constants:
    [X_i, X_j] = sum_k structure[i, j, k] X_k (0-based indices).

    Attributes:
        name: Identifier (e.g. "heisenberg", "free(2,3)")
        layer_dims: Dimension of each layer, first layer first
        structure: Array of shape (n, n, n)
        labels: Human-readable basis labels
    """

    name: str
    layer_dims: Tuple[int, ...]
    structure: AlgebraVector = field(repr=False)
    labels: Tuple[str, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        structure = np.array(self.structure, dtype=np.float64)
        n = int(sum(self.layer_dims))
        if structure.shape != (n, n, n):
            raise DimensionMismatchError(
                f"structure table has shape {structure.shape}, expected {(n, n, n)}"
            )
        structure.setflags(write=False)
        object.__setattr__(self, "structure", structure)
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"X{i + 1}" for i in range(n)))

    @property
    def n(self) -> int:
        """Total dimension."""
        return int(sum(self.layer_dims))

    @property
    def s(self) -> int:
        """Step (number of layers)."""
        return len(self.layer_dims)

    @property
    def r(self) -> int:
        """Rank (dimension of the first layer)."""
        return self.layer_dims[0]

    @cached_property
    def layer_of(self) -> npt.NDArray[np.int64]:
        """Layer index (1-based) of every basis vector."""
        return np.repeat(np.arange(1, self.s + 1), self.layer_dims)

    def layer_slice(self, j: int) -> slice:
        """Coordinate slice of layer j.

        Raises:
            DomainError: If j is not in 1..s
        """
        self._check_layer(j)
        start = int(sum(self.layer_dims[: j - 1]))
        return slice(start, start + self.layer_dims[j - 1])

    def _check_layer(self, j: int) -> None:
        if not 1 <= j <= self.s:
            raise DomainError(f"layer index {j} out of range 1..{self.s} for {self.name}")

    def vector(self, coords: npt.ArrayLike) -> AlgebraVector:
        """Coerce coordinates into a vector of this algebra.

        Raises:
            DimensionMismatchError: If the length is not n
        """
        v = np.asarray(coords, dtype=np.float64)
        if v.shape != (self.n,):
            raise DimensionMismatchError(
                f"expected a vector of length {self.n} for {self.name}, got shape {v.shape}"
            )
        return v

    def zero(self) -> AlgebraVector:
        return np.zeros(self.n)

    def basis_vector(self, i: int) -> AlgebraVector:
        """Basis vector X_{i+1} (0-based index i)."""
        v = np.zeros(self.n)
        v[i] = 1.0
        return v

    def embed_horizontal(self, h: npt.ArrayLike) -> AlgebraVector:
        """Embed r first-layer coordinates into g."""
        h = np.asarray(h, dtype=np.float64)
        if h.shape != (self.r,):
            raise DimensionMismatchError(
                f"expected {self.r} first-layer coordinates, got shape {h.shape}"
            )
        v = np.zeros(self.n)
        v[: self.r] = h
        return v

    def project(self, v: AlgebraVector, j: int) -> AlgebraVector:
        """Layer projection keeping only layer-j coordinates."""
        out = np.zeros(self.n)
        sl = self.layer_slice(j)
        out[sl] = v[sl]
        return out

    def layer_coords(self, v: AlgebraVector, j: int) -> AlgebraVector:
        """Coordinates of v in layer j (length dim g_j)."""
        return np.array(v[self.layer_slice(j)])

    def tail_mask(self, j: int) -> npt.NDArray[np.bool_]:
        """Coordinate mask of w_j = g_j + ... + g_s (empty for j = s + 1)."""
        return self.layer_of >= j

    def layer_norms(self, v: AlgebraVector) -> AlgebraVector:
        """Euclidean norm of every layer component of v."""
        return np.array([np.linalg.norm(v[self.layer_slice(j)]) for j in range(1, self.s + 1)])

    def lowest_layer(self, v: AlgebraVector, tol: float = 0.0) -> int:
        """Lowest layer with a component above tol; s + 1 for the zero vector."""
        for j, norm in enumerate(self.layer_norms(v), start=1):
            if norm > tol:
                return j
        return self.s + 1

    def is_homogeneous(self, v: AlgebraVector, j: int, tol: float = 0.0) -> bool:
        """Whether v lies in layer j up to tol."""
        return bool(np.linalg.norm(v - self.project(v, j)) <= tol)

    def bracket(self, a: AlgebraVector, b: AlgebraVector) -> AlgebraVector:
        """Lie bracket [a, b].

        Raises:
            DimensionMismatchError: If a or b has the wrong length
        """
        a = self.vector(a)
        b = self.vector(b)
        return np.einsum("i,j,ijk->k", a, b, self.structure)

    def ad_matrix(self, a: AlgebraVector) -> AlgebraVector:
        """Matrix of ad(a), so that ad_matrix(a) @ b == bracket(a, b)."""
        a = self.vector(a)
        return np.einsum("i,ijk->kj", a, self.structure)

    def dilate(self, lam: float, v: AlgebraVector) -> AlgebraVector:
        """Dilation multiplying layer-j coordinates by lam**j.

        Raises:
            DomainError: If lam is not positive
        """
        if not lam > 0:
            raise DomainError(f"dilation factor must be positive, got {lam}")
        return self.vector(v) * np.power(float(lam), self.layer_of)

    @cached_property
    def bch_terms(self) -> Tuple[Tuple[Tuple[int, ...], float], ...]:
        """Dynkin words of the truncated BCH series with float coefficients."""
        return tuple((word, float(coef)) for word, coef in dynkin_terms(self.s))

    def bch(self, x: AlgebraVector, y: AlgebraVector) -> AlgebraVector:
        """P(x, y) with exp(x) exp(y) = exp(P(x, y)), exact by nilpotency.

        Right-nested brackets sharing a suffix are evaluated once.
        """
        letters = (self.vector(x), self.vector(y))
        if not letters[0].any():
            return letters[1].copy()
        if not letters[1].any():
            return letters[0].copy()

        suffixes: Dict[Tuple[int, ...], AlgebraVector] = {}

        def nested(word: Tuple[int, ...]) -> AlgebraVector:
            if len(word) == 1:
                return letters[word[0]]
            cached = suffixes.get(word)
            if cached is None:
                inner = nested(word[1:])
                cached = np.einsum("i,j,ijk->k", letters[word[0]], inner, self.structure)
                suffixes[word] = cached
            return cached

        total = np.zeros(self.n)
        for word, coef in self.bch_terms:
            total += coef * nested(word)
        return total

    def bracket_map(self, j: int) -> AlgebraVector:
        """Matrix of (W_1, ..., W_r) -> sum_m [X_m, W_m] from (g_{j-1})^r to g_j.

        Columns are ordered generator-major: column m * dim(g_{j-1}) + b holds
        the layer-j coordinates of [X_m, e_b] for the b-th basis vector of g_{j-1}.
        """
        if j < 2:
            raise DomainError(f"bracket map is defined for layers >= 2, got {j}")
        target = self.layer_slice(j)
        source = self.layer_slice(j - 1)
        blocks = [self.structure[m, source, target].T for m in range(self.r)]
        return np.hstack(blocks)

    def same_as(self, other: "StratifiedAlgebra") -> bool:
        """Whether other describes the same algebra (identity or equal tables)."""
        if other is self:
            return True
        return (
            self.layer_dims == other.layer_dims
            and np.array_equal(self.structure, other.structure)
        )

    def require_same(self, other: "StratifiedAlgebra") -> None:
        """Raise DimensionMismatchError unless other is the same algebra."""
        if not self.same_as(other):
            raise DimensionMismatchError(
                f"operands belong to different algebras: {self.name} vs {other.name}"
            )
