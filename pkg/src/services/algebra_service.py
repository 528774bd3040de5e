"""Construction and validation of stratified Lie algebras.

Built-in algebras:
- heisenberg(n): layers (2n, 1), [X_i, Y_i] = Z
- engel: layers (2, 1, 1), [X1, X2] = X3, [X1, X3] = X4
- free(r, s): free nilpotent algebra of rank r and step s over a Hall basis

User tables are validated for antisymmetry, grading, the Jacobi identity
and generation by the first layer before use.
"""

import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import numpy.linalg as LA
import numpy.typing as npt

from src.exceptions import AlgebraValidationError, ConfigurationError, DomainError
from src.models.algebra import StratifiedAlgebra

logger = logging.getLogger(__name__)

VALIDATION_TOL = 1e-12

# Dense tables are n^3; keep free algebras at desk scale
MAX_FREE_DIMENSION = 30

_HEISENBERG = re.compile(r"^heisenberg(?:\((\d+)\))?$")
_FREE = re.compile(r"^free\((\d+),\s*(\d+)\)$")


# Witt formula ---------------------------------------------------------------


def mobius(n: int) -> int:
    """Moebius function mu(n)."""
    if n == 1:
        return 1
    result = 1
    k = 2
    while k * k <= n:
        if n % k == 0:
            n //= k
            if n % k == 0:
                return 0
            result = -result
        k += 1
    if n > 1:
        result = -result
    return result


def witt_dimension(r: int, k: int) -> int:
    """Dimension of the degree-k part of the free Lie algebra on r generators.

    (1/k) * sum over d | k of mu(d) r^(k/d).
    """
    total = sum(mobius(d) * r ** (k // d) for d in range(1, k + 1) if k % d == 0)
    return total // k


def witt_dims(r: int, s: int) -> Tuple[int, ...]:
    return tuple(witt_dimension(r, k) for k in range(1, s + 1))


# Hall basis -----------------------------------------------------------------


@dataclass(frozen=True)
class HallElement:
    """Basic commutator: a generator (left = right = -1) or [left, right]."""

    index: int
    weight: int
    left: int = -1
    right: int = -1

    @property
    def is_generator(self) -> bool:
        return self.left < 0


def hall_basis(r: int, s: int) -> List[HallElement]:
    """Basic commutators of weight <= s on r generators, weight by weight.

    [u, v] is basic when u, v are basic, u > v in the order of creation, and
    either u is a generator or u = [x, y] with y <= v.
    """
    elements = [HallElement(index=i, weight=1) for i in range(r)]
    for weight in range(2, s + 1):
        created = []
        for u in elements:
            if u.weight >= weight:
                continue
            for v in elements:
                if u.weight + v.weight != weight or not u.index > v.index:
                    continue
                if not u.is_generator and u.right > v.index:
                    continue
                created.append((u.index, v.index))
        for left, right in created:
            elements.append(HallElement(index=len(elements), weight=weight, left=left, right=right))
    return elements


def _hall_label(elements: Sequence[HallElement], idx: int) -> str:
    e = elements[idx]
    if e.is_generator:
        return f"X{idx + 1}"
    return f"[{_hall_label(elements, e.left)},{_hall_label(elements, e.right)}]"


Poly = Dict[Tuple[int, ...], int]


def _associative_bracket(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            out[wa + wb] = out.get(wa + wb, 0) + ca * cb
            out[wb + wa] = out.get(wb + wa, 0) - ca * cb
    return {w: c for w, c in out.items() if c != 0}


def _word_index(word: Tuple[int, ...], r: int) -> int:
    idx = 0
    for letter in word:
        idx = idx * r + letter
    return idx


@lru_cache(maxsize=16)
def _free_structure(r: int, s: int) -> Tuple[Tuple[int, ...], npt.NDArray[np.float64], Tuple[str, ...]]:
    elements = hall_basis(r, s)
    polys: List[Poly] = []
    for e in elements:
        if e.is_generator:
            polys.append({(e.index,): 1})
        else:
            polys.append(_associative_bracket(polys[e.left], polys[e.right]))

    n = len(elements)
    by_weight: Dict[int, List[int]] = {}
    for e in elements:
        by_weight.setdefault(e.weight, []).append(e.index)

    # Columns: Hall polynomials of each weight in the basis of words of that weight
    bases: Dict[int, npt.NDArray[np.float64]] = {}
    for weight, members in by_weight.items():
        matrix = np.zeros((r**weight, len(members)))
        for col, idx in enumerate(members):
            for word, coef in polys[idx].items():
                matrix[_word_index(word, r), col] = coef
        bases[weight] = matrix

    structure = np.zeros((n, n, n))
    for a in elements:
        for b in elements:
            weight = a.weight + b.weight
            if a.index == b.index or weight > s:
                continue
            target = _associative_bracket(polys[a.index], polys[b.index])
            rhs = np.zeros(r**weight)
            for word, coef in target.items():
                rhs[_word_index(word, r)] = coef
            coeffs, *_ = LA.lstsq(bases[weight], rhs, rcond=None)
            coeffs = np.rint(coeffs)
            if not np.array_equal(bases[weight] @ coeffs, rhs):
                raise AlgebraValidationError(
                    f"Hall rewriting of [{a.index}, {b.index}] in free({r},{s}) is not integral"
                )
            structure[a.index, b.index, by_weight[weight]] = coeffs

    layer_dims = tuple(len(by_weight[w]) for w in range(1, s + 1))
    labels = tuple(_hall_label(elements, i) for i in range(n))
    return layer_dims, structure, labels


def free(r: int, s: int) -> StratifiedAlgebra:
    """Free nilpotent Lie algebra of rank r and step s over a Hall basis.

    Raises:
        DomainError: If r < 1, s < 1 or the dimension exceeds MAX_FREE_DIMENSION
    """
    if r < 1 or s < 1:
        raise DomainError(f"free({r},{s}) needs r >= 1 and s >= 1")
    dims = witt_dims(r, s)
    if r == 1 and s > 1:
        raise DomainError("free(1, s) is abelian; its step is 1")
    if sum(dims) > MAX_FREE_DIMENSION:
        raise DomainError(
            f"free({r},{s}) has dimension {sum(dims)}, above the limit {MAX_FREE_DIMENSION}"
        )
    layer_dims, structure, labels = _free_structure(r, s)
    if layer_dims != dims:
        raise AlgebraValidationError(
            f"Hall basis of free({r},{s}) has layers {layer_dims}, Witt formula gives {dims}"
        )
    return StratifiedAlgebra(f"free({r},{s})", layer_dims, structure, labels)


def heisenberg(n: int = 1) -> StratifiedAlgebra:
    """Heisenberg algebra H^n with basis X_1..X_n, Y_1..Y_n, Z."""
    if n < 1:
        raise DomainError(f"heisenberg(n) needs n >= 1, got {n}")
    dim = 2 * n + 1
    structure = np.zeros((dim, dim, dim))
    for i in range(n):
        structure[i, n + i, 2 * n] = 1.0
        structure[n + i, i, 2 * n] = -1.0
    if n == 1:
        labels: Tuple[str, ...] = ("X", "Y", "Z")
        name = "heisenberg"
    else:
        labels = tuple(f"X{i + 1}" for i in range(n)) + tuple(f"Y{i + 1}" for i in range(n)) + ("Z",)
        name = f"heisenberg({n})"
    return StratifiedAlgebra(name, (2 * n, 1), structure, labels)


def engel() -> StratifiedAlgebra:
    """Engel algebra: layers (2, 1, 1), [X1, X2] = X3, [X1, X3] = X4."""
    structure = np.zeros((4, 4, 4))
    structure[0, 1, 2], structure[1, 0, 2] = 1.0, -1.0
    structure[0, 2, 3], structure[2, 0, 3] = 1.0, -1.0
    return StratifiedAlgebra("engel", (2, 1, 1), structure, ("X1", "X2", "X3", "X4"))


def builtin(name: str) -> StratifiedAlgebra:
    """Built-in algebra by name.

    Args:
        name: "heisenberg", "heisenberg(n)", "engel" or "free(r,s)"

    Returns:
        Validated StratifiedAlgebra

    Raises:
        ConfigurationError: If the name is unknown
    """
    key = name.strip().lower().replace(" ", "")
    match = _HEISENBERG.match(key)
    if match:
        algebra = heisenberg(int(match.group(1)) if match.group(1) else 1)
    elif key == "engel":
        algebra = engel()
    else:
        match = _FREE.match(key)
        if not match:
            raise ConfigurationError(f"unknown algebra '{name}'")
        algebra = free(int(match.group(1)), int(match.group(2)))
    validate(algebra, tol=0.0)
    return algebra


def is_builtin_name(name: str) -> bool:
    key = name.strip().lower().replace(" ", "")
    return bool(_HEISENBERG.match(key) or key == "engel" or _FREE.match(key))


def from_table(
    layer_dims: Sequence[int],
    brackets: Sequence[Tuple[int, int, Mapping[int, float]]],
    name: str = "user-table",
    labels: Optional[Sequence[str]] = None,
    tol: float = VALIDATION_TOL,
) -> StratifiedAlgebra:
    """Algebra from a bracket table listing [X_i, X_j] for i < j (1-based indices).

    Args:
        layer_dims: Dimensions of the layers
        brackets: (i, j, {k: c_ijk}) entries with i < j; [X_j, X_i] follows by antisymmetry
        name: Name recorded on the algebra
        labels: Optional basis labels
        tol: Validation tolerance

    Returns:
        Validated StratifiedAlgebra

    Raises:
        AlgebraValidationError: If an index is out of range, an entry is not
            i < j, or a structural check fails
    """
    if not layer_dims or any(d < 1 for d in layer_dims):
        raise AlgebraValidationError(f"layer dimensions must be positive, got {list(layer_dims)}")
    n = int(sum(layer_dims))
    structure = np.zeros((n, n, n))
    for i, j, coeffs in brackets:
        if not (1 <= i < j <= n):
            raise AlgebraValidationError(f"bracket entry ({i}, {j}) must satisfy 1 <= i < j <= {n}")
        for k, value in coeffs.items():
            if not 1 <= k <= n:
                raise AlgebraValidationError(f"bracket [{i}, {j}] has target index {k} outside 1..{n}")
            structure[i - 1, j - 1, k - 1] = value
            structure[j - 1, i - 1, k - 1] = -value
    algebra = StratifiedAlgebra(name, tuple(layer_dims), structure, tuple(labels or ()))
    validate(algebra, tol=tol)
    return algebra


def to_table(algebra: StratifiedAlgebra) -> List[Tuple[int, int, Dict[int, float]]]:
    """Nonzero brackets [X_i, X_j], i < j, as 1-based (i, j, {k: c}) entries."""
    entries = []
    for i in range(algebra.n):
        for j in range(i + 1, algebra.n):
            row = algebra.structure[i, j]
            coeffs = {int(k) + 1: float(row[k]) for k in np.flatnonzero(row)}
            if coeffs:
                entries.append((i + 1, j + 1, coeffs))
    return entries


# Validation -----------------------------------------------------------------


def jacobi_tensor(algebra: StratifiedAlgebra) -> npt.NDArray[np.float64]:
    """J[i, j, k] = [X_i, [X_j, X_k]] + [X_j, [X_k, X_i]] + [X_k, [X_i, X_j]]."""
    c = algebra.structure
    return (
        np.einsum("jkm,iml->ijkl", c, c)
        + np.einsum("kim,jml->ijkl", c, c)
        + np.einsum("ijm,kml->ijkl", c, c)
    )


def validate(algebra: StratifiedAlgebra, tol: float = VALIDATION_TOL) -> List[str]:
    """Run the structural checks on an algebra.

    Args:
        algebra: Algebra to check
        tol: Absolute tolerance on structure constants

    Returns:
        Names of the checks that passed, in order

    Raises:
        AlgebraValidationError: Naming the first failed check
    """
    c = algebra.structure
    layer = algebra.layer_of

    antisymmetry = float(np.max(np.abs(c + c.transpose(1, 0, 2)), initial=0.0))
    if antisymmetry > tol:
        raise AlgebraValidationError(
            f"antisymmetry fails for {algebra.name}: max |c_ijk + c_jik| = {antisymmetry:.3e}"
        )

    allowed = layer[None, None, :] == layer[:, None, None] + layer[None, :, None]
    grading = float(np.max(np.abs(np.where(allowed, 0.0, c)), initial=0.0))
    if grading > tol:
        raise AlgebraValidationError(
            f"grading fails for {algebra.name}: off-grade constant of size {grading:.3e}"
        )

    jacobi = float(np.max(np.abs(jacobi_tensor(algebra)), initial=0.0))
    if jacobi > max(tol, VALIDATION_TOL):
        raise AlgebraValidationError(
            f"Jacobi identity fails for {algebra.name}: max cyclic sum {jacobi:.3e}"
        )

    for j in range(2, algebra.s + 1):
        rank = LA.matrix_rank(algebra.bracket_map(j))
        if rank != algebra.layer_dims[j - 1]:
            raise AlgebraValidationError(
                f"generation fails for {algebra.name}: [g_1, g_{j - 1}] has rank {rank}, "
                f"layer {j} has dimension {algebra.layer_dims[j - 1]}"
            )

    logger.debug(f"Algebra {algebra.name} passed structural checks (tol={tol:g})")
    return ["antisymmetry", "grading", "jacobi", "generation"]
