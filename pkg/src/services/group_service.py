"""Group operations on a Carnot group in exponential coordinates.

Products use the truncated BCH series of the algebra; conjugation has a
second evaluation path through exp(ad X) used as a cross-check.
"""

import logging
from functools import reduce
from typing import Optional

import numpy as np

from src.exceptions import DomainError, IdentitySuiteFailure
from src.models.algebra import AlgebraVector, StratifiedAlgebra
from src.models.group import GroupElement

logger = logging.getLogger(__name__)


def product(g: GroupElement, h: GroupElement) -> GroupElement:
    """Group product g h.

    Raises:
        DimensionMismatchError: If g and h belong to different algebras
    """
    g.algebra.require_same(h.algebra)
    return GroupElement(g.algebra, g.algebra.bch(g.log, h.log))


def multiply(first: GroupElement, *rest: GroupElement) -> GroupElement:
    """Ordered product first * rest[0] * rest[1] * ..."""
    return reduce(product, rest, first)


def inverse(g: GroupElement) -> GroupElement:
    return g.inverse()


def exp_ad(algebra: StratifiedAlgebra, x: AlgebraVector, y: AlgebraVector) -> AlgebraVector:
    """e^{ad x} y as the finite sum of (ad x)^k y / k! (k < s by nilpotency)."""
    ad = algebra.ad_matrix(x)
    term = algebra.vector(y).copy()
    total = term.copy()
    for k in range(1, algebra.s):
        term = ad @ term / k
        if not term.any():
            break
        total = total + term
    return total


def conjugate(g: GroupElement, h: GroupElement, cross_check: Optional[float] = None) -> GroupElement:
    """Conjugation C_g(h) = g h g^{-1}.

    Args:
        g: Conjugating element
        h: Conjugated element
        cross_check: If given, compare against exp(e^{ad g.log} h.log) and
            raise when the two evaluations differ by more than this tolerance

    Raises:
        DimensionMismatchError: If g and h belong to different algebras
        IdentitySuiteFailure: If the cross-check fails
    """
    result = multiply(g, h, g.inverse())
    if cross_check is not None:
        adjoint = exp_ad(g.algebra, g.log, h.log)
        gap = float(np.max(np.abs(adjoint - result.log)))
        if gap > cross_check:
            raise IdentitySuiteFailure(
                f"conjugation paths disagree by {gap:.3e} (tolerance {cross_check:.1e})"
            )
    return result


def conjugate_via_adjoint(g: GroupElement, h: GroupElement) -> GroupElement:
    """Conjugation evaluated as exp(Ad(g) h.log) = exp(e^{ad g.log} h.log)."""
    g.algebra.require_same(h.algebra)
    return GroupElement(g.algebra, exp_ad(g.algebra, g.log, h.log))


def commutator(g: GroupElement, h: GroupElement) -> GroupElement:
    """Group commutator [g, h] = g h g^{-1} h^{-1}."""
    return multiply(g, h, g.inverse(), h.inverse())


def pi_layer(j: int, g: GroupElement) -> AlgebraVector:
    """Layer projection pi_j(g): layer-j part of the exponential coordinates.

    Raises:
        DomainError: If j is not in 1..s
    """
    return g.algebra.project(g.log, j)


def pi(g: GroupElement) -> AlgebraVector:
    """First-layer coordinates of pi(g) (length r)."""
    return np.array(g.log[: g.algebra.r])


def in_subgroup(g: GroupElement, j: int, tol: float = 0.0) -> bool:
    """Membership in G_j = exp(g_j + ... + g_s) up to tol (G_{s+1} is the identity)."""
    if not 1 <= j <= g.algebra.s + 1:
        raise DomainError(f"subgroup index {j} out of range 1..{g.algebra.s + 1}")
    lower = g.log[~g.algebra.tail_mask(j)]
    return bool(np.all(np.abs(lower) <= tol))


def homogeneous_norm(g: GroupElement) -> float:
    """Homogeneous norm: sum over layers of |pi_j(g)|^(1/j)."""
    norms = g.algebra.layer_norms(g.log)
    return float(sum(norm ** (1.0 / j) for j, norm in enumerate(norms, start=1)))


def homogeneous_distance(g: GroupElement, h: GroupElement) -> float:
    """Left-invariant quasi-distance ||g^{-1} h||."""
    return homogeneous_norm(product(g.inverse(), h))


def dilate(lam: float, g: GroupElement) -> GroupElement:
    """Group dilation delta_lam."""
    return GroupElement(g.algebra, g.algebra.dilate(lam, g.log))


def random_element(
    algebra: StratifiedAlgebra,
    rng: np.random.Generator,
    scale: float = 1.0,
    from_layer: int = 1,
) -> GroupElement:
    """Random element of G_{from_layer} with standard normal coordinates times scale."""
    log = rng.standard_normal(algebra.n) * scale
    log[~algebra.tail_mask(from_layer)] = 0.0
    return GroupElement(algebra, log)


def random_layer_vector(
    algebra: StratifiedAlgebra, rng: np.random.Generator, j: int, scale: float = 1.0
) -> AlgebraVector:
    """Random vector of layer j."""
    v = np.zeros(algebra.n)
    sl = algebra.layer_slice(j)
    v[sl] = rng.standard_normal(sl.stop - sl.start) * scale
    return v
