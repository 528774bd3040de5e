"""Horizontal curve service.

Lifting, evaluation, concatenation and reversal of piecewise-constant
horizontal curves. Every point is a finite product of one-parameter
subgroups, so evaluation carries no integration error.
"""

import logging
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from src.exceptions import DimensionMismatchError, DomainError
from src.models.algebra import AlgebraVector, StratifiedAlgebra
from src.models.group import GroupElement
from src.models.path import EvalGrid, HorizontalPath, horizontal_step
from src.services import group_service

logger = logging.getLogger(__name__)

# Relative slack for times that land a rounding error outside the domain
DOMAIN_SLACK = 1e-12


def lift(
    start: GroupElement,
    durations: Sequence[float],
    controls: npt.ArrayLike,
    offset: float = 0.0,
) -> HorizontalPath:
    """Build a horizontal path from its pieces.

    Controls may be given with r first-layer coordinates or as full algebra
    vectors; in the latter case all coordinates outside layer 1 must vanish.

    Args:
        start: Point at the initial time
        durations: Positive piece durations
        controls: One control per piece, shape (m, r) or (m, n)
        offset: Initial time of the domain

    Returns:
        HorizontalPath on [offset, offset + sum(durations)]

    Raises:
        DimensionMismatchError: If a control has nonzero coordinates outside layer 1
        DomainError: If a duration is negative
    """
    algebra = start.algebra
    controls = np.asarray(controls, dtype=np.float64)
    durations = np.asarray(durations, dtype=np.float64).reshape(-1)
    if controls.size == 0:
        controls = np.zeros((0, algebra.r))
    if controls.ndim == 1:
        controls = controls.reshape(durations.shape[0], -1)
    if controls.shape[1] == algebra.n and algebra.n != algebra.r:
        if np.any(controls[:, algebra.r :] != 0.0):
            raise DimensionMismatchError("control with nonzero coordinates outside layer 1")
        controls = controls[:, : algebra.r]
    elif controls.shape[1] != algebra.r:
        raise DimensionMismatchError(
            f"controls must have {algebra.r} or {algebra.n} coordinates, got {controls.shape[1]}"
        )
    return HorizontalPath(algebra, start, durations, controls, offset)


def empty(algebra: StratifiedAlgebra, start: Optional[GroupElement] = None, offset: float = 0.0) -> HorizontalPath:
    """Path with no pieces (constant at start)."""
    start = start if start is not None else GroupElement.identity(algebra)
    return HorizontalPath(algebra, start, np.zeros(0), np.zeros((0, algebra.r)), offset)


def _check_time(p: HorizontalPath, t: float) -> float:
    slack = DOMAIN_SLACK * max(1.0, abs(p.a), abs(p.b))
    if not (p.a - slack <= t <= p.b + slack):
        raise DomainError(f"time {t} outside the domain [{p.a}, {p.b}]")
    return min(max(float(t), p.a), p.b)


def _locate(p: HorizontalPath, t: float) -> Tuple[int, float]:
    """Piece index containing t and the elapsed time inside it (0 at knots)."""
    k = int(np.searchsorted(p.breakpoints, t, side="right")) - 1
    k = min(max(k, 0), p.pieces)
    return k, t - p.breakpoints[k]


def evaluate(p: HorizontalPath, t: float) -> GroupElement:
    """Point gamma(t), exact at piece boundaries.

    Raises:
        DomainError: If t is outside the domain
    """
    t = _check_time(p, t)
    k, elapsed = _locate(p, t)
    if k == p.pieces or elapsed <= 0.0:
        return GroupElement(p.algebra, p.knots[k])
    step = horizontal_step(p.algebra, p.controls[k], elapsed)
    return GroupElement(p.algebra, p.algebra.bch(p.knots[k], step))


def projection_at(p: HorizontalPath, t: float) -> AlgebraVector:
    """First-layer projection of gamma(t) as an r-vector."""
    t = _check_time(p, t)
    k, elapsed = _locate(p, t)
    base = p.projection_knots[k]
    if k == p.pieces or elapsed <= 0.0:
        return np.array(base)
    return base + elapsed * p.controls[k]


def projections_at(p: HorizontalPath, times: Iterable[float]) -> npt.NDArray[np.float64]:
    """First-layer projections at several times, shape (len(times), r)."""
    times = np.asarray(list(times), dtype=np.float64)
    if times.size == 0:
        return np.zeros((0, p.algebra.r))
    slack = DOMAIN_SLACK * max(1.0, abs(p.a), abs(p.b))
    if times.min() < p.a - slack or times.max() > p.b + slack:
        raise DomainError(f"sample times outside the domain [{p.a}, {p.b}]")
    times = np.clip(times, p.a, p.b)
    k = np.clip(np.searchsorted(p.breakpoints, times, side="right") - 1, 0, p.pieces)
    elapsed = times - p.breakpoints[k]
    controls = np.vstack((p.controls, np.zeros((1, p.algebra.r))))
    return p.projection_knots[k] + elapsed[:, None] * controls[k]


def sample(p: HorizontalPath, times: Iterable[float]) -> EvalGrid:
    """Evaluate the path on a grid of times."""
    times = np.asarray(list(times), dtype=np.float64)
    return EvalGrid(times=times, points=[evaluate(p, float(t)) for t in times])


def uniform_times(p: HorizontalPath, count: int) -> npt.NDArray[np.float64]:
    """count equally spaced times covering the domain, endpoints included."""
    return np.linspace(p.a, p.b, max(count, 2))


def concat(alpha: HorizontalPath, beta: HorizontalPath) -> HorizontalPath:
    """alpha * beta: alpha followed by the left translate of beta starting at alpha's end.

    Raises:
        DimensionMismatchError: If the paths belong to different algebras
    """
    alpha.algebra.require_same(beta.algebra)
    if beta.is_empty:
        return alpha
    durations = np.concatenate((alpha.durations, beta.durations))
    controls = np.vstack((alpha.controls, beta.controls))
    return HorizontalPath(alpha.algebra, alpha.start, durations, controls, alpha.offset)


def concat_all(first: HorizontalPath, *rest: HorizontalPath) -> HorizontalPath:
    out = first
    for path in rest:
        out = concat(out, path)
    return out


def reverse(p: HorizontalPath) -> HorizontalPath:
    """Path run backwards from p's end, with reversed pieces and negated controls."""
    return HorizontalPath(
        p.algebra, p.end, p.durations[::-1], -p.controls[::-1], p.offset
    )


def increment(p: HorizontalPath, a: float, b: float) -> GroupElement:
    """Left-invariant increment gamma(a)^{-1} gamma(b).

    Raises:
        DomainError: If a > b or either time is outside the domain
    """
    if a > b:
        raise DomainError(f"increment needs a <= b, got [{a}, {b}]")
    return group_service.product(evaluate(p, a).inverse(), evaluate(p, b))


def restrict(p: HorizontalPath, a: float, b: float) -> HorizontalPath:
    """Sub-path on [a, b], starting at gamma(a) and keeping the original times.

    Raises:
        DomainError: If [a, b] is not a subinterval of the domain
    """
    if a > b:
        raise DomainError(f"restriction needs a <= b, got [{a}, {b}]")
    a = _check_time(p, a)
    b = _check_time(p, b)
    starts = p.breakpoints[:-1]
    stops = p.breakpoints[1:]
    overlap = np.minimum(stops, b) - np.maximum(starts, a)
    inside = (starts >= a) & (stops <= b)
    overlap = np.where(inside, p.durations, overlap)
    keep = overlap > 0.0
    return HorizontalPath(p.algebra, evaluate(p, a), overlap[keep], p.controls[keep], a)


def translate(p: HorizontalPath, g: GroupElement) -> HorizontalPath:
    """Left translation g * gamma."""
    return HorizontalPath(
        p.algebra, group_service.product(g, p.start), p.durations, p.controls, p.offset
    )


def dilate(p: HorizontalPath, lam: float) -> HorizontalPath:
    """delta_lam applied pointwise: same times, controls scaled by lam."""
    start = group_service.dilate(lam, p.start)
    return HorizontalPath(p.algebra, start, p.durations, lam * p.controls, p.offset)


def dilate_reparametrize(p: HorizontalPath, lam: float) -> HorizontalPath:
    """t -> delta_lam(gamma(t / lam)) on lam * [a, b]; controls unchanged.

    Raises:
        DomainError: If lam is not positive
    """
    start = group_service.dilate(lam, p.start)
    return HorizontalPath(p.algebra, start, lam * p.durations, p.controls, lam * p.offset)


def shift_time(p: HorizontalPath, tau: float) -> HorizontalPath:
    """Same curve on the domain [a + tau, b + tau]."""
    return p.with_offset(p.offset + tau)


def recenter(p: HorizontalPath, center: Optional[float] = None) -> HorizontalPath:
    """Shift time so that center (default: the domain midpoint) becomes 0.

    The default keeps the domain exactly symmetric: [-T/2, T/2].
    """
    if center is None:
        return p.with_offset(-p.duration / 2.0)
    _check_time(p, center)
    return p.with_offset(p.offset - center)


def is_symmetric(p: HorizontalPath, tol: float = 1e-12) -> bool:
    return abs(p.a + p.b) <= tol * max(1.0, p.duration)


def segment(
    algebra: StratifiedAlgebra,
    displacement: npt.ArrayLike,
    start: Optional[GroupElement] = None,
    offset: float = 0.0,
) -> HorizontalPath:
    """Arclength straight segment realizing a first-layer displacement.

    A zero displacement gives the empty path.
    """
    v = np.asarray(displacement, dtype=np.float64)
    if v.shape == (algebra.n,):
        if np.any(v[algebra.r :] != 0.0):
            raise DimensionMismatchError("control with nonzero coordinates outside layer 1")
        v = v[: algebra.r]
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return empty(algebra, start, offset)
    start = start if start is not None else GroupElement.identity(algebra)
    return HorizontalPath(algebra, start, np.array([norm]), (v / norm).reshape(1, -1), offset)


def zigzag(
    algebra: StratifiedAlgebra,
    controls: npt.ArrayLike,
    piece_duration: float = 1.0,
    start: Optional[GroupElement] = None,
    offset: float = 0.0,
) -> HorizontalPath:
    """Path with equal-duration pieces following the given controls in order."""
    controls = np.asarray(controls, dtype=np.float64)
    start = start if start is not None else GroupElement.identity(algebra)
    durations = np.full(controls.shape[0], float(piece_duration))
    return lift(start, durations, controls, offset)


def corner(algebra: StratifiedAlgebra, leg: float = 1.0, offset: float = 0.0) -> HorizontalPath:
    """Corner: unit control e_1 for time leg, then e_2 for time leg."""
    if algebra.r < 2:
        raise DimensionMismatchError(f"a corner needs rank >= 2, {algebra.name} has rank {algebra.r}")
    controls = np.zeros((2, algebra.r))
    controls[0, 0] = 1.0
    controls[1, 1] = 1.0
    return zigzag(algebra, controls, leg, offset=offset)


def circle_lift(
    algebra: StratifiedAlgebra,
    n_pieces: int = 4096,
    radius: float = 1.0,
) -> HorizontalPath:
    """Arclength lift of a circle, domain [-pi R, pi R], control (cos(t/R), sin(t/R)).

    The circular control is replaced by its value at each piece midpoint, so
    the path is arclength and piecewise constant; n_pieces even keeps the
    control law symmetric about t = 0.
    """
    if algebra.r < 2:
        raise DimensionMismatchError(f"a circle needs rank >= 2, {algebra.name} has rank {algebra.r}")
    if n_pieces < 1 or not radius > 0:
        raise DomainError("circle lift needs n_pieces >= 1 and a positive radius")
    angles = -np.pi + (np.arange(n_pieces) + 0.5) * (2.0 * np.pi / n_pieces)
    controls = np.zeros((n_pieces, algebra.r))
    controls[:, 0] = np.cos(angles)
    controls[:, 1] = np.sin(angles)
    durations = np.full(n_pieces, 2.0 * np.pi * radius / n_pieces)
    return lift(GroupElement.identity(algebra), durations, controls, offset=-np.pi * radius)


def random_arclength_path(
    algebra: StratifiedAlgebra,
    rng: np.random.Generator,
    n_pieces: int = 6,
    min_duration: float = 0.05,
    max_duration: float = 0.5,
    offset: float = 0.0,
    random_start: bool = False,
) -> HorizontalPath:
    """Random arclength path with uniformly random unit controls and durations."""
    controls = rng.standard_normal((n_pieces, algebra.r))
    norms = np.linalg.norm(controls, axis=1)
    norms[norms == 0.0] = 1.0
    controls = controls / norms[:, None]
    durations = rng.uniform(min_duration, max_duration, n_pieces)
    start = (
        group_service.random_element(algebra, rng)
        if random_start
        else GroupElement.identity(algebra)
    )
    return lift(start, durations, controls, offset)


def measure_lipschitz_constant(p: HorizontalPath, grid_size: int = 33) -> float:
    """Largest ||gamma(t)^{-1} gamma(t')|| / |t' - t| over pairs of a uniform grid.

    Returns:
        Measured constant C of ||gamma(t)^{-1} gamma(t')|| <= C |t - t'| (0 for empty paths)
    """
    if p.is_empty:
        return 0.0
    grid = sample(p, uniform_times(p, grid_size))
    best = 0.0
    for i, j in combinations(range(len(grid.points)), 2):
        dt = grid.times[j] - grid.times[i]
        if dt <= 0.0:
            continue
        ratio = group_service.homogeneous_distance(grid.points[i], grid.points[j]) / dt
        best = max(best, ratio)
    logger.debug(f"Measured Lipschitz constant {best:.6f} on {grid_size} grid points")
    return best


def endpoint_fold(p: HorizontalPath) -> GroupElement:
    """End point as one fold of group products over the pieces."""
    point = p.start
    for dt, h in zip(p.durations, p.controls):
        point = group_service.product(point, GroupElement(p.algebra, horizontal_step(p.algebra, h, dt)))
    return point


def piece_list(p: HorizontalPath) -> List[Tuple[float, Tuple[float, ...]]]:
    """Pieces as (duration, control) tuples."""
    return [(float(dt), tuple(float(x) for x in h)) for dt, h in zip(p.durations, p.controls)]
