"""Excess of horizontal curves and interval selection.

The excess of gamma over a window B is the square root of the smallest
eigenvalue of the time-averaged Gram matrix of the controls over B. With
piecewise-constant controls the average is a finite weighted sum, so the
value is exact up to the eigen-solve.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import numpy.linalg as LA
import numpy.typing as npt

from src.config.settings import Settings, get_settings
from src.exceptions import DegenerateDirectionsError, DomainError
from src.models.group import GroupElement
from src.models.path import HorizontalPath, Window, control_overlaps
from src.models.reports import (
    ExcessReport,
    ExcessScalingReport,
    IntervalSelection,
    ScaleSweepRow,
)
from src.services import curve_service

logger = logging.getLogger(__name__)

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 64

# Tuples whose first r - 1 intervals are enumerated in Python; the last
# interval is handled as one vectorized determinant per prefix.
MAX_PREFIXES = 50_000

REFINE_HALVINGS = 10

# Relative margin a determinant must beat to replace the current best
TIE_MARGIN = 1e-12

DEGENERATE_RATIO = 1e-12


# Smallest eigenpair ---------------------------------------------------------


def _rot90(x: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    return np.array([x[1], -x[0]])


def _canonical_sign(v: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Flip v so that its largest-magnitude component is positive."""
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _smallest_eigenpair_2x2(gram: npt.NDArray[np.float64]) -> Tuple[float, npt.NDArray[np.float64]]:
    a00, a01, a11 = gram[0, 0], gram[0, 1], gram[1, 1]
    d = float(np.sqrt((a00 - a11) ** 2 + 4 * a01**2) / 2)
    mid = float(a00 + a11) / 2
    lmd = mid - d
    shifted = gram - lmd * np.eye(2)
    u, v = _rot90(shifted[:, 0]), _rot90(shifted[:, 1])
    scale = max(float(LA.norm(gram)), 1e-300)
    eps = 1e-8 * scale
    if np.dot(u, u) > eps**2:
        vec = u / LA.norm(u)
    elif np.dot(v, v) > eps**2:
        vec = v / LA.norm(v)
    else:
        vec = np.array([1.0, 0.0])
    return lmd, vec


def _jacobi_eigen(gram: npt.NDArray[np.float64]) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Cyclic Jacobi rotations; returns (eigenvalues, eigenvectors as columns)."""
    a = np.array(gram, dtype=np.float64)
    r = a.shape[0]
    vecs = np.eye(r)
    scale = max(float(LA.norm(a)), 1e-300)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = float(np.sqrt(np.sum(np.tril(a, -1) ** 2)))
        if off <= JACOBI_TOL * scale:
            break
        for p in range(r - 1):
            for q in range(p + 1, r):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t**2 + 1.0)
                s = t * c
                rot = np.eye(r)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                vecs = vecs @ rot
    return np.diag(a).copy(), vecs


def smallest_eigenpair(gram: npt.NDArray[np.float64]) -> Tuple[float, npt.NDArray[np.float64]]:
    """Smallest eigenvalue and a unit eigenvector of a symmetric matrix.

    Closed form for 2x2, cyclic Jacobi rotations otherwise. The eigenvector
    sign is fixed so that its largest component is positive.
    """
    gram = np.asarray(gram, dtype=np.float64)
    r = gram.shape[0]
    if r == 1:
        return float(gram[0, 0]), np.array([1.0])
    if r == 2:
        lmd, vec = _smallest_eigenpair_2x2(gram)
    else:
        values, vecs = _jacobi_eigen(gram)
        k = int(np.argmin(values))
        lmd, vec = float(values[k]), vecs[:, k]
        vec = vec / LA.norm(vec)
    return lmd, _canonical_sign(vec)


# Excess ---------------------------------------------------------------------


def _as_window(window: "Window | Sequence[float]") -> Window:
    if isinstance(window, Window):
        return window
    lo, hi = window
    return Window.interval(float(lo), float(hi))


def _check_window(p: HorizontalPath, window: Window) -> None:
    if window.measure <= 0.0:
        raise DomainError("excess needs a window of positive measure")
    slack = curve_service.DOMAIN_SLACK * max(1.0, abs(p.a), abs(p.b))
    if window.lo < p.a - slack or window.hi > p.b + slack:
        raise DomainError(f"window [{window.lo}, {window.hi}] outside the domain [{p.a}, {p.b}]")


def gram_matrix(p: HorizontalPath, window: "Window | Sequence[float]") -> npt.NDArray[np.float64]:
    """Time average of h h^T over the window.

    Raises:
        DomainError: If the window is empty or leaves the domain
    """
    window = _as_window(window)
    _check_window(p, window)
    weights = control_overlaps(p, window)
    h = p.controls
    return np.einsum("k,ki,kj->ij", weights, h, h) / window.measure


def excess(p: HorizontalPath, window: "Window | Sequence[float]") -> ExcessReport:
    """Excess of p over a window.

    Args:
        p: Horizontal path
        window: Window inside the domain, as a Window or a (lo, hi) pair

    Returns:
        ExcessReport with the Gram matrix, value and minimizing direction

    Raises:
        DomainError: If the window is empty or leaves the domain

    Example:
        >>> excess(curve_service.corner(algebra_service.heisenberg()), (0.0, 2.0)).value
        0.7071067811865476
    """
    window = _as_window(window)
    gram = gram_matrix(p, window)
    lmd, v = smallest_eigenpair(gram)
    value = float(np.sqrt(max(lmd, 0.0)))
    return ExcessReport(
        window=window.as_lists(),
        measure=window.measure,
        gram=gram.tolist(),
        value=value,
        minimizer=v.tolist(),
        hyperplane_value=hyperplane_excess(p, window, v),
    )


def hyperplane_excess(
    p: HorizontalPath, window: "Window | Sequence[float]", normal: npt.ArrayLike
) -> float:
    """RMS distance of the controls over the window to the hyperplane normal^perp."""
    normal = np.asarray(normal, dtype=np.float64)
    normal = normal / LA.norm(normal)
    gram = gram_matrix(p, window)
    return float(np.sqrt(max(float(normal @ gram @ normal), 0.0)))


def sphere_mesh(r: int, count: int) -> npt.NDArray[np.float64]:
    """Roughly uniform unit vectors: a circle for r = 2, a Fibonacci sphere for r = 3."""
    if r == 2:
        angles = np.linspace(0.0, np.pi, count, endpoint=False)
        return np.column_stack((np.cos(angles), np.sin(angles)))
    if r == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        phi = np.pi * (1.0 + 5**0.5) * i
        rho = np.sqrt(1.0 - z**2)
        return np.column_stack((rho * np.cos(phi), rho * np.sin(phi), z))
    raise DomainError(f"sphere mesh is available for r = 2, 3, got {r}")


def excess_by_mesh(p: HorizontalPath, window: "Window | Sequence[float]", count: int = 10_000) -> float:
    """Excess by direct minimization of (avg <v, h>^2)^(1/2) over a sphere mesh."""
    gram = gram_matrix(p, window)
    mesh = sphere_mesh(p.algebra.r, count)
    quad = np.einsum("mi,ij,mj->m", mesh, gram, mesh)
    return float(np.sqrt(max(float(quad.min()), 0.0)))


def excess_scaling_check(
    p: HorizontalPath,
    window: "Window | Sequence[float]",
    lam: float,
    g: Optional[GroupElement] = None,
    tolerance: float = 1e-10,
) -> ExcessScalingReport:
    """Compare the excess under left translation, dilation and dilate-and-reparametrize.

    Raises:
        DomainError: If lam is not positive or the window leaves the domain
    """
    if not lam > 0:
        raise DomainError(f"dilation factor must be positive, got {lam}")
    window = _as_window(window)
    g = g if g is not None else GroupElement.identity(p.algebra)
    base = excess(p, window).value
    translated = excess(curve_service.translate(p, g), window).value
    dilated = excess(curve_service.dilate(p, lam), window).value
    reparametrized = excess(curve_service.dilate_reparametrize(p, lam), window.scaled(lam)).value
    deviation = max(
        abs(translated - base),
        abs(dilated - lam * base),
        abs(reparametrized - base),
    )
    return ExcessScalingReport(
        scale=lam,
        base=base,
        translated=translated,
        dilated=dilated,
        reparametrized=reparametrized,
        max_deviation=deviation,
        tolerance=tolerance,
        passed=deviation <= tolerance,
    )


def scale_window(p: HorizontalPath, center: float, scale: float, one_sided: bool = False) -> Window:
    """Window [c - scale, c + scale] (or [c, c + scale]) clipped to the domain."""
    lo = center if one_sided else center - scale
    hi = center + scale
    clipped = (max(lo, p.a), min(hi, p.b))
    if clipped != (lo, hi):
        logger.warning(
            f"Window [{lo:.6g}, {hi:.6g}] exceeds the domain [{p.a:.6g}, {p.b:.6g}], clipped"
        )
    return Window.interval(*clipped)


def excess_scale_sweep(
    p: HorizontalPath,
    center: float,
    scales: Sequence[float],
    one_sided: bool = False,
) -> List[ScaleSweepRow]:
    """Excess over the windows of several scales around a center time."""
    rows = []
    for scale in scales:
        report = excess(p, scale_window(p, center, float(scale), one_sided))
        rows.append(ScaleSweepRow(scale=float(scale), excess=report.value, direction=report.minimizer))
    return rows


# Interval selection ---------------------------------------------------------


@dataclass(frozen=True)
class _Grid:
    times: npt.NDArray[np.float64]
    projections: npt.NDArray[np.float64]
    pair_lo: npt.NDArray[np.int64]
    pair_hi: npt.NDArray[np.int64]
    increments: npt.NDArray[np.float64]


def _grid(p: HorizontalPath, lo: float, hi: float, depth: int) -> _Grid:
    times = np.linspace(lo, hi, 2**depth + 1)
    projections = curve_service.projections_at(p, times)
    lo_idx, hi_idx = np.triu_indices(times.shape[0], k=1)
    increments = projections[hi_idx] - projections[lo_idx]
    return _Grid(times, projections, lo_idx.astype(np.int64), hi_idx.astype(np.int64), increments)


@lru_cache(maxsize=None)
def _count_prefixes(points: int, intervals: int, first: int = 0) -> int:
    """Ordered disjoint interval tuples on grid points first..points-1."""
    if intervals == 0:
        return 1
    total = 0
    for i in range(first, points):
        for j in range(i + 1, points):
            total += _count_prefixes(points, intervals - 1, j)
    return total


def effective_depth(r: int, depth: int) -> int:
    """Largest depth <= depth whose prefix enumeration stays within MAX_PREFIXES.

    The result is never below the smallest depth whose grid holds r intervals.
    """
    floor = max(1, int(np.ceil(np.log2(r))))
    d = max(depth, floor)
    while d > floor and _count_prefixes(2**d + 1, r - 1) > MAX_PREFIXES:
        d -= 1
    return d


def _prefixes(points: int, intervals: int, first: int = 0) -> Iterator[Tuple[Tuple[int, int], ...]]:
    """Lexicographically ordered (lo, hi) index tuples of disjoint ordered intervals."""
    if intervals == 0:
        yield ()
        return
    for i in range(first, points):
        for j in range(i + 1, points):
            for rest in _prefixes(points, intervals - 1, j):
                yield ((i, j),) + rest


def _cofactors(rows: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """c with det(rows; x) = c . x for the (r - 1) x r matrix rows."""
    r = rows.shape[1]
    out = np.zeros(r)
    for col in range(r):
        minor = np.delete(rows, col, axis=1)
        out[col] = (-1) ** (r - 1 + col) * (LA.det(minor) if minor.size else 1.0)
    return out


def _search_chunk(
    grid: _Grid, r: int, prefixes: List[Tuple[Tuple[int, int], ...]]
) -> Tuple[float, Optional[Tuple[Tuple[int, int], ...]]]:
    best_det = -1.0
    best: Optional[Tuple[Tuple[int, int], ...]] = None
    for prefix in prefixes:
        start = prefix[-1][1] if prefix else 0
        mask = grid.pair_lo >= start
        if not mask.any():
            continue
        if prefix:
            rows = np.array([grid.projections[j] - grid.projections[i] for i, j in prefix])
        else:
            rows = np.zeros((0, r))
        dets = np.abs(grid.increments[mask] @ _cofactors(rows))
        top = float(dets.max())
        if top > best_det * (1.0 + TIE_MARGIN) or best is None:
            k = int(np.argmax(dets >= top * (1.0 - TIE_MARGIN)))
            candidates = np.flatnonzero(mask)
            last = (int(grid.pair_lo[candidates[k]]), int(grid.pair_hi[candidates[k]]))
            best_det, best = top, prefix + (last,)
    return best_det, best


def _abs_det(p: HorizontalPath, bounds: npt.NDArray[np.float64]) -> float:
    starts = curve_service.projections_at(p, bounds[0::2])
    stops = curve_service.projections_at(p, bounds[1::2])
    return float(abs(LA.det(stops - starts)))


def _refine(p: HorizontalPath, bounds: npt.NDArray[np.float64], lo: float, hi: float, step: float) -> npt.NDArray[np.float64]:
    """Coordinate ascent on the 2r endpoints with halving steps, order preserved."""
    bounds = bounds.copy()
    best = _abs_det(p, bounds)
    for _ in range(REFINE_HALVINGS):
        improved = True
        while improved:
            improved = False
            for idx in range(bounds.shape[0]):
                for move in (-step, step):
                    trial = bounds.copy()
                    trial[idx] = min(max(trial[idx] + move, lo), hi)
                    if np.any(np.diff(trial) < 0) or np.any(trial[1::2] - trial[0::2] <= 0):
                        continue
                    value = _abs_det(p, trial)
                    if value > best * (1.0 + TIE_MARGIN):
                        bounds, best = trial, value
                        improved = True
        step /= 2.0
    return bounds


def select_intervals(
    p: HorizontalPath,
    interval: Sequence[float],
    depth: int = 6,
    threads: int = 1,
    refine: bool = True,
) -> IntervalSelection:
    """Select r disjoint ordered subintervals maximizing |det(Delta_1, ..., Delta_r)|.

    Exhaustive search over interval tuples with endpoints on a dyadic grid of
    the given depth (reduced when the enumeration would be too large), then
    coordinate ascent on the endpoints. Ties keep the lexicographically
    smallest endpoint tuple.

    Args:
        p: Horizontal path
        interval: Search interval (lo, hi) inside the domain
        depth: Dyadic grid depth
        threads: Worker threads for the grid search
        refine: Whether to run coordinate ascent after the grid search

    Returns:
        IntervalSelection with the measured quality det / |I|^r

    Raises:
        DomainError: If the interval is empty or leaves the domain
        DegenerateDirectionsError: If the best determinant is below 1e-12 |I|^r
    """
    lo, hi = float(interval[0]), float(interval[1])
    _check_window(p, Window.interval(lo, hi))
    r = p.algebra.r
    measure = hi - lo
    used_depth = effective_depth(r, depth)
    if used_depth < depth:
        logger.warning(f"Grid depth reduced from {depth} to {used_depth} for rank {r}")
    grid = _grid(p, lo, hi, used_depth)

    prefixes = list(_prefixes(grid.times.shape[0], r - 1))
    chunk = max(1, -(-len(prefixes) // max(threads, 1)))
    chunks = [prefixes[i : i + chunk] for i in range(0, len(prefixes), chunk)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: _search_chunk(grid, r, c), chunks))
    else:
        results = [_search_chunk(grid, r, c) for c in chunks]

    best_det, best = -1.0, None
    for det, candidate in results:
        if candidate is not None and (best is None or det > best_det * (1.0 + TIE_MARGIN)):
            best_det, best = det, candidate
    if best is None or best_det < DEGENERATE_RATIO * measure**r:
        raise DegenerateDirectionsError(
            f"projected increments on [{lo}, {hi}] span no {r}-dimensional volume "
            f"(best det {max(best_det, 0.0):.3e})"
        )

    bounds = np.array([grid.times[k] for pair in best for k in pair])
    if refine:
        bounds = _refine(p, bounds, lo, hi, measure / 2**used_depth)
    starts = curve_service.projections_at(p, bounds[0::2])
    stops = curve_service.projections_at(p, bounds[1::2])
    increments = stops - starts
    det = float(abs(LA.det(increments)))
    quality = det / measure**r
    lower_bound = bool(np.all(LA.norm(increments, axis=1) >= quality * measure * (1.0 - 1e-12)))
    logger.debug(
        f"Selected intervals on [{lo:.6g}, {hi:.6g}]: grid det {best_det:.6e}, refined det {det:.6e}"
    )
    return IntervalSelection(
        window=[lo, hi],
        intervals=[[float(bounds[2 * i]), float(bounds[2 * i + 1])] for i in range(r)],
        increments=increments.tolist(),
        det=det,
        quality=quality,
        lower_bound_holds=lower_bound,
        grid_depth=used_depth,
        grid_det=best_det,
    )


class ExcessService:
    """Excess reports and interval searches with settings applied.

    Grid depth and worker threads come from settings; reports are stamped
    with the seed and tolerance of the run.
    """

    def __init__(self, settings: Optional[Settings] = None):
        """Initialize the service.

        Args:
            settings: Application settings (loaded from the environment when omitted)
        """
        self.settings = settings if settings is not None else get_settings()

    def excess(self, p: HorizontalPath, window: "Window | Sequence[float]") -> ExcessReport:
        """Excess report for p over the window."""
        report = excess(p, window)
        return report.model_copy(update={"seed": self.settings.seed, "tolerance": self.settings.tolerance})

    def excess_by_mesh(self, p: HorizontalPath, window: "Window | Sequence[float]", count: int) -> float:
        return excess_by_mesh(p, window, count)

    def scaling_check(
        self,
        p: HorizontalPath,
        window: "Window | Sequence[float]",
        lam: float,
        tolerance: Optional[float] = None,
    ) -> ExcessScalingReport:
        """Scaling identities of the excess; tolerance defaults to the settings tolerance."""
        tol = tolerance if tolerance is not None else self.settings.tolerance
        report = excess_scaling_check(p, window, lam, tolerance=tol)
        if not report.passed:
            logger.warning(f"Excess scaling check failed at lambda = {lam}: deviation {report.max_deviation:.3e}")
        return report.model_copy(update={"seed": self.settings.seed})

    def scale_sweep(
        self, p: HorizontalPath, center: float, scales: Sequence[float], one_sided: bool = False
    ) -> List[ScaleSweepRow]:
        """Scale sweep around a center time; rows keep the input order for any thread count."""
        threads = self.settings.threads
        if threads > 1 and len(scales) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                chunks = list(pool.map(lambda lam: excess_scale_sweep(p, center, [lam], one_sided), scales))
            return [row for chunk in chunks for row in chunk]
        return excess_scale_sweep(p, center, scales, one_sided)

    def select_intervals(
        self, p: HorizontalPath, interval: Sequence[float], depth: Optional[int] = None
    ) -> IntervalSelection:
        """Interval selection at the given depth (settings grid depth when omitted)."""
        used = depth if depth is not None else self.settings.grid_depth
        return select_intervals(p, interval, used, self.settings.threads)
