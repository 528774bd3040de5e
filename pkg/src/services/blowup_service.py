"""Blow-up diagnostics of a horizontal curve at a point.

At scale lam the curve is viewed through tau -> delta_(1/lam)(gamma(t)^{-1} gamma(t + lam tau)),
which keeps the controls h(t + lam tau). A tangent line shows up as these
controls concentrating around one unit direction v.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.linalg as LA
import numpy.typing as npt

from src.config.settings import Settings, get_settings
from src.exceptions import DomainError
from src.models.path import HorizontalPath, Window, control_overlaps
from src.models.reports import BlowupProfile, BlowupRow
from src.services import curve_service, excess_service

logger = logging.getLogger(__name__)

TANGENT_TOL = 1e-2


def _clipped(p: HorizontalPath, lo: float, hi: float) -> Tuple[float, float]:
    clipped = (max(lo, p.a), min(hi, p.b))
    if clipped != (lo, hi):
        logger.warning(f"Window [{lo:.6g}, {hi:.6g}] exceeds the domain [{p.a:.6g}, {p.b:.6g}], clipped")
    return clipped


def dilate_reparam(
    p: HorizontalPath, lam: float, t: float, window_factor: float = 1.0, one_sided: bool = False
) -> HorizontalPath:
    """Rescaled curve tau -> delta_(1/lam)(gamma(t)^{-1} gamma(t + lam tau)).

    The result lives on [-N, N] (or [0, N] one-sided) for N = window_factor,
    clipped where the original domain ends, and starts from the identity at
    tau = 0.

    Args:
        p: Curve
        lam: Scale (> 0)
        t: Anchor time
        window_factor: Half-width N of the rescaled window
        one_sided: Use [t, t + N lam]

    Returns:
        The rescaled curve, arclength whenever p is

    Raises:
        DomainError: If lam or window_factor is not positive, or t is outside the domain
    """
    if not lam > 0 or not window_factor > 0:
        raise DomainError(f"scale and window factor must be positive, got {lam} and {window_factor}")
    anchor = curve_service.evaluate(p, t)
    lo, hi = _clipped(p, t if one_sided else t - window_factor * lam, t + window_factor * lam)
    piece = curve_service.restrict(p, lo, hi)
    piece = curve_service.shift_time(curve_service.translate(piece, anchor.inverse()), -t)
    return curve_service.dilate_reparametrize(piece, 1.0 / lam)


def mean_control(p: HorizontalPath, window: Window) -> Tuple[npt.NDArray[np.float64], float]:
    """Normalized mean control v over window and the L2 residual of the controls against it.

    v is zero when the mean control vanishes.
    """
    weights = control_overlaps(p, window)
    total = float(np.sum(weights))
    if total <= 0.0:
        return np.zeros(p.algebra.r), 0.0
    mean = weights @ p.controls / total
    norm = float(LA.norm(mean))
    v = mean / norm if norm > 0.0 else np.zeros_like(mean)
    spread = np.sum((p.controls - v) ** 2, axis=1)
    residual = float(np.sqrt(max(weights @ spread / total, 0.0)))
    return v, residual


def _row(
    p: HorizontalPath, t: float, lam: float, lam0: float, window_factor: float, one_sided: bool
) -> BlowupRow:
    lo, hi = _clipped(p, t if one_sided else t - lam, t + lam)
    report = excess_service.excess(p, (lo, hi))
    rescaled = dilate_reparam(p, lam, t, window_factor, one_sided)
    unit = Window.interval(max((lo - t) / lam, rescaled.a), min((hi - t) / lam, rescaled.b))
    rescaled_report = excess_service.excess(rescaled, unit)
    v, residual = mean_control(rescaled, Window.interval(rescaled.a, rescaled.b))
    return BlowupRow(
        scale=lam,
        excess=report.value,
        direction=report.minimizer,
        rescaled_excess=rescaled_report.value,
        mean_control=v.tolist(),
        residual=residual,
        ratio_excess=report.value / np.sqrt(lam / lam0),
    )


def _nonincreasing(values: Sequence[float], slack: float = 1e-12) -> bool:
    return all(b <= a + slack for a, b in zip(values, values[1:]))


def excess_profile(
    p: HorizontalPath,
    t: float,
    scales: Sequence[float],
    one_sided: bool = False,
    window_factor: float = 1.0,
    tolerance: float = TANGENT_TOL,
    threads: int = 1,
) -> BlowupProfile:
    """Excess, mean control and control residual at each scale.

    Monotonicity is reported, never required: excess only tends to zero along
    some sequence of scales.

    Args:
        p: Curve
        t: Anchor time
        scales: Positive decreasing scales
        one_sided: Use one-sided windows
        window_factor: N of the residual window [-N, N]
        tolerance: Tangent-line threshold on the residual at the smallest scale
        threads: Worker threads (rows keep input order)

    Returns:
        BlowupProfile

    Raises:
        DomainError: If scales are empty, not positive, or not decreasing
    """
    scales = [float(lam) for lam in scales]
    if not scales or min(scales) <= 0.0:
        raise DomainError("scales must be a nonempty list of positive numbers")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise DomainError(f"scales must decrease strictly, got {scales}")
    lam0 = scales[0]

    def run(lam: float) -> BlowupRow:
        return _row(p, t, lam, lam0, window_factor, one_sided)

    if threads > 1 and len(scales) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, scales))
    else:
        rows = [run(lam) for lam in scales]

    last = rows[-1]
    detected = last.residual < tolerance
    direction: Optional[List[float]] = last.mean_control if detected else None
    if detected:
        logger.info(f"Tangent line at t = {t:.6g} in direction {np.round(last.mean_control, 6).tolist()}")
    else:
        logger.info(f"No tangent line at t = {t:.6g}: residual {last.residual:.4g} at scale {last.scale:.4g}")
    return BlowupProfile(
        anchor=t,
        one_sided=one_sided,
        window_factor=window_factor,
        rows=rows,
        excess_monotone=_nonincreasing([row.excess for row in rows]),
        residual_monotone=_nonincreasing([row.residual for row in rows]),
        consistency_gap=max(abs(row.rescaled_excess - row.excess) for row in rows),
        tolerance=tolerance,
        tangent_detected=detected,
        tangent_direction=direction,
    )


def tangent_line_estimate(
    p: HorizontalPath,
    t: float,
    scales: Sequence[float],
    window_factor: float = 1.0,
    tolerance: float = TANGENT_TOL,
    one_sided: bool = False,
) -> Tuple[Optional[List[float]], List[float]]:
    """Tangent direction (None when not detected) and the residual at every scale."""
    profile = excess_profile(p, t, scales, one_sided, window_factor, tolerance)
    return profile.tangent_direction, [row.residual for row in profile.rows]


class BlowupService:
    """Blow-up profiles with the thread count and seed of the settings."""

    def __init__(self, settings: Optional[Settings] = None):
        """Initialize the service.

        Args:
            settings: Application settings (loaded from the environment when omitted)
        """
        self.settings = settings if settings is not None else get_settings()

    def profile(
        self,
        p: HorizontalPath,
        t: float,
        scales: Sequence[float],
        one_sided: bool = False,
        window_factor: float = 1.0,
        tolerance: float = TANGENT_TOL,
    ) -> BlowupProfile:
        """excess_profile run on the settings' worker threads."""
        profile = excess_profile(
            p, t, scales, one_sided, window_factor, tolerance, threads=self.settings.threads
        )
        return profile.model_copy(update={"seed": self.settings.seed})

    def tangent_line(
        self,
        p: HorizontalPath,
        t: float,
        scales: Sequence[float],
        window_factor: float = 1.0,
        tolerance: float = TANGENT_TOL,
    ) -> Tuple[Optional[List[float]], List[float]]:
        """Tangent direction (None when not detected) and residuals per scale."""
        profile = self.profile(p, t, scales, window_factor=window_factor, tolerance=tolerance)
        return profile.tangent_direction, [row.residual for row in profile.rows]
