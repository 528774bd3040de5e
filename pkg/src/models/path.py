"""Horizontal curves with piecewise-constant controls and time windows."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, List, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from src.exceptions import DimensionMismatchError, DomainError
from src.models.algebra import AlgebraVector, StratifiedAlgebra
from src.models.group import GroupElement

# Pieces shorter than this are dropped when a path is built
MIN_DURATION = 1e-15

# Unit-norm tolerance of the arclength flag
ARCLENGTH_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class HorizontalPath:
    """Horizontal curve t -> start * exp((t - t_k) h_k) * ... on [offset, offset + T].

    Piece k runs for durations[k] with constant first-layer control
    controls[k]. Points at piece boundaries ("knots") are products of exact
    one-parameter subgroups and are computed once, on first use.

    Attributes:
        algebra: Lie algebra of the ambient group
        start: Point at time offset
        durations: Piece durations, shape (m,)
        controls: First-layer controls, shape (m, r)
        offset: Initial time a of the domain [a, a + T]
    """

    algebra: StratifiedAlgebra = field(repr=False)
    start: GroupElement
    durations: npt.NDArray[np.float64]
    controls: npt.NDArray[np.float64] = field(repr=False)
    offset: float = 0.0

    def __post_init__(self) -> None:
        self.algebra.require_same(self.start.algebra)
        durations = np.asarray(self.durations, dtype=np.float64).reshape(-1)
        controls = np.asarray(self.controls, dtype=np.float64).reshape(-1, self.algebra.r)
        if controls.shape[0] != durations.shape[0]:
            raise DimensionMismatchError(
                f"{durations.shape[0]} durations but {controls.shape[0]} controls"
            )
        if np.any(durations < 0) or not np.all(np.isfinite(durations)):
            raise DomainError("piece durations must be finite and nonnegative")
        keep = durations >= MIN_DURATION
        durations = np.array(durations[keep])
        controls = np.array(controls[keep])
        durations.setflags(write=False)
        controls.setflags(write=False)
        object.__setattr__(self, "durations", durations)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def pieces(self) -> int:
        return int(self.durations.shape[0])

    @property
    def is_empty(self) -> bool:
        return self.pieces == 0

    @property
    def duration(self) -> float:
        """Total time T = sum of durations."""
        return float(np.sum(self.durations))

    @property
    def a(self) -> float:
        return self.offset

    @property
    def b(self) -> float:
        return self.offset + self.duration

    @property
    def length(self) -> float:
        """Length: sum of duration * |control|."""
        return float(np.sum(self.durations * np.linalg.norm(self.controls, axis=1)))

    @property
    def is_arclength(self) -> bool:
        """Whether every control has unit Euclidean norm."""
        norms = np.linalg.norm(self.controls, axis=1)
        return bool(np.all(np.abs(norms - 1.0) <= ARCLENGTH_TOL))

    @cached_property
    def breakpoints(self) -> npt.NDArray[np.float64]:
        """Piece boundary times, shape (m + 1,)."""
        times = self.offset + np.concatenate(([0.0], np.cumsum(self.durations)))
        times.setflags(write=False)
        return times

    @cached_property
    def knots(self) -> npt.NDArray[np.float64]:
        """Exponential coordinates at the piece boundaries, shape (m + 1, n)."""
        r = self.algebra.r
        out = np.zeros((self.pieces + 1, self.algebra.n))
        out[0] = self.start.log
        step = np.zeros(self.algebra.n)
        for k in range(self.pieces):
            step[:r] = self.durations[k] * self.controls[k]
            out[k + 1] = self.algebra.bch(out[k], step)
        out.setflags(write=False)
        return out

    @cached_property
    def projection_knots(self) -> npt.NDArray[np.float64]:
        """First-layer projection at the piece boundaries, shape (m + 1, r)."""
        increments = self.durations[:, None] * self.controls
        out = self.start.log[: self.algebra.r] + np.vstack(
            (np.zeros((1, self.algebra.r)), np.cumsum(increments, axis=0))
        )
        out.setflags(write=False)
        return out

    @property
    def end(self) -> GroupElement:
        """Point at time b."""
        return GroupElement(self.algebra, self.knots[-1])

    def with_offset(self, offset: float) -> "HorizontalPath":
        return HorizontalPath(self.algebra, self.start, self.durations, self.controls, offset)

    def __repr__(self) -> str:
        return (
            f"<HorizontalPath({self.algebra.name}, pieces={self.pieces}, "
            f"domain=[{self.a:.6g}, {self.b:.6g}], length={self.length:.6g})>"
        )


@dataclass(frozen=True)
class EvalGrid:
    """Curve samples: times and the exponential coordinates of the points there."""

    times: npt.NDArray[np.float64]
    points: List[GroupElement]

    def logs(self) -> npt.NDArray[np.float64]:
        if not self.points:
            return np.zeros((0, 0))
        return np.vstack([point.log for point in self.points])


@dataclass(frozen=True)
class Window:
    """Finite union of closed time intervals, stored sorted and merged."""

    intervals: Tuple[Tuple[float, float], ...]

    def __post_init__(self) -> None:
        cleaned = []
        for lo, hi in sorted((float(lo), float(hi)) for lo, hi in self.intervals):
            if hi < lo:
                raise DomainError(f"interval [{lo}, {hi}] has negative length")
            if cleaned and lo <= cleaned[-1][1]:
                cleaned[-1] = (cleaned[-1][0], max(cleaned[-1][1], hi))
            else:
                cleaned.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(cleaned))

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Window":
        return cls(((lo, hi),))

    @classmethod
    def of(cls, bounds: Iterable[Sequence[float]]) -> "Window":
        return cls(tuple((float(lo), float(hi)) for lo, hi in bounds))

    @property
    def measure(self) -> float:
        """Lebesgue measure of the union."""
        return float(sum(hi - lo for lo, hi in self.intervals))

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]

    def scaled(self, lam: float) -> "Window":
        return Window(tuple((lam * lo, lam * hi) for lo, hi in self.intervals))

    def shifted(self, tau: float) -> "Window":
        return Window(tuple((lo + tau, hi + tau) for lo, hi in self.intervals))

    def as_lists(self) -> List[List[float]]:
        return [[lo, hi] for lo, hi in self.intervals]


def control_overlaps(path: HorizontalPath, window: Window) -> npt.NDArray[np.float64]:
    """Time each piece of path spends inside window, shape (m,)."""
    starts = path.breakpoints[:-1]
    stops = path.breakpoints[1:]
    weights = np.zeros(path.pieces)
    for lo, hi in window.intervals:
        weights += np.clip(np.minimum(stops, hi) - np.maximum(starts, lo), 0.0, None)
    return weights


def horizontal_step(algebra: StratifiedAlgebra, control: AlgebraVector, dt: float) -> AlgebraVector:
    """Algebra vector dt * control for a first-layer control."""
    v = np.zeros(algebra.n)
    v[: algebra.r] = dt * np.asarray(control, dtype=np.float64)
    return v
