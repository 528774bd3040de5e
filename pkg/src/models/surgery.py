"""Connector and displacement types used by curve surgery."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from src.models.algebra import AlgebraVector
from src.models.group import GroupElement
from src.models.path import HorizontalPath


@dataclass(frozen=True, eq=False)
class Connector:
    """Horizontal path from the identity to exp(target).

    Attributes:
        target: Algebra vector Y
        path: Path from the identity, arclength
        endpoint: Point actually reached
        length: Length of path (the time cost l_Y)
        residual: log(endpoint^{-1} exp(Y))
        constant: length / ||exp(Y)|| (0 for Y = 0)
    """

    target: AlgebraVector
    path: HorizontalPath = field(repr=False)
    endpoint: GroupElement = field(repr=False)
    length: float
    residual: AlgebraVector = field(repr=False)
    constant: float

    @property
    def residual_norm(self) -> float:
        return float(np.max(np.abs(self.residual), initial=0.0))


@dataclass(frozen=True, eq=False)
class Displacement:
    """Endpoint displacement gamma(b)^{-1} * (corrected endpoint).

    Attributes:
        value: The displacement
        lowest_layer: Lowest layer with a nonzero component (s + 1 for the identity)
        formula: The same displacement evaluated by the conjugated-commutator formula
        formula_gap: Largest coordinate gap between the two evaluations
    """

    value: GroupElement
    lowest_layer: int
    formula: GroupElement = field(repr=False)
    formula_gap: float


@dataclass(frozen=True, eq=False)
class Device:
    """One correction device: interval [s, s'] of the curve and target Y."""

    interval: Tuple[float, float]
    target: AlgebraVector


@dataclass(frozen=True, eq=False)
class IteratedCorrection:
    """Result of applying several correction devices in order.

    Attributes:
        path: Corrected curve
        displacement: Total displacement of the final point
        connectors: Connector used by each device
        shifted_intervals: Device intervals in the times of the curve they were applied to
        predicted_layer: sum_i [Y_i, Delta_i] (layer j + 1 prediction)
        predicted_gap: Gap between the prediction and pi_{j+1} of the displacement
    """

    path: HorizontalPath
    displacement: Displacement
    connectors: List[Connector]
    shifted_intervals: List[Tuple[float, float]]
    predicted_layer: AlgebraVector = field(repr=False)
    predicted_gap: float
