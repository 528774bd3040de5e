"""Curve surgery: cuts, connectors and correction devices.

A cut replaces gamma on [s, s'] by the straight segment realizing the chord
of its first-layer projection. A correction device inserts a connector to
exp(Y) at s and its reverse at s'; the final point then moves by the
conjugated commutator C_{gamma|_b^s}([exp(Y), gamma|_s^{s'}]).
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.linalg as LA

from src.config.settings import Settings, get_settings
from src.exceptions import AlgebraValidationError, DomainError
from src.models.algebra import AlgebraVector, StratifiedAlgebra
from src.models.group import GroupElement
from src.models.path import HorizontalPath
from src.models.reports import CutGainReport
from src.models.surgery import Connector, Device, Displacement, IteratedCorrection
from src.services import curve_service, excess_service, group_service

logger = logging.getLogger(__name__)

# Layer components below this are treated as already cancelled
NEGLIGIBLE = 1e-15

# Exactness required of a single-generator decomposition
DECOMPOSITION_TOL = 1e-12

LAYER_TOL = 1e-10

DeviceSpec = Union[Device, Tuple[Sequence[float], AlgebraVector]]


# Cut ------------------------------------------------------------------------


def _check_interval(p: HorizontalPath, s: float, s2: float, strict: bool = True) -> None:
    if s > s2 or (strict and s == s2):
        raise DomainError(f"interval [{s}, {s2}] must have s < s'")
    slack = curve_service.DOMAIN_SLACK * max(1.0, abs(p.a), abs(p.b))
    if s < p.a - slack or s2 > p.b + slack:
        raise DomainError(f"interval [{s}, {s2}] outside the domain [{p.a}, {p.b}]")


def cut(p: HorizontalPath, s: float, s2: float) -> HorizontalPath:
    """Cut curve: gamma on [a, s], the chord segment, then gamma on [s', b].

    The chord has direction gamma_(s') - gamma_(s) (first-layer projection)
    and duration equal to its length; a zero chord drops the middle piece.

    Raises:
        DomainError: If [s, s'] is empty or leaves the domain
    """
    _check_interval(p, s, s2)
    head = curve_service.restrict(p, p.a, s)
    chord = curve_service.projection_at(p, s2) - curve_service.projection_at(p, s)
    middle = curve_service.segment(p.algebra, chord)
    tail = curve_service.restrict(p, s2, p.b)
    return curve_service.concat_all(head, middle, tail)


def cut_sym(p: HorizontalPath, s: float, s2: float) -> HorizontalPath:
    """Cut followed by recentering the domain to [-T/2, T/2]."""
    return curve_service.recenter(cut(p, s, s2))


def cut_gain_bound(p: HorizontalPath, s: float, s2: float) -> CutGainReport:
    """Length gain of the cut on J = [s, s'] against (|J| / 2) exc(gamma; J)^2.

    Raises:
        DomainError: If J is empty or leaves the domain
    """
    after = cut(p, s, s2)
    gain = p.length - after.length
    exc = excess_service.excess(p, (s, s2)).value
    bound = 0.5 * (s2 - s) * exc**2
    slack = 1e-12 * max(1.0, p.length)
    return CutGainReport(
        interval=[s, s2],
        length_before=p.length,
        length_after=after.length,
        gain=gain,
        excess=exc,
        bound=bound,
        holds=gain >= bound - slack,
    )


# Connectors -----------------------------------------------------------------


def _single_generator_terms(
    algebra: StratifiedAlgebra, target: AlgebraVector, j: int
) -> Optional[List[Tuple[int, AlgebraVector]]]:
    """[X_m, W] = target with one generator, smallest |W| first, or None."""
    tgt = algebra.layer_slice(j)
    src = algebra.layer_slice(j - 1)
    y = target[tgt]
    scale = max(1.0, float(LA.norm(y)))
    best: Optional[Tuple[float, int, AlgebraVector]] = None
    for m in range(algebra.r):
        matrix = algebra.structure[m, src, tgt].T
        w, *_ = LA.lstsq(matrix, y, rcond=None)
        if LA.norm(matrix @ w - y) > DECOMPOSITION_TOL * scale:
            continue
        norm = float(LA.norm(w))
        if best is None or norm < best[0] * (1.0 - 1e-12):
            best = (norm, m, w)
    if best is None:
        return None
    full = np.zeros(algebra.n)
    full[src] = best[2]
    return [(best[1], full)]


def decompose_layer(
    algebra: StratifiedAlgebra, target: AlgebraVector, j: int
) -> List[Tuple[int, AlgebraVector]]:
    """Write the layer-j part of target as sum_m [X_m, W_m] with W_m in layer j - 1.

    A single generator is used when it reaches the target exactly; otherwise
    the minimum-norm solution over all generators.

    Raises:
        AlgebraValidationError: If [g_1, g_{j-1}] does not reach the target
    """
    terms = _single_generator_terms(algebra, target, j)
    if terms is not None:
        return terms
    src = algebra.layer_slice(j - 1)
    y = target[algebra.layer_slice(j)]
    matrix = algebra.bracket_map(j)
    solution = LA.pinv(matrix) @ y
    if LA.norm(matrix @ solution - y) > 1e-9 * max(1.0, float(LA.norm(y))):
        raise AlgebraValidationError(
            f"bracket map onto layer {j} of {algebra.name} is not surjective"
        )
    width = src.stop - src.start
    out = []
    for m in range(algebra.r):
        block = solution[m * width : (m + 1) * width]
        if np.any(block != 0.0):
            full = np.zeros(algebra.n)
            full[src] = block
            out.append((m, full))
    return out


def _commutator_path(algebra: StratifiedAlgebra, m: int, w: AlgebraVector, j: int) -> HorizontalPath:
    """Path commutator P_A * P_W * reverse(P_A) * reverse(P_W) reaching [X_m, W] in layer j.

    P_W only has to be exact up to layer j - 1: its error in layers >= j moves
    the commutator in layers >= j + 1, which later passes cancel.
    """
    size = float(LA.norm(w))
    t = size ** (1.0 / j)
    leg = np.zeros(algebra.r)
    leg[m] = t
    p_a = curve_service.segment(algebra, leg)
    p_w = _connector_path(algebra, w / t, j - 1)
    return curve_service.concat_all(
        p_a, p_w, curve_service.reverse(p_a), curve_service.reverse(p_w)
    )


def _unit_connector(algebra: StratifiedAlgebra, target: AlgebraVector, up_to: int) -> HorizontalPath:
    """Connector built layer by layer; pass j cancels layer j of the residual, for j <= up_to."""
    path = curve_service.empty(algebra)
    for j in range(1, up_to + 1):
        residual = algebra.bch(-path.end.log, target)
        layer = algebra.project(residual, j)
        if float(LA.norm(layer)) <= NEGLIGIBLE:
            continue
        if j == 1:
            piece = curve_service.segment(algebra, layer[: algebra.r])
            path = curve_service.concat(path, piece)
            continue
        for m, w in decompose_layer(algebra, layer, j):
            path = curve_service.concat(path, _commutator_path(algebra, m, w, j))
    return path


def _connector_path(algebra: StratifiedAlgebra, target: AlgebraVector, up_to: int) -> HorizontalPath:
    """Path to exp(target), exact in layers 1..up_to, through the unit-norm dilate."""
    norm = group_service.homogeneous_norm(GroupElement(algebra, target))
    if norm == 0.0:
        return curve_service.empty(algebra)
    unit = algebra.dilate(1.0 / norm, target)
    return curve_service.dilate_reparametrize(_unit_connector(algebra, unit, up_to), norm)


def connect_to(algebra: StratifiedAlgebra, target: AlgebraVector) -> Connector:
    """Horizontal arclength path from the identity to exp(target).

    The target is first dilated to homogeneous norm 1, connected, and the path
    dilated back, so connector lengths scale exactly with the dilation.

    Args:
        algebra: Ambient algebra
        target: Algebra vector Y

    Returns:
        Connector with its length, residual and length constant

    Raises:
        AlgebraValidationError: If a layer cannot be reached by brackets
    """
    target = algebra.vector(target)
    norm = group_service.homogeneous_norm(GroupElement(algebra, target))
    path = _connector_path(algebra, target, algebra.s)
    endpoint = path.end
    residual = algebra.bch(-endpoint.log, target)
    length = path.length
    return Connector(
        target=target,
        path=path,
        endpoint=endpoint,
        length=length,
        residual=residual,
        constant=length / norm if norm > 0.0 else 0.0,
    )


# Correction devices ---------------------------------------------------------


def _dev(
    p: HorizontalPath, s: float, s2: float, target: AlgebraVector
) -> Tuple[HorizontalPath, Connector]:
    _check_interval(p, s, s2, strict=False)
    connector = connect_to(p.algebra, target)
    if connector.path.is_empty:
        return p, connector
    head = curve_service.restrict(p, p.a, s)
    middle = curve_service.restrict(p, s, s2)
    tail = curve_service.restrict(p, s2, p.b)
    corrected = curve_service.concat_all(
        head, connector.path, middle, curve_service.reverse(connector.path), tail
    )
    logger.debug(
        f"Device on [{s:.6g}, {s2:.6g}]: connector length {connector.length:.6e}, "
        f"residual {connector.residual_norm:.2e}"
    )
    return corrected, connector


def dev(p: HorizontalPath, s: float, s2: float, target: AlgebraVector) -> HorizontalPath:
    """Corrected curve: gamma|[a,s] * C * gamma|[s,s'] * reverse(C) * gamma|[s',b].

    C is the connector to exp(target); the length grows by twice its length.
    A zero target returns p unchanged.

    Raises:
        DomainError: If [s, s'] leaves the domain
    """
    return _dev(p, s, s2, target)[0]


def dev_sym(p: HorizontalPath, s: float, s2: float, target: AlgebraVector) -> HorizontalPath:
    """dev followed by recentering the domain to [-T/2, T/2]."""
    return curve_service.recenter(dev(p, s, s2, target))


def _commutator_formula(
    p: HorizontalPath, s: float, s2: float, target: AlgebraVector
) -> GroupElement:
    """C_{gamma|_b^s}([exp(Y), gamma|_s^{s'}]) on the uncorrected curve."""
    algebra = p.algebra
    conjugator = group_service.product(p.end.inverse(), curve_service.evaluate(p, s))
    bracket = group_service.commutator(
        GroupElement(algebra, target), curve_service.increment(p, s, s2)
    )
    return group_service.conjugate(conjugator, bracket)


def displacement(p: HorizontalPath, s: float, s2: float, target: AlgebraVector) -> Displacement:
    """Displacement gamma(b)^{-1} * dev(gamma; [s, s'], Y)(end), by two routes.

    Raises:
        DomainError: If [s, s'] leaves the domain
    """
    target = p.algebra.vector(target)
    corrected = dev(p, s, s2, target)
    value = group_service.product(p.end.inverse(), corrected.end)
    formula = _commutator_formula(p, s, s2, target)
    gap = float(np.max(np.abs(value.log - formula.log)))
    return Displacement(
        value=value,
        lowest_layer=p.algebra.lowest_layer(value.log, LAYER_TOL),
        formula=formula,
        formula_gap=gap,
    )


def _as_devices(devices: Sequence[DeviceSpec]) -> List[Device]:
    out = []
    for item in devices:
        if isinstance(item, Device):
            out.append(item)
        else:
            interval, target = item
            out.append(Device((float(interval[0]), float(interval[1])), np.asarray(target, dtype=np.float64)))
    return out


def _check_devices(p: HorizontalPath, devices: List[Device]) -> None:
    previous = -np.inf
    for device in devices:
        s, s2 = device.interval
        if s < previous:
            raise DomainError(
                f"device intervals overlap or are out of order at [{s}, {s2}] (previous end {previous})"
            )
        _check_interval(p, s, s2, strict=False)
        previous = s2


def common_layer(algebra: StratifiedAlgebra, targets: Sequence[AlgebraVector]) -> int:
    """Layer j containing every nonzero target, or 0 when there is none."""
    layers = {
        algebra.lowest_layer(y, 0.0)
        for y in targets
        if np.any(y != 0.0)
    }
    if len(layers) != 1:
        return 0
    j = layers.pop()
    if all(algebra.is_homogeneous(y, j) for y in targets):
        return j
    return 0


def _iterate(p: HorizontalPath, devices: Sequence[DeviceSpec], symmetric: bool) -> IteratedCorrection:
    algebra = p.algebra
    specs = _as_devices(devices)
    _check_devices(p, specs)
    if symmetric and not curve_service.is_symmetric(p):
        raise DomainError(f"symmetric corrections need a domain [-T, T], got [{p.a}, {p.b}]")

    current = p
    offset = 0.0
    connectors: List[Connector] = []
    shifted: List[Tuple[float, float]] = []
    for device in specs:
        s, s2 = device.interval[0] + offset, device.interval[1] + offset
        current, connector = _dev(current, s, s2, device.target)
        if symmetric:
            current = curve_service.recenter(current)
        connectors.append(connector)
        shifted.append((s, s2))
        # Primed bookkeeping moves later intervals by l, unprimed by 2 l
        offset += connector.path.duration if symmetric else 2.0 * connector.path.duration

    value = group_service.product(p.end.inverse(), current.end)
    factors = [_commutator_formula(p, d.interval[0], d.interval[1], d.target) for d in specs]
    formula = (
        group_service.multiply(*factors) if factors else GroupElement.identity(algebra)
    )
    dis = Displacement(
        value=value,
        lowest_layer=algebra.lowest_layer(value.log, LAYER_TOL),
        formula=formula,
        formula_gap=float(np.max(np.abs(value.log - formula.log), initial=0.0)),
    )

    j = common_layer(algebra, [d.target for d in specs])
    predicted = np.zeros(algebra.n)
    gap = 0.0
    if j:
        for d in specs:
            delta = curve_service.projection_at(p, d.interval[1]) - curve_service.projection_at(
                p, d.interval[0]
            )
            predicted += algebra.bracket(d.target, algebra.embed_horizontal(delta))
        if j < algebra.s:
            gap = float(np.max(np.abs(algebra.project(value.log, j + 1) - predicted)))
        else:
            gap = float(np.max(np.abs(value.log)))

    return IteratedCorrection(
        path=current,
        displacement=dis,
        connectors=connectors,
        shifted_intervals=shifted,
        predicted_layer=predicted,
        predicted_gap=gap,
    )


def dev_iter(p: HorizontalPath, devices: Sequence[DeviceSpec]) -> IteratedCorrection:
    """Apply correction devices in time order.

    Device i acts on its interval shifted by 2 * sum of earlier connector
    lengths, the time those connectors inserted before it.

    Args:
        p: Curve to correct
        devices: (interval, Y) pairs in the times of p, ordered and disjoint

    Returns:
        IteratedCorrection with the corrected curve and its displacement

    Raises:
        DomainError: If intervals overlap, are out of order or leave the domain
    """
    return _iterate(p, devices, symmetric=False)


def dev_iter_sym(p: HorizontalPath, devices: Sequence[DeviceSpec]) -> IteratedCorrection:
    """Iterated symmetric devices on a curve over [-T, T].

    Each device is followed by recentering, so later intervals shift by the
    sum of earlier connector lengths only.

    Raises:
        DomainError: If p's domain is not symmetric or the intervals are invalid
    """
    return _iterate(p, devices, symmetric=True)


class SurgeryService:
    """Cuts, connectors and devices, checked against the settings tolerance.

    Connectors that miss their target and displacements that disagree with
    the commutator formula are logged as warnings.
    """

    def __init__(self, settings: Optional[Settings] = None):
        """Initialize the service.

        Args:
            settings: Application settings (loaded from the environment when omitted)
        """
        self.settings = settings if settings is not None else get_settings()

    def _tol(self, scale: float) -> float:
        return self.settings.tolerance * max(1.0, scale)

    def cut(self, p: HorizontalPath, s: float, s2: float, symmetric: bool = False) -> HorizontalPath:
        """cut, or cut_sym when symmetric."""
        return cut_sym(p, s, s2) if symmetric else cut(p, s, s2)

    def cut_gain_bound(self, p: HorizontalPath, s: float, s2: float) -> CutGainReport:
        report = cut_gain_bound(p, s, s2)
        if not report.holds:
            logger.warning(f"Cut gain {report.gain:.6e} below the bound {report.bound:.6e} on [{s}, {s2}]")
        return report

    def connect_to(self, algebra: StratifiedAlgebra, target: AlgebraVector) -> Connector:
        connector = connect_to(algebra, target)
        if connector.residual_norm > self._tol(float(LA.norm(connector.target))):
            logger.warning(f"Connector residual {connector.residual_norm:.3e} on {algebra.name}")
        return connector

    def displacement(self, p: HorizontalPath, s: float, s2: float, target: AlgebraVector) -> Displacement:
        result = displacement(p, s, s2, target)
        if result.formula_gap > self._tol(float(np.max(np.abs(result.value.log), initial=0.0))):
            logger.warning(f"Displacement differs from the commutator formula by {result.formula_gap:.3e}")
        return result

    def iterate(
        self, p: HorizontalPath, devices: Sequence[DeviceSpec], symmetric: bool = False
    ) -> IteratedCorrection:
        """dev_iter, or dev_iter_sym when symmetric."""
        result = dev_iter_sym(p, devices) if symmetric else dev_iter(p, devices)
        gap = result.displacement.formula_gap
        if gap > self._tol(float(np.max(np.abs(result.displacement.value.log), initial=0.0))):
            logger.warning(f"Iterated displacement differs from the product formula by {gap:.3e}")
        return result
