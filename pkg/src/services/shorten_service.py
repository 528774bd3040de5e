"""Cut-and-adjust shortening pipeline.

The curve is first cut on [0, eta] (or [-eta, eta]), which shortens it but
moves its final point inside G_2. Stage k then cancels layer k + 1 of the
endpoint defect with correction devices whose targets lie in layer k:

    pi_(k+1)(E_k) = sum_i [Y_i, X_i],  X_i = sum_j c_ij Delta_j,
    Z_j = sum_i c_ij Y_i,  devices (I_j, -Z_j)

where the Delta_j are projected increments over intervals selected inside
the stage window. After s - 1 stages the final point is restored.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.linalg as LA
import numpy.typing as npt

from src.config.settings import Settings, get_settings
from src.exceptions import (
    AlgebraValidationError,
    DegenerateDirectionsError,
    DomainError,
    InfeasibleParametersError,
    SingularIncrementsError,
    StageInvariantError,
)
from src.models.algebra import AlgebraVector, StratifiedAlgebra
from src.models.ledger import (
    STATUS_NO_NET_GAIN,
    STATUS_SHORTENED,
    ScalingCheckReport,
    ShortenParams,
    StageChecks,
    StageRecord,
    StageRegression,
    SurgeryLedger,
    SweepReport,
    SweepRow,
)
from src.models.path import HorizontalPath
from src.models.reports import IntervalSelection
from src.services import curve_service, excess_service, group_service, surgery_service

logger = logging.getLogger(__name__)

ONE_SIDED = "one-sided"
SYMMETRIC = "symmetric"

# Samples used by the projection checks
CHECK_SAMPLES = 65

SINGULAR_RATIO = 1e-14


def choose_params(
    s: int,
    beta: float,
    rho_s: float,
    eta: float = 0.1,
    epsilon: float = 0.0,
    grid_depth: int = 6,
    length_unit: float = 1.0,
) -> ShortenParams:
    """Window exponents with equal slack in every constraint.

    Solves rho_k = (rho_(k+1) + k) / (k + 1) + k beta / (k + 1) + sigma from
    k = s - 1 down to 2, with sigma chosen so that the k = 1 constraint
    against rho_1 = 1 has the same slack.

    Args:
        s: Step of the algebra
        beta: Margin exponent (>= 0)
        rho_s: Last exponent, in (0, 1)
        eta: Cut scale
        epsilon: Excess lower bound
        grid_depth: Interval search depth
        length_unit: Unit of the stage windows

    Returns:
        Feasible ShortenParams

    Raises:
        InfeasibleParametersError: If no positive slack exists
    """
    if not 0 < rho_s < 1 and s > 1:
        raise InfeasibleParametersError(f"rho_s must lie in (0, 1), got {rho_s}")
    if beta < 0:
        raise InfeasibleParametersError(f"beta must be nonnegative, got {beta}")
    if s == 1:
        rho = [1.0]
    else:
        # rho_k = offsets[k] + slopes[k] * sigma
        offsets = {s: float(rho_s)}
        slopes = {s: 0.0}
        for k in range(s - 1, 1, -1):
            offsets[k] = (offsets[k + 1] + k) / (k + 1) + k * beta / (k + 1)
            slopes[k] = slopes[k + 1] / (k + 1) + 1.0
        sigma = (1.0 - beta - offsets[2]) / (2.0 + slopes[2])
        if not sigma > 0:
            raise InfeasibleParametersError(
                f"no window exponents for s = {s}, beta = {beta}, rho_s = {rho_s} "
                f"(slack {sigma:.4g})"
            )
        rho = [1.0] + [offsets[k] + slopes[k] * sigma for k in range(2, s + 1)]
    params = ShortenParams(
        epsilon=epsilon,
        eta=eta,
        beta=beta,
        rho=rho,
        grid_depth=grid_depth,
        length_unit=length_unit,
    )
    params.check_feasible()
    return params


@dataclass(frozen=True)
class BracketDecomposition:
    """Y_1..Y_r in layer k with sum_i [Y_i, X_i] equal to a layer-(k+1) target."""

    y: List[AlgebraVector]
    operator_constant: float
    residual: float


def bracket_decompose(algebra: StratifiedAlgebra, target: AlgebraVector, k: int) -> BracketDecomposition:
    """Minimum-norm Y_i in layer k with sum_i [Y_i, X_i] = target.

    Raises:
        DomainError: If target is not in layer k + 1
        AlgebraValidationError: If the bracket map does not reach the target
    """
    target = algebra.vector(target)
    if not algebra.is_homogeneous(target, k + 1, tol=1e-14 * max(1.0, float(LA.norm(target)))):
        raise DomainError(f"decomposition target must lie in layer {k + 1}")
    # sum_i [Y_i, X_i] = -sum_i [X_i, Y_i]
    matrix = algebra.bracket_map(k + 1)
    y_coords = algebra.layer_coords(target, k + 1)
    inverse = LA.pinv(matrix)
    solution = inverse @ (-y_coords)
    residual = float(LA.norm(matrix @ solution + y_coords))
    if residual > 1e-10 * max(1.0, float(LA.norm(y_coords))):
        raise AlgebraValidationError(
            f"[g_{k}, g_1] does not reach layer {k + 1} of {algebra.name} (residual {residual:.3e})"
        )
    src = algebra.layer_slice(k)
    width = src.stop - src.start
    ys = []
    for i in range(algebra.r):
        y = np.zeros(algebra.n)
        y[src] = solution[i * width : (i + 1) * width]
        ys.append(y)
    return BracketDecomposition(
        y=ys,
        operator_constant=float(LA.norm(inverse, 2)),
        residual=residual,
    )


def coefficients_solve(increments: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """c with X_i = sum_j c_ij Delta_j, for increments given as rows Delta_j.

    Raises:
        SingularIncrementsError: If the increments are linearly dependent
    """
    rows = np.asarray(increments, dtype=np.float64)
    det = float(LA.det(rows))
    scale = float(np.prod(LA.norm(rows, axis=1)))
    if scale == 0.0 or abs(det) <= SINGULAR_RATIO * scale:
        raise SingularIncrementsError(f"increment matrix is singular (det {det:.3e})")
    return LA.inv(rows)


@dataclass(frozen=True)
class Defect:
    """Endpoint defect after stage k."""

    log: AlgebraVector
    layer_norms: npt.NDArray[np.float64]


def defect(original: HorizontalPath, current: HorizontalPath, k: int, tolerance: float = 1e-8) -> Defect:
    """E_k = log(gamma(T)^{-1} gamma^(k)(T_k)), required to vanish in layers 1..k.

    Raises:
        StageInvariantError: If a layer <= k is above tolerance
    """
    algebra = original.algebra
    log = algebra.bch(-original.end.log, current.end.log)
    norms = algebra.layer_norms(log)
    for j in range(1, min(k, algebra.s) + 1):
        if norms[j - 1] > tolerance:
            raise StageInvariantError(
                f"endpoint defect after stage {k} has layer {j} component {norms[j - 1]:.3e}"
            )
    return Defect(log=log, layer_norms=norms)


def _regression_slope(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    points = [(a, b) for a, b in zip(x, y) if a > 0 and b > 0]
    if len(points) < 2:
        return None
    xs, ys = zip(*points)
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


class ShortenService:
    """Runs the shortening pipeline and its sweeps.

    Interval searches and eta-sweeps use the thread count from settings;
    stages within one run are sequential.
    """

    def __init__(self, settings: Optional[Settings] = None):
        """Initialize the service.

        Args:
            settings: Application settings (loaded from the environment when omitted)
        """
        self.settings = settings if settings is not None else get_settings()
        self.excess = excess_service.ExcessService(self.settings)
        self.surgery = surgery_service.SurgeryService(self.settings)

    def shorten_one_sided(self, p: HorizontalPath, params: ShortenParams) -> Tuple[HorizontalPath, SurgeryLedger]:
        """Shorten p near its initial point, keeping both endpoints.

        Args:
            p: Arclength curve on [0, T]
            params: Pipeline parameters

        Returns:
            (output curve, ledger); the output is p itself on NoNetGain from a
            failed excess precondition

        Raises:
            InfeasibleParametersError: If params are infeasible for the algebra
            DegenerateDirectionsError: If no independent increments are found twice
            StageInvariantError: If a stage leaves a lower-layer residual
        """
        return self._run(p, params, symmetric=False)

    def shorten_symmetric(self, p: HorizontalPath, params: ShortenParams) -> Tuple[HorizontalPath, SurgeryLedger]:
        """Shorten p around the middle of a symmetric domain [-T, T].

        Curves on other domains are recentered first.
        """
        return self._run(p, params, symmetric=True)

    # Pipeline ---------------------------------------------------------------

    def _prepare(self, p: HorizontalPath, params: ShortenParams, symmetric: bool) -> HorizontalPath:
        params.check_feasible()
        if len(params.rho) != p.algebra.s:
            raise InfeasibleParametersError(
                f"rho has {len(params.rho)} entries, {p.algebra.name} has step {p.algebra.s}"
            )
        if not p.is_arclength:
            raise DomainError("the shortening pipeline needs an arclength curve")
        if symmetric and not curve_service.is_symmetric(p):
            logger.info(f"Recentering domain [{p.a:.6g}, {p.b:.6g}] for the symmetric pipeline")
            return curve_service.recenter(p)
        if not symmetric and p.a != 0.0:
            logger.info(f"Shifting domain [{p.a:.6g}, {p.b:.6g}] to start at 0")
            return p.with_offset(0.0)
        return p

    def _stage_window(self, current: HorizontalPath, width: float, symmetric: bool) -> Tuple[float, float]:
        lo, hi = (-width, width) if symmetric else (0.0, width)
        clipped = (max(lo, current.a), min(hi, current.b))
        if clipped != (lo, hi):
            logger.warning(
                f"Stage window [{lo:.6g}, {hi:.6g}] exceeds the domain [{current.a:.6g}, {current.b:.6g}], clipped"
            )
        return clipped

    def _select(
        self, current: HorizontalPath, window: Tuple[float, float], depth: int
    ) -> Tuple[IntervalSelection, npt.NDArray[np.float64]]:
        """Interval selection and coefficients, retried once one grid level deeper."""
        try:
            selection = self.excess.select_intervals(current, window, depth)
            return selection, coefficients_solve(selection.increments)
        except (DegenerateDirectionsError, SingularIncrementsError) as e:
            logger.warning(f"Interval selection failed at depth {depth} ({e}); retrying at depth {depth + 1}")
        selection = self.excess.select_intervals(current, window, depth + 1)
        return selection, coefficients_solve(selection.increments)

    def _projection_checks(
        self, original: HorizontalPath, curve: HorizontalPath, width: float, symmetric: bool
    ) -> Tuple[float, float]:
        """Largest projection gap outside the doubled stage window, and the sup-norm deviation."""
        gaps = [0.0]
        right = np.linspace(2.0 * width, curve.b, CHECK_SAMPLES) if 2.0 * width < curve.b else np.zeros(0)
        if right.size:
            mapped = np.clip(right - curve.b + original.b, original.a, original.b)
            gaps.append(float(np.max(LA.norm(
                curve_service.projections_at(curve, right) - curve_service.projections_at(original, mapped), axis=1
            ))))
        if symmetric and -2.0 * width > curve.a:
            left = np.linspace(curve.a, -2.0 * width, CHECK_SAMPLES)
            mapped = np.clip(left - curve.a + original.a, original.a, original.b)
            gaps.append(float(np.max(LA.norm(
                curve_service.projections_at(curve, left) - curve_service.projections_at(original, mapped), axis=1
            ))))
        fractions = np.linspace(0.0, 1.0, CHECK_SAMPLES)
        deviation = float(np.max(LA.norm(
            curve_service.projections_at(curve, curve.a + fractions * curve.duration)
            - curve_service.projections_at(original, original.a + fractions * original.duration),
            axis=1,
        )))
        return max(gaps), deviation

    def _aux_element(
        self, original: HorizontalPath, current: HorizontalPath, width: float, k: int, target: AlgebraVector
    ) -> Tuple[Optional[List[float]], Optional[float]]:
        """pi_(k+1)(g_k) with g_k = gamma(tau_k)^{-1} gamma^(k)(2 w_k), tau_k = 2 w_k + (b - b_k)."""
        algebra = original.algebra
        at = 2.0 * width
        tau = at + (original.b - current.b)
        if not (current.a <= at <= current.b and original.a <= tau <= original.b):
            return None, None
        g = group_service.product(
            curve_service.evaluate(original, tau).inverse(), curve_service.evaluate(current, at)
        )
        layer = algebra.project(g.log, k + 1)
        return layer.tolist(), float(LA.norm(layer - target))

    def _zero_ledger(self, p: HorizontalPath, params: ShortenParams, mode: str, exc: float) -> SurgeryLedger:
        return SurgeryLedger(
            mode=mode,
            status=STATUS_NO_NET_GAIN,
            params=params,
            input_length=p.length,
            cut_excess=exc,
            cut_length=p.length,
            gross_gain=0.0,
            cut_gain_bound=0.0,
            cut_gain_holds=True,
            stages=[],
            total_correction_cost=0.0,
            net_gain=0.0,
            final_length=p.length,
            endpoint_residual=[0.0] * p.algebra.s,
            endpoint_residual_max=0.0,
        )

    def _run(self, p: HorizontalPath, params: ShortenParams, symmetric: bool) -> Tuple[HorizontalPath, SurgeryLedger]:
        mode = SYMMETRIC if symmetric else ONE_SIDED
        p = self._prepare(p, params, symmetric)
        algebra = p.algebra
        eta = params.eta
        cut_window = (-eta, eta) if symmetric else (0.0, eta)

        exc = self.excess.excess(p, cut_window).value
        if exc < params.epsilon or exc == 0.0:
            logger.warning(
                f"Excess {exc:.6g} on [{cut_window[0]:.6g}, {cut_window[1]:.6g}] is below "
                f"epsilon = {params.epsilon:.6g}: NoNetGain"
            )
            return p, self._zero_ledger(p, params, mode, exc)

        length = p.length
        current = self.surgery.cut(p, cut_window[0], cut_window[1], symmetric)
        cut_length = current.length
        gross = length - cut_length
        bound = 0.5 * eta * params.epsilon**2
        logger.info(f"Cut on [{cut_window[0]:.6g}, {cut_window[1]:.6g}]: length {length:.6g} -> {cut_length:.6g}")

        stages: List[StageRecord] = []
        for k in range(1, algebra.s):
            record, current = self._stage(p, current, params, k, symmetric)
            stages.append(record)

        final = algebra.bch(-p.end.log, current.end.log)
        residual = algebra.layer_norms(final)
        residual_max = float(np.max(residual))
        if residual_max > params.tolerance:
            raise StageInvariantError(
                f"final point missed by {residual_max:.3e} after {algebra.s - 1} stages"
            )
        total_cost = float(sum(stage.correction_cost for stage in stages))
        net = gross - total_cost
        status = STATUS_SHORTENED if net > 0 else STATUS_NO_NET_GAIN
        if status == STATUS_NO_NET_GAIN:
            logger.warning(f"NoNetGain at eta = {eta:.6g}: gross {gross:.6e}, corrections {total_cost:.6e}")
        else:
            logger.info(f"Shortened at eta = {eta:.6g}: net gain {net:.6e}")

        ledger = SurgeryLedger(
            mode=mode,
            status=status,
            params=params,
            input_length=length,
            cut_excess=exc,
            cut_length=cut_length,
            gross_gain=gross,
            cut_gain_bound=bound,
            cut_gain_holds=gross >= bound - 1e-12 * max(1.0, length),
            stages=stages,
            total_correction_cost=total_cost,
            net_gain=net,
            final_length=current.length,
            endpoint_residual=residual.tolist(),
            endpoint_residual_max=residual_max,
        )
        return current, ledger

    def _stage(
        self, original: HorizontalPath, current: HorizontalPath, params: ShortenParams, k: int, symmetric: bool
    ) -> Tuple[StageRecord, HorizontalPath]:
        algebra = original.algebra
        before = defect(original, current, k, params.tolerance)
        target = algebra.project(before.log, k + 1)
        target_norm = float(LA.norm(target))
        aux_layer, aux_gap = self._aux_element(original, current, params.window(k), k, target)
        width = params.window(k + 1)
        window = self._stage_window(current, width, symmetric)

        decomposition = bracket_decompose(algebra, target, k)
        if target_norm <= surgery_service.NEGLIGIBLE:
            logger.info(f"Stage {k}: layer {k + 1} already cancelled")
            selection_fields = dict(intervals=[], increments=[], det=0.0, grid_depth=0)
            coefficients = np.zeros((algebra.r, algebra.r))
            corrections: List[AlgebraVector] = []
            corrected = current
            connectors = []
        else:
            selection, coefficients = self._select(current, window, params.grid_depth)
            selection_fields = dict(
                intervals=selection.intervals,
                increments=selection.increments,
                det=selection.det,
                grid_depth=selection.grid_depth,
            )
            corrections = [
                sum(coefficients[i, j] * decomposition.y[i] for i in range(algebra.r))
                for j in range(algebra.r)
            ]
            devices = [
                (interval, -z) for interval, z in zip(selection.intervals, corrections)
            ]
            result = self.surgery.iterate(current, devices, symmetric)
            corrected = result.path
            connectors = result.connectors

        cost = corrected.length - current.length
        after = algebra.bch(-original.end.log, corrected.end.log)
        after_norms = algebra.layer_norms(after)
        gap, deviation = self._projection_checks(original, corrected, width, symmetric)
        checks = StageChecks(
            start_fixed=bool(np.array_equal(corrected.start.log, original.start.log)),
            defect_in_subgroup=bool(np.all(after_norms[: k + 1] <= params.tolerance)),
            shorter_than_input=corrected.length < original.length,
            length_nondecreasing=cost >= -1e-12 * max(1.0, current.length),
            projection_agrees=gap <= 1e-9 * max(1.0, original.length),
            projection_gap=gap,
            projection_deviation=deviation,
        )
        logger.info(
            f"Stage {k}: |pi_{k + 1}(E)| = {target_norm:.3e}, {len(connectors)} devices, "
            f"cost {cost:.6e}, length {corrected.length:.6g}"
        )
        max_y = max((float(LA.norm(y)) for y in decomposition.y), default=0.0)
        record = StageRecord(
            stage=k,
            window=list(window),
            defect=before.log.tolist(),
            defect_layer_norms=before.layer_norms.tolist(),
            target_norm=target_norm,
            target_scale=params.window(k) ** (k + 1),
            aux_layer=aux_layer,
            aux_gap=aux_gap,
            decomposition=[y.tolist() for y in decomposition.y],
            decomposition_constant=max_y / target_norm if target_norm > 0 else 0.0,
            coefficients=coefficients.tolist(),
            max_coefficient=float(np.max(np.abs(coefficients))),
            coefficient_scale=1.0 / width,
            corrections=[z.tolist() for z in corrections],
            connector_lengths=[c.length for c in connectors],
            connector_constants=[c.constant for c in connectors],
            correction_cost=cost,
            running_length=corrected.length,
            checks=checks,
            **selection_fields,
        )
        return record, corrected

    # Sweeps and checks ------------------------------------------------------

    def sweep(
        self, p: HorizontalPath, params: ShortenParams, etas: Sequence[float], symmetric: bool = False
    ) -> SweepReport:
        """Run the pipeline for several eta values.

        Args:
            p: Input curve
            params: Parameters; eta is replaced by each sweep value
            etas: Cut scales
            symmetric: Whether to run the symmetric pipeline

        Returns:
            SweepReport with rows in input order, the net-gain crossover and
            log-log regressions of the correction costs
        """
        runs = [params.model_copy(update={"eta": float(eta)}) for eta in etas]

        def run(run_params: ShortenParams) -> SweepRow:
            _, ledger = self._run(p, run_params, symmetric)
            return SweepRow(
                eta=run_params.eta,
                gross=ledger.gross_gain,
                cost=ledger.total_correction_cost,
                net=ledger.net_gain,
                endpoint_residual=ledger.endpoint_residual_max,
                status=ledger.status,
                stage_costs=[stage.correction_cost for stage in ledger.stages],
            )

        logger.info(f"Sweeping {len(runs)} eta values with {self.settings.threads} threads")
        if self.settings.threads > 1 and len(runs) > 1:
            with ThreadPoolExecutor(max_workers=self.settings.threads) as pool:
                rows = list(pool.map(run, runs))
        else:
            rows = [run(run_params) for run_params in runs]

        crossover = None
        for row in sorted(rows, key=lambda item: item.eta):
            if row.net <= 0:
                break
            crossover = row.eta

        regressions = []
        for k in range(1, p.algebra.s):
            costs = [row.stage_costs[k - 1] if len(row.stage_costs) >= k else 0.0 for row in rows]
            slope = _regression_slope([row.eta for row in rows], costs)
            rho = params.rho
            regressions.append(
                StageRegression(
                    stage=k,
                    slope=slope,
                    predicted=((k + 1) * rho[k - 1] - rho[k]) / k,
                    exceeds_margin=None if slope is None else slope > 1.0 + params.beta,
                )
            )
        return SweepReport(
            mode=SYMMETRIC if symmetric else ONE_SIDED,
            rows=rows,
            crossover=crossover,
            cost_slope=_regression_slope([row.eta for row in rows], [row.cost for row in rows]),
            stage_regressions=regressions,
        )

    def scaling_check(
        self,
        p: HorizontalPath,
        params: ShortenParams,
        lam: float,
        symmetric: bool = False,
        tolerance: float = 1e-8,
    ) -> ScalingCheckReport:
        """Rerun on delta_lam(gamma(. / lam)) with eta and length_unit scaled by lam."""
        _, base = self._run(p, params, symmetric)
        scaled_params = params.model_copy(
            update={"eta": params.eta * lam, "length_unit": params.length_unit * lam}
        )
        _, scaled = self._run(curve_service.dilate_reparametrize(p, lam), scaled_params, symmetric)
        pairs = [(base.gross_gain, scaled.gross_gain), (base.net_gain, scaled.net_gain)]
        pairs += [
            (a.correction_cost, b.correction_cost) for a, b in zip(base.stages, scaled.stages)
        ]
        deviation = max(abs(b - lam * a) / max(1.0, abs(lam * a)) for a, b in pairs)
        if len(base.stages) != len(scaled.stages):
            deviation = float("inf")
        return ScalingCheckReport(
            scale=lam,
            gross_gain=[base.gross_gain, scaled.gross_gain],
            correction_costs=[
                [stage.correction_cost for stage in base.stages],
                [stage.correction_cost for stage in scaled.stages],
            ],
            net_gain=[base.net_gain, scaled.net_gain],
            max_relative_deviation=deviation,
            tolerance=tolerance,
            passed=deviation <= tolerance,
        )
