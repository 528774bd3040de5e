"""Command handlers for the command-line front end.

Each handler takes the parsed arguments and a CommandContext, writes its
artifact, and returns the process exit code.
"""

import argparse
import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.config.settings import Settings
from src.decorators.error_handling import handles_errors
from src.exceptions import ConfigurationError
from src.models.group import GroupElement
from src.models.ledger import ShortenParams
from src.models.path import HorizontalPath, Window
from src.models.reports import AlgebraReport, CurveSample, CurveSummary
from src.repositories.algebra_repository import AlgebraRepository
from src.repositories.artifact_repository import ArtifactRepository
from src.repositories.curve_repository import CurveRepository
from src.services import algebra_service, curve_service
from src.services.blowup_service import BlowupService
from src.services.excess_service import ExcessService
from src.services.identity_suite_service import DEFAULT_ALGEBRAS, IdentitySuiteService
from src.services.shorten_service import ShortenService, choose_params

logger = logging.getLogger(__name__)


@dataclass
class CommandContext:
    """Settings and repositories shared by the handlers."""

    settings: Settings
    algebras: AlgebraRepository
    curves: CurveRepository
    artifacts: ArtifactRepository

    @classmethod
    def create(cls, settings: Settings, output: Optional[str] = None) -> "CommandContext":
        algebras = AlgebraRepository(settings)
        artifacts = ArtifactRepository(output_path(settings, output) if output else None)
        return cls(settings, algebras, CurveRepository(algebras), artifacts)


def output_path(settings: Settings, path: str) -> str:
    """Relative artifact paths resolve under the output directory."""
    if os.path.isabs(path) or not settings.output_dir:
        return path
    return os.path.join(settings.output_dir, path)


# Algebra ----------------------------------------------------------------------


@handles_errors
def algebra_validate_command(args: argparse.Namespace, context: CommandContext) -> int:
    """Validate an algebra and optionally fuzz the group identities on it.

    Usage: algebra validate <name-or-table> [--suites] [--cases N]
    """
    algebra = context.algebras.get(args.name)
    checks = algebra_service.validate(algebra, tol=args.tolerance)
    suites = None
    passed = True
    if args.suites:
        report = IdentitySuiteService(context.settings).run([algebra], cases=args.cases)
        suites = report.results
        passed = report.passed
    witt = None
    if all(d == w for d, w in zip(algebra.layer_dims, algebra_service.witt_dims(algebra.r, algebra.s))):
        witt = list(algebra_service.witt_dims(algebra.r, algebra.s))
    context.artifacts.write_json(
        AlgebraReport(
            name=algebra.name,
            layer_dims=list(algebra.layer_dims),
            dimension=algebra.n,
            step=algebra.s,
            rank=algebra.r,
            labels=list(algebra.labels),
            checks=checks,
            witt_dims=witt,
            suites=suites,
        )
    )
    logger.info(f"Algebra {algebra.name} passed: {', '.join(checks)}")
    if not passed:
        IdentitySuiteService.require_pass(report)
    return 0


# Curves -------------------------------------------------------------------------


def _shape_curve(args: argparse.Namespace, context: CommandContext) -> HorizontalPath:
    algebra = context.algebras.get(args.algebra)
    if args.piece:
        durations = [float(piece[0]) for piece in args.piece]
        controls = [[float(x) for x in piece[1:]] for piece in args.piece]
        start = GroupElement(algebra, args.start) if args.start else GroupElement.identity(algebra)
        return curve_service.lift(start, durations, controls, offset=args.offset)
    if args.shape == "corner":
        return curve_service.corner(algebra, leg=args.leg, offset=args.offset)
    if args.shape == "line":
        direction = np.zeros(algebra.r)
        direction[0] = args.leg
        return curve_service.segment(algebra, direction, offset=args.offset)
    if args.shape == "circle":
        return curve_service.circle_lift(algebra, n_pieces=args.pieces, radius=args.leg)
    raise ConfigurationError("curve lift needs --shape or at least one --piece")


@handles_errors
def curve_lift_command(args: argparse.Namespace, context: CommandContext) -> int:
    """Build a curve from pieces or a named shape and write it as JSON.

    Usage: curve lift --algebra heisenberg (--shape corner|line|circle | --piece DT H1 H2 ...)
    """
    curve = _shape_curve(args, context)
    context.artifacts.write_text(context.curves.dumps(curve))
    return 0


@handles_errors
def curve_show_command(args: argparse.Namespace, context: CommandContext) -> int:
    """Summarize a curve file: domain, length, endpoints and sampled points."""
    curve = context.curves.load(args.curve)
    times = curve_service.uniform_times(curve, args.samples)
    grid = curve_service.sample(curve, times)
    context.artifacts.write_json(
        CurveSummary(
            algebra=curve.algebra.name,
            domain=[curve.a, curve.b],
            pieces=curve.pieces,
            length=curve.length,
            arclength=curve.is_arclength,
            start=curve.start.coords(),
            end=curve.end.coords(),
            lipschitz_constant=curve_service.measure_lipschitz_constant(curve),
            samples=[
                CurveSample(t=float(t), point=[float(x) for x in log])
                for t, log in zip(grid.times, grid.logs())
            ],
        )
    )
    return 0


# Excess -------------------------------------------------------------------------


def _window(args: argparse.Namespace, curve: HorizontalPath) -> Window:
    if not args.window:
        return Window.interval(curve.a, curve.b)
    return Window.of(args.window)


@handles_errors
def excess_command(args: argparse.Namespace, context: CommandContext) -> int:
    """Excess over a window, a scale sweep (--scales), or the scaling identities (--scaling).

    Usage: excess --curve corner.json --window 0 2
    """
    curve = context.curves.load(args.curve)
    service = ExcessService(context.settings)
    if args.scales:
        center = args.center if args.center is not None else 0.5 * (curve.a + curve.b)
        rows = service.scale_sweep(curve, center, args.scales, one_sided=args.one_sided)
        header = ["scale", "excess"] + [f"v{i + 1}" for i in range(curve.algebra.r)]
        context.artifacts.write_csv(header, [[row.scale, row.excess, *row.direction] for row in rows])
        return 0
    window = _window(args, curve)
    if args.scaling is not None:
        report = service.scaling_check(curve, window, args.scaling, tolerance=args.tolerance)
        context.artifacts.write_json(report)
        return 0
    report = service.excess(curve, window)
    if args.mesh:
        mesh_value = service.excess_by_mesh(curve, window, args.mesh)
        logger.info(f"Excess {report.value:.12g} (eigen), {mesh_value:.12g} (mesh of {args.mesh})")
    context.artifacts.write_json(report)
    return 0


@handles_errors
def select_intervals_command(args: argparse.Namespace, context: CommandContext) -> int:
    """Pick r subintervals with independent projected increments."""
    curve = context.curves.load(args.curve)
    window = _window(args, curve)
    selection = ExcessService(context.settings).select_intervals(curve, (window.lo, window.hi), args.depth)
    context.artifacts.write_json(selection)
    return 0


# Surgery --------------------------------------------------------------------------


@handles_errors
def surgery_check_command(args: argparse.Namespace, context: CommandContext) -> int:
    """Run the identity fuzz suites; nonzero exit when any suite fails.

    Usage: surgery check [--algebra NAME ...] [--suite NAME ...] [--cases N]
    """
    names = args.algebra or list(DEFAULT_ALGEBRAS)
    algebras = [context.algebras.get(name) for name in names]
    service = IdentitySuiteService(context.settings)
    report = service.run(algebras, suites=args.suite, cases=args.cases)
    context.artifacts.write_json(report)
    service.require_pass(report)
    return 0


# Shortening -------------------------------------------------------------------------


def _params(args: argparse.Namespace, context: CommandContext, s: int) -> ShortenParams:
    depth = args.grid_depth if args.grid_depth is not None else context.settings.grid_depth
    if args.rho:
        params = ShortenParams(
            epsilon=args.epsilon,
            eta=args.eta,
            beta=args.beta,
            rho=args.rho,
            grid_depth=depth,
            length_unit=args.length_unit,
            tolerance=args.tolerance,
        )
        params.check_feasible()
        return params
    params = choose_params(s, args.beta, args.rho_s, args.eta, args.epsilon, depth, args.length_unit)
    return params.model_copy(update={"tolerance": args.tolerance})


@handles_errors
def shorten_command(args: argparse.Namespace, context: CommandContext) -> int:
    """Run the shortening pipeline, an eta-sweep (--sweep) or the scaling check (--scaling).

    Usage: shorten --curve corner.json --symmetric --eta 0.1 --beta 0.05 --rho-s 0.5
    """
    curve = context.curves.load(args.curve)
    params = _params(args, context, curve.algebra.s)
    service = ShortenService(context.settings)
    if args.sweep:
        report = service.sweep(curve, params, args.sweep, symmetric=args.symmetric)
        if args.format == "csv":
            context.artifacts.write_csv(
                ["eta", "gross", "cost", "net", "endpoint_residual", "status"],
                [[row.eta, row.gross, row.cost, row.net, row.endpoint_residual, row.status] for row in report.rows],
            )
        else:
            context.artifacts.write_json(report)
        return 0
    if args.scaling is not None:
        context.artifacts.write_json(service.scaling_check(curve, params, args.scaling, args.symmetric))
        return 0
    if args.symmetric:
        shortened, ledger = service.shorten_symmetric(curve, params)
    else:
        shortened, ledger = service.shorten_one_sided(curve, params)
    context.artifacts.write_json(ledger)
    if args.curve_out:
        ArtifactRepository(output_path(context.settings, args.curve_out)).write_text(context.curves.dumps(shortened))
    return 0


# Blow-up ------------------------------------------------------------------------------


@handles_errors
def blowup_command(args: argparse.Namespace, context: CommandContext) -> int:
    """Blow-up profile at a time: excess, mean control and residual per scale.

    Usage: blowup --curve circle.json --at 0 --scales 1 0.5 0.25
    """
    curve = context.curves.load(args.curve)
    profile = BlowupService(context.settings).profile(
        curve,
        args.at,
        args.scales,
        one_sided=args.one_sided,
        window_factor=args.window_factor,
        tolerance=args.tolerance,
    )
    if args.format == "csv":
        r = curve.algebra.r
        context.artifacts.write_csv(
            ["scale", "excess"] + [f"v{i + 1}" for i in range(r)] + ["residual", "excess_ratio"],
            [[row.scale, row.excess, *row.mean_control, row.residual, row.ratio_excess] for row in profile.rows],
        )
    else:
        context.artifacts.write_json(profile)
    return 0
