"""Seeded fuzz suites for the group and surgery identities."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.config.settings import Settings, get_settings
from src.exceptions import IdentitySuiteFailure
from src.models.algebra import StratifiedAlgebra
from src.models.path import HorizontalPath
from src.models.reports import SuiteReport, SuiteResult
from src.services import curve_service, group_service, surgery_service

logger = logging.getLogger(__name__)

# Algebras of the default acceptance run
DEFAULT_ALGEBRAS = ("heisenberg", "heisenberg(2)", "engel", "free(2,3)", "free(3,2)")

CaseCheck = Callable[[StratifiedAlgebra, np.random.Generator], float]


def _layer_residual(algebra: StratifiedAlgebra, log: np.ndarray, below: int) -> float:
    """Largest component of log in layers 1..below - 1."""
    return float(np.max(np.abs(log[~algebra.tail_mask(below)]), initial=0.0))


def pi_homomorphism(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    g = group_service.random_element(algebra, rng)
    h = group_service.random_element(algebra, rng)
    gh = group_service.product(g, h)
    return float(np.max(np.abs(group_service.pi(gh) - group_service.pi(g) - group_service.pi(h))))


def conjugation_projection(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    """pi_j(g h g^-1) = pi_j(h) for h in G_j, and both conjugation routes agree."""
    j = int(rng.integers(1, algebra.s + 1))
    g = group_service.random_element(algebra, rng)
    h = group_service.random_element(algebra, rng, from_layer=j)
    direct = group_service.conjugate(g, h)
    adjoint = group_service.conjugate_via_adjoint(g, h)
    return max(
        float(np.max(np.abs(group_service.pi_layer(j, direct) - group_service.pi_layer(j, h)))),
        _layer_residual(algebra, direct.log, j),
        float(np.max(np.abs(direct.log - adjoint.log))),
    )


def commutator_layer(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    """[g, h] in G_(j+1) with pi_(j+1)([g, h]) = [pi(g), pi_j(h)], in both argument orders."""
    j = int(rng.integers(1, algebra.s + 1))
    g = group_service.random_element(algebra, rng)
    h = group_service.random_element(algebra, rng, from_layer=j)
    g1 = algebra.embed_horizontal(group_service.pi(g))
    hj = group_service.pi_layer(j, h)
    worst = 0.0
    for value, expected in (
        (group_service.commutator(g, h), algebra.bracket(g1, hj)),
        (group_service.commutator(h, g), algebra.bracket(hj, g1)),
    ):
        if j == algebra.s:
            worst = max(worst, float(np.max(np.abs(value.log))))
            continue
        layer = group_service.pi_layer(j + 1, value)
        worst = max(
            worst,
            _layer_residual(algebra, value.log, j + 1),
            float(np.max(np.abs(layer - expected))),
        )
    return worst


def associativity(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    g, h, k = (group_service.random_element(algebra, rng) for _ in range(3))
    left = group_service.product(group_service.product(g, h), k)
    right = group_service.product(g, group_service.product(h, k))
    return float(np.max(np.abs(left.log - right.log)))


def step_two_bch(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    """BCH against X + Y + [X, Y] / 2 (step-2 algebras only)."""
    x = rng.standard_normal(algebra.n)
    y = rng.standard_normal(algebra.n)
    expected = x + y + 0.5 * algebra.bracket(x, y)
    return float(np.max(np.abs(algebra.bch(x, y) - expected)))


def dilation_homogeneity(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    lam = float(rng.uniform(0.1, 3.0))
    g = group_service.random_element(algebra, rng)
    h = group_service.random_element(algebra, rng)
    left = group_service.dilate(lam, group_service.product(g, h))
    right = group_service.product(group_service.dilate(lam, g), group_service.dilate(lam, h))
    norm_gap = abs(group_service.homogeneous_norm(group_service.dilate(lam, g)) - lam * group_service.homogeneous_norm(g))
    return max(float(np.max(np.abs(left.log - right.log))) / max(1.0, lam**algebra.s), norm_gap / max(1.0, lam))


def _random_curve(algebra: StratifiedAlgebra, rng: np.random.Generator) -> HorizontalPath:
    return curve_service.random_arclength_path(algebra, rng, n_pieces=5, random_start=True)


def _sorted_times(rng: np.random.Generator, lo: float, hi: float, count: int) -> List[float]:
    return sorted(float(t) for t in rng.uniform(lo, hi, count))


def displacement_routes(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    """Displacement of one device: direct endpoint against the conjugated commutator, and its layer."""
    p = _random_curve(algebra, rng)
    s, s2 = _sorted_times(rng, p.a, p.b, 2)
    j = int(rng.integers(1, algebra.s)) if algebra.s > 1 else 1
    y = group_service.random_layer_vector(algebra, rng, j, scale=0.5)
    dis = surgery_service.displacement(p, s, s2, y)
    return max(dis.formula_gap, _layer_residual(algebra, dis.value.log, j + 1))


def iterated_displacement(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    """Several devices with targets in one layer: product formula and the next-layer prediction."""
    p = _random_curve(algebra, rng)
    times = _sorted_times(rng, p.a, p.b, 2 * algebra.r)
    j = int(rng.integers(1, algebra.s)) if algebra.s > 1 else 1
    devices = [
        ((times[2 * i], times[2 * i + 1]), group_service.random_layer_vector(algebra, rng, j, scale=0.5))
        for i in range(algebra.r)
    ]
    result = surgery_service.dev_iter(p, devices)
    return max(result.displacement.formula_gap, result.predicted_gap)


def iterated_displacement_sym(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    """Symmetric devices on [-T, T]: product formula, next-layer prediction and interval offsets.

    After recentering each device moves later intervals by its connector length only.
    """
    p = curve_service.recenter(_random_curve(algebra, rng))
    times = _sorted_times(rng, p.a, p.b, 2 * algebra.r)
    j = int(rng.integers(1, algebra.s)) if algebra.s > 1 else 1
    devices = [
        ((times[2 * i], times[2 * i + 1]), group_service.random_layer_vector(algebra, rng, j, scale=0.5))
        for i in range(algebra.r)
    ]
    result = surgery_service.dev_iter_sym(p, devices)
    offsets = np.cumsum([0.0] + [c.path.duration for c in result.connectors[:-1]])
    offset_gap = max(
        abs(shifted[0] - interval[0] - offset)
        for shifted, (interval, _), offset in zip(result.shifted_intervals, devices, offsets)
    )
    return max(result.displacement.formula_gap, result.predicted_gap, offset_gap)


def cut_projection(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    """The cut keeps the projected final point: gamma(b)^-1 cut(end) lies in G_2."""
    p = _random_curve(algebra, rng)
    s, s2 = _sorted_times(rng, p.a, p.b, 2)
    after = surgery_service.cut(p, s, s2)
    return _layer_residual(algebra, algebra.bch(-p.end.log, after.end.log), 2)


def cut_gain(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    """Shortfall of the cut gain below (|J| / 2) exc^2 (zero when the bound holds)."""
    p = _random_curve(algebra, rng)
    s, s2 = _sorted_times(rng, p.a, p.b, 2)
    report = surgery_service.cut_gain_bound(p, s, s2)
    return max(0.0, report.bound - report.gain)


def connector_contract(algebra: StratifiedAlgebra, rng: np.random.Generator) -> float:
    """Connector endpoint residual and exact length scaling under dilation."""
    target = group_service.random_element(algebra, rng).log
    lam = float(rng.uniform(0.1, 3.0))
    connector = surgery_service.connect_to(algebra, target)
    dilated = surgery_service.connect_to(algebra, algebra.dilate(lam, target))
    scaling = abs(dilated.length - lam * connector.length) / max(1.0, lam * connector.length)
    return max(connector.residual_norm, scaling)


SUITES: Dict[str, CaseCheck] = {
    "pi_homomorphism": pi_homomorphism,
    "conjugation_projection": conjugation_projection,
    "commutator_layer": commutator_layer,
    "associativity": associativity,
    "step_two_bch": step_two_bch,
    "dilation_homogeneity": dilation_homogeneity,
    "displacement_routes": displacement_routes,
    "iterated_displacement": iterated_displacement,
    "iterated_displacement_sym": iterated_displacement_sym,
    "cut_projection": cut_projection,
    "cut_gain": cut_gain,
    "connector_contract": connector_contract,
}

# Suites that only make sense on some algebras
_APPLIES: Dict[str, Callable[[StratifiedAlgebra], bool]] = {
    "step_two_bch": lambda algebra: algebra.s == 2,
    "displacement_routes": lambda algebra: algebra.s >= 2,
    "iterated_displacement": lambda algebra: algebra.s >= 2,
    "iterated_displacement_sym": lambda algebra: algebra.s >= 2,
}


class IdentitySuiteService:
    """Runs the identity fuzz suites.

    Every case draws from its own generator, seeded from a per-suite stream,
    so results do not depend on the thread count.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings if settings is not None else get_settings()

    def run_suite(self, name: str, algebra: StratifiedAlgebra, cases: Optional[int] = None) -> SuiteResult:
        """Run one suite on one algebra.

        Args:
            name: Suite name (a key of SUITES)
            algebra: Algebra to fuzz
            cases: Number of random cases (settings.fuzz_cases when omitted)

        Returns:
            SuiteResult with the largest residual

        Raises:
            KeyError: If the suite is unknown
        """
        check = SUITES[name]
        cases = cases if cases is not None else self.settings.fuzz_cases
        stream = np.random.default_rng([self.settings.seed, sorted(SUITES).index(name)])
        case_seeds = stream.integers(0, 2**63 - 1, size=cases)

        def run_case(seed: int) -> float:
            return check(algebra, np.random.default_rng(int(seed)))

        if self.settings.threads > 1:
            with ThreadPoolExecutor(max_workers=self.settings.threads) as pool:
                residuals = list(pool.map(run_case, case_seeds))
        else:
            residuals = [run_case(seed) for seed in case_seeds]

        worst = float(max(residuals, default=0.0))
        passed = worst <= self.settings.tolerance
        log = logger.info if passed else logger.error
        log(f"Suite {name} on {algebra.name}: {cases} cases, max residual {worst:.3e}")
        return SuiteResult(
            suite=name,
            algebra=algebra.name,
            cases=cases,
            max_residual=worst,
            tolerance=self.settings.tolerance,
            passed=passed,
        )

    def run(
        self,
        algebras: Sequence[StratifiedAlgebra],
        suites: Optional[Sequence[str]] = None,
        cases: Optional[int] = None,
    ) -> SuiteReport:
        """Run every applicable suite on every algebra, in a fixed order."""
        names = list(suites) if suites is not None else list(SUITES)
        unknown = [name for name in names if name not in SUITES]
        if unknown:
            raise KeyError(f"unknown identity suites: {', '.join(unknown)}")
        results = [
            self.run_suite(name, algebra, cases)
            for algebra in algebras
            for name in names
            if _APPLIES.get(name, lambda _: True)(algebra)
        ]
        return SuiteReport(
            seed=self.settings.seed,
            threads=self.settings.threads,
            results=results,
            passed=all(result.passed for result in results),
        )

    @staticmethod
    def require_pass(report: SuiteReport) -> None:
        """Raise IdentitySuiteFailure naming the failed suites.

        Raises:
            IdentitySuiteFailure: If any suite failed
        """
        failed = [f"{r.suite}@{r.algebra} ({r.max_residual:.2e})" for r in report.results if not r.passed]
        if failed:
            raise IdentitySuiteFailure(f"identity suites failed: {', '.join(failed)}")
