"""Unit tests for the identity fuzz suites."""

import numpy as np
import pytest

from src.config.settings import Settings
from src.exceptions import IdentitySuiteFailure
from src.models.reports import SuiteReport, SuiteResult
from src.services import identity_suite_service, surgery_service
from src.services.identity_suite_service import SUITES, IdentitySuiteService


@pytest.fixture
def service(settings):
    return IdentitySuiteService(settings)


def _dev_iter_with_doubled_offsets(p, devices):
    """Symmetric devices whose reported intervals use the unprimed 2 * sum(l) offsets."""
    result = surgery_service._iterate(p, devices, symmetric=True)
    offsets = np.cumsum([0.0] + [2.0 * c.path.duration for c in result.connectors[:-1]])
    shifted = [(s + offset, s2 + offset) for ((s, s2), _), offset in zip(devices, offsets)]
    return type(result)(
        path=result.path,
        displacement=result.displacement,
        connectors=result.connectors,
        shifted_intervals=shifted,
        predicted_layer=result.predicted_layer,
        predicted_gap=result.predicted_gap,
    )


class TestCases:
    """Test suite for single identity cases."""

    @pytest.mark.parametrize("name", sorted(set(SUITES) - {"step_two_bch"}))
    def test_case_on_free_algebra(self, name, free23):
        """Test one case of every suite on free(2,3)."""
        rng = np.random.default_rng(3)
        assert SUITES[name](free23, rng) <= 1e-9

    def test_step_two_case(self, heisenberg2, rng):
        """Test the closed-form step-2 BCH."""
        assert identity_suite_service.step_two_bch(heisenberg2, rng) < 1e-12

    def test_cut_gain_case_never_negative(self, heisenberg, rng):
        """Test the cut gain shortfall is clamped at zero."""
        assert identity_suite_service.cut_gain(heisenberg, rng) >= 0.0

    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_iterated_displacement_sym_on_engel(self, engel, seed):
        """Test symmetric iterated devices on random Engel curves."""
        residual = identity_suite_service.iterated_displacement_sym(engel, np.random.default_rng(seed))
        assert residual <= 1e-9

    def test_iterated_displacement_sym_runs_symmetric_devices(self, heisenberg, mocker):
        """Test the symmetric suite applies dev_iter_sym on a symmetric domain."""
        # Setup
        spy = mocker.spy(surgery_service, "dev_iter_sym")

        # Execute
        identity_suite_service.iterated_displacement_sym(heisenberg, np.random.default_rng(11))

        # Verify
        spy.assert_called_once()
        curve = spy.call_args.args[0]
        assert curve.a == pytest.approx(-curve.b)

    def test_iterated_displacement_sym_catches_plain_offsets(self, heisenberg, mocker):
        """Test the suite flags intervals shifted by twice the connector lengths."""
        # Setup
        mocker.patch.object(surgery_service, "dev_iter_sym", side_effect=_dev_iter_with_doubled_offsets)

        # Execute
        residual = identity_suite_service.iterated_displacement_sym(heisenberg, np.random.default_rng(11))

        # Verify
        assert residual > 1e-6


class TestIdentitySuiteService:
    """Test suite for running suites."""

    def test_run_suite(self, service, engel):
        """Test a suite result records cases, algebra and tolerance."""
        # Execute
        result = service.run_suite("associativity", engel, cases=10)

        # Verify
        assert result.cases == 10
        assert result.passed
        assert result.algebra == "engel"
        assert result.tolerance == 1e-9

    def test_default_case_count(self, service, heisenberg):
        """Test the case count defaults to settings.fuzz_cases."""
        assert service.run_suite("pi_homomorphism", heisenberg).cases == 40

    def test_same_seed_same_result(self, settings, free32):
        """Test two runs with one seed agree."""
        first = IdentitySuiteService(settings).run_suite("conjugation_projection", free32, cases=8)
        second = IdentitySuiteService(settings).run_suite("conjugation_projection", free32, cases=8)
        assert first == second

    def test_threads_do_not_change_result(self, free23):
        """Test the pooled run matches the single-thread run."""
        single = IdentitySuiteService(Settings(seed=7, threads=1)).run_suite("commutator_layer", free23, cases=12)
        pooled = IdentitySuiteService(Settings(seed=7, threads=4)).run_suite("commutator_layer", free23, cases=12)
        assert single.max_residual == pooled.max_residual

    def test_applicability(self, service, heisenberg, engel):
        """Test suites are skipped on algebras they do not apply to."""
        # Execute
        report = service.run([heisenberg, engel], suites=["step_two_bch", "displacement_routes"], cases=3)

        # Verify
        pairs = [(r.suite, r.algebra) for r in report.results]
        assert pairs == [
            ("step_two_bch", "heisenberg"),
            ("displacement_routes", "heisenberg"),
            ("displacement_routes", "engel"),
        ]
        assert report.passed
        assert report.seed == 7

    def test_symmetric_suite_in_default_run(self, service, free23):
        """Test the symmetric iterated suite runs by default and passes."""
        report = service.run([free23], cases=5)
        names = [r.suite for r in report.results]
        assert "iterated_displacement_sym" in names
        assert report.passed

    def test_every_suite_on_acceptance_algebra(self, service, any_algebra):
        """Test every applicable suite passes on each acceptance algebra."""
        report = service.run([any_algebra], cases=3)
        assert report.passed, [r for r in report.results if not r.passed]

    def test_unknown_suite(self, service, heisenberg):
        """Test an unknown suite name is a KeyError."""
        with pytest.raises(KeyError, match="jacobi_identity"):
            service.run([heisenberg], suites=["jacobi_identity"])

    def test_failing_case(self, service, engel, mocker):
        """Test a residual above tolerance fails the suite."""
        # Setup
        mocker.patch.dict(SUITES, {"associativity": lambda algebra, rng: 1e-3})

        # Execute
        result = service.run_suite("associativity", engel, cases=5)

        # Verify
        assert not result.passed
        assert result.max_residual == 1e-3


class TestRequirePass:
    """Test suite for turning failed reports into errors."""

    def test_passing_report(self):
        """Test a passing report raises nothing."""
        report = SuiteReport(seed=1, threads=1, results=[], passed=True)
        IdentitySuiteService.require_pass(report)

    def test_failing_report_names_suites(self):
        """Test the error names each failed suite and algebra."""
        # Setup
        bad = SuiteResult(suite="associativity", algebra="engel", cases=5, max_residual=1e-3, tolerance=1e-9, passed=False)
        report = SuiteReport(seed=1, threads=1, results=[bad], passed=False)

        # Execute and verify
        with pytest.raises(IdentitySuiteFailure, match="associativity@engel"):
            IdentitySuiteService.require_pass(report)
