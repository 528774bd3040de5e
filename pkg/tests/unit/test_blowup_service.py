"""Unit tests for blowup_service."""

import numpy as np
import pytest

from src.config.settings import Settings
from src.exceptions import DomainError
from src.models.path import Window
from src.services import blowup_service, curve_service
from src.services.blowup_service import BlowupService

SCALES = [0.5, 0.25, 0.125, 0.0625]


class TestDilateReparam:
    """Test suite for the rescaled curve around an anchor."""

    def test_corner_at_kink(self, corner):
        """Test the corner rescaled at its kink runs from -X to +Y."""
        # Execute
        rescaled = blowup_service.dilate_reparam(corner, 0.5, 1.0)

        # Verify
        assert (rescaled.a, rescaled.b) == (-1.0, 1.0)
        assert rescaled.is_arclength
        np.testing.assert_allclose(rescaled.end.log, [0.0, 1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(rescaled.start.log, [-1.0, 0.0, 0.0], atol=1e-15)

    def test_one_sided(self, corner):
        """Test the one-sided window starts at the identity."""
        rescaled = blowup_service.dilate_reparam(corner, 0.25, 1.0, window_factor=2.0, one_sided=True)
        assert (rescaled.a, rescaled.b) == (0.0, 2.0)
        assert rescaled.start.is_identity

    def test_clipped_at_domain_end(self, corner, caplog):
        """Test a window past the end of the domain is clipped with a warning."""
        rescaled = blowup_service.dilate_reparam(corner, 0.5, 1.8)
        assert rescaled.b == pytest.approx(0.4)
        assert "clipped" in caplog.text

    @pytest.mark.parametrize("lam, factor", [(0.0, 1.0), (-1.0, 1.0), (0.5, 0.0)])
    def test_rejects_nonpositive(self, corner, lam, factor):
        """Test nonpositive scales and window factors are rejected."""
        with pytest.raises(DomainError):
            blowup_service.dilate_reparam(corner, lam, 1.0, window_factor=factor)


class TestMeanControl:
    """Test suite for the mean control direction and its residual."""

    def test_corner(self, corner):
        """Test the corner averages to the diagonal with residual sqrt(2 - sqrt(2))."""
        v, residual = blowup_service.mean_control(corner, Window.interval(0.0, 2.0))
        np.testing.assert_allclose(v, [np.sqrt(0.5), np.sqrt(0.5)])
        assert residual == pytest.approx(np.sqrt(2.0 - np.sqrt(2.0)))

    def test_closed_zigzag_has_no_mean_direction(self, heisenberg):
        """Test controls that cancel give the zero direction and residual 1."""
        # Setup
        back_and_forth = curve_service.zigzag(heisenberg, [[1.0, 0.0], [-1.0, 0.0]])

        # Execute
        v, residual = blowup_service.mean_control(back_and_forth, Window.interval(0.0, 2.0))

        # Verify
        assert v.tolist() == [0.0, 0.0]
        assert residual == pytest.approx(1.0)


class TestExcessProfile:
    """Test suite for blow-up profiles of circles, corners and lines."""

    def test_circle(self, circle):
        """Test excess and residual both behave like lam / sqrt(3) on the circle."""
        # Execute
        profile = blowup_service.excess_profile(circle, 0.0, SCALES, tolerance=0.05)

        # Verify
        for row in profile.rows:
            assert row.excess == pytest.approx(row.scale / np.sqrt(3.0), rel=3e-2)
            assert row.residual == pytest.approx(row.scale / np.sqrt(3.0), rel=3e-2)
        assert profile.excess_monotone
        assert profile.residual_monotone
        assert profile.consistency_gap < 1e-10
        assert profile.tangent_detected
        np.testing.assert_allclose(profile.tangent_direction, [1.0, 0.0], atol=1e-6)

    def test_circle_default_tolerance(self, circle):
        """Test the default threshold is too strict for these scales."""
        assert not blowup_service.excess_profile(circle, 0.0, SCALES).tangent_detected

    def test_corner(self, corner):
        """Test the corner keeps its excess and residual at every scale."""
        # Execute
        profile = blowup_service.excess_profile(corner, 1.0, [1.0, 0.5, 0.25])

        # Verify
        for row in profile.rows:
            assert row.excess == pytest.approx(np.sqrt(0.5))
            assert row.residual == pytest.approx(np.sqrt(2.0 - np.sqrt(2.0)))
        assert not profile.tangent_detected
        assert profile.tangent_direction is None

    def test_line(self, line):
        """Test a line is its own tangent."""
        direction, residuals = blowup_service.tangent_line_estimate(line, 1.0, [0.5, 0.25])
        assert residuals == [0.0, 0.0]
        assert direction == [1.0, 0.0]

    def test_ratio_column(self, circle):
        """Test the ratio column divides by sqrt(lam / lam_0)."""
        profile = blowup_service.excess_profile(circle, 0.0, SCALES)
        first = profile.rows[0]
        assert first.ratio_excess == first.excess
        assert profile.rows[1].ratio_excess == pytest.approx(profile.rows[1].excess / np.sqrt(0.5))

    def test_threads_keep_order(self, circle):
        """Test pooled rows match the sequential rows in input order."""
        single = blowup_service.excess_profile(circle, 0.0, SCALES)
        pooled = blowup_service.excess_profile(circle, 0.0, SCALES, threads=3)
        assert [row.scale for row in pooled.rows] == SCALES
        assert pooled.rows == single.rows

    @pytest.mark.parametrize("scales", [[], [0.5, -0.25], [0.25, 0.5], [0.5, 0.5]])
    def test_bad_scales(self, circle, scales):
        """Test empty, negative, increasing and repeated scales are rejected."""
        with pytest.raises(DomainError):
            blowup_service.excess_profile(circle, 0.0, scales)


class TestBlowupService:
    """Test suite for the settings-backed blow-up service."""

    @pytest.fixture
    def service(self):
        return BlowupService(Settings(seed=99, threads=3))

    def test_profile_records_seed(self, service, corner):
        """Test profiles carry the seed of the run."""
        # Execute
        profile = service.profile(corner, 1.0, [1.0, 0.5])

        # Verify
        assert profile.seed == 99
        assert not profile.tangent_detected

    def test_profile_uses_settings_threads(self, service, circle, mocker):
        """Test the worker thread count comes from settings and rows are unchanged."""
        # Setup
        spy = mocker.spy(blowup_service, "excess_profile")

        # Execute
        profile = service.profile(circle, 0.0, SCALES)

        # Verify
        assert spy.call_args.kwargs["threads"] == 3
        assert profile.rows == blowup_service.excess_profile(circle, 0.0, SCALES).rows

    def test_tangent_line(self, service, line):
        """Test the service tangent line on a line."""
        direction, residuals = service.tangent_line(line, 1.0, [0.5, 0.25])
        assert direction == [1.0, 0.0]
        assert residuals == [0.0, 0.0]
