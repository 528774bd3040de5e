"""Unit tests for surgery_service."""

import logging

import numpy as np
import pytest

from src.config.settings import Settings
from src.exceptions import DomainError
from src.models.surgery import Device
from src.services import curve_service, surgery_service
from src.services.surgery_service import SurgeryService


class TestCut:
    """Test suite for cuts and the gain bound."""

    def test_corner_gain(self, corner):
        """Test the cut of the whole corner gains 2 - sqrt(2) against a bound of 1/2."""
        # Execute
        report = surgery_service.cut_gain_bound(corner, 0.0, 2.0)

        # Verify
        assert report.gain == pytest.approx(2.0 - np.sqrt(2.0))
        assert report.excess == pytest.approx(np.sqrt(0.5))
        assert report.bound == pytest.approx(0.5)
        assert report.holds

    def test_cut_keeps_endpoints(self, corner):
        """Test a cut keeps the start point and the projected final point."""
        # Execute
        after = surgery_service.cut(corner, 0.5, 1.5)

        # Verify
        np.testing.assert_allclose(after.start.log, corner.start.log)
        np.testing.assert_allclose(curve_service.projection_at(after, after.b), [1.0, 1.0])
        assert after.length == pytest.approx(1.0 + np.sqrt(0.5))

    def test_cut_of_line_is_free(self, line):
        """Test cutting a straight line gains nothing."""
        report = surgery_service.cut_gain_bound(line, 0.5, 1.5)
        assert report.gain == pytest.approx(0.0, abs=1e-15)
        assert report.bound == 0.0
        assert report.holds

    def test_cut_bound_on_zigzag(self, zigzag):
        """Test the gain bound on several cut intervals of the zig-zag."""
        for s, s2 in [(0.0, 2.0), (0.3, 1.1), (0.6, 1.9)]:
            assert surgery_service.cut_gain_bound(zigzag, s, s2).holds

    def test_cut_sym_recenters(self, corner):
        """Test the symmetric cut returns a curve on a symmetric domain."""
        after = surgery_service.cut_sym(corner, 0.0, 2.0)
        assert curve_service.is_symmetric(after)
        assert after.duration == pytest.approx(np.sqrt(2.0))

    @pytest.mark.parametrize("s, s2", [(1.0, 1.0), (1.5, 0.5), (-1.0, 1.0)])
    def test_bad_intervals(self, corner, s, s2):
        """Test empty, reversed and out-of-domain cut intervals are rejected."""
        with pytest.raises(DomainError):
            surgery_service.cut(corner, s, s2)


class TestConnectors:
    """Test suite for connectors to target points."""

    @pytest.mark.parametrize("c", [1.0, 0.25, 4.0])
    def test_heisenberg_center(self, heisenberg, c):
        """Test cZ is reached by a commutator loop of length 4 sqrt(c)."""
        # Execute
        connector = surgery_service.connect_to(heisenberg, [0.0, 0.0, c])

        # Verify
        assert connector.length == pytest.approx(4.0 * np.sqrt(c))
        assert connector.constant == pytest.approx(4.0)
        assert connector.residual_norm < 1e-12
        assert connector.path.is_arclength

    def test_first_layer_target_is_segment(self, heisenberg):
        """Test a first-layer target is reached by a single segment."""
        connector = surgery_service.connect_to(heisenberg, [3.0, 4.0, 0.0])
        assert connector.path.pieces == 1
        assert connector.length == pytest.approx(5.0)

    def test_zero_target(self, free23):
        """Test the identity is reached by the empty path."""
        connector = surgery_service.connect_to(free23, free23.zero())
        assert connector.path.is_empty
        assert connector.length == 0.0
        assert connector.constant == 0.0

    def test_every_algebra_reaches_random_targets(self, any_algebra, rng):
        """Test random targets are reached on every acceptance algebra."""
        for _ in range(3):
            target = rng.standard_normal(any_algebra.n)
            connector = surgery_service.connect_to(any_algebra, target)
            assert connector.residual_norm < 1e-9

    @pytest.mark.parametrize("index", [2, 3])
    def test_engel_upper_layers(self, engel, index):
        """Test X3 and X4 of the Engel algebra are reached exactly."""
        # Execute
        connector = surgery_service.connect_to(engel, engel.basis_vector(index))

        # Verify
        assert connector.residual_norm < 1e-10
        assert connector.length > 0.0
        assert connector.path.is_arclength

    @pytest.mark.parametrize("index", [2, 3, 4])
    def test_free_step_three_basis(self, free23, index):
        """Test every layer-2 and layer-3 basis vector of free(2,3) is reached."""
        connector = surgery_service.connect_to(free23, free23.basis_vector(index))
        assert connector.residual_norm < 1e-10
        assert connector.length > 0.0

    @pytest.mark.parametrize("name", ["engel", "free23"])
    def test_step_three_random_targets(self, name, request, rng):
        """Test twenty random targets on each step-3 algebra."""
        # Setup
        algebra = request.getfixturevalue(name)

        # Execute
        residuals = [
            surgery_service.connect_to(algebra, rng.standard_normal(algebra.n)).residual_norm for _ in range(20)
        ]

        # Verify
        assert max(residuals) < 1e-9

    @pytest.mark.parametrize("lam", [0.3, 2.5])
    def test_step_three_dilation_scales_length(self, engel, rng, lam):
        """Test the connector to a dilated target is the dilated connector."""
        # Setup
        target = rng.standard_normal(engel.n)

        # Execute
        base = surgery_service.connect_to(engel, target)
        dilated = surgery_service.connect_to(engel, engel.dilate(lam, target))

        # Verify
        assert dilated.length == pytest.approx(lam * base.length, rel=1e-9)
        assert dilated.constant == pytest.approx(base.constant, rel=1e-9)

    def test_decompose_layer(self, free23):
        """Test a layer-3 target splits into brackets of generators with layer-2 elements."""
        # Setup
        target = free23.basis_vector(3) - 2.0 * free23.basis_vector(4)

        # Execute
        terms = surgery_service.decompose_layer(free23, target, 3)

        # Verify
        total = sum(free23.bracket(free23.basis_vector(m), w) for m, w in terms)
        np.testing.assert_allclose(total, target, atol=1e-12)

    def test_common_layer(self, free23):
        """Test the common layer of targets, zero for mixed or empty lists."""
        z = free23.basis_vector(2)
        assert surgery_service.common_layer(free23, [z, 2.0 * z, free23.zero()]) == 2
        assert surgery_service.common_layer(free23, [z, free23.basis_vector(0)]) == 0
        assert surgery_service.common_layer(free23, []) == 0


class TestDevices:
    """Test suite for single and iterated correction devices."""

    def test_dev_length(self, corner):
        """Test a device adds twice the connector length."""
        target = np.array([0.0, 0.0, 0.25])
        corrected = surgery_service.dev(corner, 0.5, 1.5, target)
        assert corrected.length == pytest.approx(2.0 + 2.0 * 4.0 * 0.5)

    def test_displacement_formula(self, zigzag):
        """Test the direct displacement agrees with the commutator formula."""
        d = surgery_service.displacement(zigzag, 0.5, 1.2, [0.3, -0.2, 0.0])
        assert d.formula_gap < 1e-12
        assert d.lowest_layer == 2

    def test_central_target_does_not_move_endpoint(self, corner):
        """Test a device with a central target leaves the final point in place."""
        d = surgery_service.displacement(corner, 0.5, 1.5, [0.0, 0.0, 1.0])
        np.testing.assert_allclose(d.value.log, np.zeros(3), atol=1e-12)
        assert d.lowest_layer == 3

    def test_displacement_in_free_algebra(self, free23, rng):
        """Test a layer-2 device on free(2,3) only moves layer 3."""
        # Setup
        p = curve_service.random_arclength_path(free23, rng, n_pieces=5, min_duration=0.4, max_duration=0.6)
        target = np.zeros(free23.n)
        target[2] = 0.4

        # Execute
        d = surgery_service.displacement(p, p.a + 0.5, p.b - 0.5, target)

        # Verify
        assert d.formula_gap < 1e-10
        assert d.lowest_layer >= 3

    def test_iterated_prediction(self, corner):
        """Test [0.1 Y, 0.5 X] + [0.2 X, 0.6 Y] = 0.07 Z."""
        # Execute
        result = surgery_service.dev_iter(
            corner, [((0.0, 0.5), [0.0, 0.1, 0.0]), ((1.2, 1.8), [0.2, 0.0, 0.0])]
        )

        # Verify
        np.testing.assert_allclose(result.predicted_layer, [0.0, 0.0, 0.07], atol=1e-15)
        assert result.displacement.value.log[2] == pytest.approx(0.07)
        assert result.predicted_gap < 1e-12
        assert result.displacement.formula_gap < 1e-12

    def test_iterated_offsets(self, corner):
        """Test later intervals shift by twice the earlier connector lengths."""
        result = surgery_service.dev_iter(
            corner, [Device((0.0, 0.5), np.array([0.0, 0.1, 0.0])), Device((1.2, 1.8), np.array([0.2, 0.0, 0.0]))]
        )
        assert result.shifted_intervals[0] == (0.0, 0.5)
        assert result.shifted_intervals[1] == pytest.approx((1.2 + 0.2, 1.8 + 0.2))

    def test_iterated_symmetric(self, corner):
        """Test symmetric devices keep the domain symmetric and give the same displacement."""
        # Setup
        centered = curve_service.recenter(corner)

        # Execute
        result = surgery_service.dev_iter_sym(
            centered, [((-1.0, -0.5), [0.0, 0.1, 0.0]), ((0.2, 0.8), [0.2, 0.0, 0.0])]
        )

        # Verify
        assert curve_service.is_symmetric(result.path)
        assert result.displacement.value.log[2] == pytest.approx(0.07)
        assert result.predicted_gap < 1e-12

    def test_symmetric_offsets_are_single_lengths(self, corner):
        """Test symmetric devices shift later intervals by the connector lengths, not twice them."""
        # Setup
        centered = curve_service.recenter(corner)
        devices = [((-1.0, -0.5), [0.0, 0.1, 0.0]), ((0.2, 0.8), [0.2, 0.0, 0.0])]

        # Execute
        result = surgery_service.dev_iter_sym(centered, devices)

        # Verify
        first = result.connectors[0].path.duration
        assert first == pytest.approx(0.1)
        assert result.shifted_intervals[0] == (-1.0, -0.5)
        assert result.shifted_intervals[1] == pytest.approx((0.2 + first, 0.8 + first))

    def test_symmetric_and_plain_offsets_differ_by_factor_two(self, corner):
        """Test the same devices shift by sum(l) symmetrically and 2 sum(l) otherwise."""
        # Setup
        devices = [((0.1, 0.3), [0.0, 0.05, 0.0]), ((0.5, 0.7), [0.0, 0.1, 0.0]), ((1.2, 1.8), [0.2, 0.0, 0.0])]
        centered = curve_service.recenter(corner)
        shifted = [((s - 1.0, s2 - 1.0), y) for (s, s2), y in devices]

        # Execute
        plain = surgery_service.dev_iter(corner, devices)
        symmetric = surgery_service.dev_iter_sym(centered, shifted)

        # Verify
        lengths = np.cumsum([0.0] + [c.path.duration for c in plain.connectors[:-1]])
        for i, total in enumerate(lengths):
            assert plain.shifted_intervals[i][0] - devices[i][0][0] == pytest.approx(2.0 * total)
            assert symmetric.shifted_intervals[i][0] - shifted[i][0][0] == pytest.approx(total)
        np.testing.assert_allclose(plain.displacement.value.log, symmetric.displacement.value.log, atol=1e-12)

    def test_symmetric_needs_symmetric_domain(self, corner):
        """Test symmetric devices reject a curve on [0, 2]."""
        with pytest.raises(DomainError, match="symmetric"):
            surgery_service.dev_iter_sym(corner, [((0.0, 0.5), [0.0, 0.1, 0.0])])

    def test_overlapping_devices(self, corner):
        """Test overlapping device intervals are rejected."""
        with pytest.raises(DomainError, match="overlap"):
            surgery_service.dev_iter(
                corner, [((0.0, 1.0), [0.0, 0.1, 0.0]), ((0.5, 1.5), [0.1, 0.0, 0.0])]
            )

    def test_no_devices(self, corner):
        """Test an empty device list leaves the curve unchanged."""
        result = surgery_service.dev_iter(corner, [])
        np.testing.assert_allclose(result.displacement.value.log, np.zeros(3), atol=1e-15)
        assert result.path.length == corner.length


class TestSurgeryService:
    """Test suite for the settings-backed surgery service."""

    @pytest.fixture
    def service(self, settings):
        return SurgeryService(settings)

    def test_cut_dispatches_on_mode(self, service, corner):
        """Test the service cut matches cut and cut_sym."""
        # Execute
        plain = service.cut(corner, 0.0, 2.0)
        symmetric = service.cut(corner, 0.0, 2.0, symmetric=True)

        # Verify
        assert plain.length == pytest.approx(surgery_service.cut(corner, 0.0, 2.0).length)
        assert plain.a == 0.0
        assert curve_service.is_symmetric(symmetric)

    def test_connect_to_on_engel(self, service, engel):
        """Test connectors through the service reach the Engel top layer."""
        connector = service.connect_to(engel, engel.basis_vector(3))
        assert connector.residual_norm < 1e-10

    def test_iterate_dispatches_on_mode(self, service, corner):
        """Test iterate matches dev_iter and dev_iter_sym."""
        # Setup
        devices = [((0.0, 0.5), [0.0, 0.1, 0.0]), ((1.2, 1.8), [0.2, 0.0, 0.0])]
        centered = curve_service.recenter(corner)
        shifted = [((s - 1.0, s2 - 1.0), y) for (s, s2), y in devices]

        # Execute
        plain = service.iterate(corner, devices)
        symmetric = service.iterate(centered, shifted, symmetric=True)

        # Verify
        assert plain.shifted_intervals == surgery_service.dev_iter(corner, devices).shifted_intervals
        assert curve_service.is_symmetric(symmetric.path)

    def test_no_warning_when_formula_agrees(self, service, zigzag, caplog):
        """Test an exact displacement logs nothing."""
        with caplog.at_level(logging.WARNING):
            service.displacement(zigzag, 0.5, 1.2, [0.3, -0.2, 0.0])
        assert not caplog.records

    def test_warns_on_missed_connector(self, corner, heisenberg, mocker, caplog):
        """Test a connector residual above the settings tolerance is logged."""
        # Setup
        service = SurgeryService(Settings(tolerance=1e-9))
        real = surgery_service.connect_to(heisenberg, [0.0, 0.0, 1.0])
        missed = mocker.Mock(target=real.target, residual_norm=1e-3)
        mocker.patch.object(surgery_service, "connect_to", return_value=missed)

        # Execute
        with caplog.at_level(logging.WARNING):
            result = service.connect_to(heisenberg, [0.0, 0.0, 1.0])

        # Verify
        assert result is missed
        assert "Connector residual" in caplog.text
