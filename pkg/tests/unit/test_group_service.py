"""Unit tests for group_service."""

import numpy as np
import pytest

from src.exceptions import DimensionMismatchError, DomainError, IdentitySuiteFailure
from src.models.group import GroupElement
from src.services import group_service


class TestProducts:
    """Test suite for products, inverses and commutators."""

    def test_product_heisenberg(self, heisenberg):
        """Test exp(X) exp(Y) = exp(X + Y + Z / 2)."""
        g = GroupElement(heisenberg, [1.0, 0.0, 0.0])
        h = GroupElement(heisenberg, [0.0, 1.0, 0.0])
        np.testing.assert_allclose(group_service.product(g, h).log, [1.0, 1.0, 0.5])

    def test_multiply_folds_left(self, free23, rng):
        """Test a product of three factors groups from the left."""
        # Setup
        g, h, k = (group_service.random_element(free23, rng) for _ in range(3))

        # Execute
        expected = group_service.product(group_service.product(g, h), k)

        # Verify
        np.testing.assert_allclose(group_service.multiply(g, h, k).log, expected.log, atol=1e-12)

    def test_mixed_algebras_rejected(self, heisenberg, engel):
        """Test elements of two algebras cannot be multiplied."""
        with pytest.raises(DimensionMismatchError):
            group_service.product(GroupElement.identity(heisenberg), GroupElement.identity(engel))

    def test_commutator_of_one_parameter_subgroups(self, heisenberg):
        """Test [exp(aX), exp(bY)] = exp(ab Z)."""
        g = GroupElement(heisenberg, [0.3, 0.0, 0.0])
        h = GroupElement(heisenberg, [0.0, 2.0, 0.0])
        np.testing.assert_allclose(group_service.commutator(g, h).log, [0.0, 0.0, 0.6], atol=1e-15)

    def test_pi_is_homomorphism(self, engel, rng):
        """Test the first-layer projection turns products into sums."""
        g, h = group_service.random_element(engel, rng), group_service.random_element(engel, rng)
        np.testing.assert_allclose(
            group_service.pi(group_service.product(g, h)), group_service.pi(g) + group_service.pi(h), atol=1e-13
        )


class TestConjugation:
    """Test suite for the two conjugation routes."""

    def test_routes_agree(self, free23, rng):
        """Test the BCH route and the adjoint route give the same element."""
        # Setup
        g, h = group_service.random_element(free23, rng), group_service.random_element(free23, rng)

        # Execute
        direct = group_service.conjugate(g, h, cross_check=1e-10)

        # Verify
        np.testing.assert_allclose(direct.log, group_service.conjugate_via_adjoint(g, h).log, atol=1e-10)

    def test_layer_invariance(self, engel, rng):
        """Test conjugation keeps the subgroup and the lowest layer of h."""
        # Setup
        g = group_service.random_element(engel, rng)
        h = group_service.random_element(engel, rng, from_layer=2)

        # Execute
        conj = group_service.conjugate(g, h)

        # Verify
        assert group_service.in_subgroup(conj, 2, tol=1e-12)
        np.testing.assert_allclose(group_service.pi_layer(2, conj), group_service.pi_layer(2, h), atol=1e-12)

    def test_cross_check_failure(self, heisenberg, mocker):
        """Test a disagreeing adjoint route raises."""
        # Setup
        mocker.patch("src.services.group_service.exp_ad", return_value=np.array([9.0, 9.0, 9.0]))
        g = GroupElement(heisenberg, [1.0, 0.0, 0.0])
        h = GroupElement(heisenberg, [0.0, 1.0, 0.0])

        # Execute and verify
        with pytest.raises(IdentitySuiteFailure):
            group_service.conjugate(g, h, cross_check=1e-9)

    def test_exp_ad_heisenberg(self, heisenberg):
        """Test e^{ad X} Y = Y + Z."""
        x, y = heisenberg.basis_vector(0), heisenberg.basis_vector(1)
        np.testing.assert_allclose(group_service.exp_ad(heisenberg, x, y), [0.0, 1.0, 1.0])


class TestNormsAndDilations:
    """Test suite for the homogeneous norm and dilations."""

    def test_homogeneous_norm(self, heisenberg):
        """Test the norm adds |first layer| and |second layer|^(1/2)."""
        assert group_service.homogeneous_norm(GroupElement(heisenberg, [3.0, 4.0, 4.0])) == pytest.approx(7.0)

    def test_norm_is_homogeneous(self, free23, rng):
        """Test the norm scales linearly under dilation."""
        g = group_service.random_element(free23, rng)
        assert group_service.homogeneous_norm(group_service.dilate(0.3, g)) == pytest.approx(
            0.3 * group_service.homogeneous_norm(g), rel=1e-12
        )

    def test_distance_left_invariant(self, engel, rng):
        """Test left translation keeps the distance."""
        # Setup
        g, h, k = (group_service.random_element(engel, rng) for _ in range(3))

        # Execute
        d = group_service.homogeneous_distance(g, h)
        moved = group_service.homogeneous_distance(group_service.product(k, g), group_service.product(k, h))

        # Verify
        assert moved == pytest.approx(d, rel=1e-9)

    def test_in_subgroup_range(self, heisenberg):
        """Test layer indices past s + 1 are rejected."""
        identity = GroupElement.identity(heisenberg)
        assert group_service.in_subgroup(identity, 3)
        with pytest.raises(DomainError):
            group_service.in_subgroup(identity, 4)

    def test_random_layer_vector(self, free23, rng):
        """Test a random layer vector is nonzero and homogeneous."""
        v = group_service.random_layer_vector(free23, rng, 3)
        assert free23.is_homogeneous(v, 3)
        assert np.any(v != 0.0)
