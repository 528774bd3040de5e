"""Unit tests for algebra_service."""

import numpy as np
import pytest

from src.exceptions import AlgebraValidationError, ConfigurationError, DomainError
from src.services import algebra_service


class TestWittDimensions:
    """Test suite for the Moebius function and the Witt formula."""

    @pytest.mark.parametrize("n, expected", [(1, 1), (2, -1), (3, -1), (4, 0), (6, 1), (30, -1), (12, 0)])
    def test_mobius(self, n, expected):
        """Test the Moebius function on squarefree and non-squarefree n."""
        assert algebra_service.mobius(n) == expected

    @pytest.mark.parametrize(
        "r, s, expected",
        [(2, 3, (2, 1, 2)), (3, 2, (3, 3)), (2, 5, (2, 1, 2, 3, 6)), (3, 3, (3, 3, 8))],
    )
    def test_witt_dims(self, r, s, expected):
        """Test free layer dimensions for small ranks and steps."""
        assert algebra_service.witt_dims(r, s) == expected


class TestHallBasis:
    """Test suite for free algebras over the Hall basis."""

    def test_free23_layers_and_labels(self, free23):
        """Test basic commutators of weight <= 3 on two generators."""
        assert free23.layer_dims == (2, 1, 2)
        assert free23.labels == ("X1", "X2", "[X2,X1]", "[[X2,X1],X1]", "[[X2,X1],X2]")

    def test_basic_commutators_are_basis_vectors(self, free23):
        """Test [X2, X1] is the third basis vector and [[X2, X1], X1] the fourth."""
        # Setup
        x1, x2 = free23.basis_vector(0), free23.basis_vector(1)

        # Execute
        x21 = free23.bracket(x2, x1)

        # Verify
        np.testing.assert_allclose(x21, free23.basis_vector(2), atol=1e-12)
        np.testing.assert_allclose(free23.bracket(x21, x1), free23.basis_vector(3), atol=1e-12)
        np.testing.assert_allclose(free23.bracket(x21, x2), free23.basis_vector(4), atol=1e-12)

    def test_hall_basis_size_matches_witt(self):
        """Test the Hall basis has as many elements as the Witt formula predicts."""
        for r, s in [(2, 4), (3, 3), (2, 5)]:
            assert len(algebra_service.hall_basis(r, s)) == sum(algebra_service.witt_dims(r, s))

    @pytest.mark.parametrize("r, s", [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3)])
    def test_free_algebras_validate(self, r, s):
        """Test every supported free algebra passes the structural checks."""
        algebra = algebra_service.free(r, s)
        assert algebra_service.validate(algebra) == ["antisymmetry", "grading", "jacobi", "generation"]

    def test_free_dimension_limit(self):
        """Test free algebras past the dimension limit are refused."""
        with pytest.raises(DomainError):
            algebra_service.free(3, 4)

    def test_free_rank_one_rejected(self):
        """Test rank one has no free algebra of higher step."""
        with pytest.raises(DomainError):
            algebra_service.free(1, 3)


class TestBuiltins:
    """Test suite for named algebras."""

    def test_heisenberg_bracket(self, heisenberg):
        """Test [X, Y] = Z and its antisymmetry."""
        x, y, z = (heisenberg.basis_vector(i) for i in range(3))
        np.testing.assert_array_equal(heisenberg.bracket(x, y), z)
        np.testing.assert_array_equal(heisenberg.bracket(y, x), -z)
        assert heisenberg.labels == ("X", "Y", "Z")

    def test_heisenberg2_layers(self, heisenberg2):
        """Test the second Heisenberg algebra has layers (4, 1)."""
        assert heisenberg2.layer_dims == (4, 1)
        assert heisenberg2.name == "heisenberg(2)"

    def test_engel_brackets(self, engel):
        """Test the Engel brackets [X1, X2] = X3 and [X1, X3] = X4."""
        x1, x2, x3, x4 = (engel.basis_vector(i) for i in range(4))
        np.testing.assert_array_equal(engel.bracket(x1, x2), x3)
        np.testing.assert_array_equal(engel.bracket(x1, x3), x4)
        np.testing.assert_array_equal(engel.bracket(x2, x3), np.zeros(4))

    @pytest.mark.parametrize("name, dims", [("Heisenberg", (2, 1)), ("heisenberg(3)", (6, 1)), ("free(2, 3)", (2, 1, 2))])
    def test_builtin_names(self, name, dims):
        """Test names are matched without case or spacing."""
        assert algebra_service.is_builtin_name(name)
        assert algebra_service.builtin(name).layer_dims == dims

    def test_unknown_name(self):
        """Test an unknown name is a configuration error."""
        assert not algebra_service.is_builtin_name("lorentz")
        with pytest.raises(ConfigurationError):
            algebra_service.builtin("lorentz")


class TestTables:
    """Test suite for bracket tables and validation failures."""

    def test_round_trip(self, engel):
        """Test a table rebuilds the same structure constants."""
        rebuilt = algebra_service.from_table(engel.layer_dims, algebra_service.to_table(engel), name="engel")
        np.testing.assert_array_equal(rebuilt.structure, engel.structure)

    def test_to_table_is_one_based(self, heisenberg):
        """Test table indices start at one."""
        assert algebra_service.to_table(heisenberg) == [(1, 2, {3: 1.0})]

    def test_grading_failure(self):
        """Test a bracket landing in the wrong layer fails grading."""
        with pytest.raises(AlgebraValidationError, match="grading"):
            algebra_service.from_table((2, 1), [(1, 2, {1: 1.0})])

    def test_jacobi_failure(self):
        """Test [X1, Y1] = W alone breaks the cyclic sum on X1, X2, X3."""
        brackets = [(1, 2, {6: 1.0}), (1, 3, {5: 1.0}), (2, 3, {4: 1.0}), (1, 4, {7: 1.0})]
        with pytest.raises(AlgebraValidationError, match="Jacobi"):
            algebra_service.from_table((3, 3, 1), brackets)

    def test_generation_failure(self):
        """Test an abelian table is not generated by its first layer."""
        with pytest.raises(AlgebraValidationError, match="generation"):
            algebra_service.from_table((2, 1), [])

    def test_entry_order(self):
        """Test entries must have i < j."""
        with pytest.raises(AlgebraValidationError):
            algebra_service.from_table((2, 1), [(2, 1, {3: 1.0})])

    def test_target_out_of_range(self):
        """Test a target index past the dimension is rejected."""
        with pytest.raises(AlgebraValidationError):
            algebra_service.from_table((2, 1), [(1, 2, {4: 1.0})])

    def test_jacobi_tensor_vanishes(self, free23):
        """Test the Jacobi tensor of free(2,3) is zero."""
        assert np.max(np.abs(algebra_service.jacobi_tensor(free23))) < 1e-12
