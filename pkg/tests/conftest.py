"""Pytest configuration and fixtures."""

import numpy as np
import pytest

from src.config.settings import Settings
from src.models.algebra import StratifiedAlgebra
from src.models.path import HorizontalPath
from src.services import algebra_service, curve_service


@pytest.fixture(scope="session")
def heisenberg() -> StratifiedAlgebra:
    """First Heisenberg algebra, basis X, Y, Z with [X, Y] = Z."""
    return algebra_service.heisenberg()


@pytest.fixture(scope="session")
def heisenberg2() -> StratifiedAlgebra:
    return algebra_service.heisenberg(2)


@pytest.fixture(scope="session")
def engel() -> StratifiedAlgebra:
    return algebra_service.engel()


@pytest.fixture(scope="session")
def free23() -> StratifiedAlgebra:
    """Free algebra of rank 2 and step 3 (layers 2, 1, 2)."""
    return algebra_service.free(2, 3)


@pytest.fixture(scope="session")
def free32() -> StratifiedAlgebra:
    return algebra_service.free(3, 2)


@pytest.fixture(params=["heisenberg", "heisenberg(2)", "engel", "free(2,3)", "free(3,2)"])
def any_algebra(request) -> StratifiedAlgebra:
    """Each of the acceptance algebras in turn."""
    return algebra_service.builtin(request.param)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator.

    Returns:
        numpy Generator
    """
    return np.random.default_rng(20240611)


@pytest.fixture
def settings() -> Settings:
    """Settings for tests: single thread, fixed seed, small fuzz batches."""
    return Settings(seed=7, threads=1, fuzz_cases=40)


@pytest.fixture
def corner(heisenberg) -> HorizontalPath:
    """H^1 corner on [0, 2]: control X on [0, 1], then Y on [1, 2]."""
    return curve_service.corner(heisenberg)


@pytest.fixture
def line(heisenberg) -> HorizontalPath:
    """Unit-speed line along X on [0, 2]."""
    return curve_service.segment(heisenberg, [2.0, 0.0])


@pytest.fixture
def circle(heisenberg) -> HorizontalPath:
    """Arclength lift of the unit circle on [-pi, pi]."""
    return curve_service.circle_lift(heisenberg, n_pieces=4096)


@pytest.fixture
def zigzag(heisenberg) -> HorizontalPath:
    controls = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, 1.0]]
    return curve_service.zigzag(heisenberg, controls, piece_duration=0.5)
