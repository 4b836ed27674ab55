import math

import pytest
from hypothesis import settings

from src.core import NumericConfig, ProductPoint
from src.functions import Exponential, Linear, PiecewiseConvex, PowerNorm, SignedPower

# projections cost milliseconds each; keep property tests short and deadline-free
settings.register_profile("fast", max_examples=25, deadline=None)
settings.load_profile("fast")


@pytest.fixture
def linear():
    return Linear(1.0, 0.0)


@pytest.fixture
def exponential():
    return Exponential(0.1, 1.0)


@pytest.fixture
def half_square():
    """f(x) = x^2 / 2."""
    return PowerNorm(0.5, 2.0, 1)


@pytest.fixture
def cube_root():
    """f(x) = 3 * cbrt(x)."""
    return SignedPower(3.0, 1.0 / 3.0)


@pytest.fixture
def piecewise_convex():
    return PiecewiseConvex()


@pytest.fixture
def tight_config():
    return NumericConfig(
        step_tolerance=1e-12, residual_tolerance=1e-12, max_iterations=2000
    )


@pytest.fixture
def ln10_point():
    return ProductPoint.of([math.log(10.0)], 0.0)
