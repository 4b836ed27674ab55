import math

import numpy as np
import pytest
import scipy.linalg

from src.core import ProductPoint
from src.errors import SingularJacobian, SingularUpdate, Unsupported
from src.functions import Benoist, Exponential, Linear, PiecewiseConvex, PowerNorm
from src.stability import (
    displacement_ratio,
    jacobian_T_inverse,
    lipschitz_ratio,
    predicted_modulus,
    sherman_morrison_inverse,
    stability_report,
)


def test_jacobian_of_the_inverse_operator(linear, half_square):
    line = jacobian_T_inverse(linear, ProductPoint.of([0.0]))
    assert line == pytest.approx(np.array([[1.0, 1.0], [-1.0, 1.0]]))
    square = jacobian_T_inverse(half_square, ProductPoint.of([0.0], -0.5))
    assert square == pytest.approx(np.diag([0.5, 1.0]))
    plane = jacobian_T_inverse(PowerNorm(0.5, 2.0, 2), ProductPoint.of([0.0, 0.0]))
    assert plane == pytest.approx(np.eye(3))


def test_jacobian_needs_derivatives(cube_root):
    with pytest.raises(Unsupported):
        jacobian_T_inverse(cube_root, ProductPoint.of([0.0]))


def test_sherman_morrison_with_zero_update():
    M = np.array([[2.0, 1.0], [0.5, 3.0]])
    inverse = sherman_morrison_inverse(M, [0.0, 0.0], [1.0, 2.0])
    assert inverse == pytest.approx(scipy.linalg.inv(M))


def test_sherman_morrison_matches_dense_inverse():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 10:
        M = 3.0 * np.eye(3) + 0.5 * rng.normal(size=(3, 3))
        u, v = rng.normal(size=3), rng.normal(size=3)
        if abs(1.0 + v @ scipy.linalg.solve(M, u)) < 0.1:
            continue
        checked += 1
        direct = scipy.linalg.inv(M + np.outer(u, v))
        assert np.max(np.abs(sherman_morrison_inverse(M, u, v) - direct)) <= 1e-10


def test_sherman_morrison_singular_update():
    with pytest.raises(SingularUpdate):
        sherman_morrison_inverse(np.eye(3), [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0])
    with pytest.raises(SingularUpdate):
        sherman_morrison_inverse(np.zeros((2, 2)), [1.0, 0.0], [0.0, 1.0])


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, -3.0])
def test_linear_modulus(alpha):
    report = stability_report(Linear(alpha, 0.0), ProductPoint.of([0.0]))
    assert report.modulus == pytest.approx(1.0 / math.sqrt(1.0 + alpha**2), abs=1e-12)
    assert report.predicted_q_rate == pytest.approx(report.modulus)
    assert report.psd_condition_holds
    assert report.jacobian_nonsingular


def test_unit_slope_modulus():
    report = stability_report(Exponential(0.1, 1.0), ProductPoint.of([math.log(10.0)]))
    assert report.modulus == pytest.approx(0.7071067811, abs=1e-9)


def test_plane_modulus_is_one():
    report = stability_report(PowerNorm(0.5, 2.0, 2), ProductPoint.of([0.0, 0.0]))
    assert report.modulus == pytest.approx(1.0)
    assert report.predicted_q_rate is None


def test_unstable_fixed_point_report(half_square):
    zbar = ProductPoint.of([0.0], -0.5)
    report = stability_report(half_square, zbar)
    assert not report.psd_condition_holds
    assert report.modulus == pytest.approx(2.0)
    assert predicted_modulus(half_square, zbar) == pytest.approx(2.0)
    assert report.to_dict()["psd_condition_holds"] is False


def test_singular_jacobian(half_square):
    zbar = ProductPoint.of([0.0], -1.0)
    with pytest.raises(SingularJacobian):
        stability_report(half_square, zbar)
    report = stability_report(half_square, zbar, raise_on_singular=False)
    assert not report.jacobian_nonsingular
    assert report.modulus == math.inf
    assert report.to_dict()["modulus"] is None


def test_predicted_modulus_at_intersections(linear):
    origin = ProductPoint.of([0.0])
    assert predicted_modulus(linear, origin) == pytest.approx(1.0 / math.sqrt(2.0))
    plane = PowerNorm(1.0, 2.0, 2)
    assert predicted_modulus(plane, ProductPoint.of([0.0, 0.0])) == 1.0
    with pytest.raises(Unsupported):
        predicted_modulus(linear, ProductPoint.of([1.0], 2.0))


def test_sampled_lipschitz_ratio_respects_the_modulus(linear):
    rng = np.random.default_rng(0)
    ratio = lipschitz_ratio(linear, ProductPoint.of([0.0]), 1.0, 20, rng)
    assert ratio <= 1.0 / math.sqrt(2.0) + 1e-6


def test_displacement_near_the_unstable_fixed_point(half_square):
    # T(-eps, -1/2) sits about 2*eps from (0, -1/2)
    ratio = displacement_ratio(half_square, ProductPoint.of([0.0], -0.5), 1e-4)
    assert ratio == pytest.approx(2.0, rel=1e-2)


def test_displacement_at_the_singular_fixed_point(half_square):
    # at rho = -1 the displacement scales like eps^(1/3)
    eps = 1e-4
    ratio = displacement_ratio(half_square, ProductPoint.of([0.0], -1.0), eps)
    assert ratio >= 0.9 / eps ** (2 / 3)


@pytest.mark.parametrize(
    "model, xbar, bound",
    [
        (Exponential(0.1, 1.0), math.log(10.0), 1.0 / math.sqrt(2.0)),
        (Benoist(0.5, 1.0), math.sqrt(0.75), 0.5),
        (PiecewiseConvex(), math.sqrt(2.0), 1.0 / math.sqrt(3.0)),
    ],
    ids=repr,
)
def test_dr_contracts_near_transversal_intersections(model, xbar, bound):
    zbar = ProductPoint.of([xbar])
    assert predicted_modulus(model, zbar) == pytest.approx(bound, abs=1e-6)
    ratio = lipschitz_ratio(model, zbar, 1e-3, 30, np.random.default_rng(3))
    assert ratio < 1.0
    assert ratio <= bound + 0.05
