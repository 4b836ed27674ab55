import math

import numpy as np
import pytest

from src.core import NumericConfig, ProductPoint, reflect_A
from src.dr_engine import (
    FixedPointClass,
    Termination,
    classify_fixed_point,
    dr_inverse,
    dr_step,
    dr_step_candidates,
    iterate,
)
from src.errors import SelectionError, ValidationError
from src.functions import (
    Benoist,
    Exponential,
    Linear,
    PiecewiseConvex,
    PiecewiseNonconvex,
    PowerNorm,
    SignedPower,
)

FAMILIES = [
    Linear(2.0, 1.0),
    Exponential(0.1, 1.0),
    PowerNorm(1.0, 2.0, 1),
    PowerNorm(1.0, 0.5, 1),
    PowerNorm(2.0, 3.0, 1),
    PowerNorm(1.0, 2.0, 2),
    SignedPower(3.0, 1.0 / 3.0),
    SignedPower(1.0 / 3.0, 3.0),
    Benoist(0.5, 1.0),
    PiecewiseNonconvex(2.0),
    PiecewiseConvex(),
]


def test_unstable_fixed_point_is_fixed(half_square):
    z = dr_step(half_square, ProductPoint.of([0.0], -0.5))
    assert z.isclose(ProductPoint.of([0.0], -0.5), 1e-10)


def test_intersection_points_are_fixed(exponential, ln10_point):
    assert dr_step(exponential, ln10_point).isclose(ln10_point, 1e-9)


def test_first_exponential_steps_follow_the_level_set_picture(exponential):
    z1 = dr_step(exponential, ProductPoint.of([0.0], 0.0))
    z2 = dr_step(exponential, z1)
    assert float(z1.x[0]) == pytest.approx(0.10, abs=0.02)
    assert z1.rho == pytest.approx(-0.89, abs=0.02)
    assert float(z2.x[0]) == pytest.approx(0.35, abs=0.02)
    assert z2.rho == pytest.approx(-1.75, abs=0.02)


def test_dr_inverse_undoes_a_step(linear):
    z = dr_inverse(linear, ProductPoint.of([1.0], 1.0))
    assert z.isclose(ProductPoint.of([2.0], 0.0), 1e-15)
    assert dr_step(linear, z).isclose(ProductPoint.of([1.0], 1.0), 1e-9)


def test_dr_inverse_keeps_fixed_points(half_square):
    zbar = ProductPoint.of([0.0], -0.5)
    assert dr_inverse(half_square, zbar).isclose(zbar, 0.0)


def test_iterate_converges_to_ln10(exponential, ln10_point):
    traj = iterate(exponential, ProductPoint.of([0.0], 0.0))
    assert traj.termination is Termination.STEP_TOLERANCE
    assert traj.final.isclose(ln10_point, 1e-5)
    assert len(traj.iterates) == traj.iterations + 1 == len(traj.f_values)


def test_iterate_from_a_solution_stops_at_once(linear):
    traj = iterate(linear, ProductPoint.of([0.0], 0.0))
    assert traj.iterations <= 1
    assert traj.final.isclose(ProductPoint.of([0.0], 0.0), 1e-12)


def test_iterate_stop_predicate_is_checked_at_the_start(linear):
    traj = iterate(linear, ProductPoint.of([3.0], 1.0), stop=lambda z: True)
    assert traj.termination is Termination.RESIDUAL_TOLERANCE
    assert traj.iterations == 0


def test_iterate_respects_max_iterations(exponential):
    short = NumericConfig(max_iterations=3)
    traj = iterate(exponential, ProductPoint.of([0.0], 0.0), short)
    assert traj.termination is Termination.MAX_ITERATIONS
    assert traj.iterations == 3


def test_trajectory_frame(linear):
    frame = iterate(linear, ProductPoint.of([5.0], 3.0)).to_frame()
    assert list(frame.columns) == ["n", "x", "rho", "f_x", "step_norm"]
    assert math.isnan(frame["step_norm"].iloc[0])
    assert frame["x"].iloc[0] == 5.0


def test_trajectory_frame_in_the_plane():
    m = PowerNorm(1.0, 2.0, 2)
    short = NumericConfig(max_iterations=5)
    traj = iterate(m, ProductPoint.of([1.0, -1.0], 0.5), short)
    frame = traj.to_frame()
    assert list(frame.columns) == ["n", "x_1", "x_2", "rho", "f_x", "step_norm"]


def test_multivalued_step_and_selection():
    m = PowerNorm(1.0, 2.0, 1)
    z = ProductPoint.of([0.0], -2.0)
    left, right = dr_step_candidates(m, z)
    assert float(left.x[0]) == pytest.approx(-math.sqrt(1.5), abs=1e-8)
    assert dr_step(m, z, selection=1).isclose(right, 1e-12)
    assert right.rho == pytest.approx(-0.5, abs=1e-8)
    with pytest.raises(SelectionError):
        dr_step(m, z, selection=2)


def test_nearest_selection_policy():
    m = PowerNorm(1.0, 2.0, 1)
    z = ProductPoint.of([1e-3], -2.0)
    traj = iterate(m, z, NumericConfig(max_iterations=1), selection_policy="nearest")
    assert float(traj.final.x[0]) > 0
    assert traj.selection_indices == [0]


def test_iterate_rejects_unknown_policy_and_bad_points(linear):
    with pytest.raises(SelectionError):
        iterate(linear, ProductPoint.of([0.0]), selection_policy="random")
    with pytest.raises(ValidationError):
        iterate(linear, ProductPoint.of([0.0, 1.0]))
    with pytest.raises(ValidationError):
        dr_step(linear, ProductPoint.of([math.inf]))


def test_reversed_operator_by_reflection(linear):
    # T_{B,A} = R_A T_{A,B} R_A
    z = ProductPoint.of([2.0], 1.0)
    reversed_step = reflect_A(dr_step(linear, reflect_A(z)))
    assert reversed_step.isclose(ProductPoint.of([1.5], -0.5), 1e-9)


def test_classify_fixed_points(linear, half_square, exponential):
    positive = classify_fixed_point(PowerNorm(1.0, 2.0, 1), ProductPoint.of([0.0], 3.7))
    assert positive.is_fixed
    assert positive.classification is FixedPointClass.CRITICAL_POSITIVE_RHO

    origin = classify_fixed_point(linear, ProductPoint.of([0.0], 0.0))
    assert origin.classification is FixedPointClass.INTERSECTION

    negative = classify_fixed_point(half_square, ProductPoint.of([0.0], -0.5))
    assert negative.is_fixed
    assert negative.classification is FixedPointClass.CRITICAL_NEGATIVE_RHO

    moving = classify_fixed_point(exponential, ProductPoint.of([0.0], 0.0))
    assert not moving.is_fixed
    assert moving.classification is FixedPointClass.NOT_FIXED
    assert moving.residual > 0.5


def test_fixed_point_report_to_dict(linear):
    report = classify_fixed_point(linear, ProductPoint.of([0.0], 0.0)).to_dict()
    assert report["classification"] == "Intersection"
    assert report["point"] == {"x": [0.0], "rho": 0.0}


@pytest.mark.parametrize("model", FAMILIES, ids=repr)
def test_every_known_zero_is_a_fixed_point(model):
    for zero in model.known_zeros:
        zbar = ProductPoint(zero, 0.0)
        assert dr_step(model, zbar).isclose(zbar, 1e-9)


@pytest.mark.parametrize("model", [m for m in FAMILIES if m.dimension == 1], ids=repr)
def test_steps_follow_the_rho_recursion_and_distance_bound(model):
    rng = np.random.default_rng(5)
    lo, hi = model.domain
    cfg = NumericConfig(max_iterations=20)
    for x0, rho0 in rng.uniform(-5.0, 5.0, size=(10, 2)):
        start = ProductPoint.of([min(max(x0, lo), hi)], rho0)
        traj = iterate(model, start, cfg)
        for z, z_next in zip(traj.iterates, traj.iterates[1:]):
            x, x_next = float(z.x[0]), float(z_next.x[0])
            f_next = model.evaluate([x_next])
            scale = 1.0 + abs(z.rho) + abs(f_next)
            assert z_next.rho - z.rho == pytest.approx(f_next, abs=1e-12 * scale)
            # (p, f(p)) is no farther from (x, -rho) than (x, f(x))
            fx = model.evaluate([x])
            bound = (fx - f_next) * (fx + f_next + 2.0 * z.rho)
            assert (x - x_next) ** 2 <= bound + 1e-9 * (1.0 + (fx + z.rho) ** 2)
