import math

import pytest

from src.baselines import (
    Verdict,
    map_stall_threshold,
    map_stalls,
    map_step,
    newton_step,
    run_comparison,
    run_map,
    run_newton,
)
from src.core import NumericConfig, ProductPoint
from src.dr_engine import Termination
from src.errors import DerivativeSingular, ValidationError
from src.functions import Benoist, Exponential, Linear, PiecewiseConvex, SignedPower


def test_map_step_examples(piecewise_convex, linear, exponential, ln10_point):
    trapped = map_step(piecewise_convex, ProductPoint.of([-5.0], 0.0))
    assert trapped.isclose(ProductPoint.of([-5.0], -1.0), 1e-9)
    halfway = map_step(linear, ProductPoint.of([1.0], 0.0))
    assert halfway.isclose(ProductPoint.of([0.5], 0.5), 1e-9)
    assert map_step(exponential, ln10_point).isclose(ln10_point, 1e-9)


def test_newton_step_examples(cube_root):
    assert newton_step(cube_root, [1.0]).tolist() == pytest.approx([-2.0])
    assert newton_step(Linear(2.0, 1.0), [0.5]).tolist() == pytest.approx([0.5])


def test_newton_step_undefined(piecewise_convex, cube_root):
    with pytest.raises(DerivativeSingular):
        newton_step(piecewise_convex, [-1.0])
    with pytest.raises(DerivativeSingular):
        newton_step(cube_root, [0.0])


def test_success_of_dr_where_map_and_newton_fail(piecewise_convex):
    report = run_comparison(piecewise_convex, ProductPoint.of([-5.0], 0.0))
    assert report.verdicts == {
        "DR": Verdict.CONVERGED,
        "MAP": Verdict.STALLED,
        "Newton": Verdict.UNDEFINED,
    }
    assert float(report.dr.final.x[0]) == pytest.approx(math.sqrt(2.0), abs=1e-5)
    assert report.map.final.isclose(ProductPoint.of([-5.0], -1.0), 1e-9)
    assert report.newton.iterations == 0


def test_newton_blows_up_on_the_cube_root(cube_root):
    report = run_comparison(cube_root, ProductPoint.of([1.0], 0.0))
    assert report.verdicts["DR"] is Verdict.CONVERGED
    assert report.dr.final.isclose(ProductPoint.of([0.0], 0.0), 1e-5)
    assert report.verdicts["Newton"] is Verdict.DIVERGED
    xs = [float(z.x[0]) for z in report.newton.iterates[:6]]
    assert xs == pytest.approx([1.0, -2.0, 4.0, -8.0, 16.0, -32.0])


def test_all_methods_solve_a_linear_equation(linear):
    report = run_comparison(linear, ProductPoint.of([0.5], 0.0))
    assert set(report.verdicts.values()) == {Verdict.CONVERGED}
    rows = report.rows()
    assert [r[0] for r in rows] == ["DR", "MAP", "Newton"]
    assert all(r[1] == "ConvergedToSolution" for r in rows)
    assert report.to_dict()["verdicts"]["Newton"] == "ConvergedToSolution"


def test_map_without_convergence(exponential):
    short = NumericConfig(max_iterations=2)
    traj, verdict = run_map(exponential, ProductPoint.of([0.0], 0.0), short)
    assert verdict is Verdict.NOT_CONVERGED
    assert traj.method == "MAP"
    assert traj.iterations == 2


def test_newton_from_outside_the_domain():
    traj, verdict = run_newton(Benoist(0.5, 1.0), [2.0])
    assert verdict is Verdict.UNDEFINED
    assert traj.termination is Termination.UNDEFINED_STEP


def test_map_trap_threshold(piecewise_convex):
    assert map_stalls(piecewise_convex, -3.0)
    assert not map_stalls(piecewise_convex, 1.0)
    threshold = map_stall_threshold(piecewise_convex, -5.0, 1.0)
    assert threshold == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(ValidationError):
        map_stall_threshold(piecewise_convex, 0.5, 1.0)


@pytest.mark.parametrize("p, steps", [(1.0 / 3.0, 30), (0.25, 20)])
def test_newton_grows_geometrically_on_signed_powers(p, steps):
    m = SignedPower(1.0, p)
    factor = 1.0 - 1.0 / p
    traj, _ = run_newton(m, [1.0], NumericConfig(max_iterations=steps))
    assert len(traj.iterates) == steps + 1
    for n, z in enumerate(traj.iterates):
        assert float(z.x[0]) == pytest.approx(factor**n, rel=1e-8)


@pytest.mark.parametrize(
    "model, x0",
    [
        (Linear(2.0, 1.0), 3.0),
        (Exponential(0.1, 1.0), 0.0),
        (PiecewiseConvex(), -5.0),
        (PiecewiseConvex(), -2.0),
    ],
    ids=repr,
)
def test_map_limits_satisfy_the_fixed_point_condition(model, x0):
    traj, verdict = run_map(model, ProductPoint.of([x0], 0.0))
    assert verdict in (Verdict.CONVERGED, Verdict.STALLED)
    z = traj.final
    fx = model.evaluate(z.x)
    slopes = model.symmetric_subdifferential(z.x)
    assert abs(fx) <= 1e-6 or slopes.contains(0.0, 1e-6)
