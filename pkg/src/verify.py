"""
End-to-end acceptance suite: rates, comparisons, stability, Lyapunov
certificates, projection oracle and Sherman-Morrison checks, rendered as a
pass/fail table headed by the seed.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize
from tabulate import tabulate

from src.baselines import Verdict as MethodVerdict
from src.baselines import run_comparison, run_newton
from src.basin_scan import CellClass, GridSpec, estimate_rate, scan
from src.core import NumericConfig, ProductPoint
from src.dr_engine import Termination, classify_fixed_point, dr_inverse, iterate
from src.errors import SingularUpdate
from src.functions import (
    Benoist,
    Exponential,
    FunctionModel,
    Linear,
    PiecewiseConvex,
    PiecewiseNonconvex,
    PowerNorm,
    SignedPower,
)
from src.graph_projection import project_graph
from src.lyapunov import Verdict as LyapunovVerdict
from src.lyapunov import check_trajectory
from src.stability import (
    displacement_ratio,
    jacobian_T_inverse,
    sherman_morrison_inverse,
    stability_report,
)

logger = logging.getLogger(__name__)

TIGHT = NumericConfig(
    step_tolerance=1e-12, residual_tolerance=1e-12, max_iterations=2000
)
RATE_SLACK = 0.02
BENOIST_RADIUS = 0.05
FIGURE_ITERATES = [
    (0.10, -0.89),
    (0.35, -1.75),
    (1.05, -2.46),
    (3.26, -0.85),
    (2.99, 0.14),
]
Start = Callable[[np.random.Generator], ProductPoint]


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class Sizes:
    linear_starts: int
    expo_grid: int
    basin_grid: int
    lyapunov_starts: int
    oracle_instances: int
    oracle_points: int
    sm_instances: int
    benoist_starts: int

    @classmethod
    def for_mode(cls, quick: bool) -> Sizes:
        if quick:
            return cls(
                linear_starts=3,
                expo_grid=5,
                basin_grid=11,
                lyapunov_starts=3,
                oracle_instances=40,
                oracle_points=20001,
                sm_instances=50,
                benoist_starts=2,
            )
        return cls(
            linear_starts=20,
            expo_grid=21,
            basin_grid=101,
            lyapunov_starts=20,
            oracle_instances=500,
            oracle_points=200001,
            sm_instances=200,
            benoist_starts=10,
        )


def _converged_rate(m: FunctionModel, z0: ProductPoint, target: ProductPoint) -> float:
    traj = iterate(m, z0, TIGHT)
    if (
        traj.termination is not Termination.STEP_TOLERANCE
        or traj.final.distance(target) > 1e-6
    ):
        return math.nan
    return estimate_rate(traj, target, TIGHT).q_rate


def check_linear_rates(rng: np.random.Generator, sizes: Sizes) -> CriterionResult:
    worst = 0.0
    for alpha in (0.5, 1.0, 2.0, 5.0):
        kappa = 1.0 / math.sqrt(1.0 + alpha**2)
        m = Linear(alpha, 0.0)
        for x0, rho0 in rng.uniform(-10, 10, size=(sizes.linear_starts, 2)):
            q = _converged_rate(m, ProductPoint.of([x0], rho0), ProductPoint.of([0.0]))
            worst = max(worst, abs(q - kappa)) if math.isfinite(q) else math.inf
    return CriterionResult(
        "Q-rate, linear family", worst <= RATE_SLACK, f"max |q - kappa| = {worst:.4f}"
    )


def check_exponential(rng: np.random.Generator, sizes: Sizes) -> CriterionResult:
    m = Exponential(0.1, 1.0)
    n = sizes.expo_grid
    grid = scan(m, GridSpec((-10.0, 10.0), (-10.0, 10.0), (n, n)))
    solved = grid.fraction(CellClass.SOLUTION)
    target = ProductPoint.of([math.log(10.0)])
    q = _converged_rate(m, ProductPoint.of([0.0]), target)
    first = iterate(m, ProductPoint.of([0.0]), NumericConfig(max_iterations=5))
    plotted = all(
        abs(float(z.x[0]) - x) <= 0.02 and abs(z.rho - r) <= 0.02
        for z, (x, r) in zip(first.iterates[1:], FIGURE_ITERATES)
    )
    ok = solved == 1.0 and abs(q - 1 / math.sqrt(2)) <= RATE_SLACK and plotted
    return CriterionResult(
        "Q-rate, exponential family",
        ok,
        f"solved {solved:.0%}, q = {q:.4f}, figure iterates {plotted}",
    )


def check_piecewise_convex(rng: np.random.Generator, sizes: Sizes) -> CriterionResult:
    m = PiecewiseConvex()
    z0 = ProductPoint.of([-5.0])
    report = run_comparison(m, z0)
    q = _converged_rate(m, z0, ProductPoint.of([math.sqrt(2.0)]))
    stalled_at = report.map.final
    ok = (
        report.verdicts["DR"] is MethodVerdict.CONVERGED
        and abs(float(report.dr.final.x[0]) - math.sqrt(2.0)) <= 1e-5
        and report.verdicts["MAP"] is MethodVerdict.STALLED
        and stalled_at.isclose(ProductPoint.of([-5.0], -1.0), 1e-9)
        and report.verdicts["Newton"] is MethodVerdict.UNDEFINED
        and abs(q - 1 / math.sqrt(3)) <= RATE_SLACK
    )
    verdicts = ", ".join(f"{k}: {v.value}" for k, v in report.verdicts.items())
    return CriterionResult(
        "DR vs MAP vs Newton, piecewise convex", ok, f"{verdicts}; q = {q:.4f}"
    )


def check_newton_blowup(rng: np.random.Generator, sizes: Sizes) -> CriterionResult:
    m = SignedPower(3.0, 1.0 / 3.0)
    traj, verdict = run_newton(m, [1.0], NumericConfig(max_iterations=30))
    exact = all(
        abs(float(z.x[0]) - (-2.0) ** k) <= 1e-8 * 2.0**k
        for k, z in enumerate(traj.iterates[:31])
    )
    n = sizes.basin_grid
    grid = scan(m, GridSpec((-10.0, 10.0), (-10.0, 10.0), (n, n)))
    solved = grid.fraction(CellClass.SOLUTION)
    ok = exact and len(traj.iterates) == 31 and solved == 1.0
    return CriterionResult(
        "Newton blow-up vs DR basin",
        ok,
        f"Newton (-2)^n exact: {exact}; DR solved {solved:.0%} of {n}x{n}",
    )


def check_unstable_fixed_point(
    rng: np.random.Generator, sizes: Sizes
) -> CriterionResult:
    m = PowerNorm(0.5, 2.0, 1)
    zbar = ProductPoint.of([0.0], -0.5)
    fixed = classify_fixed_point(m, zbar)
    report = stability_report(m, zbar)
    ratio = displacement_ratio(m, zbar, 1e-4)
    eps = 1e-4
    boundary = displacement_ratio(m, ProductPoint.of([0.0], -1.0), eps)
    ok = (
        fixed.is_fixed
        and fixed.residual <= 1e-9
        and not report.psd_condition_holds
        and ratio >= 1.9
        and boundary >= 0.9 / eps ** (2 / 3)
    )
    return CriterionResult(
        "Unstable fixed point",
        ok,
        f"residual {fixed.residual:.1e}, psd {report.psd_condition_holds}, "
        f"ratio {ratio:.4f}, rho=-1 ratio {boundary:.1f}",
    )


def _box(lo: float, hi: float, dim: int = 1) -> Start:
    def draw(rng: np.random.Generator) -> ProductPoint:
        return ProductPoint(rng.uniform(lo, hi, size=dim), float(rng.uniform(-10, 10)))

    return draw


def lyapunov_cases() -> list[tuple[FunctionModel, Start]]:
    """Families with a closed-form F, each with a start sampler inside D."""
    return [
        (Linear(2.0, 1.0), _box(-10, 10)),
        (Exponential(0.1, 1.0), _box(-10, 10)),
        (PowerNorm(1.0, 2.0, 1), _box(-10, 10)),
        (PowerNorm(2.0, 3.0, 1), _box(-10, 10)),
        (PowerNorm(0.5, 2.0, 2), _box(-10, 10, 2)),
        (SignedPower(3.0, 1.0 / 3.0), _box(-10, 10)),
        (SignedPower(1.0 / 3.0, 3.0), _box(-10, 10)),
        (Benoist(0.5, 1.0, 1), _box(0.05, 0.95)),
        (Benoist(0.5, 1.0, -1), _box(-0.95, -0.05)),
        (PiecewiseNonconvex(2.0), _box(-10, 10)),
        (PiecewiseConvex(), _box(0.01, 10)),
    ]


def check_lyapunov(
    rng: np.random.Generator, sizes: Sizes, cfg: NumericConfig | None = None
) -> CriterionResult:
    failures = []
    for m, start in lyapunov_cases():
        for _ in range(sizes.lyapunov_starts):
            z0 = start(rng)
            cert = check_trajectory(m, iterate(m, z0, cfg))
            if cert.verdict is not LyapunovVerdict.CERTIFIED:
                failures.append(f"{m!r} from {z0!r}")
    detail = (
        "all certified"
        if not failures
        else f"{len(failures)} failure(s), first: {failures[0]}"
    )
    return CriterionResult("Lyapunov certificates", not failures, detail)


def _fd_jacobian(m: FunctionModel, z: ProductPoint, h: float = 1e-6) -> np.ndarray:
    base = z.as_array()
    n = base.size
    J = np.empty((n, n))
    for k in range(n):
        step = np.zeros(n)
        step[k] = h
        up, down = base + step, base - step
        plus = dr_inverse(m, ProductPoint(up[:-1], up[-1])).as_array()
        minus = dr_inverse(m, ProductPoint(down[:-1], down[-1])).as_array()
        J[:, k] = (plus - minus) / (2 * h)
    return J


def check_modulus(rng: np.random.Generator, sizes: Sizes) -> CriterionResult:
    one_d = [
        (Linear(2.0, 0.0), 0.0),
        (Exponential(0.1, 1.0), math.log(10.0)),
        (Benoist(0.5, 1.0, 1), math.sqrt(0.75)),
        (PiecewiseConvex(), math.sqrt(2.0)),
        (SignedPower(1.0, 3.0), 0.0),
    ]
    worst = 0.0
    fd_worst = 0.0
    for m, xbar in one_d:
        zbar = ProductPoint.of([xbar])
        slope = float(m.grad(zbar.x)[0])
        modulus = stability_report(m, zbar).modulus
        worst = max(worst, abs(modulus - 1 / math.sqrt(1 + slope**2)))
        fd_error = np.abs(jacobian_T_inverse(m, zbar) - _fd_jacobian(m, zbar))
        fd_worst = max(fd_worst, float(np.max(fd_error)))
    plane = stability_report(PowerNorm(1.0, 2.0, 2), ProductPoint.of([0.0, 0.0]))
    worst = max(worst, abs(plane.modulus - 1.0))
    ok = worst <= 1e-9 and fd_worst <= 1e-5
    return CriterionResult(
        "Modulus formula",
        ok,
        f"max modulus error {worst:.1e}, max FD error {fd_worst:.1e}",
    )


def benoist_start(
    rng: np.random.Generator, target: ProductPoint, radius: float = BENOIST_RADIUS
) -> ProductPoint:
    """Uniform draw from the disc of the given radius around (xbar, 0)."""
    r = radius * math.sqrt(float(rng.uniform()))
    angle = float(rng.uniform(0.0, 2.0 * math.pi))
    return ProductPoint.of(target.x + r * math.cos(angle), r * math.sin(angle))


def check_benoist_rate(rng: np.random.Generator, sizes: Sizes) -> CriterionResult:
    worst = 0.0
    for alpha in (0.3, 0.5, 0.7):
        m = Benoist(alpha, 1.0, 1)
        target = ProductPoint.of([math.sqrt(1 - alpha**2)])
        for _ in range(sizes.benoist_starts):
            q = _converged_rate(m, benoist_start(rng, target), target)
            worst = max(worst, abs(q - alpha)) if math.isfinite(q) else math.inf
    return CriterionResult(
        "Benoist local rate",
        worst <= RATE_SLACK,
        f"max |q - alpha| = {worst:.4f} over {sizes.benoist_starts} start(s) per alpha",
    )


def oracle_models() -> list[FunctionModel]:
    return [
        Linear(2.0, 1.0),
        Exponential(0.1, 1.0),
        PowerNorm(1.0, 2.0, 1),
        PowerNorm(1.0, 0.5, 1),
        PowerNorm(2.0, 3.0, 1),
        SignedPower(3.0, 1.0 / 3.0),
        SignedPower(1.0 / 3.0, 3.0),
        Benoist(0.5, 1.0, 1),
        PiecewiseNonconvex(2.0),
        PiecewiseConvex(),
    ]


def brute_force_distance(m: FunctionModel, x: float, rho: float, points: int) -> float:
    """Dense grid over dom f within [-50, 50] followed by bounded scalar refinement."""
    lo, hi = max(m.domain[0], -50.0), min(m.domain[1], 50.0)
    ys = np.linspace(lo, hi, points)
    with np.errstate(over="ignore", invalid="ignore"):
        hs = (ys - x) ** 2 + (m.values(ys) - rho) ** 2
    hs = np.where(np.isfinite(hs), hs, np.inf)
    k = int(np.argmin(hs))
    a, b = ys[max(k - 1, 0)], ys[min(k + 1, points - 1)]

    def h(y: float) -> float:
        return (y - x) ** 2 + (m.evaluate([y]) - rho) ** 2

    res = scipy.optimize.minimize_scalar(
        h, bounds=(a, b), method="bounded", options={"xatol": 1e-12}
    )
    return float(min(hs[k], res.fun))


def projection_errors(
    m: FunctionModel, x: float, rho: float, points: int
) -> tuple[float, float]:
    """Distance gap to the dense-grid oracle and the worst certificate residual."""
    projections = project_graph(m, [x], rho)
    oracle = brute_force_distance(m, x, rho, points)
    gap = abs(projections[0].squared_distance - oracle)
    certificate = max(
        (
            proj.certificate_residual
            for proj in projections
            if m.is_locally_lipschitz(proj.p)
        ),
        default=0.0,
    )
    return gap, certificate


def check_projection_oracle(
    rng: np.random.Generator, sizes: Sizes
) -> CriterionResult:
    models = oracle_models()
    worst_gap = 0.0
    worst_cert = 0.0
    for _ in range(sizes.oracle_instances):
        m = models[int(rng.integers(len(models)))]
        x, rho = rng.uniform(-5, 5, size=2)
        gap, certificate = projection_errors(m, x, rho, sizes.oracle_points)
        worst_gap = max(worst_gap, gap)
        worst_cert = max(worst_cert, certificate)
    ok = worst_gap <= 1e-6 and worst_cert <= 1e-6
    return CriterionResult(
        "Projection oracle",
        ok,
        f"max distance gap {worst_gap:.1e}, max certificate {worst_cert:.1e}",
    )


def check_sherman_morrison(rng: np.random.Generator, sizes: Sizes) -> CriterionResult:
    worst = 0.0
    done = 0
    while done < sizes.sm_instances:
        M = 3.0 * np.eye(3) + 0.5 * rng.normal(size=(3, 3))
        u, v = rng.normal(size=3), rng.normal(size=3)
        if np.linalg.cond(M) > 1e3 or abs(1 + v @ scipy.linalg.solve(M, u)) < 0.1:
            continue
        direct = scipy.linalg.inv(M + np.outer(u, v))
        error = np.abs(sherman_morrison_inverse(M, u, v) - direct)
        worst = max(worst, float(np.max(error)))
        done += 1
    try:
        sherman_morrison_inverse(np.eye(3), [1.0, 0, 0], [-1.0, 0, 0])
        raised = False
    except SingularUpdate:
        raised = True
    return CriterionResult(
        "Sherman-Morrison",
        worst <= 1e-10 and raised,
        f"max error {worst:.1e}, singular update raised: {raised}",
    )


CRITERIA = [
    check_linear_rates,
    check_exponential,
    check_piecewise_convex,
    check_newton_blowup,
    check_unstable_fixed_point,
    check_lyapunov,
    check_modulus,
    check_benoist_rate,
    check_projection_oracle,
    check_sherman_morrison,
]


def verify_all(seed: int = 0, quick: bool = False) -> tuple[str, bool]:
    """
    Run every acceptance check with one seeded generator.

    Returns:
        tuple[str, bool]: The rendered report and whether every check passed.
    """
    rng = np.random.default_rng(seed)
    sizes = Sizes.for_mode(quick)
    results = []
    for check in CRITERIA:
        result = check(rng, sizes)
        logger.info("%s: %s", result.name, "PASS" if result.passed else "FAIL")
        results.append(result)
    rows = [
        [k + 1, r.name, "PASS" if r.passed else "FAIL", r.detail]
        for k, r in enumerate(results)
    ]
    table = tabulate(
        rows, headers=["#", "criterion", "result", "detail"], tablefmt="github"
    )
    mode = "quick" if quick else "full"
    report = f"seed: {seed} ({mode})\n\n{table}\n"
    return report, all(r.passed for r in results)
