"""
Reference solvers run side by side with DR: the method of alternating
projections (z+ in P_B P_A z = P_B(x, 0)) and Newton's method.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from src.core import NumericConfig, ProductPoint, as_vector
from src.dr_engine import (
    DIVERGENCE_NORM,
    Termination,
    Trajectory,
    iterate,
    safe_evaluate,
)
from src.errors import (
    DerivativeSingular,
    DomainError,
    SelectionError,
    Unsupported,
    ValidationError,
)
from src.functions import FunctionModel
from src.graph_projection import project_graph

logger = logging.getLogger(__name__)

STALL_TOL = 1e-12


class Verdict(str, Enum):
    CONVERGED = "ConvergedToSolution"
    STALLED = "Stalled"
    DIVERGED = "Diverged"
    UNDEFINED = "Undefined"
    NOT_CONVERGED = "NotConverged"


@dataclass
class ComparisonReport:
    dr: Trajectory
    map: Trajectory
    newton: Trajectory
    verdicts: dict[str, Verdict]

    def rows(self) -> list[list[Any]]:
        """Method, verdict, iterations, final x, final rho (tabulate rows)."""
        out = []
        for name, traj in (("DR", self.dr), ("MAP", self.map), ("Newton", self.newton)):
            z = traj.final
            x = float(z.x[0]) if z.dim == 1 else z.x.tolist()
            out.append([name, self.verdicts[name].value, traj.iterations, x, z.rho])
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdicts": {k: v.value for k, v in self.verdicts.items()},
            "dr": self.dr.to_dict(),
            "map": self.map.to_dict(),
            "newton": self.newton.to_dict(),
        }


def map_step(
    m: FunctionModel,
    z: ProductPoint,
    cfg: NumericConfig | None = None,
    selection: int = 0,
) -> ProductPoint:
    """The selected element of P_B(x, 0)."""
    projections = project_graph(m, z.x, 0.0, cfg)
    if not 0 <= selection < len(projections):
        raise SelectionError(
            f"selection {selection} out of range for {len(projections)} projection(s)"
        )
    return projections[selection].point


def newton_step(m: FunctionModel, x: Any) -> np.ndarray:
    """
    x - f(x)/f'(x) in one dimension; in R^n the minimum-norm step
    x - f(x) grad f(x) / ||grad f(x)||^2.
    """
    xv = as_vector(x)
    fx = m.evaluate(xv)
    try:
        g = m.grad(xv)
    except Unsupported as e:
        raise DerivativeSingular(f"f is not differentiable at x = {xv.tolist()}") from e
    gg = float(g @ g)
    if math.sqrt(gg) <= 1e-12 * (1.0 + abs(fx)):
        raise DerivativeSingular(
            f"Newton step undefined: grad f({xv.tolist()}) = {g.tolist()}"
        )
    return xv - fx * g / gg


def run_map(
    m: FunctionModel, z0: ProductPoint, cfg: NumericConfig | None = None
) -> tuple[Trajectory, Verdict]:
    cfg = cfg or NumericConfig()
    traj = Trajectory(iterates=[z0], f_values=[safe_evaluate(m, z0.x)], method="MAP")
    z = z0
    verdict = Verdict.NOT_CONVERGED
    for _ in range(cfg.max_iterations):
        z_next = map_step(m, z, cfg)
        step = z_next.distance(z)
        traj.iterates.append(z_next)
        traj.f_values.append(z_next.rho)
        traj.step_norms.append(step)
        traj.selection_indices.append(0)
        z = z_next
        if z.norm() > DIVERGENCE_NORM:
            traj.termination, verdict = Termination.DIVERGED, Verdict.DIVERGED
            break
        if abs(z.rho) <= cfg.residual_tolerance and step <= cfg.step_tolerance:
            traj.termination, verdict = Termination.STEP_TOLERANCE, Verdict.CONVERGED
            break
        if step <= STALL_TOL:
            traj.termination, verdict = Termination.STEP_TOLERANCE, Verdict.STALLED
            break
    logger.info(
        "MAP finished: %s after %d steps at %r",
        verdict.value,
        traj.iterations,
        traj.final,
    )
    return traj, verdict


def run_newton(
    m: FunctionModel, x0: Any, cfg: NumericConfig | None = None
) -> tuple[Trajectory, Verdict]:
    """Newton iterates recorded as (x_n, 0) with f_values f(x_n)."""
    cfg = cfg or NumericConfig()
    x = as_vector(x0)
    fx = safe_evaluate(m, x)
    traj = Trajectory(iterates=[ProductPoint(x, 0.0)], f_values=[fx], method="Newton")
    if not math.isfinite(fx):
        traj.termination = Termination.UNDEFINED_STEP
        return traj, Verdict.UNDEFINED
    verdict = Verdict.NOT_CONVERGED
    for _ in range(cfg.max_iterations):
        try:
            x_next = newton_step(m, x)
            f_next = m.evaluate(x_next)
        except (DerivativeSingular, DomainError) as e:
            logger.info("Newton step undefined: %s", e)
            traj.termination, verdict = Termination.UNDEFINED_STEP, Verdict.UNDEFINED
            break
        step = float(np.linalg.norm(x_next - x))
        x = x_next
        traj.iterates.append(ProductPoint(x, 0.0))
        traj.f_values.append(f_next)
        traj.step_norms.append(step)
        traj.selection_indices.append(0)
        if not np.all(np.isfinite(x)) or float(np.linalg.norm(x)) > DIVERGENCE_NORM:
            traj.termination, verdict = Termination.DIVERGED, Verdict.DIVERGED
            break
        if step <= cfg.step_tolerance and abs(f_next) <= cfg.residual_tolerance:
            traj.termination, verdict = Termination.STEP_TOLERANCE, Verdict.CONVERGED
            break
    logger.info("Newton finished: %s after %d steps", verdict.value, traj.iterations)
    return traj, verdict


def _dr_verdict(traj: Trajectory) -> Verdict:
    return {
        Termination.STEP_TOLERANCE: Verdict.CONVERGED,
        Termination.DIVERGED: Verdict.DIVERGED,
    }.get(traj.termination, Verdict.NOT_CONVERGED)


def run_comparison(
    m: FunctionModel, z0: ProductPoint, cfg: NumericConfig | None = None
) -> ComparisonReport:
    """
    Run DR and MAP from z0 and Newton from x0 with shared tolerances.

    Failures are verdicts, never exceptions.
    """
    cfg = cfg or NumericConfig()
    dr = iterate(m, z0, cfg)
    map_traj, map_verdict = run_map(m, z0, cfg)
    newton_traj, newton_verdict = run_newton(m, z0.x, cfg)
    return ComparisonReport(
        dr=dr,
        map=map_traj,
        newton=newton_traj,
        verdicts={"DR": _dr_verdict(dr), "MAP": map_verdict, "Newton": newton_verdict},
    )


def map_stalls(m: FunctionModel, x0: float, cfg: NumericConfig | None = None) -> bool:
    """Whether MAP started at (x0, 0) stays at (x0, f(x0)) with f(x0) != 0."""
    cfg = cfg or NumericConfig()
    z = ProductPoint.of([x0], 0.0)
    try:
        fx = m.evaluate(z.x)
    except DomainError:
        return False
    moved = abs(float(map_step(m, z, cfg).x[0]) - x0)
    return abs(fx) > cfg.residual_tolerance and moved <= STALL_TOL


def map_stall_threshold(
    m: FunctionModel,
    lo: float,
    hi: float,
    cfg: NumericConfig | None = None,
    tol: float = 1e-9,
) -> float:
    """
    Bisect for the boundary between starts that trap MAP (at lo) and starts
    that do not (at hi); returns the largest trapping x0 found.
    """
    cfg = cfg or NumericConfig()
    if not map_stalls(m, lo, cfg):
        raise ValidationError(f"MAP does not stall at the lower end x0 = {lo}")
    if map_stalls(m, hi, cfg):
        raise ValidationError(f"MAP still stalls at the upper end x0 = {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if map_stalls(m, mid, cfg):
            lo = mid
        else:
            hi = mid
    return lo

