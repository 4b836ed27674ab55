"""
The Douglas-Rachford operator for A = X x {0} and B = gra f.

T(x, rho) = (0, rho) + P_B(x, -rho), so one step reads z+ = (p, rho + f(p))
with (p, f(p)) a selected projection of (x, -rho) onto the graph.

The reversed operator is not provided: its powers satisfy
T_{B,A}^n = R_A T_{A,B}^n R_A, so a T_{B,A} sequence is obtained by reflecting
the start point, iterating T_{A,B} and reflecting the result.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd

from src.core import NumericConfig, ProductPoint
from src.errors import DomainError, SelectionError, ValidationError
from src.functions import FunctionModel
from src.graph_projection import GraphProjection, project_graph

logger = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e12
SELECTION_POLICIES = ("first", "nearest")


class Termination(str, Enum):
    # step and residual tolerances both met
    STEP_TOLERANCE = "StepTolerance"
    # the caller's stop predicate accepted the iterate
    RESIDUAL_TOLERANCE = "ResidualTolerance"
    MAX_ITERATIONS = "MaxIterations"
    DIVERGED = "Diverged"
    # Newton only: the derivative vanished or does not exist
    UNDEFINED_STEP = "UndefinedStep"


class FixedPointClass(str, Enum):
    INTERSECTION = "Intersection"
    CRITICAL_POSITIVE_RHO = "CriticalPositiveRho"
    CRITICAL_NEGATIVE_RHO = "CriticalNegativeRho"
    NOT_FIXED = "NotFixed"


@dataclass
class Trajectory:
    """Iterates z_0, ..., z_N of DR, MAP or Newton with per-step diagnostics."""

    iterates: list[ProductPoint] = field(default_factory=list)
    f_values: list[float] = field(default_factory=list)
    step_norms: list[float] = field(default_factory=list)
    selection_indices: list[int] = field(default_factory=list)
    termination: Termination = Termination.MAX_ITERATIONS
    method: str = "DR"

    @property
    def final(self) -> ProductPoint:
        return self.iterates[-1]

    @property
    def iterations(self) -> int:
        return len(self.step_norms)

    def to_frame(self) -> pd.DataFrame:
        """One row per iterate: n, x (or x_1..x_n), rho, f_x, step_norm."""
        xs = np.array([z.x for z in self.iterates])
        frame = pd.DataFrame({"n": np.arange(len(self.iterates))})
        if xs.shape[1] == 1:
            frame["x"] = xs[:, 0]
        else:
            for j in range(xs.shape[1]):
                frame[f"x_{j + 1}"] = xs[:, j]
        frame["rho"] = [z.rho for z in self.iterates]
        frame["f_x"] = self.f_values
        frame["step_norm"] = [math.nan, *self.step_norms]
        return frame

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "termination": self.termination.value,
            "iterations": self.iterations,
            "final": self.final.to_dict(),
            "iterates": [z.to_dict() for z in self.iterates],
            "f_values": [v if math.isfinite(v) else None for v in self.f_values],
            "step_norms": self.step_norms,
            "selection_indices": self.selection_indices,
        }


@dataclass(frozen=True)
class FixedPointReport:
    point: ProductPoint
    is_fixed: bool
    classification: FixedPointClass
    residual: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "point": self.point.to_dict(),
            "is_fixed": self.is_fixed,
            "classification": self.classification.value,
            "residual": self.residual,
        }


def safe_evaluate(m: FunctionModel, x: np.ndarray) -> float:
    """f(x), or NaN outside dom f."""
    try:
        return m.evaluate(x)
    except DomainError:
        return math.nan


def _check_point(m: FunctionModel, z: ProductPoint) -> None:
    if z.dim != m.dimension:
        raise ValidationError(
            f"Point of dimension {z.dim} does not match model dimension {m.dimension}"
        )
    if not z.is_finite():
        raise ValidationError(f"Non-finite point {z}")


def _step_from(z: ProductPoint, proj: GraphProjection) -> ProductPoint:
    return ProductPoint(proj.p, z.rho + proj.fp)


def dr_step_candidates(
    m: FunctionModel, z: ProductPoint, cfg: NumericConfig | None = None
) -> list[ProductPoint]:
    """Every element of T(z), one per projection of (x, -rho)."""
    _check_point(m, z)
    return [_step_from(z, proj) for proj in project_graph(m, z.x, -z.rho, cfg)]


def dr_step(
    m: FunctionModel,
    z: ProductPoint,
    cfg: NumericConfig | None = None,
    selection: int = 0,
) -> ProductPoint:
    """
    One Douglas-Rachford step z+ = (p, rho + f(p)).

    Args:
        m (FunctionModel): Target function.
        z (ProductPoint): Current iterate.
        cfg (NumericConfig): Projection parameters.
        selection (int): Index into the ascending list of projections.

    Returns:
        ProductPoint: The selected element of T(z).
    """
    _check_point(m, z)
    projections = project_graph(m, z.x, -z.rho, cfg)
    if not 0 <= selection < len(projections):
        raise SelectionError(
            f"selection {selection} out of range for {len(projections)} projection(s)"
        )
    return _step_from(z, projections[selection])


def dr_inverse(m: FunctionModel, z: ProductPoint) -> ProductPoint:
    """
    T^{-1}(y, sigma) = (y + sigma * grad f(y), sigma - f(y)) on the smooth
    part of gra f.
    """
    _check_point(m, z)
    g = m.grad(z.x)
    return ProductPoint(z.x + z.rho * g, z.rho - m.evaluate(z.x))


def _select(policy: str, z: ProductPoint, projections: list[GraphProjection]) -> int:
    if policy == "first" or len(projections) == 1:
        return 0
    dists = [float(np.linalg.norm(proj.p - z.x)) for proj in projections]
    return int(np.argmin(dists))


def iterate(
    m: FunctionModel,
    z0: ProductPoint,
    cfg: NumericConfig | None = None,
    selection_policy: str = "first",
    stop: Callable[[ProductPoint], bool] | None = None,
) -> Trajectory:
    """
    Run the DR iteration from z0.

    Stops at the first of: ||z_{n+1} - z_n|| <= step_tolerance together with
    |f(x_{n+1})| <= residual_tolerance; the optional ``stop`` predicate
    (checked on z0 too); max_iterations steps; ||z_n|| > 1e12.
    """
    cfg = cfg or NumericConfig()
    if selection_policy not in SELECTION_POLICIES:
        raise SelectionError(
            f"Unknown selection policy {selection_policy!r}; "
            f"expected one of {SELECTION_POLICIES}"
        )
    _check_point(m, z0)

    traj = Trajectory(iterates=[z0], f_values=[safe_evaluate(m, z0.x)])
    if stop is not None and stop(z0):
        traj.termination = Termination.RESIDUAL_TOLERANCE
        return traj

    z = z0
    for n in range(cfg.max_iterations):
        projections = project_graph(m, z.x, -z.rho, cfg)
        idx = _select(selection_policy, z, projections)
        proj = projections[idx]
        z_next = _step_from(z, proj)
        step = z_next.distance(z)
        traj.iterates.append(z_next)
        traj.f_values.append(proj.fp)
        traj.step_norms.append(step)
        traj.selection_indices.append(idx)
        logger.debug("DR step %d: z = %r, step = %.3e", n + 1, z_next, step)
        z = z_next

        if not z.is_finite() or z.norm() > DIVERGENCE_NORM:
            traj.termination = Termination.DIVERGED
            break
        if step <= cfg.step_tolerance and abs(proj.fp) <= cfg.residual_tolerance:
            traj.termination = Termination.STEP_TOLERANCE
            break
        if stop is not None and stop(z):
            traj.termination = Termination.RESIDUAL_TOLERANCE
            break
    else:
        traj.termination = Termination.MAX_ITERATIONS

    logger.info(
        "DR iteration terminated (%s) after %d steps at %r",
        traj.termination.value,
        traj.iterations,
        traj.final,
    )
    return traj


def classify_fixed_point(
    m: FunctionModel, z: ProductPoint, cfg: NumericConfig | None = None
) -> FixedPointReport:
    """
    Decide whether z is fixed under some selection of T and which kind of
    fixed point it is: an intersection point, or a critical point x of f
    (0 in the lower subdifferential for rho > 0, upper for rho < 0).
    """
    cfg = cfg or NumericConfig()
    residual = min(c.distance(z) for c in dr_step_candidates(m, z, cfg))
    is_fixed = residual <= cfg.step_tolerance
    tol = cfg.residual_tolerance
    fx = safe_evaluate(m, z.x)

    origin = np.zeros(m.dimension)
    classification = FixedPointClass.NOT_FIXED
    if is_fixed and abs(fx) <= tol:
        if abs(z.rho) <= tol:
            classification = FixedPointClass.INTERSECTION
        elif z.rho > 0 and m.lower_subdifferential(z.x).contains(origin, tol):
            classification = FixedPointClass.CRITICAL_POSITIVE_RHO
        elif z.rho < 0 and m.upper_subdifferential(z.x).contains(origin, tol):
            classification = FixedPointClass.CRITICAL_NEGATIVE_RHO
    if is_fixed and classification is FixedPointClass.NOT_FIXED:
        logger.warning(
            "Point %r is numerically fixed but matches no fixed-point class", z
        )
    return FixedPointReport(
        point=z, is_fixed=is_fixed, classification=classification, residual=residual
    )
