"""
Basins of attraction of the DR iteration over a rectangle of starting points
(x0, rho0), and empirical Q/R-linear rate estimates from trajectory tails.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.core import NumericConfig, ProductPoint
from src.dr_engine import Termination, Trajectory, iterate
from src.errors import (
    ConfigError,
    DomainError,
    InsufficientTail,
    Unsupported,
    ValidationError,
)
from src.functions import FunctionModel

logger = logging.getLogger(__name__)

CRITICAL_RHO = 1e-3
RATE_FLOOR = 1e-13
TAIL_RATIOS = 10
MIN_TAIL_ITERATES = 10


class CellClass(str, Enum):
    SOLUTION = "Solution"
    CRITICAL_FIXED_POINT = "CriticalFixedPoint"
    MAXED_OUT = "MaxedOut"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class GridSpec:
    x_range: tuple[float, float] = (-10.0, 10.0)
    rho_range: tuple[float, float] = (-10.0, 10.0)
    resolution: tuple[int, int] = (101, 101)
    tol: float = 1e-6

    def __post_init__(self) -> None:
        nx, nrho = self.resolution
        if nx < 2 or nrho < 2:
            raise ConfigError(
                f"Grid resolution must be at least 2x2, got {self.resolution}"
            )
        ranges = (("x_range", self.x_range), ("rho_range", self.rho_range))
        for name, (lo, hi) in ranges:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(
                    f"{name} must be a finite interval lo < hi, got {(lo, hi)}"
                )
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.resolution[0])

    @property
    def rhos(self) -> np.ndarray:
        return np.linspace(*self.rho_range, self.resolution[1])


@dataclass(frozen=True)
class Cell:
    x0: float
    rho0: float
    iterations: int | None
    terminal: ProductPoint
    classification: CellClass


@dataclass
class BasinGrid:
    """cells[i][j] holds the run started at (xs[j], rhos[i])."""

    spec: GridSpec
    cells: list[list[Cell]]
    trajectories: dict[tuple[int, int], Trajectory] = field(default_factory=dict)

    def fraction(self, classification: CellClass) -> float:
        flat = [c for row in self.cells for c in row]
        return sum(c.classification is classification for c in flat) / len(flat)

    def iteration_matrix(self) -> np.ndarray:
        """Iteration counts (rows over rho0, columns over x0), NaN where maxed out."""
        return np.array(
            [
                [np.nan if c.iterations is None else c.iterations for c in row]
                for row in self.cells
            ]
        )

    def to_frame(self) -> pd.DataFrame:
        records = [
            {
                "row": i,
                "col": j,
                "x0": c.x0,
                "rho0": c.rho0,
                "iterations": c.iterations,
                "class": c.classification.value,
                "x_term": float(c.terminal.x[0]),
                "rho_term": c.terminal.rho,
            }
            for i, row in enumerate(self.cells)
            for j, c in enumerate(row)
        ]
        frame = pd.DataFrame.from_records(records)
        frame["iterations"] = frame["iterations"].astype("Int64")
        return frame


@dataclass(frozen=True)
class RateEstimate:
    q_rate: float
    r_rate: float
    tail_length: int
    target: ProductPoint

    def to_dict(self) -> dict[str, Any]:
        return {
            "q_rate": self.q_rate,
            "r_rate": self.r_rate,
            "tail_length": self.tail_length,
            "target": self.target.to_dict(),
        }


def scan_threads() -> int:
    """Worker count: DRZERO_THREADS when set, else the machine's CPU count."""
    raw = os.environ.get("DRZERO_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(
            f"DRZERO_THREADS must be a positive integer, got {raw!r}"
        ) from e
    if value < 1:
        raise ConfigError(f"DRZERO_THREADS must be a positive integer, got {raw!r}")
    return value


def _loose_critical(m: FunctionModel, z: ProductPoint, cfg: NumericConfig) -> bool:
    """
    |f(x)| <= sqrt(tol), |rho| > 1e-3 and 0 within sqrt(tol) of the
    sign-selected subdifferential.
    """
    loose = math.sqrt(cfg.residual_tolerance)
    try:
        if abs(m.evaluate(z.x)) > loose or abs(z.rho) <= CRITICAL_RHO:
            return False
        if z.rho > 0:
            branch = m.lower_subdifferential(z.x)
        else:
            branch = m.upper_subdifferential(z.x)
    except (DomainError, Unsupported):
        return False
    return branch.contains(np.zeros(m.dimension), loose)


def _classify(
    m: FunctionModel, traj: Trajectory, cfg: NumericConfig
) -> tuple[int | None, CellClass]:
    z = traj.final
    if traj.termination is Termination.DIVERGED:
        return None, CellClass.DIVERGED
    if traj.termination in (Termination.RESIDUAL_TOLERANCE, Termination.STEP_TOLERANCE):
        if abs(z.rho) > CRITICAL_RHO:
            return traj.iterations, CellClass.CRITICAL_FIXED_POINT
        return traj.iterations, CellClass.SOLUTION
    if _loose_critical(m, z, cfg):
        return traj.iterations, CellClass.CRITICAL_FIXED_POINT
    return None, CellClass.MAXED_OUT


def _run_cell(
    m: FunctionModel,
    x0: float,
    rho0: float,
    cfg: NumericConfig,
    zeros: list[float],
    tol: float,
    x_only: bool,
    keep: bool,
) -> tuple[Cell, Trajectory | None]:
    def reached(z: ProductPoint) -> bool:
        x = float(z.x[0])
        if x_only:
            return min(abs(x - s) for s in zeros) <= tol
        return min(math.hypot(x - s, z.rho) for s in zeros) <= tol

    traj = iterate(m, ProductPoint.of([x0], rho0), cfg, stop=reached)
    iterations, cls = _classify(m, traj, cfg)
    return Cell(x0, rho0, iterations, traj.final, cls), traj if keep else None


def scan(
    m: FunctionModel,
    spec: GridSpec,
    cfg: NumericConfig | None = None,
    threads: int | None = None,
    keep_trajectories: int = 0,
) -> BasinGrid:
    """
    Run DR from every grid start until within spec.tol of the nearest known
    zero (x, 0). Distances are in the product norm, or in x alone when f has
    a critical zero so that runs ending at (x, rho) with rho != 0 also count.

    Args:
        m (FunctionModel): One-dimensional target with known zeros.
        spec (GridSpec): Ranges, resolution and target tolerance.
        cfg (NumericConfig): Solver settings shared by all cells.
        threads (int): Worker count; defaults to scan_threads().
        keep_trajectories (int): Keep the first k trajectories in row-major order.

    Returns:
        BasinGrid: Fully populated grid; identical inputs give identical grids.
    """
    cfg = cfg or NumericConfig()
    if m.dimension != 1:
        raise ValidationError("Basin scans are defined for one-dimensional targets")
    zeros = [float(z[0]) for z in m.known_zeros]
    if not zeros:
        raise ValidationError(
            f"{m.family} has no known zeros to measure convergence against"
        )
    x_only = m.has_critical_zero

    lo, hi = m.domain
    nx, nrho = spec.resolution
    starts = [
        (min(max(float(x0), lo), hi), float(rho0))
        for rho0 in spec.rhos
        for x0 in spec.xs
    ]
    workers = threads or scan_threads()
    logger.info(
        "Scanning %d x %d starts for %s with %d worker(s)", nx, nrho, m.family, workers
    )
    results = Parallel(n_jobs=workers)(
        delayed(_run_cell)(
            m, x0, rho0, cfg, zeros, spec.tol, x_only, k < keep_trajectories
        )
        for k, (x0, rho0) in enumerate(starts)
    )

    cells = [[results[i * nx + j][0] for j in range(nx)] for i in range(nrho)]
    kept = {
        divmod(k, nx): results[k][1]
        for k in range(min(keep_trajectories, len(results)))
    }
    return BasinGrid(spec=spec, cells=cells, trajectories=kept)


def estimate_rate(
    t: Trajectory,
    target: ProductPoint,
    cfg: NumericConfig | None = None,
    floor: float = RATE_FLOOR,
) -> RateEstimate:
    """
    Q-rate: max of the last (up to 10) ratios ||z_{n+1} - zbar|| / ||z_n - zbar||;
    R-rate: exp of the least-squares slope of log ||z_n - zbar|| over the tail.
    Only iterates farther than ``floor`` from the target are used, and the
    trajectory must end within 10 * step_tolerance of the target.
    """
    cfg = cfg or NumericConfig()
    gap = t.final.distance(target)
    if gap > 10.0 * cfg.step_tolerance:
        raise InsufficientTail(
            f"Trajectory ends {gap:.3e} from the target; rates need convergence "
            f"to within {10.0 * cfg.step_tolerance:g}"
        )
    errors = np.array([z.distance(target) for z in t.iterates])
    above = np.flatnonzero(errors > floor)
    if above.size == 0:
        raise InsufficientTail("No iterate lies above the numerical floor")
    # longest run of consecutive above-floor iterates ending at the last one
    end = int(above[-1])
    start = end
    while start - 1 >= 0 and errors[start - 1] > floor:
        start -= 1
    tail = errors[start : end + 1]
    if tail.size < MIN_TAIL_ITERATES:
        raise InsufficientTail(
            f"Only {tail.size} iterates above the floor {floor:g}; "
            f"need {MIN_TAIL_ITERATES}"
        )

    ratios = tail[1:] / tail[:-1]
    q_rate = float(np.max(ratios[-TAIL_RATIOS:]))
    window = tail[-(TAIL_RATIOS + 1) :]
    slope, _ = np.polyfit(np.arange(window.size), np.log(window), 1)
    r_rate = float(math.exp(slope))
    logger.info(
        "Rate estimate: q = %.6f, r = %.6f over %d iterates",
        q_rate,
        r_rate,
        window.size,
    )
    return RateEstimate(
        q_rate=q_rate, r_rate=r_rate, tail_length=int(window.size), target=target
    )
