"""
Projection onto the graph B = gra f.

P_B(x, rho) is the set of minimizers of y -> ||y - x||^2 + (f(y) - rho)^2.
One-dimensional targets are handled by a certified global scan, golden-section
refinement of every grid basin and a safeguarded Newton solve of the
stationarity equation; alpha*||x||^p in R^n is reduced to the same 1-D problem
along the ray through x.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np

from src.core import NumericConfig, ProductPoint, as_vector
from src.errors import DomainError, SearchFailure, Unsupported, ValidationError
from src.functions import FunctionModel, PowerNorm

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2
EPS = float(np.finfo(float).eps)

MAX_REFINED_BASINS = 64
POLISH_STEPS = 64
BRACKET_DOUBLINGS = 200
POLISH_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class GraphProjection:
    """One element (p, f(p)) of P_B(x, rho)."""

    p: np.ndarray
    fp: float
    squared_distance: float
    multivalued: bool
    certificate_residual: float

    @property
    def point(self) -> ProductPoint:
        return ProductPoint(self.p, self.fp)

    def to_dict(self) -> dict[str, Any]:
        residual = self.certificate_residual
        return {
            "p": [float(v) for v in self.p],
            "fp": self.fp,
            "squared_distance": self.squared_distance,
            "multivalued": self.multivalued,
            "certificate_residual": residual if math.isfinite(residual) else None,
        }


def golden_section(
    h: Callable[[float], float], a: float, b: float, tol: float
) -> float:
    """
    Golden-section search for a minimizer of h on [a, b].

    Returns the better end of the final bracket of width <= tol.
    """
    a, b = min(a, b), max(a, b)
    width = b - a
    if width <= tol:
        return a if h(a) <= h(b) else b

    # Required steps to achieve tolerance
    n = int(math.ceil(math.log(tol / width) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * width
    d = a + INV_PHI * width
    hc, hd = h(c), h(d)
    for _ in range(n - 1):
        if hc < hd:
            b, d, hd = d, c, hc
            width *= INV_PHI
            c = a + INV_PHI_SQUARE * width
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            width *= INV_PHI
            d = a + INV_PHI * width
            hd = h(d)
    return c if hc < hd else d


def first_order_residual(m: FunctionModel, x: Any, rho: float, p: Any) -> float:
    """
    dist(x, p + (f(p) - rho) * S) with S = lower subdifferential when f(p) >= rho
    and upper subdifferential otherwise. Infinite when S is empty.
    """
    fp = m.evaluate(p)
    scale = fp - rho
    branch = m.lower_subdifferential(p) if scale >= 0 else m.upper_subdifferential(p)
    return branch.image_distance(x, p, scale)


def _objective(
    m: FunctionModel, x: float, rho: float
) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized h(y) = (y - x)^2 + (f(y) - rho)^2, inf off dom f."""

    def h(ys: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            out = (ys - x) ** 2 + (m.values(ys) - rho) ** 2
        return np.where(np.isfinite(out), out, np.inf)

    return h


def _stationarity(
    m: FunctionModel, x: float, rho: float, y: float
) -> tuple[float, float] | None:
    """g(y) = y - x + (f(y) - rho) f'(y) and g'(y); None where f' is unavailable."""
    try:
        fy = m.evaluate(y)
        d1 = float(m.grad(y)[0])
    except (Unsupported, DomainError):
        return None
    g = y - x + (fy - rho) * d1
    if not math.isfinite(g):
        return None
    try:
        dg = 1.0 + d1 * d1 + (fy - rho) * float(m.hess(y)[0, 0])
    except (Unsupported, DomainError):
        dg = math.nan
    return g, dg


def _sign_change(
    m: FunctionModel, x: float, rho: float, y: float, g0: float, limit: float
) -> float | None:
    """Walk from y towards limit with doubling steps until g changes sign."""
    direction = 1.0 if limit > y else -1.0
    step = 4.0 * EPS * (1.0 + abs(y))
    for _ in range(BRACKET_DOUBLINGS):
        cand = y + direction * step
        last = direction * (cand - limit) >= 0
        if last:
            cand = limit
        s = _stationarity(m, x, rho, cand)
        if s is not None and s[0] * g0 <= 0:
            return cand
        if last:
            return None
        step *= 2.0
    return None


def _polish(
    m: FunctionModel, x: float, rho: float, y: float, lo: float, hi: float
) -> float:
    """
    Solve g(y) = 0 next to a golden-section estimate with Newton steps kept
    inside a sign-change bracket (bisection when a step leaves it). The bracket
    stays within [lo, hi] and never crosses a kink; without a sign change the
    estimate is returned unchanged.
    """
    s = _stationarity(m, x, rho, y)
    if s is None or s[0] == 0.0:
        return y
    g0 = s[0]
    # h' = 2g, so the minimizer lies to the right of y when g(y) < 0
    limit = hi if g0 < 0 else lo
    for k in m.kinks:
        if min(y, limit) < k < max(y, limit):
            limit = k
    end = _sign_change(m, x, rho, y, g0, limit)
    if end is None:
        return y

    a, b = (y, end) if g0 < 0 else (end, y)
    t, best, g_best = y, y, abs(g0)
    for _ in range(POLISH_STEPS):
        s = _stationarity(m, x, rho, t)
        if s is None:
            break
        g, dg = s
        if abs(g) < g_best:
            best, g_best = t, abs(g)
        if g == 0.0:
            break
        if g < 0:
            a = t
        else:
            b = t
        if b - a <= 2.0 * EPS * max(abs(a), abs(b)):
            break
        cand = t - g / dg if math.isfinite(dg) and dg > 0 else math.nan
        t = cand if a < cand < b else 0.5 * (a + b)
    return best


def _scan_points(
    m: FunctionModel, x: float, rho: float, cfg: NumericConfig
) -> tuple[np.ndarray, float, float]:
    lo, hi = m.domain
    xc = min(max(x, lo), hi)
    with np.errstate(over="ignore", invalid="ignore"):
        r = math.hypot(xc - x, float(m.values(np.array([xc]))[0]) - rho)
    window = max(50.0, 10.0 * (1.0 + abs(x) + abs(rho)))
    if not math.isfinite(r):
        r = window
    # every minimizer lies within r of x, since h(y*) <= h(xc) = r^2
    radius = min(window, r)
    a, b = max(x - radius, lo), min(x + radius, hi)
    pts = [np.linspace(a, b, cfg.projection_grid_points)]
    if r > window:
        reach = window
        far = []
        while reach < r:
            reach = min(2.0 * reach, r)
            far.extend([x - reach, x + reach])
        far_arr = np.asarray(far)
        pts.append(far_arr[(far_arr >= lo) & (far_arr <= hi)])
        a, b = max(x - r, lo), min(x + r, hi)
    return np.unique(np.concatenate(pts)), a, b


def _refine(
    m: FunctionModel, x: float, rho: float, lo: float, hi: float, tol: float
) -> float:
    h = _objective(m, x, rho)

    def at(y: float) -> float:
        return float(h(np.array([y]))[0])

    y = golden_section(at, lo, hi, tol)
    polished = _polish(m, x, rho, y, lo, hi)
    h_y = at(y)
    if at(polished) <= h_y + POLISH_SLACK * (1.0 + h_y):
        return polished
    return y


def _project_scalar(
    m: FunctionModel, x: float, rho: float, cfg: NumericConfig
) -> list[tuple[float, float]]:
    """All global minimizers (y, h(y)) of the 1-D objective, ascending in y."""
    h = _objective(m, x, rho)
    tol = cfg.projection_refine_tolerance
    ys, a, b = _scan_points(m, x, rho, cfg)
    hs = h(ys)
    logger.debug(
        "Projecting (%g, %g): scanning %d points on [%g, %g]", x, rho, ys.size, a, b
    )

    candidates: list[float] = []
    if ys.size >= 2 and np.any(np.isfinite(hs)):
        left = np.concatenate(([np.inf], hs[:-1]))
        right = np.concatenate((hs[1:], [np.inf]))
        basins = np.flatnonzero(np.isfinite(hs) & (hs <= left) & (hs <= right))
        if basins.size > MAX_REFINED_BASINS:
            order = np.argsort(hs[basins], kind="stable")
            basins = basins[order[:MAX_REFINED_BASINS]]
        for i in np.sort(basins):
            lo_b, hi_b = float(ys[max(i - 1, 0)]), float(ys[min(i + 1, ys.size - 1)])
            width_tol = max(tol, 4 * EPS * abs(float(ys[i])))
            candidates.append(_refine(m, x, rho, lo_b, hi_b, width_tol))
    if not candidates:
        logger.warning(
            "Grid scan found no finite basin around (%g, %g); "
            "using explicit candidates only",
            x,
            rho,
        )

    lo, hi = m.domain
    explicit = [x, min(max(x, lo), hi), *m.kinks]
    explicit += [e for e in (lo, hi) if math.isfinite(e)]
    candidates += [e for e in explicit if lo <= e <= hi and a <= e <= b]

    scored = sorted((y, float(h(np.array([y]))[0])) for y in candidates)
    scored = [(y, hy) for y, hy in scored if math.isfinite(hy)]
    if not scored:
        raise SearchFailure(
            "No finite minimum of the graph distance found for "
            f"(x, rho) = ({x}, {rho})"
        )
    h_min = min(hy for _, hy in scored)
    winners = [(y, hy) for y, hy in scored if hy <= h_min + 1e-10 * (1.0 + h_min)]

    merged: list[tuple[float, float]] = []
    for y, hy in winners:
        if merged and abs(y - merged[-1][0]) <= max(10 * tol, 1e-7 * (1.0 + abs(y))):
            if hy < merged[-1][1]:
                merged[-1] = (y, hy)
        else:
            merged.append((y, hy))
    return merged


def _build(
    m: FunctionModel, x: np.ndarray, rho: float, ps: list[np.ndarray], multivalued: bool
) -> list[GraphProjection]:
    out = []
    for p in ps:
        fp = m.evaluate(p)
        out.append(
            GraphProjection(
                p=p,
                fp=fp,
                squared_distance=float(np.sum((p - x) ** 2) + (fp - rho) ** 2),
                multivalued=multivalued,
                certificate_residual=first_order_residual(m, x, rho, p),
            )
        )
    return out


def _check_point(m: FunctionModel, xv: np.ndarray, rho: float) -> None:
    if xv.size != m.dimension:
        raise ValidationError(
            f"Point of dimension {xv.size} does not match model dimension {m.dimension}"
        )
    if not (np.all(np.isfinite(xv)) and math.isfinite(rho)):
        raise ValidationError(f"Cannot project a non-finite point ({xv}, {rho})")


def project_graph(
    m: FunctionModel, x: Any, rho: float, cfg: NumericConfig | None = None
) -> list[GraphProjection]:
    """
    Compute P_B(x, rho) for B = gra f.

    Args:
        m (FunctionModel): Target function.
        x: Abscissa, a scalar or vector of dimension m.dimension.
        rho (float): Second coordinate.
        cfg (NumericConfig): Grid size and refinement tolerance.

    Returns:
        list[GraphProjection]: Every detected global minimizer, sorted ascending by p.
    """
    cfg = cfg or NumericConfig()
    xv = as_vector(x)
    _check_point(m, xv, rho)
    if isinstance(m, PowerNorm) and m.dimension > 1:
        return radial_project_powernorm(m, xv, rho, cfg)
    if m.dimension > 1:
        raise Unsupported(
            f"Graph projection for {m.family} in dimension {m.dimension} "
            "is not supported"
        )

    minimizers = _project_scalar(m, float(xv[0]), float(rho), cfg)
    ps = [np.array([y]) for y, _ in minimizers]
    return _build(m, xv, float(rho), ps, len(minimizers) > 1)


def radial_project_powernorm(
    m: PowerNorm, x: Any, rho: float, cfg: NumericConfig | None = None
) -> list[GraphProjection]:
    """
    Project onto the graph of alpha*||.||^p by minimizing along the line
    through x: p = t * x/||x||. When x = 0 every direction is optimal and
    the result is reported along e_1 with the multivalued flag set.
    """
    if not isinstance(m, PowerNorm):
        raise ValidationError("radial_project_powernorm requires a PowerNorm model")
    cfg = cfg or NumericConfig()
    xv = as_vector(x)
    _check_point(m, xv, rho)
    nx = float(np.linalg.norm(xv))
    if nx > 0:
        u = xv / nx
    else:
        u = np.zeros(m.dimension)
        u[0] = 1.0
    line = PowerNorm(m.alpha, m.p, 1)
    minimizers = _project_scalar(line, nx, float(rho), cfg)
    spread = nx == 0 and m.dimension > 1 and any(t != 0 for t, _ in minimizers)
    ps = [t * u for t, _ in minimizers]
    return _build(m, xv, float(rho), ps, len(minimizers) > 1 or spread)
