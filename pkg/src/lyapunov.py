"""
Lyapunov-type merit function V(x, rho) = F(x) + rho^2/2 for the DR iteration.

F is the closed-form antiderivative of f/f' carried by each family on its
domain D. Along DR iterates inside D, V decreases by at least the square of
the rho-step over two, and the gradient of V at z_{n+1} is orthogonal to
z_n - z_{n+1}.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd

from src.core import ProductPoint
from src.dr_engine import Trajectory
from src.errors import DomainError, Unsupported
from src.functions import FunctionModel, Interval

logger = logging.getLogger(__name__)

DECREASE_TOL = 1e-9
# V differences lose about this many ulps of |V| to cancellation
ROUNDING_ULPS = 64
ORTHOGONALITY_TOL = 1e-6
IDENTITY_TOL = 1e-7
ZERO_TOL = 1e-12


class Verdict(str, Enum):
    CERTIFIED = "Certified"
    DECREASE_ONLY = "DecreaseOnly"
    VIOLATED = "Violated"


@dataclass
class AssumptionReport:
    """Sampled checks of the three parts of the Lyapunov assumption."""

    derivative_identity: bool
    coercive: bool
    continuous_at_zeros: bool
    details: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.derivative_identity and self.coercive and self.continuous_at_zeros

    def to_dict(self) -> dict[str, Any]:
        return {
            "derivative_identity": self.derivative_identity,
            "coercive": self.coercive,
            "continuous_at_zeros": self.continuous_at_zeros,
            "passed": self.passed,
            "details": self.details,
        }


@dataclass
class LyapunovCertificate:
    family: FunctionModel
    domain_D: Interval | None
    values: list[float]
    decrease_margins: list[float]
    orthogonality_residuals: list[float]
    in_domain_flags: list[bool]
    verdict: Verdict
    first_stable_index: int | None

    def to_frame(self) -> pd.DataFrame:
        """One row per iterate; step quantities sit on the row of z_{n+1}."""
        return pd.DataFrame(
            {
                "n": np.arange(len(self.values)),
                "V": self.values,
                "margin": [math.nan, *self.decrease_margins],
                "orthogonality_residual": [math.nan, *self.orthogonality_residuals],
                "in_domain": self.in_domain_flags,
            }
        )

    def to_dict(self) -> dict[str, Any]:
        finite = [v for v in self.decrease_margins if math.isfinite(v)]
        ortho = [v for v in self.orthogonality_residuals if math.isfinite(v)]
        return {
            "family": self.family.to_json(),
            "domain_D": list(self.domain_D) if self.domain_D is not None else None,
            "verdict": self.verdict.value,
            "first_stable_index": self.first_stable_index,
            "steps": len(self.decrease_margins),
            "min_decrease_margin": min(finite) if finite else None,
            "max_orthogonality_residual": max(ortho) if ortho else None,
        }


def lyapunov_value(m: FunctionModel, z: ProductPoint) -> float:
    """V(x, rho) = F(x) + rho^2/2; DomainError outside D."""
    return m.lyapunov(z.x) + 0.5 * z.rho**2


def _sample_range(m: FunctionModel) -> tuple[float, float]:
    lo, hi = m.lyapunov_domain or (-math.inf, math.inf)
    center = float(m.lyapunov_zero[0])
    a = lo if math.isfinite(lo) else center - 10.0
    b = hi if math.isfinite(hi) else center + 10.0
    margin = 1e-3 * (b - a)
    lower = a + margin if math.isfinite(lo) else a
    upper = b - margin if math.isfinite(hi) else b
    return lower, upper


def _outward_path(m: FunctionModel, direction: int) -> list[float]:
    """Points moving from the zero towards one end of D (boundary or +-R)."""
    lo, hi = m.lyapunov_domain or (-math.inf, math.inf)
    center = float(m.lyapunov_zero[0])
    end = hi if direction > 0 else lo
    if math.isfinite(end):
        return [end + (center - end) * 10.0 ** (-k) for k in range(1, 4)]
    return [center + direction * r for r in (10.0, 100.0, 1000.0)]


def check_assumption_V(
    m: FunctionModel,
    sample_count: int = 100,
    rng: np.random.Generator | None = None,
) -> AssumptionReport:
    """
    Sample the Lyapunov assumption for a family with closed-form F.

    (a) grad F(x) = f(x) grad f(x) / ||grad f(x)||^2 at random points of D,
    (b) F increases from its zero towards the ends of D,
    (c) F is finite and continuous at the zeros of f inside D.
    """
    if m.lyapunov_domain is None:
        raise Unsupported(f"{m.family} has no closed-form Lyapunov function")
    rng = rng if rng is not None else np.random.default_rng(0)
    details: list[str] = []
    n = m.dimension

    a, b = _sample_range(m)
    identity_ok = True
    checked = 0
    for _ in range(sample_count):
        x = rng.uniform(a, b, size=n)
        if not m.in_lyapunov_domain(x) or not m.is_differentiable_at(x):
            continue
        g = m.grad(x)
        gg = float(g @ g)
        if gg == 0:
            continue
        expected = m.evaluate(x) * g / gg
        got = m.lyapunov_grad(x)
        checked += 1
        scale = 1.0 + float(np.linalg.norm(got))
        if np.linalg.norm(got - expected) > IDENTITY_TOL * scale:
            identity_ok = False
            details.append(
                f"grad F mismatch at x = {x.tolist()}: "
                f"{got.tolist()} vs {expected.tolist()}"
            )
            break
    logger.debug("Checked the derivative identity at %d sampled points", checked)

    def F_line(t: float) -> float:
        x = np.zeros(n)
        x[0] = t
        return m.lyapunov(x)

    center = float(m.lyapunov_zero[0])
    coercive = True
    for direction in (-1, 1):
        values = [F_line(center)] + [F_line(t) for t in _outward_path(m, direction)]
        if not all(v2 > v1 for v1, v2 in zip(values, values[1:])):
            coercive = False
            side = "upper" if direction > 0 else "lower"
            details.append(
                f"F does not increase towards the {side} end of D: {values}"
            )

    continuous = True
    for zero in m.known_zeros:
        if not m.in_lyapunov_domain(zero):
            continue
        h = 1e-6 * (1.0 + float(np.linalg.norm(zero)))
        F0 = m.lyapunov(zero)
        step = np.zeros(n)
        step[0] = h
        neighbours = [
            m.lyapunov(zero + s)
            for s in (step, -step)
            if m.in_lyapunov_domain(zero + s)
        ]
        if not math.isfinite(F0) or any(abs(v - F0) > 1e-4 for v in neighbours):
            continuous = False
            details.append(f"F is not continuous at the zero {zero.tolist()}")

    return AssumptionReport(identity_ok, coercive, continuous, details)


def check_trajectory(m: FunctionModel, t: Trajectory) -> LyapunovCertificate:
    """
    Evaluate the decrease inequality and the orthogonality identity at every
    step whose end points lie in D. Violations are reported in the verdict.
    """
    if m.lyapunov_domain is None:
        raise Unsupported(f"{m.family} has no closed-form Lyapunov function")
    zs = t.iterates
    flags = [m.in_lyapunov_domain(z.x) for z in zs]
    values = [lyapunov_value(m, z) if ok else math.nan for z, ok in zip(zs, flags)]

    margins: list[float] = []
    residuals: list[float] = []
    for n in range(len(zs) - 1):
        z, z_next = zs[n], zs[n + 1]
        if flags[n] and flags[n + 1]:
            margins.append(values[n] - values[n + 1] - 0.5 * (z.rho - z_next.rho) ** 2)
        else:
            margins.append(math.nan)
        residuals.append(_orthogonality(m, z, z_next) if flags[n + 1] else math.nan)

    eps = float(np.finfo(float).eps)
    decrease_ok = all(
        v >= -(DECREASE_TOL + ROUNDING_ULPS * eps * abs(values[n]))
        for n, v in enumerate(margins)
        if math.isfinite(v)
    )
    ortho_ok = all(
        r <= ORTHOGONALITY_TOL * (1.0 + zs[n + 1].distance(zs[n]))
        for n, r in enumerate(residuals)
        if math.isfinite(r)
    )
    if decrease_ok and ortho_ok:
        verdict = Verdict.CERTIFIED
    elif decrease_ok:
        verdict = Verdict.DECREASE_ONLY
    else:
        verdict = Verdict.VIOLATED

    first_stable = None
    for k in range(len(flags) - 1, -1, -1):
        if not flags[k]:
            break
        first_stable = k
    logger.info("Lyapunov check over %d steps: %s", len(margins), verdict.value)
    return LyapunovCertificate(
        m, m.lyapunov_domain, values, margins, residuals, flags, verdict, first_stable
    )


def _orthogonality(m: FunctionModel, z: ProductPoint, z_next: ProductPoint) -> float:
    """|<(F'(x+), rho+), z - z+>|, with F'(x+) = 0 when f(x+) = 0."""
    f_next = m.evaluate(z_next.x)
    if abs(f_next) <= ZERO_TOL:
        return abs(z_next.rho * (z.rho - z_next.rho))
    if m.symmetric_subdifferential(z_next.x).contains(np.zeros(m.dimension)):
        return math.nan
    try:
        dF = m.lyapunov_grad(z_next.x)
    except (Unsupported, DomainError):
        return math.nan
    return abs(float(dF @ (z.x - z_next.x)) + z_next.rho * (z.rho - z_next.rho))


def level_set_bounded(
    m: FunctionModel, xi: float, half_width: float = 1e3, points: int = 201
) -> bool:
    """
    Coarse check that {z : V(z) <= xi} stays away from the outer edge of a
    box around (zero, 0) on every side where D is unbounded.
    """
    lo, hi = m.lyapunov_domain or (-math.inf, math.inf)
    center = float(m.lyapunov_zero[0])
    a = max(center - half_width, lo)
    b = min(center + half_width, hi)
    pad = 1e-9 * (b - a)
    start = a + pad if math.isfinite(lo) and a == lo else a
    stop = b - pad if math.isfinite(hi) and b == hi else b
    xs = np.linspace(start, stop, points)
    rhos = np.linspace(-half_width, half_width, points)

    def V(x: float, rho: float) -> float:
        v = np.zeros(m.dimension)
        v[0] = x
        return m.lyapunov(v) + 0.5 * rho * rho

    ring = [(x, rhos[0]) for x in xs] + [(x, rhos[-1]) for x in xs]
    if a == center - half_width:
        ring += [(xs[0], r) for r in rhos]
    if b == center + half_width:
        ring += [(xs[-1], r) for r in rhos]
    return all(V(x, r) > xi for x, r in ring)
