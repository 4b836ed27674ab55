"""
Catalogue of zero-finding targets f with closed-form derivatives, one-sided
subdifferentials and Lyapunov antiderivatives F (F' = f / f' on D).

Families: linear, exponential, alpha*||x||^p, alpha*|x|^p*sgn(x), Benoist's
circle arc, a nonsmooth nonconvex piecewise function, a flat-then-parabolic
convex function, and user-supplied Custom models.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np

from src.core import as_vector
from src.errors import DomainError, Unsupported, ValidationError

Interval = tuple[float, float]
REAL_LINE: Interval = (-math.inf, math.inf)


@dataclass(frozen=True, eq=False)
class SubdiffSet:
    """
    A subdifferential value. In one dimension a finite union of closed
    (possibly degenerate or unbounded) intervals; in n dimensions an optional
    singleton vector. No components means the empty set.
    """

    intervals: tuple[Interval, ...] = ()
    vector: np.ndarray | None = None

    @classmethod
    def empty(cls) -> SubdiffSet:
        return cls()

    @classmethod
    def point(cls, value: float) -> SubdiffSet:
        return cls(((float(value), float(value)),))

    @classmethod
    def interval(cls, lo: float, hi: float) -> SubdiffSet:
        if lo > hi:
            raise ValidationError(f"Empty interval [{lo}, {hi}]")
        return cls(((float(lo), float(hi)),))

    @classmethod
    def singleton(cls, v: Any) -> SubdiffSet:
        vec = as_vector(v)
        if vec.size == 1:
            return cls.point(vec[0])
        return cls(vector=vec.copy())

    @property
    def is_empty(self) -> bool:
        return not self.intervals and self.vector is None

    def union(self, other: SubdiffSet) -> SubdiffSet:
        if self.vector is not None or other.vector is not None:
            if self.is_empty:
                return other
            if other.is_empty:
                return self
            if (
                self.vector is not None
                and other.vector is not None
                and np.allclose(self.vector, other.vector, rtol=0, atol=1e-15)
            ):
                return self
            raise Unsupported(
                "Only singleton subdifferentials are represented in dimension > 1"
            )
        merged: list[list[float]] = []
        for lo, hi in sorted(self.intervals + other.intervals):
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return SubdiffSet(tuple((lo, hi) for lo, hi in merged))

    def distance(self, v: Any) -> float:
        """Distance from v to the set (inf for the empty set)."""
        if self.vector is not None:
            return float(np.linalg.norm(as_vector(v) - self.vector))
        if not self.intervals:
            return math.inf
        t = float(as_vector(v)[0])
        return min(max(lo - t, 0.0, t - hi) for lo, hi in self.intervals)

    def contains(self, v: Any, tol: float = 0.0) -> bool:
        return self.distance(v) <= tol

    def image_distance(self, target: Any, base: Any, scale: float) -> float:
        """dist(target, base + scale * S)."""
        if self.is_empty:
            return math.inf
        if scale == 0.0:
            return float(np.linalg.norm(as_vector(target) - as_vector(base)))
        if self.vector is not None:
            offset = as_vector(target) - as_vector(base) - scale * self.vector
            return float(np.linalg.norm(offset))
        w = (float(as_vector(target)[0]) - float(as_vector(base)[0])) / scale
        return abs(scale) * self.distance(w)

    def to_dict(self) -> dict[str, Any]:
        if self.vector is not None:
            return {"vector": [float(v) for v in self.vector]}
        return {"intervals": [[lo, hi] for lo, hi in self.intervals]}


class FunctionModel(ABC):
    """
    Base class of a target f: X -> R. One-dimensional families implement the
    vectorized hooks ``_f``, ``_df``, ``_d2f``, ``_F`` and ``_dF`` on arrays of
    abscissae; PowerNorm overrides the vector methods for n > 1.
    """

    family: ClassVar[str] = "abstract"
    dimension: int = 1

    # --- family hooks -----------------------------------------------------------------
    @property
    def domain(self) -> Interval:
        return REAL_LINE

    @property
    def nondifferentiable_points(self) -> tuple[float, ...]:
        return ()

    @property
    def non_twice_differentiable_points(self) -> tuple[float, ...]:
        return self.nondifferentiable_points

    @property
    def kinks(self) -> tuple[float, ...]:
        """Abscissae always tried as explicit projection candidates."""
        return self.nondifferentiable_points

    @property
    def lyapunov_domain(self) -> Interval | None:
        """Open interval D on which the closed-form F is convex with F' = f / f'."""
        return REAL_LINE

    @property
    def antiderivative_domain(self) -> Interval | None:
        """Where the closed form of F can be evaluated; contains D."""
        return self.lyapunov_domain

    @property
    @abstractmethod
    def known_zeros(self) -> list[np.ndarray]: ...

    @property
    def lyapunov_zero(self) -> np.ndarray:
        """The zero of f inside D."""
        return self.known_zeros[0]

    @abstractmethod
    def _f(self, t: np.ndarray) -> np.ndarray: ...

    def _df(self, t: np.ndarray) -> np.ndarray:
        raise Unsupported(f"{self.family} has no closed-form derivative")

    def _d2f(self, t: np.ndarray) -> np.ndarray:
        raise Unsupported(f"{self.family} has no closed-form second derivative")

    def _F(self, t: np.ndarray) -> np.ndarray:
        raise Unsupported(f"{self.family} has no closed-form Lyapunov function")

    def _dF(self, t: np.ndarray) -> np.ndarray:
        raise Unsupported(f"{self.family} has no closed-form Lyapunov function")

    def _kink_lower(self, t: float) -> SubdiffSet:
        return SubdiffSet.empty()

    def _kink_upper(self, t: float) -> SubdiffSet:
        return SubdiffSet.empty()

    def _kink_lipschitz(self, t: float) -> bool:
        return True

    @abstractmethod
    def params(self) -> dict[str, Any]: ...

    # --- public API ----------------------------------------------------------
    def _point(self, x: Any) -> np.ndarray:
        v = as_vector(x)
        if v.size != self.dimension:
            raise ValidationError(
                f"{self.family} expects a vector of dimension {self.dimension}, "
                f"got {v.size}"
            )
        return v

    def in_domain(self, x: Any) -> bool:
        v = self._point(x)
        lo, hi = self.domain
        return bool(np.all((v >= lo) & (v <= hi)))

    def _checked(self, x: Any) -> np.ndarray:
        v = self._point(x)
        if not np.all(np.isfinite(v)):
            raise DomainError(f"Non-finite point {v}")
        if not self.in_domain(v):
            raise DomainError(
                f"x = {v} lies outside dom f = {self.domain} for {self.family}"
            )
        return v

    def values(self, t: np.ndarray) -> np.ndarray:
        """Vectorized f along the real line (1-D families); NaN outside dom f."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.domain
        inside = (t >= lo) & (t <= hi)
        out = np.full(t.shape, np.nan)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out[inside] = self._f(t[inside])
        return out

    def evaluate(self, x: Any) -> float:
        v = self._checked(x)
        with np.errstate(over="ignore"):
            return float(self._f(v)[0])

    def is_differentiable_at(self, x: Any) -> bool:
        t = float(self._checked(x)[0])
        return t not in self.nondifferentiable_points

    def grad(self, x: Any) -> np.ndarray:
        v = self._checked(x)
        if not self.is_differentiable_at(v):
            raise Unsupported(f"{self.family} is not differentiable at x = {v[0]}")
        return self._df(v)

    def hess(self, x: Any) -> np.ndarray:
        v = self._checked(x)
        if float(v[0]) in self.non_twice_differentiable_points:
            raise Unsupported(
                f"{self.family} is not twice differentiable at x = {v[0]}"
            )
        return self._d2f(v).reshape(1, 1)

    def lower_subdifferential(self, x: Any) -> SubdiffSet:
        """Limiting subdifferential (the branch used when f(p) >= rho)."""
        v = self._checked(x)
        if self.is_differentiable_at(v):
            return SubdiffSet.singleton(self._df(v))
        return self._kink_lower(float(v[0]))

    def upper_subdifferential(self, x: Any) -> SubdiffSet:
        """Limiting upper subdifferential -d(-f) (the branch used when f(p) < rho)."""
        v = self._checked(x)
        if self.is_differentiable_at(v):
            return SubdiffSet.singleton(self._df(v))
        return self._kink_upper(float(v[0]))

    def symmetric_subdifferential(self, x: Any) -> SubdiffSet:
        return self.lower_subdifferential(x).union(self.upper_subdifferential(x))

    def is_locally_lipschitz(self, x: Any) -> bool:
        v = self._checked(x)
        if self.is_differentiable_at(v):
            return True
        return self._kink_lipschitz(float(v[0]))

    @property
    def has_critical_zero(self) -> bool:
        """Whether 0 lies in the symmetric subdifferential at a known zero."""
        origin = np.zeros(self.dimension)
        return any(
            self.symmetric_subdifferential(z).contains(origin) for z in self.known_zeros
        )

    def in_lyapunov_domain(self, x: Any) -> bool:
        return _inside(self.lyapunov_domain, self._point(x))

    def _antiderivative_point(self, x: Any) -> np.ndarray:
        if self.lyapunov_domain is None:
            raise Unsupported(f"{self.family} has no closed-form Lyapunov function")
        v = self._point(x)
        if not _inside(self.antiderivative_domain, v):
            raise DomainError(
                f"x = {v} lies outside {self.antiderivative_domain} for {self.family}"
            )
        return v

    def lyapunov(self, x: Any) -> float:
        """Closed-form F(x); defined on D and wherever the antiderivative extends."""
        return float(self._F(self._antiderivative_point(x))[0])

    def lyapunov_grad(self, x: Any) -> np.ndarray:
        v = self._antiderivative_point(x)
        return np.asarray(self._dF(v), dtype=float).reshape(self.dimension)

    def to_json(self) -> dict[str, Any]:
        return {"family": self.family, **self.params()}

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


def _inside(dom: Interval | None, v: np.ndarray) -> bool:
    if dom is None:
        return False
    lo, hi = dom
    if math.isinf(lo) and math.isinf(hi):
        return bool(np.all(np.isfinite(v)))
    return bool(np.all((v > lo) & (v < hi)))


def _require_nonzero(name: str, value: float) -> None:
    if not math.isfinite(value) or value == 0:
        raise ValidationError(f"{name} must be a finite nonzero number, got {value!r}")


def _require_positive(name: str, value: float) -> None:
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True, repr=False, eq=False)
class Linear(FunctionModel):
    """f(x) = alpha*x - beta."""

    alpha: float
    beta: float = 0.0
    family: ClassVar[str] = "linear"

    def __post_init__(self) -> None:
        _require_nonzero("alpha", self.alpha)
        if not math.isfinite(self.beta):
            raise ValidationError(f"beta must be finite, got {self.beta!r}")

    @property
    def known_zeros(self) -> list[np.ndarray]:
        return [np.array([self.beta / self.alpha])]

    def _f(self, t):
        return self.alpha * t - self.beta

    def _df(self, t):
        return np.full_like(t, self.alpha, dtype=float)

    def _d2f(self, t):
        return np.zeros_like(t, dtype=float)

    def _F(self, t):
        return 0.5 * t**2 - (self.beta / self.alpha) * t

    def _dF(self, t):
        return t - self.beta / self.alpha

    def params(self):
        return {"alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True, repr=False, eq=False)
class Exponential(FunctionModel):
    """f(x) = alpha*exp(x) - beta with alpha, beta > 0."""

    alpha: float
    beta: float
    family: ClassVar[str] = "exponential"

    def __post_init__(self) -> None:
        _require_positive("alpha", self.alpha)
        _require_positive("beta", self.beta)

    @property
    def known_zeros(self) -> list[np.ndarray]:
        return [np.array([math.log(self.beta / self.alpha)])]

    def _f(self, t):
        return self.alpha * np.exp(t) - self.beta

    def _df(self, t):
        return self.alpha * np.exp(t)

    def _d2f(self, t):
        return self.alpha * np.exp(t)

    def _F(self, t):
        return t + (self.beta / self.alpha) * np.exp(-t)

    def _dF(self, t):
        return 1.0 - (self.beta / self.alpha) * np.exp(-t)

    def params(self):
        return {"alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True, repr=False, eq=False)
class PowerNorm(FunctionModel):
    """f(x) = alpha*||x||^p on R^n."""

    alpha: float
    p: float
    dimension: int = 1
    family: ClassVar[str] = "power_norm"

    def __post_init__(self) -> None:
        _require_nonzero("alpha", self.alpha)
        _require_positive("p", self.p)
        if not isinstance(self.dimension, int) or self.dimension < 1:
            raise ValidationError(
                f"dimension must be an integer >= 1, got {self.dimension!r}"
            )

    @property
    def nondifferentiable_points(self):
        return () if self.p > 1 else (0.0,)

    @property
    def non_twice_differentiable_points(self):
        return () if self.p >= 2 else (0.0,)

    @property
    def kinks(self):
        return (0.0,)

    @property
    def known_zeros(self) -> list[np.ndarray]:
        return [np.zeros(self.dimension)]

    def _f(self, t):
        return self.alpha * np.abs(t) ** self.p

    def _df(self, t):
        return self.alpha * self.p * np.abs(t) ** (self.p - 1) * np.sign(t)

    def _d2f(self, t):
        return self.alpha * self.p * (self.p - 1) * np.abs(t) ** (self.p - 2)

    def _F(self, t):
        return t**2 / (2 * self.p)

    def _dF(self, t):
        return t / self.p

    def values(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return self.alpha * np.abs(t) ** self.p

    def evaluate(self, x: Any) -> float:
        v = self._checked(x)
        return float(self.alpha * np.linalg.norm(v) ** self.p)

    def is_differentiable_at(self, x: Any) -> bool:
        v = self._checked(x)
        return self.p > 1 or bool(np.any(v != 0))

    def grad(self, x: Any) -> np.ndarray:
        v = self._checked(x)
        r = float(np.linalg.norm(v))
        if r == 0:
            if self.p > 1:
                return np.zeros(self.dimension)
            raise Unsupported(
                f"alpha*||x||^p with p = {self.p} is not differentiable at 0"
            )
        return self.alpha * self.p * r ** (self.p - 2) * v

    def hess(self, x: Any) -> np.ndarray:
        v = self._checked(x)
        r = float(np.linalg.norm(v))
        n = self.dimension
        if r == 0:
            if self.p == 2:
                return 2 * self.alpha * np.eye(n)
            if self.p > 2:
                return np.zeros((n, n))
            raise Unsupported(
                f"alpha*||x||^p with p = {self.p} is not twice differentiable at 0"
            )
        u = v / r
        shape = np.eye(n) + (self.p - 2) * np.outer(u, u)
        return self.alpha * self.p * r ** (self.p - 2) * shape

    def _origin_sets(self) -> tuple[SubdiffSet, SubdiffSet]:
        a = abs(self.alpha)
        if self.p > 1:
            zero = SubdiffSet.singleton(np.zeros(self.dimension))
            return zero, zero
        if self.dimension > 1:
            return SubdiffSet.empty(), SubdiffSet.empty()
        if self.p == 1:
            full, corners = SubdiffSet.interval(-a, a), SubdiffSet(((-a, -a), (a, a)))
        else:
            full, corners = SubdiffSet.interval(-math.inf, math.inf), SubdiffSet.empty()
        return (full, corners) if self.alpha > 0 else (corners, full)

    def lower_subdifferential(self, x: Any) -> SubdiffSet:
        v = self._checked(x)
        if np.any(v != 0):
            return SubdiffSet.singleton(self.grad(v))
        return self._origin_sets()[0]

    def upper_subdifferential(self, x: Any) -> SubdiffSet:
        v = self._checked(x)
        if np.any(v != 0):
            return SubdiffSet.singleton(self.grad(v))
        return self._origin_sets()[1]

    def is_locally_lipschitz(self, x: Any) -> bool:
        v = self._checked(x)
        return self.p >= 1 or bool(np.any(v != 0))

    def lyapunov(self, x: Any) -> float:
        v = self._point(x)
        return float(np.dot(v, v) / (2 * self.p))

    def lyapunov_grad(self, x: Any) -> np.ndarray:
        return self._point(x) / self.p

    def params(self):
        return {"alpha": self.alpha, "p": self.p, "dimension": self.dimension}


@dataclass(frozen=True, repr=False, eq=False)
class SignedPower(FunctionModel):
    """f(x) = alpha*|x|^p*sgn(x)."""

    alpha: float
    p: float
    family: ClassVar[str] = "signed_power"

    def __post_init__(self) -> None:
        _require_nonzero("alpha", self.alpha)
        _require_positive("p", self.p)

    @property
    def nondifferentiable_points(self):
        return () if self.p >= 1 else (0.0,)

    @property
    def non_twice_differentiable_points(self):
        return () if self.p > 2 or self.p == 1 else (0.0,)

    @property
    def kinks(self):
        return (0.0,)

    @property
    def known_zeros(self) -> list[np.ndarray]:
        return [np.zeros(1)]

    def _f(self, t):
        return self.alpha * np.abs(t) ** self.p * np.sign(t)

    def _df(self, t):
        if self.p == 1:
            return np.full_like(t, self.alpha, dtype=float)
        with np.errstate(divide="ignore"):
            return self.alpha * self.p * np.abs(t) ** (self.p - 1)

    def _d2f(self, t):
        if self.p == 1:
            return np.zeros_like(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = self.alpha * self.p * (self.p - 1)
            return scale * np.abs(t) ** (self.p - 2) * np.sign(t)

    def _F(self, t):
        return t**2 / (2 * self.p)

    def _dF(self, t):
        return t / self.p

    def _kink_lipschitz(self, t):
        return self.p >= 1

    def params(self):
        return {"alpha": self.alpha, "p": self.p}


@dataclass(frozen=True, repr=False, eq=False)
class Benoist(FunctionModel):
    """
    f(x) = -beta*sqrt(1 - x^2) + alpha on [-1, 1] with 0 < alpha < beta.

    ``branch`` selects which zero (and which half of ]-1, 1[ minus {0}) the
    Lyapunov analysis refers to.
    """

    alpha: float
    beta: float = 1.0
    branch: int = 1
    family: ClassVar[str] = "benoist"

    def __post_init__(self) -> None:
        _require_positive("beta", self.beta)
        if not (0 < self.alpha < self.beta):
            raise ValidationError(
                "Benoist requires 0 < alpha < beta, "
                f"got alpha={self.alpha}, beta={self.beta}"
            )
        if self.branch not in (1, -1):
            raise ValidationError(f"branch must be +1 or -1, got {self.branch!r}")

    @property
    def domain(self) -> Interval:
        return (-1.0, 1.0)

    @property
    def nondifferentiable_points(self):
        return (-1.0, 1.0)

    @property
    def convexity_edge(self) -> float:
        """
        Largest |x| with F''(x) >= 0. F'' = 1 + (1 - c/s)/x^2 with s = sqrt(1 - x^2)
        and c = alpha/beta, so the edge is sqrt(1 - s^2) for the root s in ]0, c[
        of s^3 - 2s + c.
        """
        c = self.alpha / self.beta
        theta = math.acos(-0.75 * c * math.sqrt(1.5))
        s = 2.0 * math.sqrt(2.0 / 3.0) * math.cos(theta / 3.0 - 2.0 * math.pi / 3.0)
        return math.sqrt(1.0 - s * s)

    @property
    def lyapunov_domain(self) -> Interval:
        edge = self.convexity_edge
        return (0.0, edge) if self.branch > 0 else (-edge, 0.0)

    @property
    def antiderivative_domain(self) -> Interval:
        return (0.0, 1.0) if self.branch > 0 else (-1.0, 0.0)

    @property
    def known_zeros(self) -> list[np.ndarray]:
        r = math.sqrt(1.0 - (self.alpha / self.beta) ** 2)
        return [np.array([-r]), np.array([r])]

    @property
    def lyapunov_zero(self) -> np.ndarray:
        return self.known_zeros[1] if self.branch > 0 else self.known_zeros[0]

    def _f(self, t):
        return -self.beta * np.sqrt(1.0 - t**2) + self.alpha

    def _df(self, t):
        return self.beta * t / np.sqrt(1.0 - t**2)

    def _d2f(self, t):
        return self.beta / (1.0 - t**2) ** 1.5

    def _F(self, t):
        c = self.alpha / self.beta
        s = np.sqrt(1.0 - t**2)
        return 0.5 * t**2 - (1.0 - c) * np.log(np.abs(t)) + c * s - c * np.log1p(s)

    def _dF(self, t):
        c = self.alpha / self.beta
        return t - 1.0 / t + c * np.sqrt(1.0 - t**2) / t

    def _kink_lower(self, t):
        return SubdiffSet.empty()

    def _kink_upper(self, t):
        return SubdiffSet.interval(-math.inf, math.inf)

    def _kink_lipschitz(self, t):
        return False

    def params(self):
        return {"alpha": self.alpha, "beta": self.beta, "branch": self.branch}


@dataclass(frozen=True, repr=False, eq=False)
class PiecewiseNonconvex(FunctionModel):
    """f(x) = x^p for x >= 0 and x for x < 0, with p > 1."""

    p: float = 2.0
    family: ClassVar[str] = "piecewise_nonconvex"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.p) and self.p > 1):
            raise ValidationError(f"piecewise_nonconvex requires p > 1, got {self.p!r}")

    @property
    def nondifferentiable_points(self):
        return (0.0,)

    @property
    def known_zeros(self) -> list[np.ndarray]:
        return [np.zeros(1)]

    def _f(self, t):
        return np.where(t >= 0, np.abs(t) ** self.p, t)

    def _df(self, t):
        return np.where(t > 0, self.p * np.abs(t) ** (self.p - 1), 1.0)

    def _d2f(self, t):
        return np.where(t > 0, self.p * (self.p - 1) * np.abs(t) ** (self.p - 2), 0.0)

    def _F(self, t):
        return np.where(t >= 0, t**2 / (2 * self.p), 0.5 * t**2)

    def _dF(self, t):
        return np.where(t >= 0, t / self.p, t)

    def _kink_lower(self, t):
        return SubdiffSet(((0.0, 0.0), (1.0, 1.0)))

    def _kink_upper(self, t):
        return SubdiffSet.interval(0.0, 1.0)

    def params(self):
        return {"p": self.p}


@dataclass(frozen=True, repr=False, eq=False)
class PiecewiseConvex(FunctionModel):
    """f(x) = -1 for x <= 0 and x^2/2 - 1 for x > 0."""

    family: ClassVar[str] = "piecewise_convex"

    @property
    def non_twice_differentiable_points(self):
        return (0.0,)

    @property
    def kinks(self):
        return (0.0,)

    @property
    def lyapunov_domain(self) -> Interval:
        return (0.0, math.inf)

    @property
    def known_zeros(self) -> list[np.ndarray]:
        return [np.array([math.sqrt(2.0)])]

    def _f(self, t):
        return np.where(t > 0, 0.5 * t**2 - 1.0, -1.0)

    def _df(self, t):
        return np.where(t > 0, t, 0.0)

    def _d2f(self, t):
        return np.where(t > 0, 1.0, 0.0)

    def _F(self, t):
        return 0.25 * t**2 - np.log(t)

    def _dF(self, t):
        return 0.5 * t - 1.0 / t

    def params(self):
        return {}


@dataclass(frozen=True, repr=False, eq=False)
class Custom(FunctionModel):
    """
    A user-supplied one-dimensional target. ``subdiff`` must return the
    symmetric subdifferential; ``lower``/``upper`` default to it.
    """

    eval_fn: Callable[[float], float]
    subdiff_fn: Callable[[float], SubdiffSet]
    grad_fn: Callable[[float], float] | None = None
    hess_fn: Callable[[float], float] | None = None
    lower_fn: Callable[[float], SubdiffSet] | None = None
    upper_fn: Callable[[float], SubdiffSet] | None = None
    custom_domain: Interval = REAL_LINE
    zeros: tuple[float, ...] = ()
    candidate_points: tuple[float, ...] = field(default_factory=tuple)
    dimension: int = 1
    family: ClassVar[str] = "custom"

    def __post_init__(self) -> None:
        if self.dimension != 1:
            raise Unsupported("Custom models are supported in dimension 1 only")

    @property
    def domain(self) -> Interval:
        return self.custom_domain

    @property
    def kinks(self):
        return tuple(self.candidate_points)

    @property
    def lyapunov_domain(self) -> Interval | None:
        return None

    @property
    def known_zeros(self) -> list[np.ndarray]:
        return [np.array([z]) for z in self.zeros]

    def _f(self, t):
        return np.array([self.eval_fn(float(s)) for s in np.atleast_1d(t)], dtype=float)

    def is_differentiable_at(self, x: Any) -> bool:
        self._checked(x)
        return self.grad_fn is not None

    def grad(self, x: Any) -> np.ndarray:
        v = self._checked(x)
        if self.grad_fn is None:
            raise Unsupported("Custom model has no gradient")
        return np.array([float(self.grad_fn(float(v[0])))])

    def hess(self, x: Any) -> np.ndarray:
        v = self._checked(x)
        if self.hess_fn is None:
            raise Unsupported("Custom model has no Hessian")
        return np.array([[float(self.hess_fn(float(v[0])))]])

    def symmetric_subdifferential(self, x: Any) -> SubdiffSet:
        v = self._checked(x)
        return self.subdiff_fn(float(v[0]))

    def lower_subdifferential(self, x: Any) -> SubdiffSet:
        v = self._checked(x)
        return (self.lower_fn or self.subdiff_fn)(float(v[0]))

    def upper_subdifferential(self, x: Any) -> SubdiffSet:
        v = self._checked(x)
        return (self.upper_fn or self.subdiff_fn)(float(v[0]))

    def is_locally_lipschitz(self, x: Any) -> bool:
        return not self.symmetric_subdifferential(x).is_empty

    def params(self):
        return {}

    def to_json(self) -> dict[str, Any]:
        raise Unsupported("Custom models cannot be serialized to JSON")


FAMILIES: dict[str, type[FunctionModel]] = {
    cls.family: cls
    for cls in (
        Linear,
        Exponential,
        PowerNorm,
        SignedPower,
        Benoist,
        PiecewiseNonconvex,
        PiecewiseConvex,
    )
}


def _normalize_family(name: str) -> str:
    key = name.strip().lower().replace("-", "").replace("_", "")
    for family in FAMILIES:
        if family.replace("_", "") == key:
            return family
    raise ValidationError(
        f"Unknown family {name!r}; expected one of {sorted(FAMILIES)}"
    )


def model_from_json(obj: dict[str, Any]) -> FunctionModel:
    """
    Build a FunctionModel from {"family": ..., <params>}.

    Args:
        obj (dict): Parsed family JSON; unknown keys are rejected.

    Returns:
        FunctionModel: The validated model.
    """
    if not isinstance(obj, dict) or "family" not in obj:
        raise ValidationError('Family JSON must be an object with a "family" key')
    family = _normalize_family(str(obj["family"]))
    cls = FAMILIES[family]
    params = {k: v for k, v in obj.items() if k != "family"}
    allowed = set(cls.__dataclass_fields__) - {"family"}  # type: ignore[attr-defined]
    unknown = set(params) - allowed
    if unknown:
        raise ValidationError(
            f"Unknown fields for family {family!r}: {sorted(unknown)}"
        )
    try:
        return cls(**params)
    except TypeError as e:
        raise ValidationError(f"Invalid parameters for family {family!r}: {e}") from e


def evaluate(m: FunctionModel, x: Any) -> float:
    return m.evaluate(x)


def symmetric_subdifferential(m: FunctionModel, x: Any) -> SubdiffSet:
    return m.symmetric_subdifferential(x)


def closed_form_lyapunov(m: FunctionModel, x: Any) -> float:
    return m.lyapunov(x)
