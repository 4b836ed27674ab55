"""
Product-space primitives for the feasibility problem A = X x {0}, B = gra f.

Iterates live in X x R with X = R^n; the norm is sqrt(||x||^2 + rho^2).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Any

import numpy as np

from src.errors import ConfigError, ValidationError


def as_vector(x: Any) -> np.ndarray:
    """
    Coerce a scalar or sequence into a 1-D float64 array.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"Expected a non-empty vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class ProductPoint:
    """An iterate z = (x, rho) in X x R."""

    x: np.ndarray
    rho: float

    def __post_init__(self) -> None:
        x = as_vector(self.x).copy()
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "rho", float(self.rho))

    @classmethod
    def of(cls, x: Any, rho: float = 0.0) -> ProductPoint:
        return cls(as_vector(x), rho)

    @property
    def dim(self) -> int:
        return int(self.x.size)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x))) and math.isfinite(self.rho)

    def as_array(self) -> np.ndarray:
        return np.append(self.x, self.rho)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def distance(self, other: ProductPoint) -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))

    def isclose(self, other: ProductPoint, tol: float = 1e-12) -> bool:
        return self.dim == other.dim and self.distance(other) <= tol

    def to_dict(self) -> dict[str, Any]:
        return {"x": [float(v) for v in self.x], "rho": self.rho}

    def __repr__(self) -> str:
        xs = ", ".join(f"{v:.10g}" for v in self.x)
        return f"ProductPoint(x=[{xs}], rho={self.rho:.10g})"


@dataclass(frozen=True)
class NumericConfig:
    """Tolerances and search parameters shared by the solvers."""

    step_tolerance: float = 1e-6
    residual_tolerance: float = 1e-6
    max_iterations: int = 1000
    projection_grid_points: int = 4097
    projection_refine_tolerance: float = 1e-12

    def __post_init__(self) -> None:
        tolerances = (
            "step_tolerance",
            "residual_tolerance",
            "projection_refine_tolerance",
        )
        for name in tolerances:
            value = getattr(self, name)
            number = isinstance(value, (int, float))
            if not (number and math.isfinite(value) and value > 0):
                raise ConfigError(
                    f"{name} must be a positive finite number, got {value!r}"
                )
        if not isinstance(self.max_iterations, int) or self.max_iterations < 1:
            raise ConfigError(
                f"max_iterations must be an integer >= 1, got {self.max_iterations!r}"
            )
        points = self.projection_grid_points
        if not isinstance(points, int) or points < 3:
            raise ConfigError(
                f"projection_grid_points must be an integer >= 3, got {points!r}"
            )

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> NumericConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown numeric config fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def project_A(z: ProductPoint) -> ProductPoint:
    """P_A(x, rho) = (x, 0)."""
    return ProductPoint(z.x, 0.0)


def reflect_A(z: ProductPoint) -> ProductPoint:
    """R_A(x, rho) = (x, -rho)."""
    return ProductPoint(z.x, -z.rho)
