"""
Local stability of the DR operator at a fixed point.

Near a smooth point of the graph T is the inverse of
T^{-1}(y, sigma) = (y + sigma * grad f(y), sigma - f(y)), whose Jacobian is
[[I + rho*H, g], [-g^T, 1]]. Its inverse is assembled through the Schur
complement S = I + rho*H + g g^T of the unit block, and S^{-1} comes from the
Sherman-Morrison formula.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg

from src.core import NumericConfig, ProductPoint, as_vector
from src.dr_engine import dr_step
from src.errors import SingularJacobian, SingularUpdate, Unsupported, ValidationError
from src.functions import FunctionModel

logger = logging.getLogger(__name__)

PSD_SLACK = 1e-10
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class StabilityReport:
    point: ProductPoint
    jacobian_T_inverse: np.ndarray
    psd_condition_holds: bool
    modulus: float
    predicted_q_rate: float | None
    jacobian_nonsingular: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "point": self.point.to_dict(),
            "jacobian_T_inverse": self.jacobian_T_inverse.tolist(),
            "psd_condition_holds": self.psd_condition_holds,
            "modulus": self.modulus if math.isfinite(self.modulus) else None,
            "predicted_q_rate": self.predicted_q_rate,
            "jacobian_nonsingular": self.jacobian_nonsingular,
        }


def jacobian_T_inverse(m: FunctionModel, zbar: ProductPoint) -> np.ndarray:
    """[[I + rho*hess f(x), grad f(x)], [-grad f(x)^T, 1]] at zbar = (x, rho)."""
    if zbar.dim != m.dimension:
        raise ValidationError(
            f"Point of dimension {zbar.dim} does not match model dimension "
            f"{m.dimension}"
        )
    g = m.grad(zbar.x)
    H = m.hess(zbar.x)
    n = m.dimension
    J = np.empty((n + 1, n + 1))
    J[:n, :n] = np.eye(n) + zbar.rho * H
    J[:n, n] = g
    J[n, :n] = -g
    J[n, n] = 1.0
    return J


def sherman_morrison_inverse(M: np.ndarray, u: Any, v: Any) -> np.ndarray:
    """
    (M + u v^T)^{-1} = M^{-1} - M^{-1} u v^T M^{-1} / (1 + v^T M^{-1} u).

    Raises SingularUpdate when M is singular or |1 + v^T M^{-1} u| <= 1e-14.
    """
    M = np.asarray(M, dtype=float)
    u, v = as_vector(u), as_vector(v)
    square = M.ndim == 2 and M.shape[0] == M.shape[1]
    if not square or M.shape[0] != u.size or u.size != v.size:
        raise ValidationError(
            f"Incompatible shapes M {M.shape}, u {u.shape}, v {v.shape}"
        )
    try:
        M_inv = scipy.linalg.inv(M)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SingularUpdate(f"M is singular: {e}") from e
    Mu = M_inv @ u
    vM = v @ M_inv
    denom = 1.0 + float(v @ Mu)
    if abs(denom) <= 1e-14:
        raise SingularUpdate(
            f"Rank-one update is singular: 1 + v^T M^-1 u = {denom:.3e}"
        )
    return M_inv - np.outer(Mu, vM) / denom


def _inverse_via_schur(m: FunctionModel, zbar: ProductPoint) -> np.ndarray:
    g = m.grad(zbar.x)
    A = np.eye(m.dimension) + zbar.rho * m.hess(zbar.x)
    try:
        S_inv = sherman_morrison_inverse(A, g, g)
    except SingularUpdate:
        logger.debug(
            "I + rho*H is singular at %r; inverting the Schur complement directly",
            zbar,
        )
        S_inv = scipy.linalg.inv(A + np.outer(g, g))
    n = m.dimension
    Sg = S_inv @ g
    inv = np.empty((n + 1, n + 1))
    inv[:n, :n] = S_inv
    inv[:n, n] = -Sg
    inv[n, :n] = g @ S_inv
    inv[n, n] = 1.0 - float(g @ Sg)
    return inv


def spectral_norm(M: np.ndarray) -> float:
    return math.sqrt(max(float(scipy.linalg.eigvalsh(M.T @ M)[-1]), 0.0))


def stability_report(
    m: FunctionModel,
    zbar: ProductPoint,
    raise_on_singular: bool = True,
    rho_tol: float = 1e-9,
) -> StabilityReport:
    """
    Lipschitz modulus of T at a fixed point zbar, ||(grad T^{-1}(zbar))^{-1}||,
    together with the sign condition rho * hess f(x) >= 0.

    Args:
        m (FunctionModel): Target, twice differentiable at zbar.x.
        zbar (ProductPoint): Fixed point (not verified here).
        raise_on_singular (bool): Raise SingularJacobian for an ill-conditioned
            Jacobian instead of reporting jacobian_nonsingular = False.
        rho_tol (float): |rho| below which zbar counts as an intersection point.

    Returns:
        StabilityReport: The report; predicted_q_rate is set in dimension 1 at
        intersection points with f'(x) != 0.
    """
    J = jacobian_T_inverse(m, zbar)
    rhoH = zbar.rho * np.atleast_2d(m.hess(zbar.x))
    psd = bool(scipy.linalg.eigvalsh(0.5 * (rhoH + rhoH.T))[0] >= -PSD_SLACK)

    cond = float(np.linalg.cond(J))
    nonsingular = math.isfinite(cond) and cond <= MAX_CONDITION
    if not nonsingular:
        if raise_on_singular:
            raise SingularJacobian(
                f"Jacobian of T^-1 at {zbar!r} is singular (condition {cond:.3e})"
            )
        logger.warning(
            "Jacobian of T^-1 at %r is singular (condition %.3e)", zbar, cond
        )
        return StabilityReport(zbar, J, psd, math.inf, None, False)

    modulus = spectral_norm(_inverse_via_schur(m, zbar))
    q_rate = None
    if m.dimension == 1 and abs(zbar.rho) <= rho_tol and float(m.grad(zbar.x)[0]) != 0:
        q_rate = modulus
    logger.info("Stability at %r: modulus %.10g, psd %s", zbar, modulus, psd)
    return StabilityReport(zbar, J, psd, modulus, q_rate, True)


def predicted_modulus(
    m: FunctionModel, zbar: ProductPoint, rho_tol: float = 1e-9
) -> float:
    """
    Closed-form modulus: 1/sqrt(1 + f'(x)^2) (1-D) or 1 (n > 1) at intersection
    points; max(1, 1/|eig(I + rho*H)|) at critical points where grad f(x) = 0.
    """
    g = m.grad(zbar.x)
    if abs(zbar.rho) <= rho_tol:
        return 1.0 / math.sqrt(1.0 + float(g[0]) ** 2) if m.dimension == 1 else 1.0
    if np.any(g != 0):
        raise Unsupported(
            "No closed-form modulus at a non-critical point with rho != 0"
        )
    shifted = np.eye(m.dimension) + zbar.rho * np.atleast_2d(m.hess(zbar.x))
    eigs = np.abs(scipy.linalg.eigvalsh(shifted))
    if eigs[0] == 0:
        return math.inf
    return max(1.0, float(1.0 / eigs[0]))


def lipschitz_ratio(
    m: FunctionModel,
    zbar: ProductPoint,
    radius: float,
    samples: int,
    rng: np.random.Generator,
    cfg: NumericConfig | None = None,
) -> float:
    """Largest sampled ||Tz - Tz'|| / ||z - z'|| over pairs within radius of zbar."""
    n = m.dimension
    worst = 0.0
    for _ in range(samples):
        a, b = rng.uniform(-radius, radius, size=(2, n + 1))
        z = ProductPoint(zbar.x + a[:n], zbar.rho + a[n])
        w = ProductPoint(zbar.x + b[:n], zbar.rho + b[n])
        gap = z.distance(w)
        if gap == 0:
            continue
        worst = max(worst, dr_step(m, z, cfg).distance(dr_step(m, w, cfg)) / gap)
    return worst


def displacement_ratio(
    m: FunctionModel, zbar: ProductPoint, eps: float, cfg: NumericConfig | None = None
) -> float:
    """||T(x - eps*e_1, rho) - zbar|| / eps, a one-step instability witness."""
    shift = np.zeros(m.dimension)
    shift[0] = eps
    z = ProductPoint(zbar.x - shift, zbar.rho)
    return dr_step(m, z, cfg).distance(zbar) / eps
