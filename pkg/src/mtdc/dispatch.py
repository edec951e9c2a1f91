"""Optimal current injections: minimise sum_i f_i u_i^2 / 2 subject to L_R V = I_inj + u.

On a connected grid the constraint is solvable in V exactly when
1^T (I_inj + u) = 0, so the problem reduces to a single equality constraint
and the KKT condition F u = lambda 1 gives the closed form below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError
from .graph import NetworkModel


@dataclass(frozen=True)
class DispatchSolution:
    u_star: np.ndarray
    lam: float
    cost: float
    # representative only: any constant shift also solves L_R V = I_inj + u*
    V_star: np.ndarray | None = None


def dispatch_cost(u, F) -> float:
    u = np.asarray(u, dtype=float)
    return float(0.5 * np.sum(np.asarray(F, dtype=float) * u**2))


def representative_voltage(
    model: NetworkModel, I_tot, K_V=None, V_nom=None
) -> np.ndarray:
    """A V with L_R V = I_tot.

    The constant mode is pinned by sum_i K^V_i (V_i - V^nom_i) = 0 when both
    ``K_V`` and ``V_nom`` are given, otherwise V has zero mean.
    """
    I_tot = np.asarray(I_tot, dtype=float)
    V = np.linalg.lstsq(model.L_R, I_tot, rcond=None)[0]
    V = V - V.mean()
    if K_V is not None and V_nom is not None:
        K_V = np.asarray(K_V, dtype=float)
        V = V + K_V @ (np.asarray(V_nom, dtype=float) - V) / K_V.sum()
    return V


def solve_dispatch_closed_form(
    I_inj, F, model: NetworkModel | None = None, K_V=None, V_nom=None
) -> DispatchSolution:
    """u_i = lambda / f_i with lambda = -sum(I_inj) / sum(1/f_i)."""
    I_inj = np.asarray(I_inj, dtype=float)
    F = np.asarray(F, dtype=float)
    if I_inj.shape != F.shape or I_inj.ndim != 1:
        raise ValueError("I_inj and F must be 1-d vectors of equal length")
    if np.any(F <= 0):
        raise ValueError("cost weights must be > 0")
    inv_f = 1.0 / F
    lam = -I_inj.sum() / inv_f.sum()
    u = lam * inv_f
    V = None if model is None else representative_voltage(model, I_inj + u, K_V, V_nom)
    return DispatchSolution(u_star=u, lam=float(lam), cost=dispatch_cost(u, F), V_star=V)


def qp_oracle(
    I_inj,
    F,
    method: str = "elimination",
    tol: float = 1e-13,
    max_iter: int = 200_000,
) -> DispatchSolution:
    """Solve the dispatch QP without using the KKT closed form.

    ``elimination`` parametrises the feasible hyperplane by an orthonormal
    null-space basis and solves the reduced normal equations.
    ``projected_gradient`` iterates gradient steps followed by Euclidean
    projection onto 1^T u = -1^T I_inj.
    """
    I_inj = np.asarray(I_inj, dtype=float)
    F = np.asarray(F, dtype=float)
    n = I_inj.size
    total = -I_inj.sum()
    ones = np.ones(n)
    u_feas = ones * total / n

    if method == "elimination":
        N = scipy.linalg.null_space(ones[None, :])
        H = N.T @ (F[:, None] * N)
        z = np.linalg.solve(H, -N.T @ (F * u_feas))
        u = u_feas + N @ z
    elif method == "projected_gradient":
        step = 1.0 / F.max()
        u = u_feas.copy()
        scale = max(np.abs(u).max(), np.abs(I_inj).max(), 1.0)
        # the iteration contracts by 1 - f_min/f_max, so the distance to the
        # optimum is at most kappa times the last increment
        kappa = F.max() / F.min()
        for _ in range(max_iter):
            v = u - step * F * u
            v += (total - v.sum()) / n
            if kappa * np.abs(v - u).max() <= tol * scale:
                u = v
                break
            u = v
        else:
            raise NumericalError("projected gradient did not converge on a strongly convex QP")
    else:
        raise ValueError(f"unknown method {method!r}")

    Fu = F * u
    return DispatchSolution(u_star=u, lam=float(Fu.mean()), cost=dispatch_cost(u, F))
