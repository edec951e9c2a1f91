"""Sufficient stability certificate for the special case L_C = L_R, K^P = k I.

Three scalar inequalities, built from extreme eigenvalues of symmetrised
products of L_R with Cd = diag(C_i):

    (1)  (gamma+delta)/(2k) * lmin(L_R Cd + Cd L_R) + 1 > 0
    (2)  gamma*delta/(2k) * lmin(L_R^2 Cd + Cd L_R^2) + min_i K^V_i > 0
    (3)  lmax(L_R^3) * gamma*delta/k^2 <= lhs(1) * lhs(2)

Note that Cd holds the capacitances themselves (the bus equations multiply by
their inverse). The Routh-Hurwitz argument behind (3) actually bounds
a0*a3 by lmax(L_R^3) gamma delta / k^2 * max_i C_i; that variant is reported
as ``condition_3_proof`` and can drive the verdict with ``use_proof_bound``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import ControllerParams
from .graph import NetworkModel

MARGIN = 1e-12


def _sym_eigs(M: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(0.5 * (M + M.T))


@dataclass(frozen=True)
class CertificateResult:
    applicable: bool
    lhs_1: float
    lhs_2: float
    lhs_3: float
    rhs_3: float
    lhs_3_proof: float
    condition_1: bool
    condition_2: bool
    condition_3: bool
    condition_3_proof: bool
    use_proof_bound: bool = False

    @property
    def rhs_1(self) -> float:
        return 0.0

    @property
    def rhs_2(self) -> float:
        return 0.0

    @property
    def certified(self) -> bool:
        third = self.condition_3_proof if self.use_proof_bound else self.condition_3
        return self.applicable and self.condition_1 and self.condition_2 and third


def hypotheses_hold(model: NetworkModel, params: ControllerParams) -> bool:
    K_P = np.asarray(params.K_P)
    uniform = np.allclose(K_P, K_P[0], rtol=1e-12, atol=0)
    return bool(uniform and model.same_topology_weights())


def check_certificate(
    model: NetworkModel, params: ControllerParams, use_proof_bound: bool = False
) -> CertificateResult:
    params.check_size(model.n)
    if not hypotheses_hold(model, params):
        nan = float("nan")
        return CertificateResult(False, nan, nan, nan, nan, nan, False, False, False, False, use_proof_bound)

    L = model.L_R
    Cd = np.diag(model.capacitances)
    k = params.K_P[0]
    g, d = params.gamma, params.delta
    L2 = L @ L

    t1 = (g + d) / (2 * k) * _sym_eigs(L @ Cd + Cd @ L).min()
    lhs_1 = t1 + 1.0
    t2 = g * d / (2 * k) * _sym_eigs(L2 @ Cd + Cd @ L2).min()
    lhs_2 = t2 + min(params.K_V)
    lhs_3 = _sym_eigs(L2 @ L).max() * g * d / k**2
    rhs_3 = lhs_1 * lhs_2
    lhs_3_proof = lhs_3 * max(model.capacitances)

    c1 = lhs_1 > MARGIN * (1.0 + abs(t1))
    c2 = lhs_2 > MARGIN * (abs(t2) + min(params.K_V))
    c3 = lhs_3 <= rhs_3 + MARGIN * max(abs(lhs_3), abs(rhs_3))
    c3p = lhs_3_proof <= rhs_3 + MARGIN * max(abs(lhs_3_proof), abs(rhs_3))
    return CertificateResult(
        applicable=True,
        lhs_1=float(lhs_1),
        lhs_2=float(lhs_2),
        lhs_3=float(lhs_3),
        rhs_3=float(rhs_3),
        lhs_3_proof=float(lhs_3_proof),
        condition_1=bool(c1),
        condition_2=bool(c2),
        condition_3=bool(c3),
        condition_3_proof=bool(c3p),
        use_proof_bound=use_proof_bound,
    )


def quadratic_form_coefficients(
    model: NetworkModel, params: ControllerParams, x
) -> tuple[float, float, float, float]:
    """(a0, a1, a2, a3) of x^T Q(s) x = a0 + a1 s + a2 s^2 + a3 s^3 for unit x."""
    if not hypotheses_hold(model, params):
        raise ValueError("quadratic form is only defined for L_C = L_R and uniform K^P")
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise ValueError(f"x must have shape ({model.n},)")
    if abs(np.linalg.norm(x) - 1.0) > 1e-9:
        raise ValueError("x must have unit norm")
    L = model.L_R
    Cd = np.diag(model.capacitances)
    k = params.K_P[0]
    g, d = params.gamma, params.delta
    L2 = L @ L
    n = model.n

    a0 = g * d / k * (x @ L2 @ L @ x)
    M1 = (d + g) / k * L2 + d * L + g * d / k * (L2 @ Cd) + np.diag(params.K_V)
    M2 = L / k + np.eye(n) + (g + d) / k * (L @ Cd)
    a3 = (x @ Cd @ x) / k
    return float(a0), float(x @ M1 @ x), float(x @ M2 @ x), float(a3)
