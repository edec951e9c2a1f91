"""Closed-loop linear system and its exact stability/steady-state analysis.

State ordering is x = (Vbar, Vhat, V), each block of length n, and

    dx/dt = A x + b,

    A = [[-delta L_C,  0,          -K^V            ],
         [-gamma L_C,  -gamma L_C,  gamma L_C      ],
         [ C K^P,       C K^P,     -C (L_R + K^P)  ]],
    b = [K^V V^nom; 0; C I_inj],   C = diag(1/C_i).

A always has the right null vector (1, -1, 0) and the left null vector
(0, 1, 0): the sum of Vhat is conserved. The stability test works on the
(3n-1)-dimensional invariant subspace orthogonal to the left null vector, so
the structural zero never has to be separated from slow modes by a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .controller import ControllerParams
from .errors import NumericalError, UnstableSystemError
from .graph import NetworkModel, laplacian_spectrum

# relative to ||A||_2; see stability_test
REL_TOL_ZERO = 1e-12
REL_TOL_MARGIN = 1e-12


@dataclass(frozen=True)
class ClosedLoopSystem:
    A: np.ndarray
    b: np.ndarray
    n: int

    def blocks(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split a stacked state into (Vbar, Vhat, V)."""
        x = np.asarray(x)
        n = self.n
        return x[..., :n], x[..., n : 2 * n], x[..., 2 * n :]

    @property
    def null_vector(self) -> np.ndarray:
        n = self.n
        return np.concatenate([np.ones(n), -np.ones(n), np.zeros(n)]) / np.sqrt(2 * n)

    @property
    def conserved_vector(self) -> np.ndarray:
        n = self.n
        return np.concatenate([np.zeros(n), np.ones(n), np.zeros(n)]) / np.sqrt(n)


def stack_state(V_bar, V_hat, V) -> np.ndarray:
    return np.concatenate([np.asarray(V_bar, float), np.asarray(V_hat, float), np.asarray(V, float)])


def injection_offset(model: NetworkModel, params: ControllerParams, I_inj) -> np.ndarray:
    n = model.n
    I_inj = np.asarray(I_inj, dtype=float)
    if I_inj.shape != (n,):
        raise ValueError(f"I_inj: expected shape ({n},), got {I_inj.shape}")
    K_V = np.asarray(params.K_V)
    return np.concatenate([K_V * np.asarray(params.V_nom), np.zeros(n), I_inj / np.asarray(model.capacitances)])


def consensus_split(model: NetworkModel, params: ControllerParams) -> tuple[np.ndarray, np.ndarray]:
    """A = A_local + A_cons, where A_cons holds every communication-graph term.

    Only A_cons is subject to the communication delay.
    """
    n = model.n
    params.check_size(n)
    L_C = model.L_C
    Z = np.zeros((n, n))
    g, d = params.gamma, params.delta
    A_cons = np.block([[-d * L_C, Z, Z], [-g * L_C, -g * L_C, g * L_C], [Z, Z, Z]])
    C_inv = model.C_inv
    CKP = C_inv * np.asarray(params.K_P)[None, :]
    A_local = np.block(
        [
            [Z, Z, -np.diag(params.K_V)],
            [Z, Z, Z],
            [CKP, CKP, -(C_inv @ model.L_R) - CKP],
        ]
    )
    return A_local, A_cons


def assemble(model: NetworkModel, params: ControllerParams, I_inj=None) -> ClosedLoopSystem:
    n = model.n
    params.check_size(n)
    if I_inj is None:
        I_inj = np.zeros(n)
    A_local, A_cons = consensus_split(model, params)
    A = A_local + A_cons
    sys = ClosedLoopSystem(A=A, b=injection_offset(model, params, I_inj), n=n)
    resid = np.abs(A @ sys.null_vector).max()
    if resid > 1e-9 * np.linalg.norm(A, 2):
        raise NumericalError(f"assembled A does not annihilate (1, -1, 0): residual {resid:.3e}")
    return sys


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: np.ndarray
    reduced_eigenvalues: np.ndarray
    zero_multiplicity: int
    stable: bool
    spectral_abscissa_excluding_null: float
    tol_zero: float
    tol_margin: float


def stability_test(
    sys: ClosedLoopSystem, tol_zero: float | None = None, tol_margin: float | None = None
) -> StabilityReport:
    """Eigenvalue test: one zero eigenvalue, every other in the open left half plane.

    Tolerances are absolute; by default they are REL_TOL_* times ||A||_2.
    """
    A = sys.A
    norm = np.linalg.norm(A, 2)
    tol_zero = REL_TOL_ZERO * norm if tol_zero is None else float(tol_zero)
    tol_margin = REL_TOL_MARGIN * norm if tol_margin is None else float(tol_margin)
    if tol_zero <= 0 or tol_margin <= 0:
        raise ValueError("tolerances must be > 0")

    w = sys.conserved_vector
    Q = scipy.linalg.null_space(w[None, :])
    try:
        full = np.linalg.eigvals(A)
        reduced = np.linalg.eigvals(Q.T @ A @ Q)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue computation failed for ||A|| = {norm:.3e}: {exc}") from exc
    if not (np.all(np.isfinite(full)) and np.all(np.isfinite(reduced))):
        raise NumericalError("eigen-solver returned non-finite eigenvalues")

    extra_zeros = int(np.sum(np.abs(reduced) <= tol_zero))
    abscissa = float(reduced.real.max())
    zero_mult = 1 + extra_zeros
    stable = zero_mult == 1 and abscissa < -tol_margin
    order = np.lexsort((full.imag, full.real))
    return StabilityReport(
        eigenvalues=full[order],
        reduced_eigenvalues=np.sort_complex(reduced),
        zero_multiplicity=zero_mult,
        stable=bool(stable),
        spectral_abscissa_excluding_null=abscissa,
        tol_zero=tol_zero,
        tol_margin=tol_margin,
    )


@dataclass(frozen=True)
class SteadyState:
    V: np.ndarray
    V_hat: np.ndarray
    V_bar: np.ndarray
    u: np.ndarray
    k1: float

    @property
    def offset(self) -> np.ndarray:
        """Vhat + Vbar, the reference the proportional term tracks."""
        return self.V_hat + self.V_bar

    @property
    def x(self) -> np.ndarray:
        return stack_state(self.V_bar, self.V_hat, self.V)


def predict_steady_state(
    sys: ClosedLoopSystem,
    model: NetworkModel,
    params: ControllerParams,
    I_inj=None,
    x0=None,
    check_stability: bool = True,
) -> SteadyState:
    """Stationary point the closed loop converges to.

    At stationarity Vhat + Vbar - V = k1 * 1 with k1 = -sum(I_inj)/sum(K^P),
    so u = k1 K^P 1. V solves L_R V = I_inj + u with its constant mode fixed
    by sum_i K^V_i (V_i - V^nom_i) = 0, Vbar solves delta L_C Vbar =
    K^V (V^nom - V), and the remaining free constant is fixed by the
    conserved sum of Vhat, taken from ``x0`` (zero when omitted).
    """
    n = model.n
    if check_stability and not stability_test(sys).stable:
        raise UnstableSystemError("closed loop is not asymptotically stable; no steady state to predict")
    if I_inj is None:
        I_inj = sys.b[2 * n :] * np.asarray(model.capacitances)
    I_inj = np.asarray(I_inj, dtype=float)
    K_P = np.asarray(params.K_P)
    K_V = np.asarray(params.K_V)
    V_nom = np.asarray(params.V_nom)

    k1 = -I_inj.sum() / K_P.sum()
    u = k1 * K_P

    # pseudo-solution on range(L_R), then pin the constant mode
    V = np.linalg.pinv(model.L_R) @ (I_inj + u)
    V = V + K_V @ (V_nom - V) / K_V.sum()

    V_bar = np.linalg.pinv(params.delta * model.L_C) @ (K_V * (V_nom - V))
    V_hat = k1 + V - V_bar
    hat_sum = 0.0 if x0 is None else float(np.sum(np.asarray(x0, dtype=float)[n : 2 * n]))
    shift = (V_hat.sum() - hat_sum) / n
    V_hat = V_hat - shift
    V_bar = V_bar + shift

    ss = SteadyState(V=V, V_hat=V_hat, V_bar=V_bar, u=u, k1=float(k1))
    b = injection_offset(model, params, I_inj)
    resid = np.linalg.norm(sys.A @ ss.x + b)
    scale = np.linalg.norm(sys.A, 2) * np.linalg.norm(ss.x) + np.linalg.norm(b)
    if resid > 1e-9 * scale:
        raise NumericalError(f"steady-state residual {resid:.3e} exceeds 1e-9 relative (scale {scale:.3e})")
    return ss


def voltage_spread_bound(model: NetworkModel, I_inj, u_inf) -> float:
    """2 * max_i |I_inj,i + u_i| * sum_{i>=2} 1/lambda_i(L_R)."""
    I_tot = np.asarray(I_inj, dtype=float) + np.asarray(u_inf, dtype=float)
    if I_tot.shape != (model.n,):
        raise ValueError(f"expected vectors of length {model.n}")
    lam = laplacian_spectrum(model.L_R)
    return float(2.0 * np.abs(I_tot).max() * np.sum(1.0 / lam[1:]))


def control_from_state(params: ControllerParams, x, n: int) -> np.ndarray:
    """u = K^P (Vhat + Vbar - V) for one stacked state or a stack of them."""
    x = np.asarray(x)
    V_bar, V_hat, V = x[..., :n], x[..., n : 2 * n], x[..., 2 * n :]
    return np.asarray(params.K_P) * (V_hat + V_bar - V)
