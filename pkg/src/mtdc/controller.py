"""Distributed averaging voltage controller.

Each bus runs

    u_i      = -K^P_i (V_i - Vhat_i - Vbar_i)
    dVhat_i  = -gamma * sum_j c_ij ((Vhat_i + Vbar_i - V_i) - (Vhat_j + Vbar_j - V_j))
    dVbar_i  = -K^V_i (V_i - V^nom_i) - delta * sum_j c_ij (Vbar_i - Vbar_j)

With a communication delay tau, everything inside the neighbour sums (own and
neighbour terms alike) is read at t - tau; the proportional output and the
local K^V term use the current voltage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ModelError
from .graph import NetworkModel


def _positive_vec(x, name: str) -> tuple[float, ...]:
    vals = tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))
    for k, v in enumerate(vals, start=1):
        if not np.isfinite(v) or v <= 0:
            raise ModelError(f"{name}[{k}] must be finite and > 0, got {v}")
    return vals


@dataclass(frozen=True)
class ControllerParams:
    """Gains and set-points of the distributed controller.

    ``F`` are the dispatch cost weights f_i. When omitted they default to
    1/K^P, the pairing under which the closed loop settles on the optimal
    dispatch. Use :meth:`from_costs` to go the other way.
    """

    K_P: tuple[float, ...]
    K_V: tuple[float, ...]
    gamma: float
    delta: float
    V_nom: tuple[float, ...]
    tau: float = 0.0
    F: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        K_P = _positive_vec(self.K_P, "K_P")
        n = len(K_P)
        K_V = _positive_vec(self.K_V, "K_V")
        V_nom = tuple(float(v) for v in np.atleast_1d(np.asarray(self.V_nom, dtype=float)))
        F = tuple(1.0 / k for k in K_P) if self.F is None else _positive_vec(self.F, "F")
        for name, vec in (("K_V", K_V), ("V_nom", V_nom), ("F", F)):
            if len(vec) != n:
                raise ModelError(f"{name} has length {len(vec)}, K_P has length {n}")
        if not all(np.isfinite(V_nom)):
            raise ModelError("V_nom must be finite")
        for name in ("gamma", "delta"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise ModelError(f"{name} must be finite and > 0, got {v}")
            object.__setattr__(self, name, v)
        tau = float(self.tau)
        if not np.isfinite(tau) or tau < 0:
            raise ModelError(f"tau must be >= 0, got {tau}")
        object.__setattr__(self, "K_P", K_P)
        object.__setattr__(self, "K_V", K_V)
        object.__setattr__(self, "V_nom", V_nom)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "tau", tau)

    @classmethod
    def from_costs(cls, F: Sequence[float], **kw) -> "ControllerParams":
        """Build params with K^P = F^-1 element-wise."""
        F = _positive_vec(F, "F")
        return cls(K_P=tuple(1.0 / f for f in F), F=F, **kw)

    @property
    def n(self) -> int:
        return len(self.K_P)

    @property
    def kp_matches_cost(self) -> bool:
        return bool(np.allclose(np.asarray(self.K_P) * np.asarray(self.F), 1.0, rtol=1e-12, atol=0))

    def check_size(self, n: int) -> None:
        if self.n != n:
            raise ModelError(f"controller has {self.n} buses, network has {n}")


@dataclass(frozen=True)
class ControllerState:
    V_hat: np.ndarray
    V_bar: np.ndarray

    def __post_init__(self) -> None:
        V_hat = np.asarray(self.V_hat, dtype=float)
        V_bar = np.asarray(self.V_bar, dtype=float)
        if V_hat.shape != V_bar.shape or V_hat.ndim != 1:
            raise ModelError("V_hat and V_bar must be 1-d vectors of equal length")
        if not (np.all(np.isfinite(V_hat)) and np.all(np.isfinite(V_bar))):
            raise ModelError("controller state must be finite")
        object.__setattr__(self, "V_hat", V_hat)
        object.__setattr__(self, "V_bar", V_bar)

    @classmethod
    def zeros(cls, n: int) -> "ControllerState":
        return cls(np.zeros(n), np.zeros(n))


def _vec(x, n: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape != (n,):
        raise ValueError(f"{name}: expected shape ({n},), got {a.shape}")
    return a


def control_output(params: ControllerParams, V, state: ControllerState) -> np.ndarray:
    n = params.n
    V = _vec(V, n, "V")
    V_hat = _vec(state.V_hat, n, "V_hat")
    V_bar = _vec(state.V_bar, n, "V_bar")
    return -np.asarray(params.K_P) * (V - V_hat - V_bar)


def _consensus_terms(model, params, V_d, V_hat_d, V_bar_d):
    L_C = model.L_C
    return (
        -params.gamma * (L_C @ (V_hat_d + V_bar_d - V_d)),
        -params.delta * (L_C @ V_bar_d),
    )


def controller_derivative(
    model: NetworkModel, params: ControllerParams, V, state: ControllerState
) -> tuple[np.ndarray, np.ndarray]:
    """(dVhat/dt, dVbar/dt) without communication delay."""
    return controller_derivative_delayed(model, params, V, state, (V, state.V_hat, state.V_bar))


def controller_derivative_delayed(
    model: NetworkModel,
    params: ControllerParams,
    V_now,
    state_now: ControllerState,
    delayed_snapshot: tuple | None,
) -> tuple[np.ndarray, np.ndarray]:
    """(dVhat/dt, dVbar/dt) with consensus sums read from ``delayed_snapshot``.

    ``delayed_snapshot`` is ``(V, V_hat, V_bar)`` at t - tau. Passing the
    current values reproduces the delay-free derivative bit for bit.
    """
    n = model.n
    params.check_size(n)
    if delayed_snapshot is None:
        raise ValueError("delayed controller needs the state at t - tau; no history supplied")
    V_now = _vec(V_now, n, "V")
    _vec(state_now.V_hat, n, "V_hat")
    _vec(state_now.V_bar, n, "V_bar")
    names = ("V(t-tau)", "V_hat(t-tau)", "V_bar(t-tau)")
    V_d, V_hat_d, V_bar_d = (_vec(x, n, name) for x, name in zip(delayed_snapshot, names))
    d_hat, d_bar_cons = _consensus_terms(model, params, V_d, V_hat_d, V_bar_d)
    K_V = np.asarray(params.K_V)
    d_bar = -K_V * (V_now - np.asarray(params.V_nom)) + d_bar_cons
    return d_hat, d_bar
