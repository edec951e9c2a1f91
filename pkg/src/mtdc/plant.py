"""Open-loop bus voltage dynamics: C_i dV_i/dt = -sum_j (V_i - V_j)/R_ij + I_i + u_i."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ModelError
from .graph import NetworkModel


def _vec(x, n: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape != (n,):
        raise ValueError(f"{name}: expected shape ({n},), got {a.shape}")
    return a


@dataclass(frozen=True)
class PlantState:
    V: np.ndarray

    def __post_init__(self) -> None:
        V = np.asarray(self.V, dtype=float)
        if V.ndim != 1 or not np.all(np.isfinite(V)):
            raise ModelError("PlantState.V must be a finite 1-d vector")
        object.__setattr__(self, "V", V)


@dataclass(frozen=True)
class InjectionProfile:
    """Piecewise-constant nominal injections.

    ``initial`` holds before the first switch; each ``(t_k, I_k)`` in
    ``schedule`` applies on ``[t_k, t_{k+1})``.
    """

    initial: tuple[float, ...]
    schedule: tuple[tuple[float, tuple[float, ...]], ...] = field(default=())

    def __post_init__(self) -> None:
        init = tuple(float(x) for x in self.initial)
        n = len(init)
        sched = []
        last = -np.inf
        for t, vec in self.schedule:
            t = float(t)
            v = tuple(float(x) for x in vec)
            if len(v) != n:
                raise ModelError(f"injection switch at t={t}: expected {n} entries, got {len(v)}")
            if not t > last:
                raise ModelError(f"injection switch times must be strictly increasing (t={t})")
            last = t
            sched.append((t, v))
        for v in [init] + [v for _, v in sched]:
            if not all(np.isfinite(v)):
                raise ModelError("injection currents must be finite")
        object.__setattr__(self, "initial", init)
        object.__setattr__(self, "schedule", tuple(sched))

    @classmethod
    def constant(cls, I_inj: Sequence[float]) -> "InjectionProfile":
        return cls(initial=tuple(I_inj))

    @property
    def n(self) -> int:
        return len(self.initial)

    @property
    def switch_times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.schedule)

    def at(self, t: float) -> np.ndarray:
        current = self.initial
        for ts, v in self.schedule:
            if ts <= t:
                current = v
            else:
                break
        return np.array(current)

    @property
    def final(self) -> np.ndarray:
        return np.array(self.schedule[-1][1] if self.schedule else self.initial)


def plant_derivative(model: NetworkModel, V, I_inj, u) -> np.ndarray:
    """dV/dt = diag(1/C_i) (-L_R V + I_inj + u), in V/s."""
    n = model.n
    V = _vec(V, n, "V")
    I_inj = _vec(I_inj, n, "I_inj")
    u = _vec(u, n, "u")
    return (-(model.L_R @ V) + I_inj + u) / np.asarray(model.capacitances)
