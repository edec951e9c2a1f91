"""Fixed-step integration of the closed loop, with optional communication delay.

The right-hand side is split as

    dx/dt = A_local x(t) + A_cons x(t - tau) + b(t)

where A_cons carries every communication-graph term. Two four-stage schemes
are available:

``rk4``
    Classical Runge-Kutta. Needs h * rho(A) well inside the real-axis
    stability bound, which rules it out for realistic bus capacitances.
``etdrk4``
    Cox-Matthews exponential RK4. The stiff local part A_local is integrated
    exactly through phi-functions and only A_cons x + b is treated
    explicitly, so the step is limited by the (slow) consensus dynamics.

The delay must be an integer multiple m of h. History is kept on the step
grid as A_cons x_k; stage evaluations at t_k + h/2 - tau use the mean of the
two neighbouring grid samples. For t < 0 the history is the initial state.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .closed_loop import consensus_split, control_from_state, injection_offset
from .controller import ControllerParams
from .errors import SimConfigError
from .graph import NetworkModel
from .plant import InjectionProfile

# largest h*|lambda| on the negative real axis for which classical RK4 is stable
RK4_REAL_AXIS_BOUND = 2.785293563
STEP_MARGIN = 4.0
METHODS = ("rk4", "etdrk4")


def _is_multiple(t: float, h: float) -> bool:
    q = t / h
    return abs(q - round(q)) <= 1e-9 * max(1.0, abs(q))


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    h: float
    record_every: int = 1
    tau: float = 0.0
    method: str = "rk4"
    blow_up: float | None = None
    check_step: bool = True

    def __post_init__(self) -> None:
        if not (self.h > 0 and math.isfinite(self.h)):
            raise SimConfigError(f"step h must be > 0, got {self.h}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise SimConfigError(f"t_end must be > 0, got {self.t_end}")
        if not (self.tau >= 0 and math.isfinite(self.tau)):
            raise SimConfigError(f"tau must be >= 0, got {self.tau}")
        if not _is_multiple(self.tau, self.h):
            raise SimConfigError(f"tau={self.tau} is not an integer multiple of h={self.h}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise SimConfigError(f"record_every must be an integer >= 1, got {self.record_every}")
        if self.method not in METHODS:
            raise SimConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.blow_up is not None and not self.blow_up > 0:
            raise SimConfigError("blow_up threshold must be > 0")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.h - 1e-9))

    @property
    def delay_steps(self) -> int:
        return int(round(self.tau / self.h))


@dataclass(frozen=True)
class SimTrace:
    times: np.ndarray
    V: np.ndarray
    V_hat: np.ndarray
    V_bar: np.ndarray
    u: np.ndarray
    diverged: bool = False
    divergence_time: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def x_final(self) -> np.ndarray:
        return np.concatenate([self.V_bar[-1], self.V_hat[-1], self.V[-1]])

    def signal(self, name: str) -> np.ndarray:
        if name not in ("V", "u", "V_hat", "V_bar"):
            raise ValueError(f"unknown signal {name!r}")
        return getattr(self, name)


def phi_functions(M: np.ndarray, order: int = 3) -> list[np.ndarray]:
    """[exp(M), phi_1(M), ..., phi_order(M)] from one augmented exponential.

    phi_k(z) = sum_j z^j / (j + k)!, so phi_k(0) = 1/k!. Works for singular M.
    """
    d = M.shape[0]
    big = np.zeros(((order + 1) * d, (order + 1) * d))
    big[:d, :d] = M
    for k in range(order):
        big[k * d : (k + 1) * d, (k + 1) * d : (k + 2) * d] = np.eye(d)
    E = scipy.linalg.expm(big)
    return [E[:d, k * d : (k + 1) * d] for k in range(order + 1)]


def max_stable_step(A: np.ndarray, margin: float = STEP_MARGIN) -> float:
    rho = float(np.abs(np.linalg.eigvals(A)).max())
    return math.inf if rho == 0 else RK4_REAL_AXIS_BOUND / (margin * rho)


def _as_state(x0, n: int) -> np.ndarray:
    if isinstance(x0, (tuple, list)) and len(x0) == 3:
        x = np.concatenate([np.asarray(p, dtype=float) for p in x0])
    else:
        x = np.asarray(x0, dtype=float).ravel()
    if x.shape != (3 * n,):
        raise SimConfigError(f"initial state must have 3n = {3 * n} entries, got {x.size}")
    return x


def simulate(
    model: NetworkModel,
    params: ControllerParams,
    profile: InjectionProfile,
    x0,
    cfg: SimConfig,
) -> SimTrace:
    """Integrate the closed loop from ``x0 = (Vbar0, Vhat0, V0)`` over [0, cfg.t_end]."""
    n = model.n
    params.check_size(n)
    if profile.n != n:
        raise SimConfigError(f"injection profile has {profile.n} entries, network has {n}")
    x = _as_state(x0, n)
    h = cfg.h
    for ts in profile.switch_times:
        if ts > 0 and not _is_multiple(ts, h):
            raise SimConfigError(f"injection switch at t={ts} is not aligned with the step h={h}")

    A_loc, A_cons = consensus_split(model, params)
    explicit = A_loc + A_cons if cfg.method == "rk4" else A_cons
    if cfg.check_step:
        h_max = max_stable_step(explicit)
        if h > h_max:
            hint = " (use method='etdrk4' for stiff grids)" if cfg.method == "rk4" else ""
            raise SimConfigError(
                f"step h={h:g} exceeds {h_max:.3g}, the {cfg.method} stability limit "
                f"with {STEP_MARGIN:g}x margin{hint}"
            )

    blow_up = cfg.blow_up
    if blow_up is None:
        blow_up = 100.0 * (max(abs(v) for v in params.V_nom) + 1.0)

    n_steps = cfg.n_steps
    m = cfg.delay_steps
    every = int(cfg.record_every)
    n_rec = n_steps // every + 1 + (1 if n_steps % every else 0)
    X = np.empty((n_rec, 3 * n))
    T = np.empty(n_rec)
    X[0] = x
    T[0] = 0.0
    rec = 1

    # ring buffer of A_cons x_k for k in [k - m, k]
    hist = np.empty((m + 1, 3 * n))
    hist[:] = A_cons @ x

    if cfg.method == "etdrk4":
        E, p1, p2, p3 = phi_functions(h * A_loc)
        E2, q1 = phi_functions(0.5 * h * A_loc, order=1)
        Q = 0.5 * h * q1
        f1 = h * (p1 - 3 * p2 + 4 * p3)
        f2 = h * 2 * (p2 - 2 * p3)
        f3 = h * (4 * p3 - p2)

    diverged = False
    t_div = None
    b = None
    b_key = None
    for k in range(n_steps):
        t = k * h
        I_now = profile.at(t + 0.5 * h)
        key = I_now.tobytes()
        if key != b_key:
            b = injection_offset(model, params, I_now)
            b_key = key

        if m > 0:
            c0 = hist[(k - m) % (m + 1)]
            c1 = hist[(k - m + 1) % (m + 1)]
            cmid = 0.5 * (c0 + c1)

        if cfg.method == "rk4":
            if m == 0:
                k1 = A_loc @ x + A_cons @ x + b
                xa = x + 0.5 * h * k1
                k2 = A_loc @ xa + A_cons @ xa + b
                xb = x + 0.5 * h * k2
                k3 = A_loc @ xb + A_cons @ xb + b
                xc = x + h * k3
                k4 = A_loc @ xc + A_cons @ xc + b
            else:
                k1 = A_loc @ x + c0 + b
                k2 = A_loc @ (x + 0.5 * h * k1) + cmid + b
                k3 = A_loc @ (x + 0.5 * h * k2) + cmid + b
                k4 = A_loc @ (x + h * k3) + c1 + b
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            if m == 0:
                Nx = A_cons @ x + b
                xa = E2 @ x + Q @ Nx
                Na = A_cons @ xa + b
                xb = E2 @ x + Q @ Na
                Nb = A_cons @ xb + b
                xc = E2 @ xa + Q @ (2.0 * Nb - Nx)
                Nc = A_cons @ xc + b
            else:
                # stage values do not feed back when every consensus input is delayed
                Nx = c0 + b
                Na = Nb = cmid + b
                Nc = c1 + b
            x = E @ x + f1 @ Nx + f2 @ (Na + Nb) + f3 @ Nc

        if m > 0:
            hist[(k + 1) % (m + 1)] = A_cons @ x

        V = x[2 * n :]
        if not np.all(np.isfinite(x)) or np.abs(V).max() > blow_up:
            diverged = True
            t_div = (k + 1) * h
            X[rec] = x
            T[rec] = t_div
            rec += 1
            break
        if (k + 1) % every == 0 or k + 1 == n_steps:
            X[rec] = x
            T[rec] = (k + 1) * h
            rec += 1

    X = X[:rec]
    return SimTrace(
        times=T[:rec].copy(),
        V_bar=X[:, :n].copy(),
        V_hat=X[:, n : 2 * n].copy(),
        V=X[:, 2 * n :].copy(),
        u=control_from_state(params, X, n),
        diverged=diverged,
        divergence_time=t_div,
        meta={"method": cfg.method, "h": h, "tau": cfg.tau, "blow_up": blow_up},
    )


def settling_time(trace: SimTrace, signal: str, reference, band: float = 0.05) -> np.ndarray:
    """Per-bus time after which the signal stays within the band around ``reference``.

    The band is ``band`` times the largest deviation of that bus's signal from
    its reference over the trace, so it scales with the size of the transient.
    Buses still outside the band at the last sample get NaN.
    """
    if trace.diverged:
        raise ValueError("settling time is undefined for a diverged trace")
    if not 0 < band < 1:
        raise ValueError("band must lie in (0, 1)")
    s = trace.signal(signal)
    ref = np.asarray(reference, dtype=float)
    dev = np.abs(s - ref[None, :])
    peak = dev.max(axis=0)
    out = np.zeros(s.shape[1])
    t0 = trace.times[0]
    for i in range(s.shape[1]):
        if peak[i] == 0:
            continue
        outside = np.nonzero(dev[:, i] > band * peak[i])[0]
        if outside.size == 0:
            continue
        last = outside[-1]
        out[i] = np.nan if last == len(trace.times) - 1 else trace.times[last + 1] - t0
    return out


@dataclass(frozen=True)
class DelaySweepRow:
    tau: float
    diverged: bool
    divergence_time: float | None
    V_settling: float
    u_settling: float
    # max deviation from the reference over the last quarter of the run divided
    # by that over the third quarter; > 1 means the oscillation is still growing
    growth: float = math.nan


@dataclass(frozen=True)
class DelaySweep:
    rows: tuple[DelaySweepRow, ...]

    @property
    def smallest_unstable_tau(self) -> float | None:
        bad = [r.tau for r in self.rows if r.diverged]
        return min(bad) if bad else None

    @property
    def largest_stable_tau_below_threshold(self) -> float | None:
        thr = self.smallest_unstable_tau
        ok = [r.tau for r in self.rows if not r.diverged and (thr is None or r.tau < thr)]
        return max(ok) if ok else None

    @property
    def monotone(self) -> bool:
        thr = self.smallest_unstable_tau
        return thr is None or all(r.diverged for r in self.rows if r.tau >= thr)


def _sweep_one(args) -> DelaySweepRow:
    model, params, profile, x0, cfg, reference = args
    trace = simulate(model, replace(params, tau=cfg.tau), profile, x0, cfg)
    if trace.diverged:
        return DelaySweepRow(cfg.tau, True, trace.divergence_time, math.nan, math.nan)
    vs = us = growth = math.nan
    if reference is not None:
        V_ref, u_ref = reference
        vs = float(np.max(settling_time(trace, "V", V_ref)))
        us = float(np.max(settling_time(trace, "u", u_ref)))
        dev = np.abs(trace.V - np.asarray(V_ref)[None, :]).max(axis=1)
        q = len(dev) // 4
        if q > 0:
            third, last = dev[2 * q : 3 * q].max(), dev[3 * q :].max()
            growth = float(last / third) if third > 0 else math.nan
    return DelaySweepRow(cfg.tau, False, None, vs, us, growth)


def sweep_delay(
    model: NetworkModel,
    params: ControllerParams,
    profile: InjectionProfile,
    x0,
    cfg: SimConfig,
    tau_values: Sequence[float],
    reference: tuple[np.ndarray, np.ndarray] | None = None,
    workers: int = 1,
) -> DelaySweep:
    """Simulate once per delay value and collect divergence and settling data.

    ``reference`` is ``(V_inf, u_inf)``; delays do not move the equilibrium,
    so the delay-free prediction serves every row.
    """
    taus = sorted(float(t) for t in tau_values)
    jobs = [(model, params, profile, x0, replace(cfg, tau=t), reference) for t in taus]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    sweep = DelaySweep(tuple(rows))
    if not sweep.monotone:
        warnings.warn(
            f"delay sweep is not monotone: stable runs above tau={sweep.smallest_unstable_tau}",
            RuntimeWarning,
            stacklevel=2,
        )
    return sweep
