"""Scenario files: sectioned ``key = value`` text with ``#`` comments.

See docs/scenario_format.md for the grammar. Vectors are whitespace- or
comma-separated numbers, one entry per bus in bus order.
"""

from __future__ import annotations

import configparser
import io
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .closed_loop import assemble, predict_steady_state
from .controller import ControllerParams
from .errors import ModelError, SimConfigError
from .graph import NetworkModel
from .plant import InjectionProfile
from .sim import SimConfig

_EDGE_KEY = re.compile(r"^\s*(\d+)\s*-\s*(\d+)\s*$")
_SWITCH_KEY = re.compile(r"^at\s+(\S+)$")
INITIAL_MODES = ("steady", "zero", "explicit")


class ScenarioError(ValueError):
    """Scenario could not be loaded; the message names the offending field."""


@dataclass(frozen=True)
class Scenario:
    name: str
    model: NetworkModel
    params: ControllerParams
    profile: InjectionProfile
    sim: SimConfig
    initial_mode: str = "steady"
    initial_state: tuple[float, ...] | None = None
    sweep_taus: tuple[float, ...] = ()
    sweep_t_end: float | None = None
    outputs: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.model.n


def _floats(text: str, where: str, n: int | None = None) -> tuple[float, ...]:
    parts = [p for p in re.split(r"[\s,]+", text.strip()) if p]
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None
    if n is not None and len(vals) == 1 and n > 1:
        vals = vals * n
    if n is not None and len(vals) != n:
        raise ScenarioError(f"{where}: expected {n} values, got {len(vals)}")
    return vals


def _float(text: str, where: str) -> float:
    vals = _floats(text, where)
    if len(vals) != 1:
        raise ScenarioError(f"{where}: expected a single number")
    return vals[0]


def _section(cp: configparser.ConfigParser, name: str, required: bool = True):
    if not cp.has_section(name):
        if required:
            raise ScenarioError(f"missing section [{name}]")
        return None
    return cp[name]


def _get(sec, key: str, required: bool = True):
    if key not in sec:
        if required:
            raise ScenarioError(f"[{sec.name}] missing key '{key}'")
        return None
    return sec[key]


def _edges(sec) -> list[tuple[int, int, float]]:
    out = []
    for key, val in sec.items():
        m = _EDGE_KEY.match(key)
        if not m:
            raise ScenarioError(f"[{sec.name}] key '{key}': expected 'i-j'")
        out.append((int(m.group(1)), int(m.group(2)), _float(val, f"[{sec.name}] {key}")))
    return out


def parse_scenario(text: str, name: str = "<scenario>") -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    try:
        cp.read_string(text, source=name)
    except configparser.Error as exc:
        raise ScenarioError(str(exc)) from None

    net = _section(cp, "network")
    try:
        n = int(_get(net, "buses"))
    except ValueError:
        raise ScenarioError("[network] buses: expected an integer") from None

    buses = _section(cp, "buses")
    caps = _floats(_get(buses, "capacitance"), "[buses] capacitance", n)
    v_nom = _floats(_get(buses, "v_nom"), "[buses] v_nom", n)

    lines = _edges(_section(cp, "lines"))
    comm_sec = _section(cp, "communication", required=False)
    comm = _edges(comm_sec) if comm_sec is not None and len(comm_sec) else None
    try:
        model = NetworkModel(n=n, edges=tuple(lines), capacitances=caps, comm_edges=comm)
    except ModelError as exc:
        raise ScenarioError(f"[lines]/[communication]/[buses]: {exc}") from None

    ctl = _section(cp, "controller")
    k_p = _get(ctl, "k_p", required=False)
    costs = _get(ctl, "cost_weights", required=False)
    if k_p is None and costs is None:
        raise ScenarioError("[controller] needs 'k_p' or 'cost_weights'")
    kw = dict(
        K_V=_floats(_get(ctl, "k_v"), "[controller] k_v", n),
        gamma=_float(_get(ctl, "gamma"), "[controller] gamma"),
        delta=_float(_get(ctl, "delta"), "[controller] delta"),
        V_nom=v_nom,
        tau=_float(ctl.get("tau", "0"), "[controller] tau"),
    )
    try:
        if k_p is None:
            params = ControllerParams.from_costs(_floats(costs, "[controller] cost_weights", n), **kw)
        else:
            F = None if costs is None else _floats(costs, "[controller] cost_weights", n)
            params = ControllerParams(K_P=_floats(k_p, "[controller] k_p", n), F=F, **kw)
    except ModelError as exc:
        raise ScenarioError(f"[controller]: {exc}") from None

    inj = _section(cp, "injection")
    initial = _floats(_get(inj, "initial"), "[injection] initial", n)
    schedule = []
    for key, val in inj.items():
        if key == "initial":
            continue
        m = _SWITCH_KEY.match(key)
        if not m:
            raise ScenarioError(f"[injection] key '{key}': expected 'initial' or 'at <time>'")
        t = _float(m.group(1), f"[injection] {key}")
        schedule.append((t, _floats(val, f"[injection] {key}", n)))
    schedule.sort(key=lambda s: s[0])
    try:
        profile = InjectionProfile(initial=initial, schedule=tuple(schedule))
    except ModelError as exc:
        raise ScenarioError(f"[injection]: {exc}") from None

    init_sec = _section(cp, "initial_state", required=False)
    mode = "steady"
    x0 = None
    if init_sec is not None:
        mode = init_sec.get("mode", "steady").strip()
        if mode not in INITIAL_MODES:
            raise ScenarioError(f"[initial_state] mode: expected one of {INITIAL_MODES}, got '{mode}'")
        if mode == "explicit":
            x0 = (
                _floats(_get(init_sec, "v_bar"), "[initial_state] v_bar", n)
                + _floats(_get(init_sec, "v_hat"), "[initial_state] v_hat", n)
                + _floats(_get(init_sec, "v"), "[initial_state] v", n)
            )

    simsec = _section(cp, "simulation")
    blow = _get(simsec, "blow_up", required=False)
    try:
        sim = SimConfig(
            t_end=_float(_get(simsec, "t_end"), "[simulation] t_end"),
            h=_float(_get(simsec, "step"), "[simulation] step"),
            record_every=int(_float(simsec.get("record_every", "1"), "[simulation] record_every")),
            tau=params.tau,
            method=simsec.get("method", "rk4").strip(),
            blow_up=None if blow is None else _float(blow, "[simulation] blow_up"),
        )
    except SimConfigError as exc:
        raise ScenarioError(f"[simulation]/[controller] tau: {exc}") from None
    for t, _ in profile.schedule:
        if t > 0 and abs(t / sim.h - round(t / sim.h)) > 1e-9 * max(1.0, t / sim.h):
            raise ScenarioError(f"[injection] at {t}: switch time not a multiple of step {sim.h}")

    sweep = _section(cp, "sweep", required=False)
    taus: tuple[float, ...] = ()
    sweep_t_end = None
    if sweep is not None:
        if "tau" in sweep:
            taus = _floats(sweep["tau"], "[sweep] tau")
        if "t_end" in sweep:
            sweep_t_end = _float(sweep["t_end"], "[sweep] t_end")

    outputs = dict(cp["output"]) if cp.has_section("output") else {}
    return Scenario(
        name=name,
        model=model,
        params=params,
        profile=profile,
        sim=sim,
        initial_mode=mode,
        initial_state=x0,
        sweep_taus=taus,
        sweep_t_end=sweep_t_end,
        outputs=outputs,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    return parse_scenario(text, name=str(path))


def bundled_scenario_path(name: str = "fourbus.scenario") -> Path:
    return Path(str(resources.files("mtdc") / "scenarios" / name))


def _vec(v) -> str:
    return " ".join(repr(float(x)) for x in v)


def dump_scenario(sc: Scenario) -> str:
    """Serialize with full float precision; parse_scenario(dump_scenario(s)) == s."""
    out = io.StringIO()
    w = out.write
    m, p = sc.model, sc.params
    w(f"[network]\nbuses = {m.n}\n\n")
    w(f"[buses]\ncapacitance = {_vec(m.capacitances)}\nv_nom = {_vec(p.V_nom)}\n\n")
    w("[lines]\n")
    for i, j, r in m.edges:
        w(f"{i}-{j} = {r!r}\n")
    w("\n[communication]\n")
    for i, j, c in m.comm_edges:
        w(f"{i}-{j} = {c!r}\n")
    w(f"\n[controller]\nk_p = {_vec(p.K_P)}\ncost_weights = {_vec(p.F)}\nk_v = {_vec(p.K_V)}\n")
    w(f"gamma = {p.gamma!r}\ndelta = {p.delta!r}\ntau = {p.tau!r}\n\n")
    w(f"[injection]\ninitial = {_vec(sc.profile.initial)}\n")
    for t, v in sc.profile.schedule:
        w(f"at {t!r} = {_vec(v)}\n")
    w(f"\n[initial_state]\nmode = {sc.initial_mode}\n")
    if sc.initial_state is not None:
        x = sc.initial_state
        w(f"v_bar = {_vec(x[: m.n])}\nv_hat = {_vec(x[m.n : 2 * m.n])}\nv = {_vec(x[2 * m.n :])}\n")
    s = sc.sim
    w(f"\n[simulation]\nt_end = {s.t_end!r}\nstep = {s.h!r}\nrecord_every = {s.record_every}\n")
    w(f"method = {s.method}\n")
    if s.blow_up is not None:
        w(f"blow_up = {s.blow_up!r}\n")
    if sc.sweep_taus or sc.sweep_t_end is not None:
        w("\n[sweep]\n")
        if sc.sweep_taus:
            w(f"tau = {_vec(sc.sweep_taus)}\n")
        if sc.sweep_t_end is not None:
            w(f"t_end = {sc.sweep_t_end!r}\n")
    if sc.outputs:
        w("\n[output]\n")
        for k, v in sc.outputs.items():
            w(f"{k} = {v}\n")
    return out.getvalue()


def initial_state(sc: Scenario) -> np.ndarray:
    """Stacked (Vbar, Vhat, V) initial state for the scenario.

    ``steady`` starts from the stationary point of the pre-switch injections
    (Vhat summing to zero), ``zero`` from Vbar = Vhat = 0 and V = V^nom.
    """
    n = sc.n
    if sc.initial_mode == "explicit":
        return np.asarray(sc.initial_state, dtype=float)
    if sc.initial_mode == "zero":
        return np.concatenate([np.zeros(2 * n), np.asarray(sc.params.V_nom)])
    I0 = np.asarray(sc.profile.initial)
    sys = assemble(sc.model, sc.params, I0)
    return predict_steady_state(sys, sc.model, sc.params, I0).x
