"""Command-line front end.

    mtdc simulate     --scenario FILE [--out DIR] [--format text|machine]
    mtdc analyze      --scenario FILE [--format ...]
    mtdc dispatch     --scenario FILE [--format ...]
    mtdc sweep-delay  --scenario FILE [--tau LIST] [--out DIR] [--format ...]
    mtdc certify-sweep [--seed N] [--count N] [--format ...]

Exit codes: 0 success (a diverged run is a result, not a failure),
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .certificate import check_certificate
from .closed_loop import assemble, predict_steady_state, stability_test, voltage_spread_bound
from .dispatch import solve_dispatch_closed_form
from .errors import ModelError, NumericalError, SimConfigError, UnstableSystemError
from .random_instances import certificate_sweep
from .scenario import Scenario, ScenarioError, initial_state, load_scenario
from .sim import SimTrace, settling_time, simulate, sweep_delay

log = logging.getLogger("mtdc")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _num(x):
    """JSON-friendly float: NaN/inf become None."""
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in np.asarray(x).ravel().tolist()]
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def write_trace_csv(trace: SimTrace, path: Path) -> None:
    n = trace.V.shape[1]
    header = ["t"]
    for prefix in ("V", "u", "Vhat", "Vbar"):
        header += [f"{prefix}_{i}" for i in range(1, n + 1)]
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        data = np.column_stack([trace.times, trace.V, trace.u, trace.V_hat, trace.V_bar])
        for row in data:
            w.writerow([repr(float(v)) for v in row])


def read_trace_csv(path: Path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
    return {name: body[:, k] for k, name in enumerate(header)}


def _analysis(sc: Scenario):
    I_final = sc.profile.final
    sys_ = assemble(sc.model, sc.params, I_final)
    rep = stability_test(sys_)
    ss = None
    if rep.stable:
        ss = predict_steady_state(sys_, sc.model, sc.params, I_final, x0=initial_state(sc), check_stability=False)
    return sys_, rep, ss


def summarize_simulation(sc: Scenario) -> tuple[dict, SimTrace]:
    x0 = initial_state(sc)
    trace = simulate(sc.model, sc.params, sc.profile, x0, sc.sim)
    _, rep, ss = _analysis(sc)
    s: dict = {
        "scenario": sc.name,
        "tau": sc.sim.tau,
        "method": sc.sim.method,
        "step": sc.sim.h,
        "t_end": float(trace.times[-1]),
        "diverged": trace.diverged,
        "divergence_time": trace.divergence_time,
        "delay_free_stable": rep.stable,
        "V_final": _num(trace.V[-1]),
        "u_final": _num(trace.u[-1]),
    }
    if ss is not None:
        V_fin, u_fin = trace.V[-1], trace.u[-1]
        spread = float(V_fin.max() - V_fin.min())
        s.update(
            V_predicted=_num(ss.V),
            u_predicted=_num(ss.u),
            V_rel_error=_num(np.abs(V_fin - ss.V).max() / np.abs(ss.V).max()),
            u_rel_error=_num(np.abs(u_fin - ss.u).max() / max(np.abs(ss.u).max(), 1e-300)),
            spread_bound=voltage_spread_bound(sc.model, sc.profile.final, ss.u),
            spread_observed=spread,
            weighted_voltage_error=_num(np.asarray(sc.params.K_V) @ (V_fin - np.asarray(sc.params.V_nom))),
        )
        if not trace.diverged:
            s["V_settling"] = _num(settling_time(trace, "V", ss.V))
            s["u_settling"] = _num(settling_time(trace, "u", ss.u))
    return s, trace


def analyze_report(sc: Scenario) -> dict:
    sys_, rep, ss = _analysis(sc)
    cert = check_certificate(sc.model, sc.params)
    out: dict = {
        "scenario": sc.name,
        "eigenvalues": [[_num(z.real), _num(z.imag)] for z in rep.eigenvalues],
        "zero_multiplicity": rep.zero_multiplicity,
        "stable": rep.stable,
        "spectral_abscissa_excluding_null": rep.spectral_abscissa_excluding_null,
        "certificate": {
            "applicable": cert.applicable,
            "certified": cert.certified,
            "condition_1": {"lhs": _num(cert.lhs_1), "rhs": 0.0, "holds": cert.condition_1},
            "condition_2": {"lhs": _num(cert.lhs_2), "rhs": 0.0, "holds": cert.condition_2},
            "condition_3": {"lhs": _num(cert.lhs_3), "rhs": _num(cert.rhs_3), "holds": cert.condition_3},
            "condition_3_proof_variant": {
                "lhs": _num(cert.lhs_3_proof),
                "rhs": _num(cert.rhs_3),
                "holds": cert.condition_3_proof,
            },
        },
    }
    if ss is not None:
        out["steady_state"] = {
            "V": _num(ss.V),
            "V_hat": _num(ss.V_hat),
            "V_bar": _num(ss.V_bar),
            "u": _num(ss.u),
            "k1": ss.k1,
        }
        out["spread_bound"] = voltage_spread_bound(sc.model, sc.profile.final, ss.u)
    return out


def dispatch_report(sc: Scenario) -> dict:
    I_final = sc.profile.final
    sol = solve_dispatch_closed_form(I_final, sc.params.F, sc.model, sc.params.K_V, sc.params.V_nom)
    return {
        "scenario": sc.name,
        "I_inj": _num(I_final),
        "cost_weights": _num(sc.params.F),
        "u_star": _num(sol.u_star),
        "lambda": sol.lam,
        "cost": sol.cost,
        "V_star": _num(sol.V_star),
        "kp_matches_cost": sc.params.kp_matches_cost,
    }


def parse_tau_list(text: str) -> list[float]:
    """'0,0.1,0.5' or a range 'start:stop:step' (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        a, b, c = (float(p) for p in text.split(":"))
        if c <= 0:
            raise ValueError("tau range step must be > 0")
        k = int(math.floor((b - a) / c + 1e-9))
        return [round(a + i * c, 12) for i in range(k + 1)]
    return [float(p) for p in text.replace(",", " ").split()]


def sweep_report(sc: Scenario, taus: list[float], workers: int = 1) -> dict:
    x0 = initial_state(sc)
    _, rep, ss = _analysis(sc)
    cfg = sc.sim if sc.sweep_t_end is None else replace(sc.sim, t_end=sc.sweep_t_end)
    reference = (ss.V, ss.u) if ss is not None else None
    result = sweep_delay(sc.model, sc.params, sc.profile, x0, cfg, taus, reference=reference, workers=workers)
    rows = []
    for r in result.rows:
        growing = (not r.diverged) and r.growth > 1.1
        rows.append(
            {
                "tau": r.tau,
                "diverged": r.diverged,
                "divergence_time": r.divergence_time,
                "growing": bool(growing),
                "V_settling": _num(r.V_settling),
                "u_settling": _num(r.u_settling),
                "growth": _num(r.growth),
            }
        )
    return {
        "scenario": sc.name,
        "t_end": cfg.t_end,
        "rows": rows,
        "smallest_diverged_tau": result.smallest_unstable_tau,
        "largest_stable_tau_below": result.largest_stable_tau_below_threshold,
        "monotone": result.monotone,
    }


def _format_text(d, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    for k, v in d.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.append(_format_text(v, indent + 1))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{pad}{k}:")
            keys = list(v[0].keys())
            lines.append(pad + "  " + "  ".join(f"{c:>14}" for c in keys))
            for row in v:
                lines.append(pad + "  " + "  ".join(f"{_cell(row[c]):>14}" for c in keys))
        elif isinstance(v, list) and v and isinstance(v[0], list):
            lines.append(f"{pad}{k}:")
            for item in v:
                lines.append(pad + "  " + "  ".join(_cell(x) for x in item))
        else:
            lines.append(f"{pad}{k}: {_cell(v)}")
    return "\n".join(lines)


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(_cell(x) for x in v) + "]"
    if v is None:
        return "-"
    return str(v)


def _emit(d: dict, fmt: str, out_dir: Path | None = None, stem: str = "summary") -> None:
    text = json.dumps(d, indent=2) if fmt == "machine" else _format_text(d)
    print(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        ext = "json" if fmt == "machine" else "txt"
        (out_dir / f"{stem}.{ext}").write_text(text + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "machine"), default="text")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized utilities")
    common.add_argument("-v", "--verbose", action="store_true")

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("--scenario", required=True, type=Path)
    scen.add_argument("--out", type=Path, default=None)

    p = argparse.ArgumentParser(prog="mtdc", description="MTDC distributed voltage control toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common, scen], help="run the scenario and write trace + summary")
    sub.add_parser("analyze", parents=[common, scen], help="eigenvalue test, certificate, steady state")
    sub.add_parser("dispatch", parents=[common, scen], help="optimal current injections")
    sw = sub.add_parser("sweep-delay", parents=[common, scen], help="stability versus communication delay")
    sw.add_argument("--tau", default=None, help="list '0,0.1,0.5' or range 'start:stop:step'")
    sw.add_argument("--workers", type=int, default=1)
    cs = sub.add_parser("certify-sweep", parents=[common], help="randomized certificate soundness check")
    cs.add_argument("--count", type=int, default=200)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "certify-sweep":
            res = certificate_sweep(args.seed, args.count)
            d = {
                "seed": args.seed,
                "count": args.count,
                **res["counts"],
                "counterexamples": len(res["counterexamples"]),
                "non_necessity_witness_index": None if res["witness"] is None else res["witness"][0],
            }
            _emit(d, args.format)
            return EXIT_OK

        sc = load_scenario(args.scenario)
        out_dir = args.out
        if args.command == "simulate":
            summary, trace = summarize_simulation(sc)
            out_dir = out_dir or Path(".")
            trace_path = out_dir / sc.outputs.get("trace", "trace.csv")
            write_trace_csv(trace, trace_path)
            summary["trace_file"] = str(trace_path)
            _emit(summary, args.format, out_dir, sc.outputs.get("summary", "summary"))
        elif args.command == "analyze":
            _emit(analyze_report(sc), args.format, out_dir, "analysis")
        elif args.command == "dispatch":
            _emit(dispatch_report(sc), args.format, out_dir, "dispatch")
        elif args.command == "sweep-delay":
            taus = parse_tau_list(args.tau) if args.tau else list(sc.sweep_taus) or [sc.sim.tau]
            _emit(sweep_report(sc, taus, args.workers), args.format, out_dir, "sweep")
    except (ScenarioError, ModelError, SimConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, UnstableSystemError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
