"""Sweep the communication delay on a scenario and tabulate stability.

    python3 scripts/delay_sweep.py [--tau 0:1:0.05] [--t-end 120]
"""

import argparse
from dataclasses import replace
from pathlib import Path

from mtdc.cli import parse_tau_list, sweep_report
from mtdc.scenario import bundled_scenario_path, load_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", type=Path, default=bundled_scenario_path())
    ap.add_argument("--tau", default="0:1:0.1")
    ap.add_argument("--t-end", type=float, default=None, help="override the scenario's sweep horizon")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    if args.t_end is not None:
        sc = replace(sc, sweep_t_end=args.t_end)
    rep = sweep_report(sc, parse_tau_list(args.tau), args.workers)

    print(f"{'tau':>6} {'status':>10} {'t_div':>8} {'V settle':>9} {'growth':>8}")
    for r in rep["rows"]:
        status = "diverged" if r["diverged"] else ("growing" if r["growing"] else "bounded")
        t_div = "" if r["divergence_time"] is None else f"{r['divergence_time']:.2f}"
        vs = "" if r["V_settling"] is None else f"{r['V_settling']:.2f}"
        g = "" if r["growth"] is None else f"{r['growth']:.3f}"
        print(f"{r['tau']:6.2f} {status:>10} {t_div:>8} {vs:>9} {g:>8}")
    print(f"smallest diverging tau: {rep['smallest_diverged_tau']} (horizon {rep['t_end']} s)")


if __name__ == "__main__":
    main()
