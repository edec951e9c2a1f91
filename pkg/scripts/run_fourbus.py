"""Simulate the bundled four-bus step response and print the headline numbers.

    python3 scripts/run_fourbus.py [--out runs/fourbus] [--plot]
"""

import argparse
from pathlib import Path

import numpy as np

from mtdc.cli import summarize_simulation, write_trace_csv
from mtdc.scenario import bundled_scenario_path, load_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", type=Path, default=bundled_scenario_path())
    ap.add_argument("--out", type=Path, default=Path("runs/fourbus"))
    ap.add_argument("--plot", action="store_true", help="save V(t) and u(t) plots (needs matplotlib)")
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    summary, trace = summarize_simulation(sc)
    write_trace_csv(trace, args.out / "trace.csv")

    np.set_printoptions(precision=4, suppress=True)
    print(f"final V      {np.array(summary['V_final'])}")
    print(f"predicted V  {np.array(summary['V_predicted'])}")
    print(f"final u      {np.array(summary['u_final'])}")
    print(f"spread       {summary['spread_observed']:.4f} V (bound {summary['spread_bound']:.4f} V)")
    print(f"settling V   {max(summary['V_settling']):.3f} s, u {max(summary['u_settling']):.3f} s")
    print(f"trace        {args.out / 'trace.csv'}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
        ax1.plot(trace.times, trace.V)
        ax1.axhline(np.min(summary["V_predicted"]), ls=":", c="k")
        ax1.set_ylabel("V [V]")
        ax2.plot(trace.times, trace.u)
        ax2.set_ylabel("u [A]")
        ax2.set_xlabel("t [s]")
        fig.tight_layout()
        fig.savefig(args.out / "fourbus.png", dpi=120)
        print(f"plot         {args.out / 'fourbus.png'}")


if __name__ == "__main__":
    main()
