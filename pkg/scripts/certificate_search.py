"""Random search for certificate counterexamples and non-necessity witnesses.

    python3 scripts/certificate_search.py --count 20000 --seed 1
"""

import argparse

import numpy as np

from mtdc.random_instances import certificate_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--small-gains", action="store_true", help="draw gamma and delta from [1e-3, 1e-1]")
    args = ap.parse_args()

    rng = (1e-3, 1e-1) if args.small_gains else (1e-3, 10.0)
    res = certificate_sweep(args.seed, args.count, consensus_range=rng)
    for k, v in res["counts"].items():
        print(f"{k:22s} {v}")
    print(f"counterexamples        {len(res['counterexamples'])}")
    for k, model, params, abscissa in res["counterexamples"]:
        print(f"  #{k}: n={model.n} gamma={params.gamma:.3g} delta={params.delta:.3g} abscissa={abscissa:.3e}")
    if res["witness"] is not None:
        k, model, params = res["witness"]
        np.set_printoptions(precision=3)
        print(f"witness #{k}: n={model.n}, k_p={params.K_P[0]:.3g}, gamma={params.gamma:.3g}, delta={params.delta:.3g}")


if __name__ == "__main__":
    main()
