"""Energy at a fixed modelled budget for SA and bSB on large dense instances.

Sweeps density and instance seed to show how the SA/bSB ordering moves with
the instance. Each cell prints the number of solver seeds on which bSB
reached an energy no higher than SA, and both medians.

    python3 scripts/budget_ordering.py --n 2000 --budget 5 --densities 0.1 0.5 1.0
"""

import argparse

import numpy as np

from isingreco.bench import bench_compare
from isingreco.ising import random_problem


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--budget", type=float, default=5.0)
    ap.add_argument("--densities", type=float, nargs="+", default=[0.1, 0.5, 1.0])
    ap.add_argument("--instance-seeds", type=int, nargs="+", default=[7])
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()
    for d in args.densities:
        for iseed in args.instance_seeds:
            p = random_problem(args.n, d, seed=iseed)
            recs = bench_compare([p], ["sa", "bsb"], budget=args.budget, seeds=range(args.seeds))
            sa = {r["seed"]: r["energy"] for r in recs if r["solver_id"] == "sa"}
            bsb = {r["seed"]: r["energy"] for r in recs if r["solver_id"] == "bsb"}
            wins = sum(bsb[s] <= sa[s] for s in sa)
            print(
                f"density {d:<4} instance {iseed:<3} bSB<=SA {wins}/{len(sa)}  "
                f"SA median {np.median(list(sa.values())):.1f}  bSB median {np.median(list(bsb.values())):.1f}",
                flush=True,
            )


if __name__ == "__main__":
    main()
