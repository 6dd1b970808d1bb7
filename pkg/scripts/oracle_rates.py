"""Ground-state hit rates of SA, bSB and dSB against brute force as n grows.

    python3 scripts/oracle_rates.py --sizes 8 12 16 --instances 100
"""

import argparse

from isingreco.ising import brute_force_solve, random_problem
from isingreco.solvers import run_solver


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--density", type=float, default=0.5)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--solvers", nargs="+", default=["sa", "bsb", "dsb", "subqubo"])
    args = ap.parse_args()
    print("n    " + "  ".join(f"{s:>8}" for s in args.solvers))
    for n in args.sizes:
        hits = dict.fromkeys(args.solvers, 0)
        for seed in range(args.instances):
            p = random_problem(n, args.density, seed)
            ground = brute_force_solve(p).energy + 1e-9
            for sid in args.solvers:
                params = {"subset_size": max(2, n // 2)} if sid == "subqubo" else None
                hits[sid] += run_solver(p, sid, seed=seed, params=params).energy <= ground
        print(f"{n:<4} " + "  ".join(f"{hits[s] / args.instances:8.1%}" for s in args.solvers))


if __name__ == "__main__":
    main()
