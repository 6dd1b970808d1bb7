"""Reconstructed dijet mass for toy Z events clustered with the angle QUBO.

    python3 scripts/z_mass_peak.py --events 500 --resolution 0.05 --solver bsb
"""

import argparse

import numpy as np

from isingreco.jets import angle_qubo, build_jets, dijet_assignment, generate_jet_event, invariant_mass, mass_histogram
from isingreco.solvers import run_solver


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--events", type=int, default=500)
    ap.add_argument("--resolution", type=float, default=0.05)
    ap.add_argument("--per-jet", type=int, default=8)
    ap.add_argument("--solver", default="bsb")
    args = ap.parse_args()
    masses = []
    for seed in range(args.events):
        ev = generate_jet_event(2, n_constituents_per_jet=args.per_jet, energy_resolution=args.resolution, seed=seed)
        res = run_solver(angle_qubo(ev), args.solver, seed=seed)
        masses.append(invariant_mass(build_jets(ev, dijet_assignment(res.config))))
    edges, counts = mass_histogram(masses, bins=40, range_=(81.2, 101.2))
    top = counts.max()
    for lo, c in zip(edges[:-1], counts):
        print(f"{lo:7.2f} {'#' * int(50 * c / top) if top else ''}")
    print(f"mean {np.mean(masses):.2f} GeV, std {np.std(masses):.2f} GeV")


if __name__ == "__main__":
    main()
