"""Reconstruction error versus measurement noise on the qubit dephasing example.

Writes CSV ``sigma,seeds,median_error,p90_error`` to stdout or ``--out``.
"""
import argparse
import csv
import math
import sys

import numpy as np

from dyntomo.channel import dephasing
from dyntomo.tomography import TimeGrid, dephasing_observables, reconstruct, simulate_measurements

RHO0 = np.array([[0.6, 0.1 - 0.2j], [0.1 + 0.2j, 0.4]])


def sweep(sigmas, seeds, gamma=1.0, t=math.log(2)):
    model = dephasing(gamma)
    obs = list(dephasing_observables())
    grid = TimeGrid((0.0, t))
    for sigma in sigmas:
        errs = [
            np.linalg.norm(
                reconstruct(simulate_measurements(model, RHO0, obs, grid, sigma, s), model.decomposition).state.matrix
                - RHO0
            )
            for s in range(seeds)
        ]
        yield sigma, seeds, float(np.median(errs)), float(np.percentile(errs, 90))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--sigmas", type=float, nargs="+", default=list(np.logspace(-6, -1, 11)))
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--t", type=float, default=math.log(2))
    ap.add_argument("--out")
    args = ap.parse_args()
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["sigma", "seeds", "median_error", "p90_error"])
    for row in sweep(args.sigmas, args.seeds, args.gamma, args.t):
        w.writerow([f"{row[0]:.6g}", row[1], f"{row[2]:.6g}", f"{row[3]:.6g}"])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
