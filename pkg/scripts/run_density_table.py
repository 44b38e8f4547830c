"""Regenerate the binary-network density table over intercept and variance."""

import argparse

import numpy as np

from netresp.simulate import density_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--seed", type=int, default=19)
    ap.add_argument("--intercepts", default="0,-1,-2,-3,-4")
    ap.add_argument("--variances", default="0.2,1")
    args = ap.parse_args()
    intercepts = [float(t) for t in args.intercepts.split(",")]
    variances = [float(t) for t in args.variances.split(",")]
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    table = density_table(intercepts, variances, N=args.n, K=args.k, rng=rng)
    header = "intercept " + " ".join(f"var={v:g}" for v in variances)
    print(header)
    for inter, row in zip(intercepts, table):
        print(f"{inter:9g} " + " ".join(f"{val:7.3f}" for val in row))
    print(f"\nN={args.n}, K={args.k}, seed={args.seed} (one network per cell)")


if __name__ == "__main__":
    main()
