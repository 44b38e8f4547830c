"""Joint-distribution (Geweke-style) validation of the Gibbs sampler.

Compares marginal moments of the parameters under forward prior simulation
and under the successive-conditional chain; a correct sampler makes the two
agree within Monte Carlo error.
"""

import argparse

from netresp.validation import geweke_test


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--forward", type=int, default=60000)
    ap.add_argument("--successive", type=int, default=30000)
    ap.add_argument("--thin", type=int, default=2)
    ap.add_argument("--seed", type=int, default=20240817)
    ap.add_argument("--continuous-network", action="store_true")
    args = ap.parse_args()
    kind = "continuous" if args.continuous_network else "binary"
    res = geweke_test(args.forward, args.successive, args.thin, args.seed, network_kind=kind)
    print(f"{'moment':>20} {'forward':>10} {'successive':>10} {'z':>8}")
    for name, f, s, z in zip(res.names, res.forward_means, res.successive_means, res.zscores):
        print(f"{name:>20} {f:>10.4f} {s:>10.4f} {z:>8.2f}")
    print(f"max |z| = {res.max_abs_z:.2f} ({'PASS' if res.passed() else 'FAIL'} at 4)")


if __name__ == "__main__":
    main()
