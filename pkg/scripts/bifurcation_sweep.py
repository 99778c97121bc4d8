"""Fixed points of the attack-mass map over a theta sweep, for several
precisions. Writes one CSV row per (alpha_z, theta, solution)."""

import argparse
import math

import numpy as np

from globalgames import _io
from globalgames.netsignal import bifurcation, multiplicity_region


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", type=float, nargs="+", default=[4.0, 2 * math.pi + 0.1, 8.0, 16.0])
    ap.add_argument("--z-star", type=float, default=0.25)
    ap.add_argument("--theta", type=float, nargs=3, default=[-0.5, 1.0, 301], metavar=("LO", "HI", "N"))
    ap.add_argument("--out", default="bifurcation.csv")
    args = ap.parse_args()

    thetas = np.linspace(args.theta[0], args.theta[1], int(args.theta[2]))
    rows = []
    for alpha in args.alphas:
        reg = multiplicity_region(args.z_star, alpha)
        span = "none" if reg.empty else f"[{reg.theta_low:.4f}, {reg.theta_high:.4f}]"
        print(f"alpha_z={alpha:.4f}: three-solution theta range {span}")
        rows += [(alpha, th, a, st) for th, a, st in bifurcation(args.z_star, alpha, thetas)]
    _io.write_text(_io.csv_text(("alpha_z", "theta", "A", "stability"), rows), args.out)
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
