"""A family of equilibria indexed by the switch point t, in both signal
structures. Writes the limit curves side by side (one column per t)."""

import argparse

import numpy as np

from globalgames import _io
from globalgames.dist import ErrorDistribution as E
from globalgames.onesignal import Prop5Params, iterate_to_equilibrium_1s
from globalgames.twosignal import Prop4Params, iterate_to_equilibrium


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", choices=("twosignal", "onesignal"), default="onesignal")
    ap.add_argument("--ts", type=float, nargs="+", default=[0.35, 0.45, 0.5, 0.55, 0.65])
    ap.add_argument("--alpha", type=float, default=1e4, help="precision of the action (or net-size) signal")
    ap.add_argument("--out", default="continuum.csv")
    args = ap.parse_args()

    curves = {}
    for t in args.ts:
        if args.model == "twosignal":
            rep = iterate_to_equilibrium(t, Prop4Params(0.2, 0.1, 1.0, 0.5, E.normal(1.0), E.normal(args.alpha)))
        else:
            rep = iterate_to_equilibrium_1s(t, Prop5Params(0.2, 0.1, 0.5, E.normal(args.alpha)))
        curves[t] = rep.attack
        print(f"t={t:.3f}: {rep.iterations} iterations, residual {rep.residual:.2e}")
    grid = np.linspace(min(args.ts) - 0.5, max(args.ts) + 0.5, 401)
    header = ("theta",) + tuple(f"A_t{t:g}" for t in args.ts)
    rows = [(th,) + tuple(float(curves[t](th)) for t in args.ts) for th in grid]
    _io.write_text(_io.csv_text(header, rows), args.out)
    ks = sorted(curves)
    dmin = min(curves[a].sup_distance(curves[b]) for i, a in enumerate(ks) for b in ks[i + 1 :])
    print(f"smallest pairwise sup-distance {dmin:.3f}; wrote {args.out}")


if __name__ == "__main__":
    main()
