"""Agent-based hysteresis loop: terminal attack from a cold (A=0) and a hot
(A=1) start over a theta grid, compared with the analytic fixed points."""

import argparse

import numpy as np

from globalgames import _io
from globalgames.dist import ErrorDistribution
from globalgames.netsignal import attack_fixed_points
from globalgames.simlab import SimConfig, hysteresis_gaps, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha-z", type=float, default=16.0)
    ap.add_argument("--cutoff", type=float, default=0.25)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--replications", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default="hysteresis.csv")
    args = ap.parse_args()

    tmpl = SimConfig(n_agents=args.n, cutoff=args.cutoff, noise=ErrorDistribution.normal(args.alpha_z), seed=args.seed)
    thetas = np.linspace(-0.25, 0.75, 41)
    rows = sweep(tmpl, thetas, args.replications, workers=args.workers)
    out = []
    for r in rows:
        fp = attack_fixed_points(r["theta"], args.cutoff, args.alpha_z)
        out.append((r["theta"], r["init"], r["replication"], r["seed"], r["terminal"], r["success"], r["converged"], fp.count))
    header = ("theta", "init", "replication", "seed", "terminal", "success", "converged", "n_fixed_points")
    _io.write_text(_io.csv_text(header, out), args.out)
    gaps = hysteresis_gaps(rows)
    wide = [th for th, g in gaps if g > 0.5]
    if wide:
        print(f"hot/cold terminals differ by > 0.5 for theta in [{min(wide):.3f}, {max(wide):.3f}]")
    else:
        print("no theta with a hot/cold gap above 0.5")
    print(f"largest gap {max(g for _, g in gaps):.3f}; wrote {len(out)} rows to {args.out}")


if __name__ == "__main__":
    main()
