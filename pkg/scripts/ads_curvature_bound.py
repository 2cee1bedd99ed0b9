"""Interior k_max of AdS maximal germs on the L-shaped surface for growing differentials.

k stays below 1 for every scale; it approaches 1 only as s grows without bound.
"""
import argparse

from germforge import (GeometrySetting, Setting, assemble, assemble_germ, diagnostics,
                       lshape_background, solve)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--level", type=int, default=4)
    ap.add_argument("--scales", type=float, nargs="+", default=[0.25, 0.5, 1, 2, 4, 8, 16, 32])
    args = ap.parse_args()
    mesh, hqd = lshape_background(refinement=args.level)
    print(f"{'s':>7} {'k_int':>10} {'k_near':>10} {'1-k_int':>10} {'iters':>6}")
    u = "zero"
    for s in args.scales:
        prob = assemble(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd, scale=s)
        sol = solve(prob, u)
        u = sol.u
        rep = diagnostics(assemble_germ(sol, prob), prob)
        print(f"{s:7.3g} {rep.k_max_interior:10.6f} {rep.k_max_near_marks:10.6f} "
              f"{1 - rep.k_max_interior:10.3e} {sol.iterations:6d}")


if __name__ == "__main__":
    main()
