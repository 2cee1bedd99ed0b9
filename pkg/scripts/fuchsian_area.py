"""Area convergence of the hyperbolic metric on the L-shaped genus-2 surface (t = 0).

The target area is 4 pi by Gauss-Bonnet.  Prints one row per refinement level
and grading exponent.
"""
import argparse
import math

from germforge import GeometrySetting, Setting, assemble, assemble_germ, lshape_background, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, nargs="+", default=[3, 4, 5])
    ap.add_argument("--gradings", type=float, nargs="+", default=[1.0, 1.5, 3.0])
    args = ap.parse_args()
    print(f"{'grading':>8} {'level':>5} {'vertices':>9} {'area':>12} {'rel.err':>10} {'ratio':>7}")
    for g in args.gradings:
        prev = None
        for r in args.levels:
            mesh, hqd = lshape_background(refinement=r, cone_grading=g)
            prob = assemble(GeometrySetting(Setting.HYP_MINIMAL), mesh, hqd, scale=0.0)
            area = assemble_germ(solve(prob, spectrum=False), prob).area
            err = abs(area / (4 * math.pi) - 1)
            ratio = f"{prev / err:7.2f}" if prev else " " * 7
            print(f"{g:8.2f} {r:5d} {mesh.n_vertices:9d} {area:12.8f} {err:10.3e} {ratio}")
            prev = err


if __name__ == "__main__":
    main()
