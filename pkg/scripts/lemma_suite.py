"""Scaled residuals of each auxiliary expansion on a T grid."""
import argparse
import sys

from fbmh.expansions import lemma_residuals, max_over_median

SUITE = [("A2", -0.9), ("A2", -0.5), ("A3", -0.5), ("A3", -0.2), ("A4", None),
         ("A5", -0.3), ("A5", 0.2), ("L1", 0.3), ("L2", 0.6), ("L2", 0.9), ("L2_34", None)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=float, nargs="+", default=[25.0, 50.0, 100.0, 200.0])
    args = ap.parse_args(argv)

    print("lemma,param,T,oracle,expansion,residual,scaled_residual")
    for lemma, p in SUITE:
        rows = lemma_residuals(lemma, args.T, p)
        for r in rows:
            print(f"{lemma},{'' if p is None else p},{r['T']:.17g},{r['oracle']:.17g},{r['expansion']:.17g},"
                  f"{r['residual']:.17g},{r['scaled_residual']:.17g}")
        q = max_over_median([r["scaled_residual"] for r in rows])
        print(f"{lemma} {p}: max/median {q:.3f}", file=sys.stderr)


if __name__ == "__main__":
    main()
