"""How often the Monte Carlo check of Var(W_T)/T passes across seeds.

At T = 50 the estimator still carries finite-T bias, so a single seed says little.
This repeats the check for a range of seeds and reports z-scores per H.
"""
import argparse
import sys

from fbmh.expansions import sigma_consts
from fbmh.fousim import McConfig, mc_wt_variance


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--H", type=float, nargs="+", default=[0.5, 0.6, 0.3])
    ap.add_argument("--T", type=float, default=50.0)
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=4096)
    args = ap.parse_args(argv)

    print("seed,H,mean,std_error,z")
    for H in args.H:
        s2, hits = sigma_consts(H).sigma2, 0
        for seed in range(args.seeds):
            est = mc_wt_variance(McConfig(seed=seed, n_steps=args.steps, n_paths=args.paths, T=args.T, H=H))
            z = (est.mean - s2) / est.std_error
            hits += abs(z) <= 3
            print(f"{seed},{H},{est.mean:.17g},{est.std_error:.17g},{z:.6f}", flush=True)
        print(f"H={H}: {hits}/{args.seeds} seeds within 3 standard errors", file=sys.stderr)


if __name__ == "__main__":
    main()
