"""Robustness study: accuracy under feature and structure corruption.

Runs the training protocol after perturbing the inputs at a grid of
noise rates, one curve per noise kind.

Usage: python scripts/noise_robustness.py [--kinds gaussian,uniform,mask,structure]
"""

import argparse
import json

from hnd.synth import generate_sbm
from hnd.train import TrainConfig, noise_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kinds", default="gaussian,uniform,mask,structure")
    ap.add_argument("--rates", default="0.0,0.1,0.2,0.3,0.4")
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--splits", type=int, default=3)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    ds = generate_sbm(250, 100, 15, 1, 4, 1.0, seed=args.seed)
    cfg = TrainConfig(hidden_dim=16, horizon=4.0, tau=1.0, variant="l",
                      epochs=args.epochs, base_seed=0, split_count=args.splits)
    rates = [float(r) for r in args.rates.split(",")]

    curves = {}
    for kind in args.kinds.split(","):
        points = noise_sweep(ds, cfg, kind, rates)
        curves[kind] = [{"rate": p["rate"], "mean": p["report"].mean_test_accuracy,
                         "std": p["report"].std_test_accuracy} for p in points]
        line = "  ".join(f"{p['rate']:.1f}:{p['report'].mean_test_accuracy:.3f}"
                         for p in points)
        print(f"{kind:>10}: {line}")

    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"curves": curves, "args": vars(args)}, fh, indent=2, sort_keys=True)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
