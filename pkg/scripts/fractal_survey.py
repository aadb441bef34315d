"""Decompose sampled nodal crossing curves and tabulate hierarchy, energy and sparsity outcomes."""

import argparse
import json

from nodallab.harness import ExperimentConfig, FractalSettings, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambdas", default="32,64")
    ap.add_argument("--replicas", type=int, default=300)
    ap.add_argument("--triplet", default="1,1.2,1.05")
    ap.add_argument("--k0", type=int, default=2)
    ap.add_argument("--tube-factor", type=float, default=9.0)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--out", default="runs/fractal_survey")
    args = ap.parse_args()

    m, gamma, s = (float(v) for v in args.triplet.split(","))
    fs = FractalSettings(triplet=(int(m), gamma, s), k0=args.k0, tube_factor=args.tube_factor)
    cfg = ExperimentConfig(lambdas=[float(v) for v in args.lambdas.split(",")], replicas=args.replicas,
                           seed=args.seed, fractal=fs, out_dir=args.out)
    _, summary = run(cfg)
    print(json.dumps({lam: s["fractal"] for lam, s in summary["per_lambda"].items()}, indent=2))


if __name__ == "__main__":
    main()
