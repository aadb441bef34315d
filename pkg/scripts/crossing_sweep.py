"""Square-crossing probability and nodal/excursion consistency over a range of scales."""

import argparse

from nodallab.harness import ExperimentConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambdas", default="16,32,64")
    ap.add_argument("--replicas", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--kernel", default="BargmannFock")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="runs/crossing_sweep")
    args = ap.parse_args()

    cfg = ExperimentConfig(kernel=args.kernel, lambdas=[float(v) for v in args.lambdas.split(",")],
                           replicas=args.replicas, seed=args.seed, threads=args.threads, out_dir=args.out)
    _, summary = run(cfg)
    print(f"{'lambda':>8} {'P(cross)':>10} {'se':>8} {'P(nodal)':>10} {'violations':>10}")
    for lam, s in summary["per_lambda"].items():
        c, n = s["crossing"], s["nodal_crossing"]
        print(f"{float(lam):8g} {c['p']:10.4f} {c['se']:8.4f} {n['p']:10.4f} {s['nodal_without_excursion']:10d}")


if __name__ == "__main__":
    main()
