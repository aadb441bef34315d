"""Fit the growth exponents of shortest crossing length, crossing box count and one-arm decay."""

import argparse

import numpy as np

from nodallab.harness import ExperimentConfig, fit_exponent_replicas, run


def fit_column(records, key, lambdas, seed):
    groups = {lam: [] for lam in lambdas}
    for r in records:
        if r["crossed"] and r.get(key) is not None:
            groups[r["lambda"]].append(r[key])
    return fit_exponent_replicas(lambdas, [groups[lam] for lam in lambdas], seed=seed), groups


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambdas", default="16,32,64,128")
    ap.add_argument("--replicas", type=int, default=1100)
    ap.add_argument("--arm-replicas", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="runs/scaling")
    args = ap.parse_args()
    lambdas = [float(v) for v in args.lambdas.split(",")]

    cfg = ExperimentConfig(lambdas=lambdas, replicas=args.replicas, seed=args.seed, shortest_crossing=True,
                           box_count=True, nodal=False, threads=args.threads, out_dir=args.out)
    records, _ = run(cfg)
    for key in ("shortest_crossing", "box_count"):
        fit, groups = fit_column(records, key, lambdas, args.seed)
        counts = ", ".join(f"{lam:g}:{len(v)}" for lam, v in groups.items())
        print(f"{key:>18}: exponent {fit.slope:.4f} +- {fit.slope_se:.4f}  CI [{fit.ci_low:.4f}, {fit.ci_high:.4f}]"
              f"  (crossings {counts})")

    ts = [8.0, 16.0, 32.0, 64.0]
    arm_cfg = ExperimentConfig(lambdas=[8.0], replicas=args.arm_replicas, seed=args.seed + 1, crossing=False,
                               one_arm_ts=ts, threads=args.threads, out_dir=args.out + "_arm")
    arm_records, _ = run(arm_cfg)
    flags = np.array([r["arm_flags"] for r in arm_records], dtype=float)
    fit = fit_exponent_replicas(ts, list(flags.T), paired=True, seed=args.seed)
    print(f"{'one-arm':>18}: exponent {fit.slope:.4f} +- {fit.slope_se:.4f}  CI [{fit.ci_low:.4f}, {fit.ci_high:.4f}]"
          f"  pi(1,t) = {np.round(flags.mean(axis=0), 4).tolist()}")


if __name__ == "__main__":
    main()
