"""Command-line entry point.

Precedence: built-in defaults < ``--config`` JSON < command-line flags.
Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..errors import ConfigError, NodalLabError, UsageError
from ..geometry import Rect
from ..levelset import excursion_mask, mask_to_pgm, nodal_graph, nodal_graph_csv
from ..sampler import sample_field, save_field_binary
from .config import ExperimentConfig, FractalSettings, JointSettings
from .experiments import run
from .fitting import fit_exponent_replicas
from .records import read_records

ANALYSES = ("crossing-prob", "one-arm", "shortest-crossing", "fractal-analyze", "chemical",
            "joint-crossing")
DEFAULT_ARM_TS = [8.0, 16.0, 32.0, 64.0]


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {text!r}") from exc


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda", dest="lambdas", type=_floats)
    p.add_argument("--replicas", type=int)
    p.add_argument("--h", type=float)
    p.add_argument("--kernel")
    p.add_argument("--out", dest="out_dir")
    p.add_argument("--threads", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nodallab", description="Monte Carlo experiments on planar Gaussian field level sets.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ANALYSES + ("validate",):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "one-arm":
            p.add_argument("--ts", type=_floats, help="outer box sizes")
            p.add_argument("--s", type=float, help="inner box size")
        if name == "chemical":
            p.add_argument("--boxes", type=int, default=None, help="unit boxes per replica")
        if name == "fractal-analyze":
            p.add_argument("--triplet", type=_floats, help="m,gamma,s")
            p.add_argument("--k0", type=int)
    p = sub.add_parser("sample", help="sample one field and dump it")
    _add_common(p)
    p.add_argument("--pgm", action="store_true", help="also write the excursion mask as PGM")
    p.add_argument("--nodal-csv", action="store_true", help="also write the nodal graph as CSV")
    p = sub.add_parser("fit-exponent")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--x", default="lambda")
    p.add_argument("--y", required=True)
    p.add_argument("--n-boot", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(seed=args.seed, lambdas=args.lambdas, replicas=args.replicas, h=args.h,
                              kernel=args.kernel, out_dir=args.out_dir, threads=args.threads)


def _configure(cfg: ExperimentConfig, args) -> ExperimentConfig:
    cmd = args.command
    if cmd == "one-arm":
        ts = args.ts or cfg.one_arm_ts or DEFAULT_ARM_TS
        return cfg.with_overrides(one_arm_ts=ts, one_arm_s=args.s)
    if cmd == "shortest-crossing":
        return cfg.with_overrides(shortest_crossing=True, box_count=True)
    if cmd == "chemical":
        return cfg.with_overrides(chemical_boxes=args.boxes or cfg.chemical_boxes or 16)
    if cmd == "joint-crossing":
        return cfg if cfg.joint is not None else cfg.with_overrides(joint=JointSettings())
    if cmd == "fractal-analyze":
        fs = cfg.fractal or FractalSettings()
        if args.triplet:
            fs = FractalSettings(tuple(args.triplet), fs.k0, fs.tube_factor, fs.check_sparsity)
        if args.k0 is not None:
            fs = FractalSettings(fs.triplet, args.k0, fs.tube_factor, fs.check_sparsity)
        return cfg.with_overrides(fractal=fs)
    return cfg


def _sample_to_disk(cfg: ExperimentConfig):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lam = cfg.lambdas[0]
    field = sample_field(cfg.kernel_obj, Rect(0, 0, lam * cfg.aspect, lam), cfg.h, cfg.seed)
    save_field_binary(field, out / "field.bin")
    print(f"wrote {out / 'field.bin'} ({field.n_x}x{field.n_y}, h={field.h})")
    return field


def _cmd_fit(args) -> int:
    rows = read_records(args.input)
    if not rows:
        raise UsageError(f"{args.input} has no records")
    if args.x not in rows[0] or args.y not in rows[0]:
        raise UsageError(f"columns {args.x!r} / {args.y!r} not both present in {args.input}")
    groups = defaultdict(list)
    for r in rows:
        if r[args.y] != "":
            groups[float(r[args.x])].append(float(r[args.y]))
    xs = sorted(groups)
    res = fit_exponent_replicas(xs, [groups[x] for x in xs], n_boot=args.n_boot, seed=args.seed)
    report = {"x": args.x, "y": args.y, "slope": res.slope, "intercept": res.intercept,
              "ci95": list(res.ci), "slope_se": res.slope_se,
              "points": {str(x): {"n": len(groups[x]), "mean": float(np.mean(groups[x]))} for x in xs}}
    print(json.dumps(report, indent=2))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "fit-exponent":
            return _cmd_fit(args)
        cfg = _configure(load_config(args), args).validate()
        if args.command == "validate":
            print("configuration valid")
            return 0
        if args.command == "sample":
            field = _sample_to_disk(cfg)
            out = Path(cfg.out_dir)
            if args.pgm:
                mask_to_pgm(excursion_mask(field, cfg.level).bits, out / "excursion.pgm")
            if args.nodal_csv:
                nodal_graph_csv(nodal_graph(field, cfg.level), out / "nodal.csv")
            return 0
        _, summary = run(cfg)
        print(json.dumps(summary["per_lambda"], indent=2))
        print(f"records: {Path(cfg.out_dir) / 'records.csv'}")
        return 0
    except (ConfigError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NodalLabError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
