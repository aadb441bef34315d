"""Replica scheduling and per-replica analyses."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..errors import DecompositionError
from ..fractal import (Curve, RenormTriplet, build_measure, claim1_check, decompose, energy,
                       energy_bound, length_lower_bound, sparsity)
from ..geometry import Rect
from ..levelset import excursion_mask, nodal_graph
from ..percolation import (CrossingQuery, Direction, SetKind, chemical_quantities, crosses,
                           crossing_box_count, joint_crossing_flags, joint_layout, one_arm_profile,
                           shortest_crossing)
from ..sampler import sample_field
from .config import ExperimentConfig
from .records import TIMING_COLUMNS, write_records, write_summary

CHEM_SPACING = 4.0


def replica_seed(master: int, *keys: int) -> int:
    """64-bit seed derived from the master seed and integer keys (order-independent scheduling)."""
    ss = np.random.SeedSequence([int(master) % 2 ** 64, *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def chem_boxes(window: Rect, count: int) -> list[Rect]:
    """Up to ``count`` unit boxes on a grid of spacing 4 inside ``window``, deterministic order."""
    n_x = int((window.width - 1) // CHEM_SPACING) + 1
    n_y = int((window.height - 1) // CHEM_SPACING) + 1
    out = []
    for idx in range(min(count, n_x * n_y)):
        i, j = divmod(idx, n_y)
        x0, y0 = window.x0 + i * CHEM_SPACING, window.y0 + j * CHEM_SPACING
        out.append(Rect(x0, y0, x0 + 1, y0 + 1))
    return out


def run_replica(cfg: ExperimentConfig, lam_index: int, replica: int) -> dict:
    t0 = time.perf_counter()
    lam = float(cfg.lambdas[lam_index])
    kernel = cfg.kernel_obj
    seed = replica_seed(cfg.seed, lam_index, replica)
    rect = Rect(0.0, 0.0, lam * cfg.aspect, lam)
    window = rect
    centre = rect.center
    if cfg.one_arm_ts:
        arm_box = Rect.centered(*centre, max(cfg.one_arm_ts))
        window = Rect(min(rect.x0, arm_box.x0), min(rect.y0, arm_box.y0),
                      max(rect.x1, arm_box.x1), max(rect.y1, arm_box.y1))
    field = sample_field(kernel, window, cfg.h, seed)
    mask = excursion_mask(field, cfg.level)
    direction = Direction.HORIZONTAL if cfg.aspect == 1 else Direction.LENGTH
    q_exc = CrossingQuery(rect, SetKind.EXCURSION, direction)
    q_nod = CrossingQuery(rect, SetKind.NODAL, direction)
    rec = {"replica": replica, "seed": seed, "lambda": lam, "kernel": kernel.label, "h": cfg.h}
    graph = nodal_graph(field, cfg.level) if (cfg.nodal or cfg.fractal or cfg.chemical_boxes) else None

    crossed = crosses(mask, q_exc)
    if cfg.crossing:
        rec["crossed"] = crossed
        if graph is not None:
            rec["nodal_crossed"] = crosses(graph, q_nod)
    if cfg.shortest_crossing and crossed:
        rec["shortest_crossing"] = shortest_crossing(mask, q_exc)
    if cfg.box_count:
        rec["box_count"] = crossing_box_count(mask, q_exc) if crossed else 0
    if cfg.one_arm_ts:
        rec["arm_flags"] = [bool(v) for v in one_arm_profile(mask, centre, cfg.one_arm_s, cfg.one_arm_ts)]
    if cfg.chemical_boxes:
        rec["chem_S"] = [chemical_quantities(graph, b)[1] for b in chem_boxes(rect, cfg.chemical_boxes)]
    if cfg.joint is not None:
        rects = joint_layout(cfg.joint.lengths, cfg.joint.aspect, cfg.joint.gap_factor)
        jwin = Rect(rects[0].x0, min(r.y0 for r in rects), rects[-1].x1, max(r.y1 for r in rects))
        jfield = sample_field(kernel, jwin, cfg.h, replica_seed(cfg.seed, lam_index, replica, 1))
        rec["joint_flags"] = [bool(v) for v in joint_crossing_flags(excursion_mask(jfield, cfg.level), rects)]
    if cfg.fractal is not None:
        rec.update(_fractal_record(cfg, graph, rect, direction, lam))
    rec["time_s"] = round(time.perf_counter() - t0, 6)
    return rec


def _fractal_record(cfg, graph, rect, direction, lam) -> dict:
    fs = cfg.fractal
    found = shortest_crossing(graph, CrossingQuery(rect, SetKind.NODAL, direction), return_path=True)
    if found is None:
        return {}
    _, path = found
    curve = Curve(path)
    trip = RenormTriplet(*fs.triplet)
    out = {"fractal_length": curve.length}
    try:
        hier = decompose(curve, trip, lam, tube_factor=fs.tube_factor)
    except DecompositionError:
        out["fractal_verified"] = False
        return out
    mu = build_measure(hier)
    E = energy(mu, trip.s, lam)
    out.update(fractal_energy=E, fractal_length_bound=length_lower_bound(E, trip.s, lam),
               fractal_verified=True, fractal_k_max=hier.k_max, fractal_atoms=len(mu))
    out["fractal_claim1"] = claim1_check(hier, fs.k0)
    out["fractal_energy_bound_ok"] = E <= energy_bound(trip, fs.k0)
    if fs.check_sparsity:
        sparse, _, _ = sparsity(curve, trip, lam, rect, fs.k0, h=cfg.h, tube_factor=fs.tube_factor)
        out["fractal_sparse"] = sparse
    return out


def run(cfg: ExperimentConfig, write: bool = True):
    """Run every (lambda, replica) pair; returns ``(records, summary)``.

    Records come back in (lambda, replica) order whatever the thread count.
    """
    cfg.validate()
    jobs = [(li, r) for li in range(len(cfg.lambdas)) for r in range(cfg.replicas)]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            records = list(pool.map(lambda j: run_replica(cfg, *j), jobs))
    else:
        records = [run_replica(cfg, *j) for j in jobs]
    summary = summarize(cfg, records)
    if write:
        out = Path(cfg.out_dir)
        write_records(out / "records.csv", records)
        write_records(out / "timings.csv", records, TIMING_COLUMNS)
        write_summary(out / "summary.json", summary)
    return records, summary


def _frac(flags):
    flags = np.asarray(flags, dtype=float)
    p = float(flags.mean()) if flags.size else math.nan
    se = math.sqrt(p * (1 - p) / flags.size) if flags.size else math.nan
    return {"p": p, "se": se, "count": int(flags.sum()), "n": int(flags.size)}


def summarize(cfg: ExperimentConfig, records) -> dict:
    out = {"config": cfg.to_dict(), "per_lambda": {}}
    for lam in cfg.lambdas:
        rs = [r for r in records if r["lambda"] == float(lam)]
        s: dict = {"replicas": len(rs)}
        if cfg.crossing:
            s["crossing"] = _frac([r["crossed"] for r in rs])
            if rs and "nodal_crossed" in rs[0]:
                s["nodal_crossing"] = _frac([r["nodal_crossed"] for r in rs])
                s["nodal_without_excursion"] = sum(1 for r in rs if r["nodal_crossed"] and not r["crossed"])
        if cfg.shortest_crossing:
            vals = [r["shortest_crossing"] for r in rs if r.get("shortest_crossing") is not None]
            s["shortest_crossing"] = {"mean": float(np.mean(vals)) if vals else None,
                                      "conditioned_count": len(vals), "denominator": len(rs)}
        if cfg.box_count:
            vals = [r["box_count"] for r in rs if r.get("crossed")]
            s["box_count"] = {"mean": float(np.mean(vals)) if vals else None, "count": len(vals),
                              "denominator": len(rs)}
        if cfg.one_arm_ts:
            flags = np.array([r["arm_flags"] for r in rs], dtype=float)
            s["one_arm"] = {str(t): _frac(flags[:, i]) for i, t in enumerate(cfg.one_arm_ts)}
        if cfg.chemical_boxes:
            vals = np.concatenate([r["chem_S"] for r in rs]) if rs else np.zeros(0)
            s["chemical"] = {f"moment_{k}": float(np.mean(vals ** k)) for k in (1, 2, 4)}
            s["chemical"]["boxes"] = int(vals.size)
        if cfg.joint is not None:
            flags = np.array([r["joint_flags"] for r in rs], dtype=bool)
            s["joint"] = {"all": _frac(flags.all(axis=1)),
                          "first_two": _frac(flags[:, :2].all(axis=1)),
                          "each": [_frac(flags[:, i]) for i in range(flags.shape[1])]}
        if cfg.fractal is not None:
            fr = [r for r in rs if "fractal_length" in r]
            s["fractal"] = {"curves": len(fr),
                            "verified": sum(1 for r in fr if r.get("fractal_verified")),
                            "sparse": sum(1 for r in fr if r.get("fractal_sparse")),
                            "length_bound_holds": sum(1 for r in fr if r.get("fractal_verified")
                                                      and r["fractal_length"] >= r["fractal_length_bound"]),
                            "sparse_violating_claim1": sum(1 for r in fr if r.get("fractal_sparse")
                                                           and not r.get("fractal_claim1")),
                            "sparse_violating_energy_bound": sum(1 for r in fr if r.get("fractal_sparse")
                                                                 and not r.get("fractal_energy_bound_ok"))}
        out["per_lambda"][str(lam)] = s
    return out
