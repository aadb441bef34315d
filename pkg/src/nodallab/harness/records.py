"""Per-replica CSV records and the JSON run summary."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from ..errors import NodalLabError

COLUMNS = (
    "replica", "seed", "lambda", "kernel", "h",
    "crossed", "nodal_crossed", "shortest_crossing", "box_count",
    "arm_flags", "chem_S",
    "joint_flags",
    "fractal_length", "fractal_energy", "fractal_length_bound", "fractal_sparse",
    "fractal_verified", "fractal_claim1", "fractal_energy_bound_ok", "fractal_k_max", "fractal_atoms",
)
# wall-clock times go to a separate file so the records stay byte-identical across runs
TIMING_COLUMNS = ("replica", "lambda", "time_s")


class RecordIOError(NodalLabError, OSError):
    pass


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v} in record")
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(str(_cell(x)) for x in v)
    return v


def write_records(path, records, columns=COLUMNS) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for rec in records:
                w.writerow([_cell(rec.get(c)) for c in columns])
    except OSError as exc:
        raise RecordIOError(f"writing {path}: {exc}") from exc


def read_records(path) -> list[dict]:
    try:
        with Path(path).open(newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise RecordIOError(f"reading {path}: {exc}") from exc


def write_summary(path, summary: dict) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise RecordIOError(f"writing {path}: {exc}") from exc


def column_floats(rows, name: str) -> list[float]:
    return [float(r[name]) for r in rows if r.get(name, "") != ""]


def split_list(cell: str) -> list[float]:
    return [float(v) for v in cell.split(";")] if cell else []
