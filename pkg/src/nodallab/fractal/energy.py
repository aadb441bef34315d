"""Atomic measures, the truncated Riesz-type energy and the length bounds it yields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UsageError
from .curve import Curve, point_set_diameter

_BLOCK = 2048


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if len(pts) != len(m):
            raise UsageError("points and masses differ in length")
        if np.any(m < 0):
            raise UsageError("masses must be non-negative")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", m)

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))

    def __len__(self) -> int:
        return len(self.masses)


def energy(mu: AtomicMeasure, s: float, lam: float) -> float:
    """lam^s * sum_{x,y} mu(x) mu(y) / max(|x - y|^s, 1), summed exactly.

    Blocks of rows are reduced in a fixed order, so the result does not
    depend on how the work is scheduled.
    """
    pts, m = mu.points, mu.masses
    n = len(m)
    if n == 0:
        raise UsageError("energy of an empty measure")
    partial = []
    for i in range(0, n, _BLOCK):
        a, ma = pts[i:i + _BLOCK], m[i:i + _BLOCK]
        row = np.zeros(len(ma))
        for j in range(0, n, _BLOCK):
            b, mb = pts[j:j + _BLOCK], m[j:j + _BLOCK]
            d2 = ((a[:, None, 0] - b[None, :, 0]) ** 2 + (a[:, None, 1] - b[None, :, 1]) ** 2)
            denom = np.maximum(d2 ** (s / 2), 1.0)
            row += (mb[None, :] / denom).sum(axis=1)
        partial.append(float(ma @ row))
    return float(lam ** s * np.sum(partial))


def length_lower_bound(E: float, s: float, lam: float) -> float:
    """Length floor lam^s / E - 2^s for a curve carrying a measure of energy E."""
    if not E > 0:
        raise UsageError("energy must be positive")
    return lam ** s / E - 2 ** s


def partition_energy_check(mu: AtomicMeasure, parts, s: float, lam: float, E: float | None = None) -> float:
    """E_s(mu) * sum diam(C_i)^s / lam^s for a cover of the atoms by parts of diameter >= 1.

    ``parts`` may be curves, point arrays or plain diameters.
    """
    diams = []
    for p in parts:
        if isinstance(p, Curve):
            d = p.diameter
        elif np.ndim(p) == 0:
            d = float(p)
        else:
            d = point_set_diameter(np.asarray(p))
        if d < 1 - 1e-12:
            raise UsageError(f"partition part of diameter {d:.6g} < 1")
        diams.append(d)
    if E is None:
        E = energy(mu, s, lam)
    return float(E * np.sum(np.asarray(diams) ** s) / lam ** s)
