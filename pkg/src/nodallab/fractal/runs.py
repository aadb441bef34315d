"""Straight runs on the placement lattice and the sparsity test built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from ..geometry import Rect, rotated_frame
from ..levelset import ExcursionMask, NodalGraph, label_components
from .curve import Curve
from .triplet import RenormTriplet, scales

N_ORIENTATIONS = 32
RULES = ("centres", "sides")


@dataclass(frozen=True)
class StraightRunCertificate:
    k: int
    scale: float
    center: tuple[float, float]
    angle: float
    height: float
    component: int = -1
    rule: str = "centres"

    def corners(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        u = np.array([c, s]) * self.scale / 2
        v = np.array([-s, c]) * self.height / 2
        ctr = np.asarray(self.center)
        return np.array([ctr - u - v, ctr + u - v, ctr + u + v, ctr - u + v])

    def contains(self, other: "StraightRunCertificate", tol: float = 1e-9) -> bool:
        loc = rotated_frame(other.corners(), self.center, self.angle)
        return bool(np.all(np.abs(loc[:, 0]) <= self.scale / 2 + tol)
                    and np.all(np.abs(loc[:, 1]) <= self.height / 2 + tol))


class _Geometry:
    """Sample points of a set plus a connectivity test inside oriented rectangles."""

    def __init__(self, geom, h: float):
        self.h = h
        self.geom = geom
        if isinstance(geom, Curve):
            self.kind = "curve"
            self.pts = geom.densified(h / 2).points
        elif isinstance(geom, NodalGraph):
            self.kind = "graph"
            self.pts = geom.vertices
        elif isinstance(geom, ExcursionMask):
            self.kind = "mask"
            ii, jj = np.nonzero(geom.bits)
            self.pts = geom.coords(ii, jj)
        else:
            raise TypeError(f"unsupported set geometry {type(geom).__name__}")
        self.tree = cKDTree(self.pts) if len(self.pts) else None

    def connects(self, center, angle, length, height, rule: str = "centres") -> int:
        """Component id joining the two small sides inside the rectangle, or -1.

        With ``rule="centres"`` the component must come within h of both
        small-side centres; with ``rule="sides"`` touching each small side
        anywhere is enough.
        """
        h = self.h
        reach = math.hypot(length / 2 + h, height / 2)
        idx = np.asarray(self.tree.query_ball_point(center, reach), dtype=np.int64)
        if idx.size == 0:
            return -1
        if self.kind == "mask":
            return self._connects_mask(center, angle, length, height, rule)
        idx.sort()
        loc = rotated_frame(self.pts[idx], center, angle)
        inside = (np.abs(loc[:, 0]) <= length / 2 + h) & (np.abs(loc[:, 1]) <= height / 2)
        near_a, near_b = _near_sides(loc, length, h, rule)
        near_a &= inside
        near_b &= inside
        if not (near_a.any() and near_b.any()):
            return -1
        if self.kind == "curve":
            # runs of consecutive in-rectangle vertices
            ids = idx[inside]
            lab = np.concatenate([[0], np.cumsum(np.diff(ids) != 1)])
            la = lab[np.isin(ids, idx[near_a])]
            lb = lab[np.isin(ids, idx[near_b])]
            common = np.intersect1d(la, lb)
            return int(ids[lab == common[0]][0]) if common.size else -1
        g = self.geom
        sub = idx[inside]
        pos = np.full(len(self.pts), -1, dtype=np.int64)
        pos[sub] = np.arange(sub.size)
        seg = g.segments
        keep = (pos[seg[:, 0]] >= 0) & (pos[seg[:, 1]] >= 0)
        a, b = pos[seg[keep, 0]], pos[seg[keep, 1]]
        adj = sparse.coo_matrix((np.ones(a.size), (a, b)), shape=(sub.size, sub.size))
        _, lab = csgraph.connected_components(adj, directed=False)
        la = lab[pos[idx[near_a]]]
        lb = lab[pos[idx[near_b]]]
        common = np.intersect1d(la, lb)
        return int(sub[lab == common[0]][0]) if common.size else -1

    def _connects_mask(self, center, angle, length, height, rule) -> int:
        m = self.geom
        h = self.h
        half = np.abs(rotated_frame(np.array([[length / 2 + h, height / 2], [length / 2 + h, -height / 2]]),
                                    (0, 0), -angle)).max(axis=0)
        box = Rect(max(center[0] - half[0], m.window.x0), max(center[1] - half[1], m.window.y0),
                   min(center[0] + half[0], m.window.x1), min(center[1] + half[1], m.window.y1))
        bits, vals, i0, j0 = m.sub(box)
        ii, jj = np.meshgrid(np.arange(bits.shape[0]) + i0, np.arange(bits.shape[1]) + j0, indexing="ij")
        loc = rotated_frame(m.coords(ii, jj), center, angle)
        inside = (np.abs(loc[..., 0]) <= length / 2 + h) & (np.abs(loc[..., 1]) <= height / 2)
        labels, n = label_components(bits & inside, vals, m.level)
        near_a, near_b = _near_sides(loc, length, h, rule)
        la, lb = labels[near_a & (labels > 0)], labels[near_b & (labels > 0)]
        common = np.intersect1d(la, lb)
        return int(common[0]) if common.size else -1


def _near_sides(loc, length, h, rule):
    if rule == "centres":
        return (np.hypot(loc[..., 0] + length / 2, loc[..., 1]) <= h,
                np.hypot(loc[..., 0] - length / 2, loc[..., 1]) <= h)
    return np.abs(loc[..., 0] + length / 2) <= h, np.abs(loc[..., 0] - length / 2) <= h


def _lattice(window: Rect, spacing: float) -> np.ndarray:
    cx, cy = window.center
    ix = np.arange(math.ceil((window.x0 - cx) / spacing - 1e-9), math.floor((window.x1 - cx) / spacing + 1e-9) + 1)
    iy = np.arange(math.ceil((window.y0 - cy) / spacing - 1e-9), math.floor((window.y1 - cy) / spacing + 1e-9) + 1)
    X, Y = np.meshgrid(cx + spacing * ix, cy + spacing * iy, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def runs_at_scale(geo: _Geometry, k: int, length: float, height: float, spacing: float,
                  window: Rect, orientations: int = N_ORIENTATIONS, first_only: bool = False,
                  rule: str = "centres"):
    """Certificates at one scale: lattice centres times ``orientations`` angles in [0, pi)."""
    if rule not in RULES:
        raise ValueError(f"unknown run rule {rule!r}; expected one of {RULES}")
    if geo.tree is None:
        return []
    h = geo.h
    centres = _lattice(window, spacing)
    reach = length / 2 + h if rule == "centres" else math.hypot(length / 2 + h, height / 2)
    d, _ = geo.tree.query(centres, distance_upper_bound=reach + 1e-12)
    centres = centres[np.isfinite(d)]
    if centres.size == 0:
        return []
    th = math.pi * np.arange(orientations) / orientations
    if rule == "centres":
        u = (length / 2) * np.stack([np.cos(th), np.sin(th)], axis=1)
        ends_a = (centres[:, None, :] - u[None]).reshape(-1, 2)
        ends_b = (centres[:, None, :] + u[None]).reshape(-1, 2)
        da, _ = geo.tree.query(ends_a, distance_upper_bound=h + 1e-12)
        db, _ = geo.tree.query(ends_b, distance_upper_bound=h + 1e-12)
        ok = np.nonzero(np.isfinite(da) & np.isfinite(db))[0]
    else:
        ok = np.arange(centres.shape[0] * orientations)
    out = []
    for flat in ok:
        ci, oi = divmod(int(flat), orientations)
        c = (float(centres[ci, 0]), float(centres[ci, 1]))
        comp = geo.connects(c, float(th[oi]), length, height, rule)
        if comp >= 0:
            out.append(StraightRunCertificate(k, length, c, float(th[oi]), height, comp, rule))
            if first_only:
                break
    return out


def _rect_dims(L, triplet, tube_factor, rule):
    if rule == "centres":
        return L, tube_factor * L / math.sqrt(triplet.gamma)
    return L / 2, (tube_factor + 1) * L / math.sqrt(triplet.gamma)


def detect_straight_runs(geom, triplet: RenormTriplet, lam: float, window: Rect, h: float = 0.25,
                         tube_factor: float = 9.0, orientations: int = N_ORIENTATIONS, ks=None,
                         rule: str = "centres"):
    """All straight runs of ``geom`` per scale index k.

    Centres lie on the lattice of spacing L_k / gamma anchored at the window
    centre, with ``orientations`` evenly spaced angles.

    ``rule="centres"``: rectangles of length L_k and height
    tube_factor * L_k / sqrt(gamma); a run needs one component of the set
    inside the rectangle to come within ``h`` of both small-side centres.
    Lattice placement can miss runs that exist at free positions.

    ``rule="sides"``: the enlarged stand-in rectangles of length L_k / 2 and
    height (tube_factor + 1) * L_k / sqrt(gamma), crossed between the small
    sides anywhere. A run at a free position forces a crossing of a nearby
    stand-in, so this rule errs toward finding runs and its sparse verdict
    is the one to trust.
    """
    L, k_max = scales(triplet, lam)
    geo = _Geometry(geom, h)
    ks = range(0, k_max + 1) if ks is None else ks
    return {k: runs_at_scale(geo, k, *_rect_dims(L[k], triplet, tube_factor, rule),
                             L[k] / triplet.gamma, window, orientations, rule=rule) for k in ks}


def _chains(runs: dict, k_from: int = 1):
    """Longest nested chain ending at each certificate, scanning scales coarse to fine."""
    certs, best, prev = [], [], []
    for k in sorted(runs):
        if k < k_from:
            continue
        for c in runs[k]:
            b, p = 1, -1
            for j, o in enumerate(certs):
                if o.k < k and best[j] + 1 > b and o.contains(c):
                    b, p = best[j] + 1, j
            certs.append(c)
            best.append(b)
            prev.append(p)
    return certs, best, prev


def _witness(certs, prev, j):
    chain = []
    while j >= 0:
        chain.append(certs[j])
        j = prev[j]
    return chain[::-1]


def longest_nested_chain(runs: dict, k_from: int = 1):
    certs, best, prev = _chains(runs, k_from)
    if not certs:
        return 0, []
    j = int(np.argmax(best))
    return best[j], _witness(certs, prev, j)


def is_sparse(runs: dict, triplet: RenormTriplet | None = None, k0: int = 0, lam=None, window=None):
    """Sparsity of runs over scales 1..k_max.

    Not sparse iff some nested chain at scales k_1 < ... < k_n satisfies
    n >= max(k_n, k0) / 2. Returns ``(sparse, witness_chain)``.
    """
    certs, best, prev = _chains(runs, 1)
    for j, c in enumerate(certs):
        if best[j] >= 0.5 * max(c.k, k0):
            return False, _witness(certs, prev, j)
    return True, []


def sparsity(geom, triplet: RenormTriplet, lam: float, window: Rect, k0: int, h: float = 0.25,
             tube_factor: float = 9.0, orientations: int = N_ORIENTATIONS, rule: str = "sides"):
    """Scale-by-scale sparsity test that stops at the first violating chain.

    Returns ``(sparse, witness, runs)`` with the runs found so far.
    """
    L, k_max = scales(triplet, lam)
    geo = _Geometry(geom, h)
    runs = {}
    for k in range(1, k_max + 1):
        runs[k] = runs_at_scale(geo, k, *_rect_dims(L[k], triplet, tube_factor, rule),
                                L[k] / triplet.gamma, window, orientations, rule=rule)
        ok, witness = is_sparse(runs, triplet, k0)
        if not ok:
            return False, witness, runs
    return True, [], runs


def certificates_csv_rows(runs: dict):
    for k in sorted(runs):
        for c in runs[k]:
            yield (c.scale, c.center[0], c.center[1], c.angle)
