"""Multi-scale decomposition of a curve into nested, well-separated sub-arcs.

Level k of the hierarchy holds sub-arcs of diameter >= L_k that are pairwise
at distance >= eps * L_k; each arc of level k contains at least m arcs of
level k + 1, and at least m + 1 when it has no straight run at scale L_k.
Arcs are stored as vertex index ranges of one densified polyline.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DecompositionError, UsageError
from ..geometry import rotated_frame
from ._scan import greedy_pieces, minimal_arc
from .curve import Curve, diameter_pair, point_set_diameter
from .energy import AtomicMeasure
from .triplet import RenormTriplet, scales

DEFAULT_TUBE = 9.0
N_DIRECTIONS = 64
RUN_STARTS = 32


@dataclass
class Level:
    start: np.ndarray
    end: np.ndarray
    parent: np.ndarray
    diameter: np.ndarray
    run: np.ndarray
    n_children: np.ndarray

    def __len__(self) -> int:
        return len(self.start)


@dataclass(frozen=True)
class RunCertificate:
    """A tube of length L and height H whose small-side centres are joined by the arc."""

    scale: float
    center: tuple[float, float]
    angle: float
    height: float


@dataclass(eq=False)
class CurveHierarchy:
    curve: Curve
    triplet: RenormTriplet
    lam: float
    scales: list
    k_max: int
    levels: list
    delta: float
    tube_factor: float = DEFAULT_TUBE
    certificates: dict = field(default_factory=dict)

    @property
    def points(self) -> np.ndarray:
        return self.curve.points

    def node_points(self, k: int, idx: int) -> np.ndarray:
        lv = self.levels[k]
        return self.points[lv.start[idx]:lv.end[idx] + 1]

    def leaf_paths(self) -> np.ndarray:
        """(n_leaves, k_max) child counts of the ancestors of each leaf, root first."""
        n_leaf = len(self.levels[-1])
        out = np.empty((n_leaf, self.k_max), dtype=np.int64)
        idx = np.arange(n_leaf)
        for k in range(self.k_max - 1, -1, -1):
            idx = self.levels[k + 1].parent[idx]
            out[:, k] = self.levels[k].n_children[idx]
        return out

    def leaf_run_flags(self) -> np.ndarray:
        n_leaf = len(self.levels[-1])
        out = np.empty((n_leaf, self.k_max), dtype=bool)
        idx = np.arange(n_leaf)
        for k in range(self.k_max - 1, -1, -1):
            idx = self.levels[k + 1].parent[idx]
            out[:, k] = self.levels[k].run[idx]
        return out

    def to_text(self) -> str:
        buf = io.StringIO()
        children = [[[] for _ in range(len(lv))] for lv in self.levels]
        for k in range(1, len(self.levels)):
            for i, p in enumerate(self.levels[k].parent):
                children[k - 1][p].append(i)

        def emit(k, i):
            lv = self.levels[k]
            buf.write(f"{'  ' * k}L{k} node {i} [{lv.start[i]}:{lv.end[i]}] diam={lv.diameter[i]:.4g} "
                      f"children={lv.n_children[i]} run={bool(lv.run[i])}\n")
            if k + 1 < len(self.levels):
                for c in children[k][i]:
                    emit(k + 1, c)

        emit(0, 0)
        return buf.getvalue()

    def to_csv_rows(self):
        """Rows (node id, parent id, level, diameter, n_children, run_flag) with global ids."""
        offsets = np.cumsum([0] + [len(lv) for lv in self.levels])
        for k, lv in enumerate(self.levels):
            for i in range(len(lv)):
                pid = -1 if k == 0 else int(offsets[k - 1] + lv.parent[i])
                yield (int(offsets[k] + i), pid, k, float(lv.diameter[i]), int(lv.n_children[i]),
                       int(bool(lv.run[i])))


def _directions(k: int) -> np.ndarray:
    th = np.pi * np.arange(k) / k
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def node_run(P: np.ndarray, a: int, b: int, length: float, height: float, tol: float):
    """Look for a straight run of P[a..b] at scale ``length`` in a tube of total height ``height``.

    Candidate arcs are inclusion-minimal arcs whose endpoints are ``length``
    apart; the start endpoint is interpolated so the distance is exact. The
    arc counts as a run when it stays in the tube up to ``tol``.
    """
    if b <= a:
        return None
    iu, iv, _ = diameter_pair(P[a:b + 1])
    # the earlier end of a diameter pair always has a far point after it
    starts = np.concatenate([[a + min(iu, iv)],
                             np.linspace(a, b - 1, min(RUN_STARTS, b - a)).astype(np.int64)])
    for i0 in starts:
        i, j = minimal_arc(P, a, b, int(i0), length)
        if i < 0:
            continue
        # point on [P_i, P_i+1] at distance exactly `length` from P_j
        p, q, c = P[i], P[i + 1], P[j]
        d = q - p
        w = p - c
        A2, B2, C2 = d @ d, 2 * (w @ d), w @ w - length * length
        disc = max(B2 * B2 - 4 * A2 * C2, 0.0)
        t = (-B2 - math.sqrt(disc)) / (2 * A2) if A2 > 0 else 0.0
        start = p + min(max(t, 0.0), 1.0) * d
        axis = c - start
        angle = math.atan2(axis[1], axis[0])
        mid = 0.5 * (start + c)
        loc = rotated_frame(P[i + 1:j], mid, angle)
        half = 0.5 * np.hypot(*axis)
        if loc.size == 0 or (np.all(np.abs(loc[:, 0]) <= half + tol)
                             and np.all(np.abs(loc[:, 1]) <= height / 2 + tol)):
            return RunCertificate(length, (float(mid[0]), float(mid[1])), angle, height)
    return None


def _slab_children(P, a, b, m, length, delta, eps):
    """Exactly m sub-arcs crossing parallel slabs across the node's diameter chord."""
    iu, iv, D = diameter_pair(P[a:b + 1])
    iu, iv = sorted((a + iu, a + iv))
    e = (P[iv] - P[iu]) / D
    p = (P[iu:iv + 1] - P[iu]) @ e
    w = length + 2 * delta
    g = eps * length + 2 * delta
    if m * w + (m - 1) * g > D + 1e-12:
        return None
    out = []
    for j in range(m):
        lo = j * (w + g)
        hi = lo + w
        c2 = int(np.argmax(p >= hi - delta))
        if p[c2] < hi - delta:
            return None
        before = np.nonzero(p[:c2] <= lo + delta)[0]
        if before.size == 0:
            return None
        out.append((iu + int(before[-1]), iu + c2))
    return out


def decompose(curve: Curve, triplet: RenormTriplet, lam: float, tube_factor: float = DEFAULT_TUBE,
              verify: bool = True) -> CurveHierarchy:
    """Build the multi-scale hierarchy of ``curve`` for scales L_k = lam / gamma^k.

    Children are taken greedily along the arc (as many separated sub-arcs of
    diameter >= L_{k+1} as the traversal finds, in the better of the two
    directions); when that yields too few, m sub-arcs crossing parallel slabs
    of the parent's diameter chord are used instead. The result is checked
    by :func:`verify_hierarchy` and a failure raises ``DecompositionError``.
    """
    L, k_max = scales(triplet, lam)
    if curve.diameter < lam * (1 - 1e-9):
        raise UsageError(f"curve diameter {curve.diameter:.6g} is below lambda = {lam}")
    m, eps = triplet.m, triplet.eps
    delta = eps * L[k_max] / (4 * m)
    dense = curve.densified(delta)
    P = np.ascontiguousarray(dense.points)
    delta = max(dense.max_step, 1e-300)
    dirs = _directions(N_DIRECTIONS)
    n = len(P)

    levels = [Level(np.array([0]), np.array([n - 1]), np.array([-1]),
                    np.array([dense.diameter]), np.zeros(1, bool), np.zeros(1, np.int64))]
    certs = {}
    for k in range(k_max):
        lv = levels[k]
        child_len = L[k + 1]
        gap = eps * child_len + 2 * delta
        height = tube_factor * L[k] / math.sqrt(triplet.gamma)
        starts, ends, parents = [], [], []
        for i in range(len(lv)):
            a, b = int(lv.start[i]), int(lv.end[i])
            cert = node_run(P, a, b, L[k], height, delta)
            lv.run[i] = cert is not None
            if cert is not None:
                certs[(k, i)] = cert
            need = m if cert is not None else m + 1
            fs, fe = greedy_pieces(P, a, b, 1, child_len, gap, dirs)
            if len(fs) < need:
                bs, be = greedy_pieces(P, a, b, -1, child_len, gap, dirs)
                if len(bs) > len(fs):
                    fs, fe = bs[::-1], be[::-1]
            kids = list(zip(fs.tolist(), fe.tolist()))
            if len(kids) < need and need == m:
                kids = _slab_children(P, a, b, m, child_len, delta, eps) or kids
            if len(kids) < need:
                raise DecompositionError(
                    f"level {k} node {i}: found {len(kids)} children, need {need}",
                    node=(k, i), diagnostics={"run": cert is not None, "diameter": float(lv.diameter[i]),
                                              "scale": L[k], "children_found": len(kids)})
            lv.n_children[i] = len(kids)
            for s0, s1 in kids:
                starts.append(s0)
                ends.append(s1)
                parents.append(i)
        st, en = np.array(starts, dtype=np.int64), np.array(ends, dtype=np.int64)
        diam = np.array([point_set_diameter(P[s:e + 1]) for s, e in zip(st, en)])
        levels.append(Level(st, en, np.array(parents, dtype=np.int64), diam,
                            np.zeros(len(st), bool), np.zeros(len(st), np.int64)))
    h = CurveHierarchy(dense, triplet, lam, L, k_max, levels, delta, tube_factor, certs)
    if verify:
        problems = verify_hierarchy(h)
        if problems:
            raise DecompositionError(f"hierarchy failed verification: {problems[0]}",
                                     node=None, diagnostics={"problems": problems})
    return h


def _level_separation(P, lv: Level, min_gap: float, delta: float):
    """Pairs of nodes of one level whose polylines come closer than ``min_gap``."""
    n = len(lv)
    if n < 2:
        return []
    r = min_gap + delta
    box = np.array([[P[s:e + 1, 0].min(), P[s:e + 1, 1].min(), P[s:e + 1, 0].max(), P[s:e + 1, 1].max()]
                    for s, e in zip(lv.start, lv.end)])
    trees = {}
    bad = []
    for i in range(n - 1):
        j = np.arange(i + 1, n)
        cand = j[(box[j, 0] <= box[i, 2] + r) & (box[j, 2] >= box[i, 0] - r)
                 & (box[j, 1] <= box[i, 3] + r) & (box[j, 3] >= box[i, 1] - r)]
        for jj in cand:
            if jj not in trees:
                trees[jj] = cKDTree(P[lv.start[jj]:lv.end[jj] + 1])
            d, _ = trees[jj].query(P[lv.start[i]:lv.end[i] + 1], distance_upper_bound=r)
            dmin = float(np.min(d))
            # segments stay within delta of their vertex endpoints
            if dmin - delta < min_gap:
                bad.append((i, int(jj), dmin - delta))
    return bad


def verify_hierarchy(h: CurveHierarchy) -> list[str]:
    """Independent re-check of the structural guarantees; returns a list of violations."""
    P, m, eps = h.points, h.triplet.m, h.triplet.eps
    problems = []
    if len(h.levels[0]) != 1:
        problems.append(f"top level has {len(h.levels[0])} arcs, expected 1")
    for k, lv in enumerate(h.levels):
        Lk = h.scales[k]
        for i in range(len(lv)):
            d = point_set_diameter(P[lv.start[i]:lv.end[i] + 1])
            if d < Lk * (1 - 1e-12):
                problems.append(f"level {k} node {i}: diameter {d:.6g} < L_k = {Lk:.6g}")
        for a, b, dist in _level_separation(P, lv, eps * Lk, h.delta):
            problems.append(f"level {k} nodes {a},{b}: distance {dist:.6g} < eps L_k = {eps * Lk:.6g}")
        if k == 0:
            continue
        parent = h.levels[k - 1]
        if np.any((lv.parent < 0) | (lv.parent >= len(parent))):
            problems.append(f"level {k}: dangling parent index")
            continue
        inside = (lv.start >= parent.start[lv.parent]) & (lv.end <= parent.end[lv.parent])
        for i in np.nonzero(~inside)[0]:
            problems.append(f"level {k} node {i} not contained in its parent")
        counts = np.bincount(lv.parent, minlength=len(parent))
        if not np.array_equal(counts, parent.n_children):
            problems.append(f"level {k - 1}: recorded child counts disagree with the tree")
        for i in np.nonzero(counts < m)[0]:
            problems.append(f"level {k - 1} node {i}: {counts[i]} children < m = {m}")
        for i in np.nonzero(~parent.run & (counts < m + 1))[0]:
            problems.append(f"level {k - 1} node {i}: no straight run but only {counts[i]} children")
    return problems


def build_measure(h: CurveHierarchy) -> AtomicMeasure:
    """Uniform splitting measure: each arc passes its mass evenly to its children.

    Atoms sit at the leftmost (then uppermost) vertex of every leaf arc.
    """
    if h is None or not h.levels or len(h.levels[0]) == 0:
        raise UsageError("empty hierarchy")
    mass = np.ones(1)
    for k in range(h.k_max):
        lv, child = h.levels[k], h.levels[k + 1]
        mass = mass[child.parent] / lv.n_children[child.parent]
    leaves = h.levels[-1]
    pts = np.empty((len(leaves), 2))
    for i, (s, e) in enumerate(zip(leaves.start, leaves.end)):
        seg = h.points[s:e + 1]
        order = np.lexsort((-seg[:, 1], seg[:, 0]))
        pts[i] = seg[order[0]]
    return AtomicMeasure(pts, mass)


def claim1_check(h: CurveHierarchy, k0: int, runs=None) -> bool:
    """Every leaf's ancestor child counts satisfy prod_{i<k} n_i >= beta^k for k0 <= k <= k_max."""
    if h.k_max == 0:
        return True
    logs = np.cumsum(np.log(h.leaf_paths()), axis=1)
    ks = np.arange(1, h.k_max + 1)
    sel = ks >= max(k0, 1)
    if not sel.any():
        return True
    need = ks[sel] * math.log(h.triplet.beta)
    return bool(np.all(logs[:, sel] >= need - 1e-12))


def run_free_branching_fraction(h: CurveHierarchy):
    """Smallest, over leaves, fraction of run-free ancestors with >= m+1 children (None if none)."""
    if h.k_max == 0:
        return None
    counts = h.leaf_paths()
    free = ~h.leaf_run_flags()
    if not free.any():
        return None
    branching = (counts >= h.triplet.m + 1) & free
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = branching.sum(axis=1) / free.sum(axis=1)
    frac = frac[free.sum(axis=1) > 0]
    return float(frac.min())
