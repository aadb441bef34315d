"""Crossing events, arm events, shortest crossings and chemical distances.

Every query takes either an :class:`ExcursionMask` (vertex set, grid paths)
or a :class:`NodalGraph` (polyline graph, exact graph paths).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from .errors import UsageError
from .geometry import Rect, clip_segments
from .kernels import CovarianceKernel, kappa_tilde
from .levelset import ExcursionMask, NodalGraph, cell_centres, excursion_mask, label_components

SIDE_TOL = 1e-9
METRICATION_BOUND = 0.028


class SetKind(str, Enum):
    EXCURSION = "Excursion"
    NODAL = "Nodal"


class Direction(str, Enum):
    LENGTH = "Length"
    HORIZONTAL = "Horizontal"
    VERTICAL = "Vertical"


@dataclass(frozen=True)
class CrossingQuery:
    rect: Rect
    set_kind: SetKind = SetKind.EXCURSION
    direction: Direction = Direction.HORIZONTAL

    def __post_init__(self):
        object.__setattr__(self, "set_kind", SetKind(self.set_kind))
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.direction is Direction.LENGTH and math.isclose(self.rect.width, self.rect.height):
            raise UsageError("Length direction needs a non-square rectangle")

    @property
    def axis(self) -> int:
        """0 when the crossing joins the left and right sides, 1 for bottom and top."""
        if self.direction is Direction.HORIZONTAL:
            return 0
        if self.direction is Direction.VERTICAL:
            return 1
        return 0 if self.rect.width > self.rect.height else 1

    @property
    def length(self) -> float:
        return self.rect.width if self.axis == 0 else self.rect.height


@dataclass(frozen=True)
class ArmQuery:
    center: tuple[float, float]
    s: float
    t: float

    def __post_init__(self):
        if not (1 <= self.s < self.t):
            raise UsageError(f"arm scales must satisfy 1 <= s < t, got s={self.s}, t={self.t}")

    @property
    def inner(self) -> Rect:
        return Rect.centered(*self.center, self.s)

    @property
    def outer(self) -> Rect:
        return Rect.centered(*self.center, self.t)


def _as_set(obj, kind: SetKind | None = None):
    if isinstance(obj, (ExcursionMask, NodalGraph)):
        return obj
    raise TypeError(f"expected an ExcursionMask or NodalGraph, got {type(obj).__name__}")


def _check_inside(obj, rect: Rect):
    if isinstance(obj, ExcursionMask):
        obj.index_range(rect)
    elif obj.window is not None and not obj.window.contains_rect(rect, tol=1e-9 * max(obj.h, 1.0)):
        raise UsageError(f"rectangle {rect} exceeds the sampled window {obj.window}")


# ---------------------------------------------------------------- crossings

def _mask_side_labels(mask: ExcursionMask, rect: Rect, axis: int):
    bits, vals, i0, j0 = mask.sub(rect)
    labels, n = label_components(bits, vals, mask.level)
    if axis == 0:
        lo, hi = labels[0, :], labels[-1, :]
    else:
        lo, hi = labels[:, 0], labels[:, -1]
    return labels, np.intersect1d(lo[lo > 0], hi[hi > 0])


def _graph_sides(g: NodalGraph, rect: Rect, axis: int):
    v = g.vertices
    tol = SIDE_TOL * max(1.0, abs(rect.x1), abs(rect.y1), abs(rect.x0), abs(rect.y0))
    if axis == 0:
        return np.abs(v[:, 0] - rect.x0) <= tol, np.abs(v[:, 0] - rect.x1) <= tol
    return np.abs(v[:, 1] - rect.y0) <= tol, np.abs(v[:, 1] - rect.y1) <= tol


def _graph_crossing_labels(graph: NodalGraph, rect: Rect, axis: int):
    g = graph.clipped(rect)
    if g.n_vertices == 0:
        return g, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    _, labels = g.component_labels
    lo, hi = _graph_sides(g, rect, axis)
    return g, labels, np.intersect1d(labels[lo], labels[hi])


def crosses(obj, query: CrossingQuery) -> bool:
    """True iff one component of the set inside ``query.rect`` touches both designated sides.

    A mask component touches a side through its first/last vertex column or
    row inside the rectangle; a clipped nodal component touches a side when
    one of its vertices lies on it.
    """
    obj = _as_set(obj)
    _check_inside(obj, query.rect)
    if isinstance(obj, ExcursionMask):
        return _mask_side_labels(obj, query.rect, query.axis)[1].size > 0
    return _graph_crossing_labels(obj, query.rect, query.axis)[2].size > 0


# ------------------------------------------------------------ grid graphs

# (di, dj, kind); kind 0 orthogonal, 1 main diagonal, 2 anti diagonal, 3 knight
_MOVES = [(1, 0, 0), (0, 1, 0), (1, 1, 1), (1, -1, 2),
          (1, 2, 3), (2, 1, 3), (1, -2, 3), (2, -1, 3)]


def grid_graph(bits: np.ndarray, values: np.ndarray | None, level: float, h: float,
               neighbourhood: int = 16) -> sparse.csr_matrix:
    """Euclidean-weighted graph on true vertices: king moves plus knight moves for 16.

    A diagonal step needs one of the two other cell corners inside or a
    saddle link through the cell centre; a knight step needs both vertices
    it passes between to be inside.
    """
    nx, ny = bits.shape
    idx = np.arange(nx * ny).reshape(nx, ny)
    centre_in = (cell_centres(values) >= -level) if values is not None else np.zeros(
        (max(nx - 1, 0), max(ny - 1, 0)), dtype=bool)
    rows, cols, wts = [], [], []
    for di, dj, kind in _MOVES:
        if kind == 3 and neighbourhood < 16:
            continue
        if di >= nx or abs(dj) >= ny:
            continue
        a_i = slice(0, nx - di)
        b_i = slice(di, nx)
        a_j = slice(0, ny - dj) if dj >= 0 else slice(-dj, ny)
        b_j = slice(dj, ny) if dj >= 0 else slice(0, ny + dj)
        ok = bits[a_i, a_j] & bits[b_i, b_j]
        if kind == 1:
            ok &= bits[1:, :-1] | bits[:-1, 1:] | centre_in
        elif kind == 2:
            # (i, j) -> (i+1, j-1); cell is (i, j-1) with corners (i, j-1) and (i+1, j)
            ok &= bits[:-1, :-1] | bits[1:, 1:] | centre_in
        elif kind == 3:
            if (di, dj) == (1, 2):
                ok &= bits[:-1, 1:-1] & bits[1:, 1:-1]
            elif (di, dj) == (2, 1):
                ok &= bits[1:-1, :-1] & bits[1:-1, 1:]
            elif (di, dj) == (1, -2):
                ok &= bits[:-1, 1:-1] & bits[1:, 1:-1]
            else:
                ok &= bits[1:-1, 1:] & bits[1:-1, :-1]
        a = idx[a_i, a_j][ok]
        b = idx[b_i, b_j][ok]
        rows.append(a)
        cols.append(b)
        wts.append(np.full(a.size, h * math.hypot(di, dj)))
    r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    w = np.concatenate(wts) if wts else np.zeros(0)
    g = sparse.coo_matrix((np.concatenate([w, w]), (np.concatenate([r, c]), np.concatenate([c, r]))),
                          shape=(nx * ny, nx * ny))
    return g.tocsr()


def _multi_source(graph, sources, targets, return_path: bool):
    if sources.size == 0 or targets.size == 0:
        return None, None
    dist, pred, src = csgraph.dijkstra(graph, directed=False, indices=sources, min_only=True,
                                       return_predecessors=True)
    dt = dist[targets]
    k = int(np.argmin(dt))
    if not np.isfinite(dt[k]):
        return None, None
    path = None
    if return_path:
        node = int(targets[k])
        path = [node]
        while pred[node] >= 0:
            node = int(pred[node])
            path.append(node)
        path.reverse()
    return float(dt[k]), path


def shortest_crossing(obj, query: CrossingQuery, return_path: bool = False):
    """Length of the shortest path inside the set joining the two designated sides.

    Returns ``None`` when the rectangle is not crossed. For masks the path
    runs on the 16-neighbour vertex graph, which overestimates Euclidean
    length by at most 2.8%; for nodal graphs it is exact on the polyline.
    With ``return_path`` a ``(length, points)`` pair is returned.
    """
    obj = _as_set(obj)
    _check_inside(obj, query.rect)
    axis = query.axis
    if isinstance(obj, ExcursionMask):
        bits, vals, i0, j0 = obj.sub(query.rect)
        g = grid_graph(bits, vals, obj.level, obj.h)
        nx, ny = bits.shape
        idx = np.arange(nx * ny).reshape(nx, ny)
        if axis == 0:
            src, dst = idx[0][bits[0]], idx[-1][bits[-1]]
        else:
            src, dst = idx[:, 0][bits[:, 0]], idx[:, -1][bits[:, -1]]
        length, path = _multi_source(g, src, dst, return_path)
        if length is None:
            return None
        if not return_path:
            return length
        pi, pj = np.divmod(np.asarray(path), ny)
        return length, obj.coords(pi + i0, pj + j0)
    g = obj.clipped(query.rect)
    if g.n_vertices == 0:
        return None
    lo, hi = _graph_sides(g, query.rect, axis)
    length, path = _multi_source(g.adjacency, np.nonzero(lo)[0], np.nonzero(hi)[0], return_path)
    if length is None:
        return None
    return (length, g.vertices[path]) if return_path else length


# -------------------------------------------------------------- arm events

def one_arm_profile(obj, center, s: float, ts) -> np.ndarray:
    """Arm indicators for every outer scale in ``ts`` from a single labelling.

    The components of the set inside the largest box are computed once; a
    component reaching sup-norm distance t/2 from ``center`` crosses the
    boundary of the t-box inside that box, so the profile is exactly
    monotone in t. On a mask, a vertex closer than one grid step to the
    boundary of the t-box counts as touching it; every grid step moves at
    most h in sup norm, so this agrees with labelling inside each t-box
    separately.
    """
    obj = _as_set(obj)
    ts = np.asarray(ts, dtype=float)
    for t in ts:
        ArmQuery(tuple(center), s, float(t))
    tmax = float(ts.max())
    outer = Rect.centered(*center, tmax)
    _check_inside(obj, outer)
    cx, cy = center
    tol = 1e-9 * max(1.0, tmax)
    if isinstance(obj, ExcursionMask):
        bits, vals, i0, j0 = obj.sub(outer)
        labels, n = label_components(bits, vals, obj.level)
        if n == 0:
            return np.zeros(ts.size, dtype=bool)
        xs = obj.origin[0] + obj.h * (i0 + np.arange(bits.shape[0])) - cx
        ys = obj.origin[1] + obj.h * (j0 + np.arange(bits.shape[1])) - cy
        reach = np.maximum(np.abs(xs)[:, None], np.abs(ys)[None, :])
        inner_labels = np.unique(labels[reach <= s / 2 + tol])
        inner_labels = inner_labels[inner_labels > 0]
        if inner_labels.size == 0:
            return np.zeros(ts.size, dtype=bool)
        best = float(np.max(ndimage.maximum(reach, labels, inner_labels)))
        return best > ts / 2 - obj.h + tol
    else:
        g = obj.clipped(outer)
        if g.n_vertices == 0:
            return np.zeros(ts.size, dtype=bool)
        _, labels = g.component_labels
        p, q = g.vertices[g.segments[:, 0]], g.vertices[g.segments[:, 1]]
        hit, _, _ = clip_segments(p, q, Rect.centered(cx, cy, s))
        inner_labels = np.unique(labels[g.segments[hit, 0]])
        if inner_labels.size == 0:
            return np.zeros(ts.size, dtype=bool)
        reach = np.max(np.abs(g.vertices - np.array([cx, cy])), axis=1)
        best = float(np.max(ndimage.maximum(reach, labels, inner_labels)))
    return best >= ts / 2 - tol


def one_arm(obj, query: ArmQuery) -> bool:
    """True iff one component of the set in the outer box meets the inner box and the outer boundary."""
    return bool(one_arm_profile(obj, query.center, query.s, [query.t])[0])


# --------------------------------------------------------- chemical distance

def _double_sweep(graph: sparse.csr_matrix, labels: np.ndarray, n: int) -> np.ndarray:
    """Per-component lower bound on the graph diameter from two farthest-point sweeps."""
    if n == 0:
        return np.zeros(0)
    starts = np.array([np.nonzero(labels == c)[0][0] for c in range(n)])
    diam = np.zeros(n)
    for _ in range(2):
        d = csgraph.dijkstra(graph, directed=False, indices=starts)
        nxt = starts.copy()
        for c in range(n):
            members = np.nonzero(labels == c)[0]
            row = d[c, members]
            k = int(np.argmax(row))
            diam[c] = row[k]
            nxt[c] = members[k]
        starts = nxt
    return diam


def chemical_quantities(obj, box: Rect):
    """Chemical diameters of the components of the set clipped to ``box``, and their sum S.

    Diameters come from a double-sweep farthest-point search: exact on
    trees and paths, a lower bound in general.
    """
    obj = _as_set(obj)
    if not (math.isclose(box.width, 1.0) and math.isclose(box.height, 1.0)):
        raise UsageError("chemical quantities are defined on unit boxes")
    _check_inside(obj, box)
    if isinstance(obj, ExcursionMask):
        bits, vals, _, _ = obj.sub(box)
        g = grid_graph(bits, vals, obj.level, obj.h)
        labels, n = label_components(bits, vals, obj.level)
        flat = labels.ravel() - 1
        keep = np.nonzero(flat >= 0)[0]
        sub = g[keep][:, keep]
        diam = _double_sweep(sub, flat[keep], n)
    else:
        cg = obj.clipped(box)
        if cg.n_vertices == 0:
            return np.zeros(0), 0.0
        n, labels = cg.component_labels
        diam = _double_sweep(cg.adjacency, labels, n)
    return diam, float(diam.sum())


# ------------------------------------------------------------- box counts

def crossing_box_count(obj, query: CrossingQuery, box_size: float = 1.0) -> int:
    """Number of ``box_size`` boxes of the rectangle touched by components that cross it."""
    obj = _as_set(obj)
    _check_inside(obj, query.rect)
    rect = query.rect
    if isinstance(obj, ExcursionMask):
        labels, crossing = _mask_side_labels(obj, rect, query.axis)
        if crossing.size == 0:
            return 0
        si, sj = obj.index_range(rect)
        ii, jj = np.nonzero(np.isin(labels, crossing))
        pts = obj.coords(ii + si.start, jj + sj.start)
    else:
        g, labels, crossing = _graph_crossing_labels(obj, rect, query.axis)
        if crossing.size == 0:
            return 0
        seg = g.segments[np.isin(labels[g.segments[:, 0]], crossing)]
        a, b = g.vertices[seg[:, 0]], g.vertices[seg[:, 1]]
        pts = np.concatenate([a, b, 0.5 * (a + b)])
    nbx = max(1, math.ceil(rect.width / box_size - 1e-9))
    nby = max(1, math.ceil(rect.height / box_size - 1e-9))
    bx = np.clip(np.floor((pts[:, 0] - rect.x0) / box_size), 0, nbx - 1).astype(np.int64)
    by = np.clip(np.floor((pts[:, 1] - rect.y0) / box_size), 0, nby - 1).astype(np.int64)
    return int(np.unique(bx * nby + by).size)


# ------------------------------------------------------- joint crossings

def well_separated(rects) -> bool:
    """Each rectangle lies at distance >= its own diameter from the union of the others."""
    rects = list(rects)
    for i, r in enumerate(rects):
        others = [o for j, o in enumerate(rects) if j != i]
        if others and min(r.distance_to(o) for o in others) < r.diameter - 1e-9:
            return False
    return True


def joint_layout(lengths, aspect: float = 2.0, gap_factor: float = 2.0, y0: float = 0.0):
    """Rectangles of length l and height l/aspect placed left to right.

    Consecutive gaps are ``gap_factor`` times the larger diameter of the pair,
    so the family is well separated for ``gap_factor >= 1``.
    """
    rects, x = [], 0.0
    prev = None
    for length in lengths:
        height = length / aspect
        r = Rect(x, y0, x + length, y0 + height)
        if prev is not None:
            gap = gap_factor * max(prev.diameter, r.diameter)
            r = r.shifted(prev.x1 + gap - r.x0, 0.0)
        rects.append(r)
        prev = r
        x = r.x1
    return rects


def joint_crossing_flags(obj, rects) -> np.ndarray:
    """Length-direction crossing indicator for each rectangle of a well-separated family."""
    rects = list(rects)
    if not well_separated(rects):
        raise UsageError("rectangles are not well separated")
    lengths = [max(r.width, r.height) for r in rects]
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise UsageError("rectangle lengths must be increasing")
    return np.array([crosses(obj, CrossingQuery(r, SetKind.EXCURSION if isinstance(obj, ExcursionMask)
                                                 else SetKind.NODAL, Direction.LENGTH))
                     for r in rects], dtype=bool)


def joint_crossings(sets, rects):
    """Monte-Carlo estimate of P(all rectangles crossed) and its standard error.

    ``sets`` holds one mask, nodal graph or field (converted to its level-0
    excursion mask) per replica. The empty family has probability 1.
    """
    rects = list(rects)
    if not rects:
        return 1.0, 0.0
    hits = []
    for obj in sets:
        if not isinstance(obj, (ExcursionMask, NodalGraph)):
            obj = excursion_mask(obj, 0.0)
        hits.append(bool(joint_crossing_flags(obj, rects).all()))
    if not hits:
        raise UsageError("joint_crossings needs at least one replica")
    p = float(np.mean(hits))
    return p, math.sqrt(max(p * (1 - p), 0.0) / len(hits))


def quasi_independence_sum(kernel: CovarianceKernel, heights) -> float:
    """sum_k l_k^4 kappa_tilde(l_k) k 2^k over the rectangle heights l_1 < l_2 < ..."""
    return float(sum(l ** 4 * kappa_tilde(kernel, l) * k * 2 ** k
                     for k, l in enumerate(heights, start=1)))


def calibrate_quasi_constant(p_joint: float, kernel: CovarianceKernel, heights) -> float:
    """Smallest C >= 0 with p_joint <= 2^-n (1 + C * sum) for the given family."""
    n = len(heights)
    total = quasi_independence_sum(kernel, heights)
    excess = p_joint * 2 ** n - 1
    if excess <= 0:
        return 0.0
    if total <= 0:
        return math.inf
    return excess / total


def quasi_independence_bound(constant: float, kernel: CovarianceKernel, heights) -> float:
    n = len(heights)
    return (1 + constant * quasi_independence_sum(kernel, heights)) / 2 ** n
