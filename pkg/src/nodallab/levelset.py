"""Excursion masks and nodal polyline graphs of gridded fields.

Connectivity of the excursion set {f >= -level} on the vertex grid is
4-connectivity plus the diagonal of every saddle cell whose bilinear centre
value is also >= -level. Marching squares resolves the same saddles with the
same centre test, so mask components and nodal curves describe one
topology, and {f >= 0} and {-f >= 0} are exactly dual.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from .geometry import Rect, clip_segments
from .sampler import FieldGrid, _index_slices

TIE_SHIFT = 1e-12
_FOUR = ndimage.generate_binary_structure(2, 1)


def cell_centres(values: np.ndarray) -> np.ndarray:
    return 0.25 * (values[:-1, :-1] + values[1:, :-1] + values[1:, 1:] + values[:-1, 1:])


def saddle_links(bits: np.ndarray, values: np.ndarray | None, level: float):
    """Boolean arrays over cells: diagonal links (i,j)-(i+1,j+1) and (i+1,j)-(i,j+1)."""
    c0, c1, c2, c3 = bits[:-1, :-1], bits[1:, :-1], bits[1:, 1:], bits[:-1, 1:]
    if values is None:
        none = np.zeros(c0.shape, dtype=bool)
        return none, none
    centre_in = cell_centres(values) >= -level
    main = c0 & c2 & ~c1 & ~c3 & centre_in
    anti = c1 & c3 & ~c0 & ~c2 & centre_in
    return main, anti


def label_components(bits: np.ndarray, values: np.ndarray | None = None, level: float = 0.0):
    """Label true vertices; 4-connectivity plus saddle links when ``values`` is given.

    Returns ``(labels, n)`` with labels 1..n on true vertices and 0 elsewhere.
    """
    labels, n = ndimage.label(bits, structure=_FOUR)
    if n == 0 or values is None:
        return labels, n
    main, anti = saddle_links(bits, values, level)
    if not (main.any() or anti.any()):
        return labels, n
    a = np.concatenate([labels[:-1, :-1][main], labels[1:, :-1][anti]])
    b = np.concatenate([labels[1:, 1:][main], labels[:-1, 1:][anti]])
    graph = sparse.coo_matrix((np.ones(a.size), (a, b)), shape=(n + 1, n + 1))
    n_merged, comp = csgraph.connected_components(graph, directed=False)
    # component of background label 0 stays alone; renumber the rest 1..k
    remap = np.zeros(n + 1, dtype=np.int64)
    uniq, inv = np.unique(comp[1:], return_inverse=True)
    remap[1:] = inv + 1
    return remap[labels], uniq.size


@dataclass(frozen=True, eq=False)
class ExcursionMask:
    """Vertices with ``f >= -level`` on the grid of the source field."""

    bits: np.ndarray
    origin: tuple[float, float]
    h: float
    level: float = 0.0
    values: np.ndarray | None = None

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @cached_property
    def _labelled(self):
        return label_components(self.bits, self.values, self.level)

    @property
    def labels(self) -> np.ndarray:
        return self._labelled[0]

    @property
    def n_components(self) -> int:
        return self._labelled[1]

    @property
    def window(self) -> Rect:
        x0, y0 = self.origin
        return Rect(x0, y0, x0 + (self.bits.shape[0] - 1) * self.h,
                    y0 + (self.bits.shape[1] - 1) * self.h)

    def index_range(self, rect: Rect, tol: float = 1e-9):
        from .errors import UsageError
        if not self.window.contains_rect(rect, tol=tol * self.h + 1e-12):
            raise UsageError(f"rectangle {rect} exceeds the sampled window {self.window}")
        return _index_slices(self.origin, self.h, rect, tol)

    def sub(self, rect: Rect):
        """(bits, values, i0, j0) restricted to the vertices inside ``rect``."""
        si, sj = self.index_range(rect)
        vals = None if self.values is None else self.values[si, sj]
        return self.bits[si, sj], vals, si.start, sj.start

    def coords(self, i, j):
        return np.stack([self.origin[0] + self.h * np.asarray(i),
                         self.origin[1] + self.h * np.asarray(j)], axis=-1)


def excursion_mask(field: FieldGrid, level: float = 0.0) -> ExcursionMask:
    return ExcursionMask(field.values >= -level, field.origin, field.h, level, field.values)


def components(mask: ExcursionMask):
    """``(labels, n)``: component labels of the true vertices of ``mask``."""
    return mask.labels, mask.n_components


@dataclass(frozen=True, eq=False)
class NodalGraph:
    """Polyline graph of the level curve: vertices on cell edges, one or two segments per cell."""

    vertices: np.ndarray
    segments: np.ndarray
    window: Rect | None = None
    h: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        s = np.asarray(self.segments, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "segments", s)

    @cached_property
    def lengths(self) -> np.ndarray:
        d = self.vertices[self.segments[:, 1]] - self.vertices[self.segments[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        n = self.n_vertices
        a, b = self.segments[:, 0], self.segments[:, 1]
        # tiny floor keeps zero-length segments as explicit edges
        w = np.maximum(self.lengths, 1e-300)
        m = sparse.coo_matrix((np.concatenate([w, w]), (np.concatenate([a, b]), np.concatenate([b, a]))),
                              shape=(n, n))
        return m.tocsr()

    @cached_property
    def degree(self) -> np.ndarray:
        return np.bincount(self.segments.ravel(), minlength=self.n_vertices)

    @cached_property
    def component_labels(self):
        if self.n_vertices == 0:
            return 0, np.zeros(0, dtype=np.int64)
        return csgraph.connected_components(self.adjacency, directed=False)

    def clipped(self, rect: Rect) -> "NodalGraph":
        """The part of the graph inside ``rect``; cut segments end on the rectangle boundary."""
        if len(self.segments) == 0:
            return NodalGraph(np.zeros((0, 2)), np.zeros((0, 2), dtype=np.int64), rect, self.h)
        p = self.vertices[self.segments[:, 0]]
        q = self.vertices[self.segments[:, 1]]
        keep, t0, t1 = clip_segments(p, q, rect)
        idx = np.nonzero(keep)[0]
        t0, t1 = t0[idx], t1[idx]
        a, b = self.segments[idx, 0].copy(), self.segments[idx, 1].copy()
        verts = [self.vertices]
        n = self.n_vertices
        d = q[idx] - p[idx]
        for ends, t, base in ((a, t0, p[idx]), (b, t1, p[idx])):
            cut = (t > 0) if ends is a else (t < 1)
            new = base[cut] + t[cut, None] * d[cut]
            ends[cut] = n + np.arange(cut.sum())
            n += int(cut.sum())
            verts.append(new)
        allv = np.concatenate(verts)
        used = np.unique(np.concatenate([a, b]))
        remap = np.full(len(allv), -1, dtype=np.int64)
        remap[used] = np.arange(used.size)
        return NodalGraph(allv[used], np.stack([remap[a], remap[b]], axis=1), rect, self.h)

    def to_csv_rows(self):
        for a, b in self.segments:
            (x1, y1), (x2, y2) = self.vertices[a], self.vertices[b]
            yield (x1, y1, x2, y2)


# crossed-edge pairs for the 14 non-ambiguous cases; edges 0 bottom, 1 right, 2 top, 3 left
_EDGE_MASKS = {1: (3, 0), 2: (0, 1), 3: (3, 1), 4: (1, 2), 6: (0, 2), 7: (3, 2), 8: (2, 3),
               9: (0, 2), 11: (1, 2), 12: (1, 3), 13: (0, 1), 14: (3, 0)}


def nodal_graph(field: FieldGrid, level: float = 0.0) -> NodalGraph:
    """Marching-squares extraction of ``{f = -level}`` with linear interpolation on cell edges.

    Grid values exactly equal to ``-level`` are moved up by 1e-12 so that no
    vertex sits on the curve. Saddle cells are split by the sign of the
    bilinear centre value.
    """
    g = field.values + level
    g = np.where(g == 0.0, TIE_SHIFT, g)
    inside = g >= 0
    nx, ny = g.shape
    h = field.h
    ox, oy = field.origin

    # vertices on horizontal edges (i,j)-(i+1,j) and vertical edges (i,j)-(i,j+1)
    hcross = inside[:-1, :] != inside[1:, :]
    vcross = inside[:, :-1] != inside[:, 1:]
    hid = np.full(hcross.shape, -1, dtype=np.int64)
    vid = np.full(vcross.shape, -1, dtype=np.int64)
    hi, hj = np.nonzero(hcross)
    vi, vj = np.nonzero(vcross)
    hid[hi, hj] = np.arange(hi.size)
    vid[vi, vj] = hi.size + np.arange(vi.size)
    th = g[hi, hj] / (g[hi, hj] - g[hi + 1, hj])
    tv = g[vi, vj] / (g[vi, vj] - g[vi, vj + 1])
    verts = np.concatenate([
        np.stack([ox + h * (hi + th), oy + h * hj], axis=1),
        np.stack([ox + h * vi, oy + h * (vj + tv)], axis=1),
    ])

    case = (inside[:-1, :-1].astype(np.int8) | (inside[1:, :-1] << 1)
            | (inside[1:, 1:] << 2) | (inside[:-1, 1:] << 3))
    edge_ids = np.stack([hid[:, :-1], vid[1:, :], hid[:, 1:], vid[:-1, :]], axis=-1)

    segs = []
    for c, (e1, e2) in _EDGE_MASKS.items():
        ci, cj = np.nonzero(case == c)
        segs.append(np.stack([edge_ids[ci, cj, e1], edge_ids[ci, cj, e2]], axis=1))
    centre_in = cell_centres(g) >= 0
    for c in (5, 10):
        ci, cj = np.nonzero(case == c)
        e = edge_ids[ci, cj]
        ctr = centre_in[ci, cj]
        # c0,c2 inside (case 5) with centre inside cuts off c1 and c3; case 10 is the mirror
        cut_13 = ctr if c == 5 else ~ctr
        first = np.where(cut_13[:, None], e[:, [0, 1]], e[:, [3, 0]])
        second = np.where(cut_13[:, None], e[:, [2, 3]], e[:, [1, 2]])
        segs.extend([first, second])
    segments = np.concatenate(segs) if segs else np.zeros((0, 2), dtype=np.int64)
    return NodalGraph(verts, segments, field.window, h)


def total_nodal_length(graph: NodalGraph, window: Rect | None = None) -> float:
    """Sum of segment lengths, clipped to ``window`` when given."""
    if len(graph.segments) == 0:
        return 0.0
    if window is None:
        return float(graph.lengths.sum())
    p = graph.vertices[graph.segments[:, 0]]
    q = graph.vertices[graph.segments[:, 1]]
    keep, t0, t1 = clip_segments(p, q, window)
    return float(np.sum(graph.lengths[keep] * (t1[keep] - t0[keep])))


def mask_to_pgm(bits: np.ndarray, path) -> None:
    """8-bit binary PGM: white for true vertices; rows run top (max y) to bottom."""
    img = np.where(np.asarray(bits, dtype=bool).T[::-1], 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def sign_pgm(field: FieldGrid, path) -> None:
    mask_to_pgm(field.values >= 0, path)


def nodal_graph_csv(graph: NodalGraph, path) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "y1", "x2", "y2"])
        w.writerows(graph.to_csv_rows())
