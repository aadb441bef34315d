"""Polyline curves, the Koch fixture and the unit-diameter partition."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..errors import UsageError


def point_set_diameter(pts: np.ndarray) -> float:
    """Largest pairwise distance, computed on the convex hull vertices."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass  # collinear input: fall through to the projection below
    if len(pts) > 2000:
        # collinear fallback: extent along the principal axis
        d = pts - pts.mean(axis=0)
        axis = np.linalg.svd(d, full_matrices=False)[2][0]
        p = d @ axis
        return float(p.max() - p.min())
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff))))


def diameter_pair(pts: np.ndarray) -> tuple[int, int, float]:
    """Indices (into ``pts``) of a diameter-realising pair and the diameter."""
    pts = np.asarray(pts, dtype=float)
    cand = np.arange(len(pts))
    if len(pts) > 3:
        try:
            cand = ConvexHull(pts).vertices
        except QhullError:
            d = pts - pts.mean(axis=0)
            axis = np.linalg.svd(d, full_matrices=False)[2][0]
            p = d @ axis
            cand = np.array([int(np.argmin(p)), int(np.argmax(p))])
    sub = pts[cand]
    diff = sub[:, None, :] - sub[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    a, b = np.unravel_index(int(np.argmax(d2)), d2.shape)
    return int(cand[a]), int(cand[b]), float(math.sqrt(d2[a, b]))


@dataclass(frozen=True, eq=False)
class Curve:
    """A polyline; consecutive duplicate vertices are dropped on construction."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(pts) > 1:
            keep = np.ones(len(pts), dtype=bool)
            keep[1:] = np.any(np.diff(pts, axis=0) != 0, axis=1)
            pts = pts[keep]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @cached_property
    def arclength(self) -> np.ndarray:
        if len(self.points) < 2:
            return np.zeros(len(self.points))
        seg = np.hypot(*np.diff(self.points, axis=0).T)
        return np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self.arclength[-1]) if len(self.points) else 0.0

    @cached_property
    def diameter(self) -> float:
        return point_set_diameter(self.points)

    @property
    def max_step(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.max(np.diff(self.arclength)))

    def densified(self, max_step: float) -> "Curve":
        """Same polyline with extra vertices so that no segment exceeds ``max_step``."""
        if len(self.points) < 2 or self.max_step <= max_step:
            return self
        seg = np.diff(self.points, axis=0)
        lens = np.hypot(seg[:, 0], seg[:, 1])
        pieces = np.maximum(1, np.ceil(lens / max_step).astype(np.int64))
        starts = np.repeat(self.points[:-1], pieces, axis=0)
        steps = np.repeat(seg / pieces[:, None], pieces, axis=0)
        frac = np.arange(pieces.sum()) - np.repeat(np.cumsum(pieces) - pieces, pieces)
        pts = starts + frac[:, None] * steps
        return Curve(np.vstack([pts, self.points[-1:]]))

    def translated(self, dx: float, dy: float) -> "Curve":
        return Curve(self.points + np.array([dx, dy]))


def koch_curve(depth: int, bend_angle: float = 60.0, base_length: float = 1.0) -> Curve:
    """Koch-type curve from (0, 0) to (base_length, 0).

    Each segment is cut into four pieces of relative length
    r = 1 / (2 + 2 cos(bend)): the two middle ones form a tent rising at
    ``bend_angle`` degrees. With the classic 60 degrees, r = 1/3 and the
    length after ``depth`` steps is (4/3)^depth * base_length.
    """
    if depth < 0:
        raise UsageError("depth must be non-negative")
    theta = math.radians(bend_angle)
    if not 0 <= theta < math.pi / 2:
        raise UsageError("bend angle must lie in [0, 90) degrees")
    r = 1.0 / (2 + 2 * math.cos(theta))
    z = np.array([0.0 + 0j, complex(base_length, 0)])
    rot = r * complex(math.cos(theta), math.sin(theta))
    for _ in range(depth):
        a, d = z[:-1], np.diff(z)
        p1 = a + r * d
        p2 = p1 + rot * d
        p3 = a + (1 - r) * d
        new = np.empty(4 * len(a) + 1, dtype=complex)
        new[0:-1:4], new[1::4], new[2::4], new[3::4] = a, p1, p2, p3
        new[-1] = z[-1]
        z = new
    return Curve(np.stack([z.real, z.imag], axis=1))


def koch_length(depth: int, bend_angle: float = 60.0, base_length: float = 1.0) -> float:
    r = 1.0 / (2 + 2 * math.cos(math.radians(bend_angle)))
    return (4 * r) ** depth * base_length


def _first_reach(pts: np.ndarray, p: np.ndarray, d: np.ndarray) -> float | None:
    """Smallest t in [0, 1] with max_j |p + t d - pts_j| = 1, or None."""
    w = p - pts
    a = d @ d
    if a == 0:
        return None
    b = 2 * (w @ d)
    c = np.einsum("ij,ij->i", w, w) - 1.0
    disc = b * b - 4 * a * c
    ok = disc >= 0
    if not ok.any():
        return None
    sq = np.sqrt(disc[ok])
    # c < 0 for every previous vertex, so the larger root is the exit time
    t = (-b[ok] + sq) / (2 * a)
    t = t[(t >= 0) & (t <= 1)]
    return float(t.min()) if t.size else None


def unit_diameter_partition(curve: Curve, tol: float = 1e-9) -> list[Curve]:
    """Cut the curve at the successive times where the current piece's diameter reaches 1.

    Pieces C_1..C_{N-1} have diameter exactly 1; the leftover (diameter
    below 1 - tol) is merged into the last piece, whose diameter then lies
    in [1, 2).
    """
    if curve.diameter < 1 - 1e-12:
        raise UsageError(f"curve diameter {curve.diameter:.6g} is below 1")
    pts = curve.points
    parts: list[np.ndarray] = []
    current = [pts[0]]
    i = 0
    while i < len(pts) - 1:
        p, q = current[-1], pts[i + 1]
        t = _first_reach(np.asarray(current), p, q - p)
        if t is None:
            current.append(q)
            i += 1
            continue
        cut = p + t * (q - p)
        current.append(cut)
        parts.append(np.asarray(current))
        current = [cut]
        if t >= 1:
            i += 1
    tail = np.asarray(current)
    if len(tail) > 1 and point_set_diameter(tail) >= 1 - tol:
        parts.append(tail)
    elif parts:
        parts[-1] = np.vstack([parts[-1], tail[1:]])
    else:
        parts.append(tail)
    return [Curve(p) for p in parts]
