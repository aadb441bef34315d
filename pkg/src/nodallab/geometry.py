"""Planar geometry helpers: axis-aligned rectangles and segment clipping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle [x0, x1] x [y0, y1]."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate rectangle {self}")

    @classmethod
    def centered(cls, cx: float, cy: float, width: float, height: float | None = None) -> "Rect":
        height = width if height is None else height
        return cls(cx - width / 2, cy - height / 2, cx + width / 2, cy + height / 2)

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.width, self.height))

    def contains_rect(self, other: "Rect", tol: float = 1e-9) -> bool:
        return (other.x0 >= self.x0 - tol and other.x1 <= self.x1 + tol
                and other.y0 >= self.y0 - tol and other.y1 <= self.y1 + tol)

    def contains(self, pts, tol: float = 0.0) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return ((pts[..., 0] >= self.x0 - tol) & (pts[..., 0] <= self.x1 + tol)
                & (pts[..., 1] >= self.y0 - tol) & (pts[..., 1] <= self.y1 + tol))

    def distance_to(self, other: "Rect") -> float:
        dx = max(0.0, other.x0 - self.x1, self.x0 - other.x1)
        dy = max(0.0, other.y0 - self.y1, self.y0 - other.y1)
        return float(np.hypot(dx, dy))

    def shifted(self, dx: float, dy: float) -> "Rect":
        return Rect(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)


def clip_segments(p: np.ndarray, q: np.ndarray, rect: Rect):
    """Liang-Barsky clipping of segments p[i] -> q[i] against ``rect``.

    Returns ``(keep, t0, t1)``: a mask of segments meeting the rectangle and
    the parameter interval of the surviving part (``p + t (q - p)``).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q - p
    t0 = np.zeros(len(p))
    t1 = np.ones(len(p))
    keep = np.ones(len(p), dtype=bool)
    for pk, qk in ((-d[:, 0], p[:, 0] - rect.x0), (d[:, 0], rect.x1 - p[:, 0]),
                   (-d[:, 1], p[:, 1] - rect.y0), (d[:, 1], rect.y1 - p[:, 1])):
        parallel = pk == 0
        keep &= ~(parallel & (qk < 0))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(parallel, 0.0, qk / np.where(parallel, 1.0, pk))
        entering = (pk < 0) & ~parallel
        leaving = (pk > 0) & ~parallel
        t0 = np.where(entering, np.maximum(t0, r), t0)
        t1 = np.where(leaving, np.minimum(t1, r), t1)
    keep &= t0 <= t1
    return keep, t0, t1


def rotated_frame(pts: np.ndarray, center, angle: float) -> np.ndarray:
    """Coordinates of ``pts`` in the frame centred at ``center`` with axis ``angle``."""
    c, s = np.cos(angle), np.sin(angle)
    d = np.asarray(pts, dtype=float) - np.asarray(center, dtype=float)
    return np.stack([d[..., 0] * c + d[..., 1] * s, -d[..., 0] * s + d[..., 1] * c], axis=-1)
