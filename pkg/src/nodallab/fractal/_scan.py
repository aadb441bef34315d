"""Compiled inner loops for the hierarchical decomposition."""

import numpy as np
from numba import njit

MAX_CELLS = 1 << 22


@njit(cache=True)
def _near(px, py, head, nxt, P, x0, y0, cell, ncx, ncy, gap2):
    cx = int((px - x0) / cell)
    cy = int((py - y0) / cell)
    for ix in range(max(cx - 1, 0), min(cx + 2, ncx)):
        for iy in range(max(cy - 1, 0), min(cy + 2, ncy)):
            k = head[ix * ncy + iy]
            while k >= 0:
                dx = P[k, 0] - px
                dy = P[k, 1] - py
                if dx * dx + dy * dy < gap2:
                    return True
                k = nxt[k]
    return False


@njit(cache=True)
def greedy_pieces(P, a, b, step, length, gap, dirs):
    """Disjoint index ranges of P[a..b] (walked with ``step`` = +1 or -1).

    Each range has width >= ``length`` in one of the directions ``dirs``
    (so diameter >= length) and every vertex lies at distance >= ``gap``
    from the vertices of all earlier ranges.
    """
    lo_x, hi_x, lo_y, hi_y = P[a, 0], P[a, 0], P[a, 1], P[a, 1]
    for i in range(a, b + 1):
        lo_x = min(lo_x, P[i, 0]); hi_x = max(hi_x, P[i, 0])
        lo_y = min(lo_y, P[i, 1]); hi_y = max(hi_y, P[i, 1])
    cell = gap
    ncx = int((hi_x - lo_x) / cell) + 1
    ncy = int((hi_y - lo_y) / cell) + 1
    while ncx * ncy > MAX_CELLS:
        cell *= 2.0
        ncx = int((hi_x - lo_x) / cell) + 1
        ncy = int((hi_y - lo_y) / cell) + 1
    head = -np.ones(ncx * ncy, dtype=np.int64)
    nxt = -np.ones(P.shape[0], dtype=np.int64)
    K = dirs.shape[0]
    mins = np.empty(K)
    maxs = np.empty(K)
    starts = np.empty(b - a + 1, dtype=np.int64)
    ends = np.empty(b - a + 1, dtype=np.int64)
    count = 0
    gap2 = gap * gap
    first, last = (a, b) if step > 0 else (b, a)
    i = first
    c = -1
    while (step > 0 and i <= last) or (step < 0 and i >= last):
        px, py = P[i, 0], P[i, 1]
        if count > 0 and _near(px, py, head, nxt, P, lo_x, lo_y, cell, ncx, ncy, gap2):
            c = -1
            i += step
            continue
        if c < 0:
            c = i
            for d in range(K):
                v = px * dirs[d, 0] + py * dirs[d, 1]
                mins[d] = v
                maxs[d] = v
        else:
            width = 0.0
            for d in range(K):
                v = px * dirs[d, 0] + py * dirs[d, 1]
                if v < mins[d]:
                    mins[d] = v
                if v > maxs[d]:
                    maxs[d] = v
                if maxs[d] - mins[d] > width:
                    width = maxs[d] - mins[d]
            if width >= length:
                s0, s1 = (c, i) if step > 0 else (i, c)
                starts[count] = s0
                ends[count] = s1
                count += 1
                for k in range(s0, s1 + 1):
                    key = int((P[k, 0] - lo_x) / cell) * ncy + int((P[k, 1] - lo_y) / cell)
                    nxt[k] = head[key]
                    head[key] = k
                c = -1
        i += step
    return starts[:count], ends[:count]


@njit(cache=True)
def minimal_arc(P, a, b, i0, length):
    """Sub-arc (i, j) of P[a..b] with |P_i - P_j| >= length whose interior stays
    within distance < length of both endpoints; (-1, -1) if none starts at i0.
    """
    L2 = length * length
    j = -1
    for k in range(i0 + 1, b + 1):
        dx = P[k, 0] - P[i0, 0]
        dy = P[k, 1] - P[i0, 1]
        if dx * dx + dy * dy >= L2:
            j = k
            break
    if j < 0:
        return -1, -1
    i = i0
    while True:
        # last index before j at distance >= length from P_j
        ni = -1
        for k in range(j - 1, i - 1, -1):
            dx = P[k, 0] - P[j, 0]
            dy = P[k, 1] - P[j, 1]
            if dx * dx + dy * dy >= L2:
                ni = k
                break
        i = ni
        # first index after i at distance >= length from P_i
        nj = j
        for k in range(i + 1, j + 1):
            dx = P[k, 0] - P[i, 0]
            dy = P[k, 1] - P[i, 1]
            if dx * dx + dy * dy >= L2:
                nj = k
                break
        if nj == j:
            return i, j
        j = nj
