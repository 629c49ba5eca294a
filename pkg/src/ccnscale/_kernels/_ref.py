"""Pure-Python kernel backend.

Mirrors ``_fast.pyx`` operation for operation: both backends perform the
same IEEE-754 double arithmetic in the same order, so results (cell
lists, nearest indices, hop counts, per-cell loads) are bit-identical
whichever backend is active.  Keep the two files in lockstep.
"""

from __future__ import annotations

from bisect import bisect_left
from math import floor, inf

import numpy as np

BACKEND_NAME = "python"

# Contents with more holders than this are looked up via expanding-ring
# search over grid buckets; smaller sets are scanned linearly.  Both
# strategies return identical results; this only trades speed.
RING_MIN_HOLDERS = 64


def _cell_index(x: float, g: int) -> int:
    i = int(x * g)
    return g - 1 if i >= g else i


def _wrap_delta(a: float, b: float) -> float:
    """Geodesic displacement a -> b in (-0.5, 0.5], ties toward +0.5."""
    d = b - a
    if d > 0.5:
        return d - 1.0
    if d < -0.5:
        return d + 1.0
    if d == -0.5:
        return 0.5
    return d


def _dist2(ax: float, ay: float, bx: float, by: float) -> float:
    dx = ax - bx
    if dx < 0.0:
        dx = -dx
    if dx > 0.5:
        dx = 1.0 - dx
    dy = ay - by
    if dy < 0.0:
        dy = -dy
    if dy > 0.5:
        dy = 1.0 - dy
    return dx * dx + dy * dy


def segment_cells(x0: float, y0: float, dx: float, dy: float, g: int) -> list[int]:
    """Cells crossed by the segment from (x0,y0) along (dx,dy), unwrapped.

    Requires |dx| <= 0.5 and |dy| <= 0.5 (geodesic displacements).
    Returns flat ids ``row * g + col`` of torus cells, in traversal order,
    starting at the cell containing (x0, y0).  A segment passing exactly
    through a lattice corner steps diagonally.  A boundary crossing that
    wraps back into the same torus cell (possible only for g = 1) is not
    repeated in the list.
    """
    col = _cell_index(x0, g)
    row = _cell_index(y0, g)
    cells = [row * g + col]
    ce = floor((x0 + dx) * g)
    re = floor((y0 + dy) * g)
    nx = ce - col if ce >= col else col - ce
    ny = re - row if re >= row else row - re
    if nx == 0 and ny == 0:
        return cells
    sx = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
    sy = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
    if sx > 0:
        tx = ((col + 1.0) / g - x0) / dx
        dtx = 1.0 / (g * dx)
    elif sx < 0:
        tx = (col / float(g) - x0) / dx
        dtx = -1.0 / (g * dx)
    else:
        tx = inf
        dtx = inf
    if sy > 0:
        ty = ((row + 1.0) / g - y0) / dy
        dty = 1.0 / (g * dy)
    elif sy < 0:
        ty = (row / float(g) - y0) / dy
        dty = -1.0 / (g * dy)
    else:
        ty = inf
        dty = inf
    while nx > 0 or ny > 0:
        if ny == 0 or (nx > 0 and tx < ty):
            col += sx
            tx += dtx
            nx -= 1
        elif nx == 0 or ty < tx:
            row += sy
            ty += dty
            ny -= 1
        else:  # exact corner crossing: one diagonal step
            col += sx
            row += sy
            tx += dtx
            ty += dty
            nx -= 1
            ny -= 1
        cid = (row % g) * g + (col % g)
        if cid != cells[-1]:
            cells.append(cid)
    return cells


def nearest_linear(px, py, xs, ys, cand, exclude):
    """Scan candidate node indices; return (index, d2, saw_excluded).

    Ties in distance resolve to the lowest node index.
    """
    best_i = -1
    best_d2 = inf
    saw_excluded = False
    for idx in cand:
        if idx == exclude:
            saw_excluded = True
            continue
        d2 = _dist2(px, py, xs[idx], ys[idx])
        if d2 < best_d2 or (d2 == best_d2 and idx < best_i):
            best_d2 = d2
            best_i = idx
    return best_i, best_d2, saw_excluded


def nearest_ring(px, py, xs, ys, hc_idx, hc_cell, lo, hi, g, exclude):
    """Expanding-ring search over per-cell buckets of one holder set.

    ``hc_idx[lo:hi]``/``hc_cell[lo:hi]`` hold the set's node indices and
    their cell ids, sorted by (cell, index).  Equivalent to a linear scan,
    including ties-to-lowest-index.
    """
    qcol = _cell_index(px, g)
    qrow = _cell_index(py, g)
    best_i = -1
    best_d2 = inf
    saw_excluded = False
    s = 1.0 / g
    rmax = g // 2 + 1
    for ring in range(rmax + 1):
        if best_i >= 0 and ring >= 2:
            reach = (ring - 1) * s
            if reach * reach > best_d2:
                break
        if ring == 0:
            offsets = ((0, 0),)
        else:
            offsets = _ring_offsets(ring)
        for dr, dc in offsets:
            rr = (qrow + dr) % g
            cc = (qcol + dc) % g
            cid = rr * g + cc
            j = bisect_left(hc_cell, cid, lo, hi)
            while j < hi and hc_cell[j] == cid:
                idx = hc_idx[j]
                j += 1
                if idx == exclude:
                    saw_excluded = True
                    continue
                d2 = _dist2(px, py, xs[idx], ys[idx])
                if d2 < best_d2 or (d2 == best_d2 and idx < best_i):
                    best_d2 = d2
                    best_i = idx
    return best_i, best_d2, saw_excluded


def _ring_offsets(r: int):
    out = []
    for dc in range(-r, r + 1):
        out.append((-r, dc))
        out.append((r, dc))
    for dr in range(-r + 1, r):
        out.append((dr, -r))
        out.append((dr, r))
    return out


def trace_batch(xs, ys, g, req, h_idx, h_start, hc_idx, hc_cell, bs_x, bs_y):
    """Trace one request per node; returns (hops, loads, status).

    For node ``i`` requesting content ``req[i]``: find the nearest holder
    (ring or linear search) excluding ``i`` itself, let base stations
    compete as extra candidates (never excluded; nodes win distance ties),
    then walk the grid cells along the geodesic to the winner, charging
    every transmitting cell (all but the final cell; a degenerate
    single-cell path charges its own cell once).  Hop count is the cell
    count minus one, floored at one.

    status: 0 ok, 1 served locally (requester is the sole holder),
    2 routing failure (no holder, no base station).
    """
    n = len(xs)
    xs_l = [float(v) for v in xs]
    ys_l = [float(v) for v in ys]
    req_l = [int(v) for v in req]
    h_idx_l = [int(v) for v in h_idx]
    h_start_l = [int(v) for v in h_start]
    hc_idx_l = [int(v) for v in hc_idx]
    hc_cell_l = [int(v) for v in hc_cell]
    bs_x_l = [float(v) for v in bs_x]
    bs_y_l = [float(v) for v in bs_y]
    nbs = len(bs_x_l)

    hops = np.zeros(n, dtype=np.int64)
    loads = np.zeros(g * g, dtype=np.int64)
    loads_l = [0] * (g * g)
    status = np.zeros(n, dtype=np.int64)

    for i in range(n):
        m = req_l[i]
        lo = h_start_l[m]
        hi = h_start_l[m + 1]
        px = xs_l[i]
        py = ys_l[i]
        if hi - lo > RING_MIN_HOLDERS:
            best_i, best_d2, saw_self = nearest_ring(
                px, py, xs_l, ys_l, hc_idx_l, hc_cell_l, lo, hi, g, i
            )
        else:
            best_i, best_d2, saw_self = nearest_linear(
                px, py, xs_l, ys_l, h_idx_l[lo:hi], i
            )
        for b in range(nbs):
            d2 = _dist2(px, py, bs_x_l[b], bs_y_l[b])
            idx = n + b
            if d2 < best_d2 or (d2 == best_d2 and idx < best_i):
                best_d2 = d2
                best_i = idx

        if best_i < 0:
            own = _cell_index(py, g) * g + _cell_index(px, g)
            loads_l[own] += 1
            hops[i] = 1
            status[i] = 1 if saw_self else 2
            continue

        if best_i < n:
            hx = xs_l[best_i]
            hy = ys_l[best_i]
        else:
            hx = bs_x_l[best_i - n]
            hy = bs_y_l[best_i - n]
        dx = _wrap_delta(px, hx)
        dy = _wrap_delta(py, hy)
        cells = segment_cells(px, py, dx, dy, g)
        target = _cell_index(hy, g) * g + _cell_index(hx, g)
        if cells[-1] != target:
            # float-boundary safety net: land on the holder's cell
            cells.append(target)
        ncells = len(cells)
        if ncells == 1:
            loads_l[cells[0]] += 1
            hops[i] = 1
        else:
            for j in range(ncells - 1):
                loads_l[cells[j]] += 1
            hops[i] = ncells - 1

    loads[:] = loads_l
    return hops, loads, status
