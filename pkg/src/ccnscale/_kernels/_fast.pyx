# cython: language_level=3
"""Compiled kernel backend.

Mirrors ``_ref.py`` operation for operation: both backends perform the
same IEEE-754 double arithmetic in the same order, so results (cell
lists, nearest indices, hop counts, per-cell loads) are bit-identical
whichever backend is active.  Keep the two files in lockstep.

The build pins ``-ffp-contract=off`` so the compiler cannot fuse
multiply-adds into differently-rounded FMA instructions.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, floor

cnp.import_array()

BACKEND_NAME = "compiled"

# Contents with more holders than this are looked up via expanding-ring
# search over grid buckets; smaller sets are scanned linearly.  Both
# strategies return identical results; this only trades speed.
RING_MIN_HOLDERS = 64

cdef long _RING_MIN = 64


cdef inline long _cell_index(double x, long g) noexcept:
    cdef long i = <long>(x * g)
    return g - 1 if i >= g else i


cdef inline long _mod(long v, long g) noexcept:
    # Result in [0, g) for any sign of v, like Python's % operator.
    cdef long r = v % g
    return r + g if r < 0 else r


cdef inline double _wrap_delta(double a, double b) noexcept:
    """Geodesic displacement a -> b in (-0.5, 0.5], ties toward +0.5."""
    cdef double d = b - a
    if d > 0.5:
        return d - 1.0
    if d < -0.5:
        return d + 1.0
    if d == -0.5:
        return 0.5
    return d


cdef inline double _dist2(double ax, double ay, double bx, double by) noexcept:
    cdef double dx = ax - bx
    cdef double dy
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


cdef long _segment_cells_c(
    double x0, double y0, double dx, double dy, long g, cnp.int64_t* buf
) noexcept:
    """C core of segment_cells: writes flat cell ids to buf, returns count."""
    cdef long col = _cell_index(x0, g)
    cdef long row = _cell_index(y0, g)
    cdef long count = 1
    cdef long ce, re, nx, ny, sx, sy, cid
    cdef double tx, ty, dtx, dty
    buf[0] = row * g + col
    ce = <long>floor((x0 + dx) * g)
    re = <long>floor((y0 + dy) * g)
    nx = ce - col if ce >= col else col - ce
    ny = re - row if re >= row else row - re
    if nx == 0 and ny == 0:
        return count
    sx = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
    sy = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
    if sx > 0:
        tx = ((col + 1.0) / g - x0) / dx
        dtx = 1.0 / (g * dx)
    elif sx < 0:
        tx = (col / <double>g - x0) / dx
        dtx = -1.0 / (g * dx)
    else:
        tx = INFINITY
        dtx = INFINITY
    if sy > 0:
        ty = ((row + 1.0) / g - y0) / dy
        dty = 1.0 / (g * dy)
    elif sy < 0:
        ty = (row / <double>g - y0) / dy
        dty = -1.0 / (g * dy)
    else:
        ty = INFINITY
        dty = INFINITY
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
        cid = _mod(row, g) * g + _mod(col, g)
        if cid != buf[count - 1]:
            buf[count] = cid
            count += 1
    return count


def segment_cells(double x0, double y0, double dx, double dy, long g):
    """Cells crossed by the segment from (x0,y0) along (dx,dy), unwrapped.

    Requires |dx| <= 0.5 and |dy| <= 0.5 (geodesic displacements).
    Returns flat ids ``row * g + col`` of torus cells, in traversal order,
    starting at the cell containing (x0, y0).  A segment passing exactly
    through a lattice corner steps diagonally.  A boundary crossing that
    wraps back into the same torus cell (possible only for g = 1) is not
    repeated in the list.
    """
    cdef cnp.ndarray[cnp.int64_t, ndim=1] buf = np.empty(
        2 * g + 16, dtype=np.int64
    )
    cdef long count = _segment_cells_c(x0, y0, dx, dy, g, &buf[0])
    return [int(buf[i]) for i in range(count)]


cdef long _bisect_left(
    const cnp.int64_t* arr, long x, long lo, long hi
) noexcept:
    cdef long mid
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef long _nearest_linear_c(
    double px, double py,
    const double* xs, const double* ys,
    const cnp.int64_t* cand, long n_cand,
    long exclude, double* out_d2, bint* out_saw,
) noexcept:
    cdef long best_i = -1
    cdef double best_d2 = INFINITY
    cdef bint saw_excluded = 0
    cdef long k, idx
    cdef double d2
    for k in range(n_cand):
        idx = cand[k]
        if idx == exclude:
            saw_excluded = 1
            continue
        d2 = _dist2(px, py, xs[idx], ys[idx])
        if d2 < best_d2 or (d2 == best_d2 and idx < best_i):
            best_d2 = d2
            best_i = idx
    out_d2[0] = best_d2
    out_saw[0] = saw_excluded
    return best_i


cdef inline void _scan_bucket(
    double px, double py,
    const double* xs, const double* ys,
    const cnp.int64_t* hc_idx, const cnp.int64_t* hc_cell,
    long lo, long hi, long cid, long exclude,
    long* best_i, double* best_d2, bint* saw_excluded,
) noexcept:
    cdef long j = _bisect_left(hc_cell, cid, lo, hi)
    cdef long idx
    cdef double d2
    while j < hi and hc_cell[j] == cid:
        idx = hc_idx[j]
        j += 1
        if idx == exclude:
            saw_excluded[0] = 1
            continue
        d2 = _dist2(px, py, xs[idx], ys[idx])
        if d2 < best_d2[0] or (d2 == best_d2[0] and idx < best_i[0]):
            best_d2[0] = d2
            best_i[0] = idx


cdef long _nearest_ring_c(
    double px, double py,
    const double* xs, const double* ys,
    const cnp.int64_t* hc_idx, const cnp.int64_t* hc_cell,
    long lo, long hi, long g, long exclude,
    double* out_d2, bint* out_saw,
) noexcept:
    cdef long qcol = _cell_index(px, g)
    cdef long qrow = _cell_index(py, g)
    cdef long best_i = -1
    cdef double best_d2 = INFINITY
    cdef bint saw_excluded = 0
    cdef double s = 1.0 / g
    cdef long rmax = g // 2 + 1
    cdef long ring, dr, dc
    cdef double reach

    for ring in range(rmax + 1):
        if best_i >= 0 and ring >= 2:
            reach = (ring - 1) * s
            if reach * reach > best_d2:
                break
        if ring == 0:
            _scan_bucket(
                px, py, xs, ys, hc_idx, hc_cell, lo, hi,
                _mod(qrow, g) * g + _mod(qcol, g), exclude,
                &best_i, &best_d2, &saw_excluded,
            )
            continue
        # Same bucket visit order as the reference _ring_offsets().
        for dc in range(-ring, ring + 1):
            _scan_bucket(
                px, py, xs, ys, hc_idx, hc_cell, lo, hi,
                _mod(qrow - ring, g) * g + _mod(qcol + dc, g), exclude,
                &best_i, &best_d2, &saw_excluded,
            )
            _scan_bucket(
                px, py, xs, ys, hc_idx, hc_cell, lo, hi,
                _mod(qrow + ring, g) * g + _mod(qcol + dc, g), exclude,
                &best_i, &best_d2, &saw_excluded,
            )
        for dr in range(-ring + 1, ring):
            _scan_bucket(
                px, py, xs, ys, hc_idx, hc_cell, lo, hi,
                _mod(qrow + dr, g) * g + _mod(qcol - ring, g), exclude,
                &best_i, &best_d2, &saw_excluded,
            )
            _scan_bucket(
                px, py, xs, ys, hc_idx, hc_cell, lo, hi,
                _mod(qrow + dr, g) * g + _mod(qcol + ring, g), exclude,
                &best_i, &best_d2, &saw_excluded,
            )
    out_d2[0] = best_d2
    out_saw[0] = saw_excluded
    return best_i


def nearest_linear(px, py, xs, ys, cand, exclude):
    """Scan candidate node indices; return (index, d2, saw_excluded).

    Ties in distance resolve to the lowest node index.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs_a = np.ascontiguousarray(
        xs, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ys_a = np.ascontiguousarray(
        ys, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cand_a = np.ascontiguousarray(
        cand, dtype=np.int64
    )
    cdef const double* xs_p = NULL
    cdef const double* ys_p = NULL
    cdef const cnp.int64_t* cand_p = NULL
    if xs_a.shape[0] > 0:
        xs_p = &xs_a[0]
        ys_p = &ys_a[0]
    if cand_a.shape[0] > 0:
        cand_p = &cand_a[0]
    cdef double best_d2
    cdef bint saw
    cdef long best_i = _nearest_linear_c(
        px, py, xs_p, ys_p, cand_p, cand_a.shape[0], exclude,
        &best_d2, &saw,
    )
    return best_i, best_d2, bool(saw)


def nearest_ring(px, py, xs, ys, hc_idx, hc_cell, lo, hi, g, exclude):
    """Expanding-ring search over per-cell buckets of one holder set.

    ``hc_idx[lo:hi]``/``hc_cell[lo:hi]`` hold the set's node indices and
    their cell ids, sorted by (cell, index).  Equivalent to a linear scan,
    including ties-to-lowest-index.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs_a = np.ascontiguousarray(
        xs, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ys_a = np.ascontiguousarray(
        ys, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hci_a = np.ascontiguousarray(
        hc_idx, dtype=np.int64
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hcc_a = np.ascontiguousarray(
        hc_cell, dtype=np.int64
    )
    cdef const double* xs_p = NULL
    cdef const double* ys_p = NULL
    cdef const cnp.int64_t* hci_p = NULL
    cdef const cnp.int64_t* hcc_p = NULL
    if xs_a.shape[0] > 0:
        xs_p = &xs_a[0]
        ys_p = &ys_a[0]
    if hci_a.shape[0] > 0:
        hci_p = &hci_a[0]
        hcc_p = &hcc_a[0]
    cdef double best_d2
    cdef bint saw
    cdef long best_i = _nearest_ring_c(
        px, py, xs_p, ys_p, hci_p, hcc_p, lo, hi, g, exclude,
        &best_d2, &saw,
    )
    return best_i, best_d2, bool(saw)


def trace_batch(xs, ys, long g, req, h_idx, h_start, hc_idx, hc_cell,
                bs_x, bs_y):
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
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs_a = np.ascontiguousarray(
        xs, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ys_a = np.ascontiguousarray(
        ys, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] req_a = np.ascontiguousarray(
        req, dtype=np.int64
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] h_idx_a = np.ascontiguousarray(
        h_idx, dtype=np.int64
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] h_start_a = np.ascontiguousarray(
        h_start, dtype=np.int64
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hci_a = np.ascontiguousarray(
        hc_idx, dtype=np.int64
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hcc_a = np.ascontiguousarray(
        hc_cell, dtype=np.int64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bsx_a = np.ascontiguousarray(
        bs_x, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bsy_a = np.ascontiguousarray(
        bs_y, dtype=np.float64
    )

    cdef long n = xs_a.shape[0]
    cdef long nbs = bsx_a.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hops = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] loads = np.zeros(
        g * g, dtype=np.int64
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] status = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] buf = np.empty(
        2 * g + 16, dtype=np.int64
    )

    cdef const double* xs_p = NULL
    cdef const double* ys_p = NULL
    if n > 0:
        xs_p = &xs_a[0]
        ys_p = &ys_a[0]
    cdef const cnp.int64_t* h_idx_p = NULL
    cdef const cnp.int64_t* hci_p = NULL
    cdef const cnp.int64_t* hcc_p = NULL
    if h_idx_a.shape[0] > 0:
        h_idx_p = &h_idx_a[0]
        hci_p = &hci_a[0]
        hcc_p = &hcc_a[0]
    cdef cnp.int64_t* buf_p = &buf[0]

    cdef long i, m, lo, hi, best_i, b, idx, own, target, ncells, j
    cdef double px, py, best_d2, d2, hx, hy, dx, dy
    cdef bint saw_self
    cdef const cnp.int64_t* cand_p

    for i in range(n):
        m = req_a[i]
        lo = h_start_a[m]
        hi = h_start_a[m + 1]
        px = xs_p[i]
        py = ys_p[i]
        if hi - lo > _RING_MIN:
            best_i = _nearest_ring_c(
                px, py, xs_p, ys_p, hci_p, hcc_p, lo, hi, g, i,
                &best_d2, &saw_self,
            )
        else:
            if h_idx_p != NULL:
                cand_p = h_idx_p + lo
            else:
                cand_p = NULL
            best_i = _nearest_linear_c(
                px, py, xs_p, ys_p, cand_p, hi - lo, i,
                &best_d2, &saw_self,
            )
        for b in range(nbs):
            d2 = _dist2(px, py, bsx_a[b], bsy_a[b])
            idx = n + b
            if d2 < best_d2 or (d2 == best_d2 and idx < best_i):
                best_d2 = d2
                best_i = idx

        if best_i < 0:
            own = _cell_index(py, g) * g + _cell_index(px, g)
            loads[own] += 1
            hops[i] = 1
            status[i] = 1 if saw_self else 2
            continue

        if best_i < n:
            hx = xs_p[best_i]
            hy = ys_p[best_i]
        else:
            hx = bsx_a[best_i - n]
            hy = bsy_a[best_i - n]
        dx = _wrap_delta(px, hx)
        dy = _wrap_delta(py, hy)
        ncells = _segment_cells_c(px, py, dx, dy, g, buf_p)
        target = _cell_index(hy, g) * g + _cell_index(hx, g)
        if buf_p[ncells - 1] != target:
            # float-boundary safety net: land on the holder's cell
            buf_p[ncells] = target
            ncells += 1
        if ncells == 1:
            loads[buf_p[0]] += 1
            hops[i] = 1
        else:
            for j in range(ncells - 1):
                loads[buf_p[j]] += 1
            hops[i] = ncells - 1

    return hops, loads, status
