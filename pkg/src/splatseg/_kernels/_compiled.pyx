# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: tile rasterizer, grid region growing, disk
morphology, border flood fill, union-find components.

Each function mirrors splatseg._kernels.purepy exactly (same float
expressions, same tie rules); cross-checked by tests/test_kernels.py.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel import prange
from libc.math cimport ceil, floor, sqrt

cimport openmp

NAME = "compiled"

cdef int TILE = 16


def rasterize_first_hit(xs, ys, labels, int height, int width, double tau,
                        bint require_label, int num_threads=1):
    """Per pixel, the first (depth-sorted input order) primitive within
    squared distance tau; -1 where none. Tile-parallel, deterministic."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cx = np.ascontiguousarray(xs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cy = np.ascontiguousarray(ys, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] lab = np.ascontiguousarray(labels, dtype=np.int32)
    cdef Py_ssize_t n = cx.shape[0]
    cdef cnp.ndarray[cnp.int32_t, ndim=2] winner = np.full((height, width), -1, dtype=np.int32)
    if n == 0 or height <= 0 or width <= 0:
        return winner

    cdef int reach = <int>ceil(sqrt(tau))
    cdef int ntx = (width + TILE - 1) // TILE
    cdef int nty = (height + TILE - 1) // TILE
    cdef Py_ssize_t ntiles = <Py_ssize_t>ntx * nty

    # Bin primitives into tiles by their candidate pixel span: one pass
    # records (tile, slot) entries and counts, a counting-sort scatter then
    # groups them per tile. Sequential passes keep per-tile lists in global
    # depth order. A primitive spans at most 4 tiles while reach < TILE.
    cdef int tiles_per_prim = ((2 * reach) // TILE + 2) ** 2
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(ntiles + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] ent_tile = np.empty(n * tiles_per_prim, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] ent_slot = np.empty(n * tiles_per_prim, dtype=np.int32)
    cdef long long[::1] cnt = counts
    cdef int[::1] etile = ent_tile
    cdef int[::1] eslot = ent_slot
    cdef double[::1] xv = cx
    cdef double[::1] yv = cy
    cdef int[::1] lv = lab
    cdef int[:, ::1] win = winner

    cdef Py_ssize_t i, t, ne = 0
    cdef long long bx, by
    cdef int txlo, txhi, tylo, tyhi, tx, ty
    with nogil:
        for i in range(n):
            if require_label and lv[i] <= 0:
                continue
            if xv[i] > 1e9 or xv[i] < -1e9 or yv[i] > 1e9 or yv[i] < -1e9 or xv[i] != xv[i] or yv[i] != yv[i]:
                continue
            bx = <long long>floor(xv[i])
            by = <long long>floor(yv[i])
            if bx + reach < 0 or bx - reach >= width or by + reach < 0 or by - reach >= height:
                continue
            txlo = <int>(max2(bx - reach, 0) // TILE)
            txhi = <int>(min2(bx + reach, width - 1) // TILE)
            tylo = <int>(max2(by - reach, 0) // TILE)
            tyhi = <int>(min2(by + reach, height - 1) // TILE)
            for ty in range(tylo, tyhi + 1):
                for tx in range(txlo, txhi + 1):
                    t = <Py_ssize_t>ty * ntx + tx
                    etile[ne] = <int>t
                    eslot[ne] = <int>i
                    cnt[t + 1] += 1
                    ne += 1

    cdef cnp.ndarray[cnp.int64_t, ndim=1] offsets = np.cumsum(counts, dtype=np.int64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] tile_prims = np.empty(ne, dtype=np.int32)
    cdef long long[::1] off = offsets
    cdef long long[::1] fill = np.array(offsets[:ntiles], dtype=np.int64)
    cdef int[::1] tp = tile_prims

    cdef Py_ssize_t e
    with nogil:
        for e in range(ne):
            t = etile[e]
            tp[fill[t]] = eslot[e]
            fill[t] += 1

    # oversubscribing a CPU-bound kernel only adds scheduling overhead;
    # the requested count is an upper bound
    cdef int nprocs = openmp.omp_get_num_procs()
    cdef int nthreads = num_threads if num_threads > 0 else 1
    if nthreads > nprocs:
        nthreads = nprocs
    cdef Py_ssize_t tt
    for tt in prange(ntiles, nogil=True, schedule="static", num_threads=nthreads):
        _stamp_tile(tt, ntx, height, width, reach, tau, xv, yv, tp, off, win)
    return winner


cdef inline long long max2(long long a, long long b) nogil:
    return a if a > b else b


cdef inline long long min2(long long a, long long b) nogil:
    return a if a < b else b


cdef void _stamp_tile(Py_ssize_t t, int ntx, int height, int width, int reach,
                      double tau, double[::1] xv, double[::1] yv,
                      int[::1] tp, long long[::1] off,
                      int[:, ::1] win) nogil:
    cdef int ty = <int>(t // ntx)
    cdef int tx = <int>(t % ntx)
    cdef int py0 = ty * TILE
    cdef int px0 = tx * TILE
    cdef int py1 = py0 + TILE if py0 + TILE < height else height
    cdef int px1 = px0 + TILE if px0 + TILE < width else width
    cdef long long k, i, bx, by
    cdef int u, v, ulo, uhi, vlo, vhi
    cdef int open_px = (py1 - py0) * (px1 - px0)
    cdef double x, y, dx, dy
    for k in range(off[t], off[t + 1]):
        if open_px == 0:
            break  # every pixel claimed; later primitives cannot win
        i = tp[k]
        x = xv[i]
        y = yv[i]
        bx = <long long>floor(x)
        by = <long long>floor(y)
        vlo = <int>max2(by - reach, py0)
        vhi = <int>min2(by + reach, py1 - 1)
        ulo = <int>max2(bx - reach, px0)
        uhi = <int>min2(bx + reach, px1 - 1)
        for v in range(vlo, vhi + 1):
            dy = y - v
            for u in range(ulo, uhi + 1):
                if win[v, u] != -1:
                    continue
                dx = x - u
                if dx * dx + dy * dy <= tau:
                    win[v, u] = <int>i
                    open_px -= 1


def region_grow(points, Py_ssize_t seed, double eps):
    """Connected component of the seed in the eps-neighbor graph, grown
    breadth-first over a uniform grid of cell size eps."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    if n == 0:
        return out

    cells_arr = np.floor(pts / eps).astype(np.int64)
    cells_arr -= cells_arr.min(axis=0)
    dims_arr = cells_arr.max(axis=0) + 1
    ids_arr = (cells_arr[:, 0] * dims_arr[1] + cells_arr[:, 1]) * dims_arr[2] + cells_arr[:, 2]
    order_arr = np.argsort(ids_arr, kind="stable").astype(np.int64)
    sorted_ids = ids_arr[order_arr]
    uniq_arr, start_arr = np.unique(sorted_ids, return_index=True)
    start_arr = np.append(start_arr, n).astype(np.int64)

    cdef double[:, ::1] p = pts
    cdef long long[:, ::1] cells = cells_arr
    cdef long long[::1] uniq = uniq_arr
    cdef long long[::1] start = start_arr
    cdef long long[::1] order = order_arr
    cdef unsigned char[::1] member = out
    cdef long long dim1 = dims_arr[1], dim2 = dims_arr[2]
    cdef long long dim0 = dims_arr[0]
    cdef long long[::1] queue = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t head = 0, tail = 0
    cdef long long i, j, q, nid, lo, hi, mid, m = uniq_arr.shape[0]
    cdef long long ccx, ccy, ccz
    cdef int a, b, c
    cdef double d0, d1, d2, eps2 = eps * eps

    member[seed] = 1
    queue[tail] = seed
    tail += 1
    with nogil:
        while head < tail:
            i = queue[head]
            head += 1
            for a in range(-1, 2):
                ccx = cells[i, 0] + a
                if ccx < 0 or ccx >= dim0:
                    continue
                for b in range(-1, 2):
                    ccy = cells[i, 1] + b
                    if ccy < 0 or ccy >= dim1:
                        continue
                    for c in range(-1, 2):
                        ccz = cells[i, 2] + c
                        if ccz < 0 or ccz >= dim2:
                            continue
                        nid = (ccx * dim1 + ccy) * dim2 + ccz
                        lo = 0
                        hi = m
                        while lo < hi:
                            mid = (lo + hi) >> 1
                            if uniq[mid] < nid:
                                lo = mid + 1
                            else:
                                hi = mid
                        if lo >= m or uniq[lo] != nid:
                            continue
                        for q in range(start[lo], start[lo + 1]):
                            j = order[q]
                            if member[j]:
                                continue
                            d0 = p[i, 0] - p[j, 0]
                            d1 = p[i, 1] - p[j, 1]
                            d2 = p[i, 2] - p[j, 2]
                            if d0 * d0 + d1 * d1 + d2 * d2 <= eps2:
                                member[j] = 1
                                queue[tail] = j
                                tail += 1
    return out


def binary_dilate(mask, dy, dx):
    """OR of the mask translated by each offset, computed as row slabs so
    the inner byte loops vectorize; outside the image is background."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] oy = np.ascontiguousarray(dy, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ox = np.ascontiguousarray(dx, dtype=np.int64)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1], nk = oy.shape[0]
    out = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] src = m
    cdef unsigned char[:, ::1] dst = out
    cdef long long[::1] ky = oy
    cdef long long[::1] kx = ox
    cdef Py_ssize_t k, y, x, x0, x1
    cdef long long sy, sx
    with nogil:
        for k in range(nk):
            sy = ky[k]
            sx = kx[k]
            # dst[y, x] |= src[y - sy, x - sx] where the source index is valid
            x0 = sx if sx > 0 else 0
            x1 = w + sx if sx < 0 else w
            if x0 >= x1:
                continue
            for y in range(h):
                if y - sy < 0 or y - sy >= h:
                    continue
                for x in range(x0, x1):
                    dst[y, x] |= src[y - sy, x - sx]
    return out


def binary_erode(mask, dy, dx):
    """AND of the mask translated by each offset (slab form); pixels outside
    the image count as background, so border-adjacent foreground erodes."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] oy = np.ascontiguousarray(dy, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ox = np.ascontiguousarray(dx, dtype=np.int64)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1], nk = oy.shape[0]
    out = np.ones((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] src = m
    cdef unsigned char[:, ::1] dst = out
    cdef long long[::1] ky = oy
    cdef long long[::1] kx = ox
    cdef Py_ssize_t k, y, x, x0, x1
    cdef long long sy, sx
    with nogil:
        for k in range(nk):
            sy = ky[k]
            sx = kx[k]
            # dst[y, x] &= src[y + sy, x + sx]; out-of-range sources are 0
            x0 = -sx if sx < 0 else 0
            x1 = w - sx if sx > 0 else w
            for y in range(h):
                if y + sy < 0 or y + sy >= h:
                    for x in range(w):
                        dst[y, x] = 0
                    continue
                for x in range(0, x0):
                    dst[y, x] = 0
                for x in range(x0, x1):
                    dst[y, x] &= src[y + sy, x + sx]
                for x in range(x1, w):
                    dst[y, x] = 0
    return out


cdef long long _uf_find(long long[::1] parent, long long a) nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def label_components(mask, int connectivity=8):
    """Components (4- or 8-connected) via two-pass union-find; ids 1..count
    in row-major first-pixel order."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    cdef bint diag = connectivity == 8
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    labels = np.zeros((h, w), dtype=np.int32)
    cdef unsigned char[:, ::1] src = m
    cdef int[:, ::1] lab = labels
    if h == 0 or w == 0:
        return labels, 0
    cdef cnp.ndarray[cnp.int64_t, ndim=1] parent_arr = np.empty(h * w + 1, dtype=np.int64)
    cdef long long[::1] parent = parent_arr
    cdef long long nprov = 0, best, r, cand
    cdef Py_ssize_t y, x, k
    cdef long long[4] nbr
    cdef Py_ssize_t nn
    with nogil:
        for y in range(h):
            for x in range(w):
                if not src[y, x]:
                    continue
                nn = 0
                if x > 0 and src[y, x - 1]:
                    nbr[nn] = lab[y, x - 1]; nn += 1
                if y > 0:
                    if diag and x > 0 and src[y - 1, x - 1]:
                        nbr[nn] = lab[y - 1, x - 1]; nn += 1
                    if src[y - 1, x]:
                        nbr[nn] = lab[y - 1, x]; nn += 1
                    if diag and x < w - 1 and src[y - 1, x + 1]:
                        nbr[nn] = lab[y - 1, x + 1]; nn += 1
                if nn == 0:
                    nprov += 1
                    parent[nprov] = nprov
                    lab[y, x] = <int>nprov
                else:
                    best = _uf_find(parent, nbr[0])
                    for k in range(1, nn):
                        r = _uf_find(parent, nbr[k])
                        if r < best:
                            best = r
                    lab[y, x] = <int>best
                    for k in range(nn):
                        r = _uf_find(parent, nbr[k])
                        if r != best:
                            # point larger root at smaller: class root = min id
                            if r > best:
                                parent[r] = best
                            else:
                                parent[best] = r
                                best = r
    # roots carry the smallest provisional id of their class, which was
    # assigned in row-major scan order; number them in ascending order
    cdef cnp.ndarray[cnp.int64_t, ndim=1] final_arr = np.zeros(nprov + 1, dtype=np.int64)
    cdef long long[::1] final = final_arr
    cdef long long count = 0, p
    with nogil:
        for p in range(1, nprov + 1):
            if _uf_find(parent, p) == p:
                count += 1
                final[p] = count
        for y in range(h):
            for x in range(w):
                if src[y, x]:
                    lab[y, x] = <int>final[_uf_find(parent, lab[y, x])]
    return labels, int(count)


def background_reachable(mask):
    """Background pixels 4-connected to the image border."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    out = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] src = m
    cdef unsigned char[:, ::1] reach = out
    if h == 0 or w == 0:
        return out
    cdef cnp.ndarray[cnp.int64_t, ndim=1] queue_arr = np.empty(h * w, dtype=np.int64)
    cdef long long[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0
    cdef Py_ssize_t y, x
    cdef long long cur, cy, cx2

    with nogil:
        for x in range(w):
            if not src[0, x] and not reach[0, x]:
                reach[0, x] = 1; queue[tail] = x; tail += 1
            if not src[h - 1, x] and not reach[h - 1, x]:
                reach[h - 1, x] = 1; queue[tail] = (h - 1) * w + x; tail += 1
        for y in range(h):
            if not src[y, 0] and not reach[y, 0]:
                reach[y, 0] = 1; queue[tail] = y * w; tail += 1
            if not src[y, w - 1] and not reach[y, w - 1]:
                reach[y, w - 1] = 1; queue[tail] = y * w + w - 1; tail += 1
        while head < tail:
            cur = queue[head]
            head += 1
            cy = cur // w
            cx2 = cur % w
            if cy > 0 and not src[cy - 1, cx2] and not reach[cy - 1, cx2]:
                reach[cy - 1, cx2] = 1; queue[tail] = cur - w; tail += 1
            if cy < h - 1 and not src[cy + 1, cx2] and not reach[cy + 1, cx2]:
                reach[cy + 1, cx2] = 1; queue[tail] = cur + w; tail += 1
            if cx2 > 0 and not src[cy, cx2 - 1] and not reach[cy, cx2 - 1]:
                reach[cy, cx2 - 1] = 1; queue[tail] = cur - 1; tail += 1
            if cx2 < w - 1 and not src[cy, cx2 + 1] and not reach[cy, cx2 + 1]:
                reach[cy, cx2 + 1] = 1; queue[tail] = cur + 1; tail += 1
    return out
