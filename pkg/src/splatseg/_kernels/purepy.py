"""Pure NumPy fallback for the hot kernels.

Selected by ``splatseg._kernels`` when the compiled extension is missing or
``SPLATSEG_PURE_PYTHON=1``. Semantics match the compiled versions exactly
(same float expressions, same tie rules); only speed differs.
"""

from __future__ import annotations

import numpy as np

NAME = "purepy"


def rasterize_first_hit(xs, ys, labels, height, width, tau, require_label, num_threads=1):
    """Per pixel, find the first primitive (in input order) whose center lies
    within squared distance `tau` of the pixel.

    Inputs are depth-sorted; "first" therefore means nearest in depth.
    When `require_label` is true, primitives with label <= 0 never win.
    Returns an int32 (height, width) array of winning input slots, -1 if none.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    n = xs.shape[0]
    sentinel = n
    winner = np.full(height * width, sentinel, dtype=np.int64)
    if n:
        keep = (np.abs(xs) < 1e9) & (np.abs(ys) < 1e9)  # guard the int cast
        if require_label:
            keep &= np.asarray(labels) > 0
        slots = np.nonzero(keep)[0]
        if slots.size:
            cx = xs[slots]
            cy = ys[slots]
            bx = np.floor(cx).astype(np.int64)
            by = np.floor(cy).astype(np.int64)
            reach = int(np.ceil(np.sqrt(tau)))
            for dv in range(-reach, reach + 1):
                v = by + dv
                for du in range(-reach, reach + 1):
                    u = bx + du
                    rho2 = (cx - u) ** 2 + (cy - v) ** 2
                    ok = (u >= 0) & (u < width) & (v >= 0) & (v < height) & (rho2 <= tau)
                    np.minimum.at(winner, v[ok] * width + u[ok], slots[ok])
    out = winner.reshape(height, width).astype(np.int32)
    out[out == sentinel] = -1
    return out


def region_grow(points, seed, eps):
    """Membership of the seed's connected component in the eps-neighbor graph
    (points are neighbors iff Euclidean distance <= eps)."""
    from scipy.spatial import cKDTree

    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    member = np.zeros(n, dtype=bool)
    member[seed] = True
    tree = cKDTree(pts)
    frontier = np.array([seed], dtype=np.int64)
    while frontier.size:
        hits = tree.query_ball_point(pts[frontier], r=eps)
        cand = np.unique(np.concatenate([np.asarray(h, dtype=np.int64) for h in hits]))
        fresh = cand[~member[cand]]
        member[fresh] = True
        frontier = fresh
    return member.astype(np.uint8)


def _paste_shifted(src, dy, dx):
    """Translate src by (dy, dx), zero-filling exposed cells."""
    h, w = src.shape
    out = np.zeros_like(src)
    y0, y1 = max(0, dy), min(h, h + dy)
    x0, x1 = max(0, dx), min(w, w + dx)
    if y0 < y1 and x0 < x1:
        out[y0:y1, x0:x1] = src[y0 - dy:y1 - dy, x0 - dx:x1 - dx]
    return out


def binary_dilate(mask, dy, dx):
    """Dilate by the structuring element given as offset arrays; pixels
    outside the image count as background."""
    m = np.asarray(mask, dtype=np.uint8)
    out = np.zeros_like(m)
    for oy, ox in zip(dy, dx):
        out |= _paste_shifted(m, int(oy), int(ox))
    return out


def binary_erode(mask, dy, dx):
    """Erode by the structuring element; pixels outside the image count as
    background, so foreground touching the border erodes away."""
    m = np.asarray(mask, dtype=np.uint8)
    out = np.ones_like(m)
    for oy, ox in zip(dy, dx):
        out &= _paste_shifted(m, -int(oy), -int(ox))
    return out


class _RunUnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _extract_runs(mask):
    """Horizontal foreground runs as (row, col_start, col_end) arrays,
    col_end exclusive, in row-major order."""
    m = np.asarray(mask, dtype=np.int8)
    h, w = m.shape
    padded = np.zeros((h, w + 2), dtype=np.int8)
    padded[:, 1:-1] = m
    d = np.diff(padded, axis=1)
    sr, sc = np.nonzero(d == 1)
    er, ec = np.nonzero(d == -1)
    return sr, sc, ec


def _label_runs(mask, connectivity):
    """Connected-component labels via union-find over horizontal runs.

    Components are numbered 1..count ordered by each component's first pixel
    in row-major order. Returns (labels int32, count).
    """
    h, w = mask.shape
    rows, c0, c1 = _extract_runs(mask)
    nruns = rows.shape[0]
    labels = np.zeros((h, w), dtype=np.int32)
    if nruns == 0:
        return labels, 0
    slack = 1 if connectivity == 8 else 0
    uf = _RunUnionFind(nruns)
    row_start = np.searchsorted(rows, np.arange(h + 1))
    for r in range(1, h):
        a, a_end = row_start[r - 1], row_start[r]
        b, b_end = row_start[r], row_start[r + 1]
        while a < a_end and b < b_end:
            if c0[a] - slack < c1[b] and c0[b] - slack < c1[a]:
                uf.union(a, b)
            # advance the run that ends first; runs within a row are disjoint,
            # so it cannot touch anything later in the other row
            if c1[a] - slack < c1[b]:
                a += 1
            else:
                b += 1
    roots = [uf.find(i) for i in range(nruns)]
    first = {}
    for i, root in enumerate(roots):
        if root not in first:
            first[root] = i  # runs are row-major, so first run = first pixel
    order = sorted(first, key=first.__getitem__)
    ids = {root: k + 1 for k, root in enumerate(order)}
    for i in range(nruns):
        labels[rows[i], c0[i]:c1[i]] = ids[roots[i]]
    return labels, len(order)


def label_components(mask, connectivity=8):
    """Foreground components (4- or 8-connected); ids 1..count in row-major
    first-pixel order."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    return _label_runs(np.asarray(mask, dtype=np.uint8), connectivity)


def background_reachable(mask):
    """Background pixels (mask == 0) 4-connected to the image border."""
    m = np.asarray(mask, dtype=np.uint8)
    bg = (m == 0).astype(np.uint8)
    labels, _ = _label_runs(bg, 4)
    border = np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    touch = np.unique(border[border > 0])
    return np.isin(labels, touch).astype(np.uint8)
