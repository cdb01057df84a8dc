"""Compiled inner loops: excursion sampling and union-find over loops."""
import numba as nb
import numpy as np

OK = 0
REJECTION_CAP = 1
STEP_CAP = 2

_DX = np.array([1, -1, 0, 0], dtype=np.int64)
_DY = np.array([0, 0, 1, -1], dtype=np.int64)


@nb.njit(cache=True)
def _grow(buf, need):
    if need <= buf.shape[0]:
        return buf
    cap = buf.shape[0] * 2
    while cap < need:
        cap *= 2
    out = np.empty(cap, dtype=buf.dtype)
    out[:buf.shape[0]] = buf
    return out


@nb.njit(cache=True)
def logarithmic_draw(u, r, lam):
    """Inverse CDF of P(k) = r**k / (k * lam), k >= 1."""
    k = 1
    term = r / lam
    cum = term
    while cum < u:
        term *= r * k / (k + 1.0)
        k += 1
        cum += term
        if term < 1e-18 * cum:
            break
    return k


@nb.njit(cache=True)
def excursion(rng, rank, x0, y0, i, tx, ty, bitstate, max_rejections, max_steps):
    """Walk from ``(x0, y0)`` until it returns, restarting after each exit.

    A vertex is alive iff ``rank >= i``. The path (root first, closing return
    omitted) is written to ``tx, ty``. Returns ``(m, tx, ty, status)``.
    """
    dx = _DX
    dy = _DY
    bits = bitstate[0]
    nbits = bitstate[1]
    rejections = 0
    while True:
        x = x0
        y = y0
        tx[0] = x
        ty[0] = y
        m = 1
        while True:
            if nbits == 0:
                bits = np.int64(rng.random() * 4503599627370496.0)
                nbits = 26
            d = bits & 3
            bits >>= 2
            nbits -= 1
            x += dx[d]
            y += dy[d]
            if rank[x, y] < i:
                break
            if x == x0 and y == y0:
                bitstate[0] = bits
                bitstate[1] = nbits
                return m, tx, ty, OK
            if m >= max_steps:
                return m, tx, ty, STEP_CAP
            if m >= tx.shape[0]:
                tx = _grow(tx, m + 1)
                ty = _grow(ty, m + 1)
            tx[m] = x
            ty[m] = y
            m += 1
        rejections += 1
        if rejections >= max_rejections:
            return m, tx, ty, REJECTION_CAP


@nb.njit(cache=True)
def sample_pointed(rng, rank, px, py, r, lam, alpha, max_rejections, max_steps):
    """Sample the pointed-loop decomposition of a soup.

    ``rank`` is a padded grid giving the ordering position of each region
    vertex (-1 outside); ``px, py`` are the grid coordinates of the ordering.
    Returns ``(xs, ys, offsets, roots, status)`` in grid coordinates.
    """
    xs = np.empty(1024, dtype=np.int64)
    ys = np.empty(1024, dtype=np.int64)
    offsets = np.empty(64, dtype=np.int64)
    roots = np.empty(64, dtype=np.int64)
    tx = np.empty(256, dtype=np.int64)
    ty = np.empty(256, dtype=np.int64)
    bitstate = np.zeros(2, dtype=np.int64)
    offsets[0] = 0
    nloops = 0
    top = 0
    for i in range(px.shape[0]):
        if lam[i] <= 0.0:
            continue
        count = rng.poisson(alpha * lam[i])
        for _ in range(count):
            k = logarithmic_draw(rng.random(), r[i], lam[i])
            for _e in range(k):
                m, tx, ty, status = excursion(rng, rank, px[i], py[i], i, tx, ty, bitstate,
                                              max_rejections, max_steps)
                if status != OK:
                    return xs[:top], ys[:top], offsets[:nloops + 1], roots[:nloops], status
                xs = _grow(xs, top + m)
                ys = _grow(ys, top + m)
                xs[top:top + m] = tx[:m]
                ys[top:top + m] = ty[:m]
                top += m
            nloops += 1
            offsets = _grow(offsets, nloops + 1)
            roots = _grow(roots, nloops)
            offsets[nloops] = top
            roots[nloops - 1] = i
    return xs[:top], ys[:top], offsets[:nloops + 1], roots[:nloops], OK


@nb.njit(cache=True)
def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@nb.njit(cache=True)
def _union(parent, size, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return ra
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    return ra


@nb.njit(cache=True)
def cluster_loops(gx, gy, offsets, mask, width, height):
    """Union-find of the masked loops under the shared-vertex relation.

    ``gx, gy`` are non-negative grid coordinates below ``(width, height)``.
    Returns the representative loop of each masked loop (-1 if unmasked).
    """
    n = offsets.shape[0] - 1
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    occ = np.full((width, height), -1, dtype=np.int64)
    for l in range(n):
        if not mask[l]:
            continue
        for t in range(offsets[l], offsets[l + 1]):
            o = occ[gx[t], gy[t]]
            if o < 0:
                occ[gx[t], gy[t]] = l
            else:
                _union(parent, size, o, l)
    out = np.full(n, -1, dtype=np.int64)
    for l in range(n):
        if mask[l]:
            out[l] = _find(parent, l)
    return out


@nb.njit(cache=True)
def label_grid(gx, gy, offsets, labels, width, height):
    """Grid holding the cluster label covering each vertex (-1 if none)."""
    grid = np.full((width, height), -1, dtype=np.int64)
    for l in range(offsets.shape[0] - 1):
        lab = labels[l]
        if lab < 0:
            continue
        for t in range(offsets[l], offsets[l + 1]):
            grid[gx[t], gy[t]] = lab
    return grid


@nb.njit(cache=True)
def reached_labels(gx, gy, offsets, select, grid, nlabels):
    """For each label, the first selected loop meeting a vertex of that label (-1 if none)."""
    first = np.full(nlabels, -1, dtype=np.int64)
    for l in range(offsets.shape[0] - 1):
        if not select[l]:
            continue
        for t in range(offsets[l], offsets[l + 1]):
            lab = grid[gx[t], gy[t]]
            if lab >= 0 and first[lab] < 0:
                first[lab] = l
    return first


@nb.njit(cache=True)
def crossing_by_level(gx, gy, offsets, level, nlevels, left, right, width, height):
    """Incremental union-find over loops added in order of ``level``.

    Returns, per level, whether some cluster of the loops with
    ``level <= that level`` holds a ``left`` loop and a ``right`` loop.
    Loops must be sorted by level.
    """
    n = offsets.shape[0] - 1
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    hasl = left.copy()
    hasr = right.copy()
    occ = np.full((width, height), -1, dtype=np.int64)
    out = np.zeros(nlevels, dtype=np.bool_)
    crossed = False
    l = 0
    for lev in range(nlevels):
        while l < n and level[l] <= lev:
            if not crossed:
                for t in range(offsets[l], offsets[l + 1]):
                    o = occ[gx[t], gy[t]]
                    if o < 0:
                        occ[gx[t], gy[t]] = l
                    else:
                        ra = _find(parent, o)
                        rb = _find(parent, l)
                        if ra != rb:
                            fl = hasl[ra] or hasl[rb]
                            fr = hasr[ra] or hasr[rb]
                            root = _union(parent, size, ra, rb)
                            hasl[root] = fl
                            hasr[root] = fr
                rl = _find(parent, l)
                if hasl[rl] and hasr[rl]:
                    crossed = True
            l += 1
        out[lev] = crossed
    return out
