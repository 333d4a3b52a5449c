"""numba versions of the hot loops.  Signatures match kernels._numpy.

Point addition uses the |V| x |V| table ``tab`` when it is non-empty and
falls back to digit-wise addition through the field table ``fadd``.
"""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def _padd(x, y, tab, fadd, q, n):
    if tab.shape[0] > 0:
        return tab[x, y]
    r = 0
    w = 1
    for _ in range(n):
        r += fadd[x % q, y % q] * w
        x //= q
        y //= q
        w *= q
    return r


@njit(cache=True, nogil=True)
def _parity_signs(m):
    s = np.empty(1 << m, dtype=np.int64)
    for w in range(1 << m):
        c = 0
        t = w
        while t:
            c += t & 1
            t >>= 1
        s[w] = -1 if c & 1 else 1
    return s


@njit(cache=True, nogil=True)
def cube_scan(mask, vals, N, m, anchors, tab, fadd, q, n):
    """Count cubes (u|v) with u in anchors, v in V^m and all vertices in mask,
    and how many of them have a nonzero alternating sum mod N."""
    size = mask.shape[0]
    nv = 1 << m
    sgn = _parity_signs(m)
    verts = np.empty(nv, dtype=np.int64)
    v = np.zeros(max(m, 1), dtype=np.int64)
    total = 0
    bad = 0
    for ai in range(anchors.shape[0]):
        u = anchors[ai]
        if not mask[u]:
            continue
        verts[0] = u
        if m == 0:
            total += 1
            if vals[u] % N != 0:
                bad += 1
            continue
        i = 0
        v[0] = -1
        while i >= 0:
            v[i] += 1
            if v[i] == size:
                i -= 1
                continue
            half = 1 << i
            ok = True
            for w in range(half):
                pt = _padd(verts[w], v[i], tab, fadd, q, n)
                if not mask[pt]:
                    ok = False
                    break
                verts[half + w] = pt
            if not ok:
                continue
            if i == m - 1:
                total += 1
                s = 0
                for w in range(nv):
                    s += sgn[w] * vals[verts[w]]
                if s % N != 0:
                    bad += 1
            else:
                i += 1
                v[i] = -1
    return total, bad


@njit(cache=True, nogil=True)
def almost_cube_eval(mask, vals, N, anchors, vs, tab, fadd, q, n):
    """For each row b: whether all vertices anchors[b] + w.vs[b] (w != 0) lie
    in mask, and the signed sum over those vertices mod N."""
    B = anchors.shape[0]
    m = vs.shape[1]
    nv = 1 << m
    sgn = _parity_signs(m)
    inside = np.zeros(B, dtype=np.bool_)
    out = np.zeros(B, dtype=np.int64)
    verts = np.empty(nv, dtype=np.int64)
    for b in range(B):
        verts[0] = anchors[b]
        ok = True
        for i in range(m):
            half = 1 << i
            for w in range(half):
                pt = _padd(verts[w], vs[b, i], tab, fadd, q, n)
                if not mask[pt]:
                    ok = False
                    break
                verts[half + w] = pt
            if not ok:
                break
        if not ok:
            continue
        inside[b] = True
        s = 0
        for w in range(1, nv):
            s += sgn[w] * vals[verts[w]]
        out[b] = s % N
    return inside, out


@njit(cache=True, nogil=True)
def pattern_count(mask, coefs, shifts, mult, tab, fadd, q, n):
    """Number of v in V^r with shifts[i] + sum_j coefs[i, j] v_j in mask for all i."""
    size = mask.shape[0]
    k, r = coefs.shape
    last = np.full(k, -1, dtype=np.int64)
    for i in range(k):
        for j in range(r):
            if coefs[i, j] != 0:
                last[i] = j
        if last[i] == -1 and not mask[shifts[i]]:
            return 0
    if r == 0:
        return 1
    partial = np.empty((r + 1, k), dtype=np.int64)
    for i in range(k):
        partial[0, i] = shifts[i]
    idx = np.zeros(r, dtype=np.int64)
    idx[0] = -1
    level = 0
    count = 0
    while level >= 0:
        idx[level] += 1
        if idx[level] == size:
            level -= 1
            continue
        x = idx[level]
        ok = True
        for i in range(k):
            c = coefs[i, level]
            val = partial[level, i]
            if c != 0:
                val = _padd(val, mult[c, x], tab, fadd, q, n)
            partial[level + 1, i] = val
            if last[i] == level and not mask[val]:
                ok = False
                break
        if not ok:
            continue
        if level == r - 1:
            count += 1
        else:
            level += 1
            idx[level] = -1
    return count


@njit(cache=True, nogil=True)
def gowers_power(vals, m, tab, fadd, q, n):
    """||g||_{U_m}^{2^m} via E_h ||g(.+h) conj(g)||_{U_{m-1}}^{2^{m-1}}."""
    size = vals.shape[0]
    if m == 1:
        s = 0j
        for x in range(size):
            s += vals[x]
        s /= size
        return (s * np.conj(s)).real
    depth = m - 1
    D = np.empty((depth + 1, size), dtype=np.complex128)
    D[0, :] = vals
    acc = np.zeros(depth + 1, dtype=np.float64)
    h = np.zeros(depth, dtype=np.int64)
    h[0] = -1
    level = 0
    while level >= 0:
        h[level] += 1
        if h[level] == size:
            if level == 0:
                break
            # fold this level's average into its parent
            acc[level - 1] += acc[level] / size
            acc[level] = 0.0
            level -= 1
            continue
        hh = h[level]
        if tab.shape[0] > 0:
            for x in range(size):
                D[level + 1, x] = D[level, tab[hh, x]] * np.conj(D[level, x])
        else:
            for x in range(size):
                D[level + 1, x] = D[level, _padd(x, hh, tab, fadd, q, n)] * np.conj(D[level, x])
        if level == depth - 1:
            s = 0j
            for x in range(size):
                s += D[level + 1, x]
            s /= size
            acc[level] += (s * np.conj(s)).real
        else:
            level += 1
            h[level] = -1
    return acc[0] / size
