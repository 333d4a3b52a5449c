"""Pure-numpy versions of the hot loops.  Signatures match kernels._numba."""
import numpy as np

# rows materialised per vectorised step
CHUNK = 1 << 21


def _padd(x, y, tab, fadd, q, n):
    if tab.shape[0] > 0:
        return tab[x, y]
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    r = np.zeros(np.broadcast(x, y).shape, dtype=np.int64)
    w = 1
    for _ in range(n):
        r += fadd[x % q, y % q] * w
        x = x // q
        y = y // q
        w *= q
    return r


def _parity_signs(m):
    w = np.arange(1 << m)
    bits = np.array([bin(int(t)).count("1") for t in w], dtype=np.int64)
    return np.where(bits % 2 == 1, -1, 1).astype(np.int64)


def _extend(frontier, size, mask, tab, fadd, q, n):
    """Add one direction to every partial cube; keep those still inside mask."""
    out = []
    v = np.arange(size, dtype=np.int64)
    rows = max(1, CHUNK // max(size * frontier.shape[1], 1))
    for s in range(0, frontier.shape[0], rows):
        F = frontier[s:s + rows]
        new = _padd(F[:, None, :], v[None, :, None], tab, fadd, q, n)
        ok = mask[new].all(-1)
        old = np.broadcast_to(F[:, None, :], new.shape)
        out.append(np.concatenate([old[ok], new[ok]], axis=-1))
    if not out:
        return np.empty((0, 2 * frontier.shape[1]), dtype=np.int64)
    return np.concatenate(out, axis=0)


def cube_scan(mask, vals, N, m, anchors, tab, fadd, q, n):
    size = mask.shape[0]
    anchors = np.asarray(anchors, dtype=np.int64)
    anchors = anchors[mask[anchors]]
    sgn = _parity_signs(m)
    total = 0
    bad = 0
    step = max(1, CHUNK // max(size**m, 1))
    for s in range(0, anchors.shape[0], step):
        F = anchors[s:s + step, None]
        for _ in range(m):
            F = _extend(F, size, mask, tab, fadd, q, n)
        total += F.shape[0]
        sums = (sgn[None, :] * vals[F]).sum(-1) % N
        bad += int(np.count_nonzero(sums))
    return total, bad


def almost_cube_eval(mask, vals, N, anchors, vs, tab, fadd, q, n):
    anchors = np.asarray(anchors, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    m = vs.shape[1]
    verts = anchors[:, None]
    for i in range(m):
        new = _padd(verts, vs[:, i:i + 1], tab, fadd, q, n)
        verts = np.concatenate([verts, new], axis=1)
    rest = verts[:, 1:]
    inside = mask[rest].all(axis=1)
    sgn = _parity_signs(m)[1:]
    out = (sgn[None, :] * vals[rest]).sum(axis=1) % N
    out[~inside] = 0
    return inside, out


def pattern_count(mask, coefs, shifts, mult, tab, fadd, q, n):
    size = mask.shape[0]
    coefs = np.asarray(coefs, dtype=np.int64)
    k, r = coefs.shape
    last = np.full(k, -1)
    for i in range(k):
        nz = np.nonzero(coefs[i])[0]
        if nz.size:
            last[i] = nz[-1]
        elif not mask[shifts[i]]:
            return 0
    partial = np.asarray(shifts, dtype=np.int64)[None, :]
    v = np.arange(size, dtype=np.int64)
    for level in range(r):
        out = []
        rows = max(1, CHUNK // max(size * k, 1))
        for s in range(0, partial.shape[0], rows):
            P = np.repeat(partial[s:s + rows], size, axis=0)
            x = np.tile(v, partial[s:s + rows].shape[0])
            ok = np.ones(P.shape[0], dtype=bool)
            for i in range(k):
                c = coefs[i, level]
                if c:
                    P[:, i] = _padd(P[:, i], mult[c, x], tab, fadd, q, n)
                if last[i] == level:
                    ok &= mask[P[:, i]]
            out.append(P[ok])
        partial = np.concatenate(out, axis=0) if out else np.empty((0, k), dtype=np.int64)
    return int(partial.shape[0])


def gowers_power(vals, m, tab, fadd, q, n):
    vals = np.asarray(vals, dtype=np.complex128)
    size = vals.shape[0]
    x = np.arange(size, dtype=np.int64)
    shift = _padd(x[None, :], x[:, None], tab, fadd, q, n) if m > 1 else None  # shift[h, x] = x + h

    def power(G, k):
        if k == 1:
            mu = G.mean(axis=1)
            return (mu * np.conj(mu)).real
        res = np.empty(G.shape[0])
        rows = max(1, CHUNK // (size * size))
        for s in range(0, G.shape[0], rows):
            Gs = G[s:s + rows]
            D = Gs[:, shift] * np.conj(Gs)[:, None, :]
            res[s:s + rows] = power(D.reshape(-1, size), k - 1).reshape(Gs.shape[0], size).mean(axis=1)
        return res

    return float(power(vals[None, :], m)[0])
