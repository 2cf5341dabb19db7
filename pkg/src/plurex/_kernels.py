"""Numba kernels for the disc sub-mean sweeps on the reduced (t, u, v) grid.

A disc is ``zeta -> (z0 + zeta * a, w0 + zeta * b)`` for a unit vector
``(a, b)`` in C^2, ``|zeta| <= radius``.  With ``z0 = t`` real and positive,
its points map to reduced coordinates ``(|t + zeta a|, w0 + zeta b)``.

Sample positions are tabulated once: the w-offset of a circle sample does not
depend on the node, and its t-coordinate depends only on the t-index.
"""

import math

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _reduced(t, u, v, ar, ai, br, bi, s, c, rad):
    # zeta = rad * (c + i s)
    zr = rad * c
    zi = rad * s
    tr = t + zr * ar - zi * ai
    ti = zr * ai + zi * ar
    tt = math.sqrt(tr * tr + ti * ti)
    uu = u + zr * br - zi * bi
    vv = v + zr * bi + zi * br
    return tt, uu, vv


@njit(cache=True)
def _split(q):
    """Integer floor and fractional part, snapping near-integers."""
    i = math.floor(q)
    f = q - i
    if f < 1e-9:
        f = 0.0
    elif f > 1.0 - 1e-9:
        i += 1
        f = 0.0
    return int(i), f


@njit(cache=True)
def sample_tables(nt, t0, ht, hu, hv, dirs, radii, nrad, n_circle):
    """Interpolation tables for every (direction, radius, angle).

    Returns ``ti0, ti1, tf`` of shape (nt, nd, nr, m) and ``dj, fj, dk, fk``
    of shape (nd, nr, m).  ``ti0 = -1`` marks a sample outside the t-range.
    """
    nd = dirs.shape[0]
    nr = radii.shape[0]
    ti0 = np.full((nt, nd, nr, n_circle), -1, dtype=np.int32)
    ti1 = np.full((nt, nd, nr, n_circle), -1, dtype=np.int32)
    tf = np.zeros((nt, nd, nr, n_circle))
    dj = np.zeros((nd, nr, n_circle), dtype=np.int32)
    dk = np.zeros((nd, nr, n_circle), dtype=np.int32)
    fj = np.zeros((nd, nr, n_circle))
    fk = np.zeros((nd, nr, n_circle))
    for d in range(nd):
        ar, ai, br, bi = dirs[d, 0], dirs[d, 1], dirs[d, 2], dirs[d, 3]
        for q in range(nrad[d]):
            for m in range(n_circle):
                ang = 2.0 * math.pi * m / n_circle
                s, c = math.sin(ang), math.cos(ang)
                _, uu, vv = _reduced(0.0, 0.0, 0.0, ar, ai, br, bi, s, c, radii[q])
                dj[d, q, m], fj[d, q, m] = _split(uu / hu)
                dk[d, q, m], fk[d, q, m] = _split(vv / hv)
                for i in range(nt):
                    tt, _, _ = _reduced(t0 + i * ht, 0.0, 0.0, ar, ai, br, bi, s, c, radii[q])
                    if nt == 1:
                        if abs(tt - t0) < 1e-9:
                            ti0[i, d, q, m] = 0
                            ti1[i, d, q, m] = 0
                        continue
                    ii, ff = _split((tt - t0) / ht)
                    if ii < 0 or ii > nt - 1 or (ii == nt - 1 and ff > 0.0):
                        continue
                    ti0[i, d, q, m] = ii
                    ti1[i, d, q, m] = ii + 1 if ii < nt - 1 else ii
                    tf[i, d, q, m] = ff
    return ti0, ti1, tf, dj, fj, dk, fk


@njit(cache=True)
def _corner_ok(mask, i0, i1, fi, j, fj, k, fk):
    nu = mask.shape[1]
    nv = mask.shape[2]
    if j < 0 or k < 0 or j + 1 >= nu or k + 1 >= nv:
        return False
    for a in range(2):
        wi = fi if a == 1 else 1.0 - fi
        if wi == 0.0:
            continue
        ii = i1 if a == 1 else i0
        for b in range(2):
            wj = fj if b == 1 else 1.0 - fj
            if wj == 0.0:
                continue
            for c in range(2):
                wk = fk if c == 1 else 1.0 - fk
                if wk == 0.0:
                    continue
                if not mask[ii, j + b, k + c]:
                    return False
    return True


@njit(cache=True)
def _point_ok(mask, tt, uu, vv, t0, ht, u0, hu, v0, hv):
    nt = mask.shape[0]
    if nt == 1:
        if abs(tt - t0) > 1e-9:
            return False
        i0, i1, fi = 0, 0, 0.0
    else:
        i0, fi = _split((tt - t0) / ht)
        if i0 < 0 or i0 > nt - 1 or (i0 == nt - 1 and fi > 0.0):
            return False
        i1 = i0 + 1 if i0 < nt - 1 else i0
    j, fj = _split((uu - u0) / hu)
    k, fk = _split((vv - v0) / hv)
    return _corner_ok(mask, i0, i1, fi, j, fj, k, fk)


@njit(cache=True, parallel=True)
def samples_valid(mask, nodes, ti0, ti1, tf, dj, fj, dk, fk, nrad):
    """Bitmask per node of discs whose circle samples all have in-mask stencils."""
    n = nodes.shape[0]
    nd = dj.shape[0]
    nr = dj.shape[1]
    nm = dj.shape[2]
    out = np.zeros(n, dtype=np.uint64)
    for p in prange(n):
        i, j, k = nodes[p, 0], nodes[p, 1], nodes[p, 2]
        bits = np.uint64(0)
        for d in range(nd):
            for q in range(nrad[d]):
                ok = True
                for m in range(nm):
                    a = ti0[i, d, q, m]
                    if a < 0 or not _corner_ok(mask, a, ti1[i, d, q, m], tf[i, d, q, m],
                                               j + dj[d, q, m], fj[d, q, m], k + dk[d, q, m], fk[d, q, m]):
                        ok = False
                        break
                if not ok:
                    break
                bits |= np.uint64(1) << np.uint64(d * nr + q)
        out[p] = bits
    return out


@njit(cache=True, parallel=True)
def dense_valid(mask, nodes, bits, which, t0, ht, u0, hu, v0, hv, dirs, radii, nrad, dense_step):
    """Clear bits of discs (directions flagged in ``which``) whose closed disc,
    sampled on polar rings ``dense_step`` apart, leaves the mask.
    """
    n = nodes.shape[0]
    nd = dirs.shape[0]
    nr = radii.shape[0]
    out = bits.copy()
    for p in prange(n):
        i, j, k = nodes[p, 0], nodes[p, 1], nodes[p, 2]
        t = t0 + i * ht
        u = u0 + j * hu
        v = v0 + k * hv
        b = bits[p]
        for d in range(nd):
            if not which[d]:
                continue
            ar, ai, br, bi = dirs[d, 0], dirs[d, 1], dirs[d, 2], dirs[d, 3]
            prev = 0.0
            failed = False
            for q in range(nrad[d]):
                bit = np.uint64(1) << np.uint64(d * nr + q)
                if failed or (b & bit) == 0:
                    failed = True
                    b &= ~bit
                    continue
                rad = radii[q]
                nring = max(1, int(math.ceil((rad - prev) / dense_step)))
                for ring in range(nring):
                    s_rad = rad - (ring + 0.5) * (rad - prev) / nring
                    nang = max(8, int(math.ceil(2.0 * math.pi * s_rad / dense_step)))
                    for m in range(nang):
                        ang = 2.0 * math.pi * (m + 0.5) / nang
                        tt, uu, vv = _reduced(t, u, v, ar, ai, br, bi, math.sin(ang), math.cos(ang), s_rad)
                        if not _point_ok(mask, tt, uu, vv, t0, ht, u0, hu, v0, hv):
                            failed = True
                            break
                    if failed:
                        break
                if failed:
                    b &= ~bit
                prev = rad
        out[p] = b
    return out


@njit(cache=True)
def _avg(field, i, j, k, d, q, ti0, ti1, tf, dj, fj, dk, fk):
    nm = dj.shape[2]
    acc = 0.0
    for m in range(nm):
        a0 = ti0[i, d, q, m]
        a1 = ti1[i, d, q, m]
        fi = tf[i, d, q, m]
        jj = j + dj[d, q, m]
        kk = k + dk[d, q, m]
        gj = fj[d, q, m]
        gk = fk[d, q, m]
        lo = (1.0 - gj) * ((1.0 - gk) * field[a0, jj, kk] + gk * field[a0, jj, kk + 1]) + gj * (
            (1.0 - gk) * field[a0, jj + 1, kk] + gk * field[a0, jj + 1, kk + 1])
        if fi == 0.0:
            acc += lo
        else:
            hi = (1.0 - gj) * ((1.0 - gk) * field[a1, jj, kk] + gk * field[a1, jj, kk + 1]) + gj * (
                (1.0 - gk) * field[a1, jj + 1, kk] + gk * field[a1, jj + 1, kk + 1])
            acc += (1.0 - fi) * lo + fi * hi
    return acc / nm


@njit(cache=True, parallel=True)
def projection_step(field, out, nodes, bits, cap, dec, ti0, ti1, tf, dj, fj, dk, fk, nrad):
    """One Jacobi pass: ``out = min(field, cap, every valid circle average)``.

    Reads only ``field`` and writes ``out`` at ``nodes`` and the per-node
    decrease into ``dec``; returns the largest decrease.  The max-reduction
    is exact, so the result does not depend on the thread count.
    """
    n = nodes.shape[0]
    nd = dj.shape[0]
    nr = dj.shape[1]
    for p in prange(n):
        i, j, k = nodes[p, 0], nodes[p, 1], nodes[p, 2]
        cur = field[i, j, k]
        best = min(cur, cap[p])
        b = bits[p]
        if b != 0:
            for d in range(nd):
                for q in range(nrad[d]):
                    if (b >> np.uint64(d * nr + q)) & np.uint64(1) == 0:
                        break
                    a = _avg(field, i, j, k, d, q, ti0, ti1, tf, dj, fj, dk, fk)
                    if a < best:
                        best = a
        out[i, j, k] = best
        dec[p] = cur - best
    return dec.max() if n > 0 else 0.0


@njit(cache=True, parallel=True)
def min_circle_average(field, nodes, bits, ti0, ti1, tf, dj, fj, dk, fk, nrad):
    """Smallest valid circle average per node (``inf`` where no disc fits)."""
    n = nodes.shape[0]
    nd = dj.shape[0]
    nr = dj.shape[1]
    res = np.full(n, np.inf)
    for p in prange(n):
        i, j, k = nodes[p, 0], nodes[p, 1], nodes[p, 2]
        b = bits[p]
        best = np.inf
        for d in range(nd):
            for q in range(nrad[d]):
                if (b >> np.uint64(d * nr + q)) & np.uint64(1) == 0:
                    break
                a = _avg(field, i, j, k, d, q, ti0, ti1, tf, dj, fj, dk, fk)
                if a < best:
                    best = a
        res[p] = best
    return res
