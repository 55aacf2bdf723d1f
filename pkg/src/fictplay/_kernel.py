"""Compiled inner loop for long runs.

Mirrors ``dynamics.fp_step`` / ``afp_step`` / ``naive_afp_step`` operation
for operation (same float additions in the same order, same SplitMix64 draws)
so traces match the reference bit for bit.
"""
import numpy as np
from numba import njit

FP, AFP, NAIVE = 0, 1, 2
TB_FIRST, TB_LAST, TB_ORDER, TB_RANDOM = 0, 1, 2, 3
TIEBREAK_CODE = {"first": TB_FIRST, "last": TB_LAST, "order": TB_ORDER, "random": TB_RANDOM}

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_INV53 = 2.0 ** -53


@njit(cache=True)
def _next(rng):
    rng[0] = rng[0] + _GAMMA
    z = rng[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def _pick(vec, maximize, tb, ranks, rng, buf):
    """Tie-broken arg-extremum of ``vec`` (exact comparisons)."""
    best = vec[0]
    for k in range(1, vec.shape[0]):
        v = vec[k]
        if (maximize and v > best) or (not maximize and v < best):
            best = v
    count = 0
    for k in range(vec.shape[0]):
        if vec[k] == best:
            buf[count] = k
            count += 1
    if count == 1 or tb == TB_FIRST:
        return buf[0]
    if tb == TB_LAST:
        return buf[count - 1]
    if tb == TB_ORDER:
        choice = buf[0]
        for k in range(1, count):
            if ranks[buf[k]] < ranks[choice]:
                choice = buf[k]
        return choice
    u = np.float64(_next(rng) >> _S11) * _INV53
    return buf[int(u * count)]


@njit(cache=True)
def simulate(a, algo, symmetric, steps, fp_init, tb, row_ranks, col_ranks, seed, i0, j0):
    m, n = a.shape
    br = np.empty(steps, np.int64)
    rows = np.empty(steps, np.int64)
    cols = np.empty(steps, np.int64)
    ant_r = np.full(steps, -1, np.int64)
    ant_c = np.full(steps, -1, np.int64)
    wc_r = np.empty(steps)
    wc_c = np.empty(steps)
    gap = np.empty(steps)
    rc = np.zeros(m, np.int64)
    cc = np.zeros(n, np.int64)
    rng = np.empty(1, np.uint64)
    rng[0] = seed
    rbuf = np.empty(m, np.int64)
    cbuf = np.empty(n, np.int64)
    V = a[:, j0].copy()
    U = a[i0, :].copy()
    Vp = np.empty(m)
    Up = np.empty(n)
    rc[i0] += 1
    if not symmetric:
        cc[j0] += 1

    cost = 1 if (algo == FP or fp_init > 0) else 2
    total = cost
    rows[0] = i0
    cols[0] = j0
    br[0] = total
    vmax, umin = V.max(), U.min()
    wc_r[0] = umin / 1.0
    wc_c[0] = -vmax / 1.0
    gap[0] = (vmax - umin) / 1.0

    for k in range(1, steps):
        t = k  # current time before the step
        phase = FP if (algo == FP or t <= fp_init) else algo
        ai = -1
        aj = -1
        if symmetric:
            if phase == FP:
                i = _pick(V, True, tb, row_ranks, rng, rbuf)
            else:
                ai = _pick(V, True, tb, row_ranks, rng, rbuf)
                aj = ai
                if phase == AFP:
                    for r in range(m):
                        Vp[r] = V[r] + a[r, ai]
                else:
                    for r in range(m):
                        Vp[r] = a[r, ai]
                i = _pick(Vp, True, tb, row_ranks, rng, rbuf)
            j = i
        else:
            if phase == FP:
                i = _pick(V, True, tb, row_ranks, rng, rbuf)
                j = _pick(U, False, tb, col_ranks, rng, cbuf)
            else:
                ai = _pick(V, True, tb, row_ranks, rng, rbuf)
                aj = _pick(U, False, tb, col_ranks, rng, cbuf)
                if phase == AFP:
                    for r in range(m):
                        Vp[r] = V[r] + a[r, aj]
                    for c in range(n):
                        Up[c] = U[c] + a[ai, c]
                else:
                    for r in range(m):
                        Vp[r] = a[r, aj]
                    for c in range(n):
                        Up[c] = a[ai, c]
                i = _pick(Vp, True, tb, row_ranks, rng, rbuf)
                j = _pick(Up, False, tb, col_ranks, rng, cbuf)

        rc[i] += 1
        if not symmetric:
            cc[j] += 1
        for r in range(m):
            V[r] += a[r, j]
        for c in range(n):
            U[c] += a[i, c]
        t1 = t + 1
        if algo == FP or (fp_init > 0 and t1 <= fp_init + 1):
            total += 1
        else:
            total += 2
        rows[k] = i
        cols[k] = j
        ant_r[k] = ai
        ant_c[k] = aj
        br[k] = total
        vmax, umin = V.max(), U.min()
        wc_r[k] = umin / t1
        wc_c[k] = -vmax / t1
        gap[k] = (vmax - umin) / t1

    if symmetric:
        cc[:] = rc
    return br, rows, cols, ant_r, ant_c, wc_r, wc_c, gap, rc, cc
