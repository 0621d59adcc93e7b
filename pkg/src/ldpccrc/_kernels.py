"""numba kernels for the decoders and the codeword search.

All bit-packed vectors here use little-endian uint64 words: bit ``j`` of a
vector lives in word ``j >> 6`` at bit ``j & 63``.
"""

import numpy as np
from numba import njit

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ONE = np.uint64(1)
_BYTE = np.uint64(0xFF)

MSG_CLIP = 19.0


@njit(cache=True, inline="always")
def popcount64(x):
    x = x - ((x >> _ONE) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return int((x * _H01) >> np.uint64(56))


# -- belief propagation ------------------------------------------------------


@njit(cache=True)
def bp_decode_batch(chk_ptr, chk_var, var_ptr, var_edge, llrs, i_max, use_tanh, alpha,
                    out_bits, out_valid, out_iters):
    """Flooding BP over a batch of LLR rows.

    ``use_tanh`` selects the sum-product check rule; otherwise min-sum with
    check messages scaled by ``alpha`` (alpha = 1 is plain min-sum).
    """
    m = chk_ptr.shape[0] - 1
    n = var_ptr.shape[0] - 1
    n_edges = chk_var.shape[0]
    max_deg = 0
    for c in range(m):
        d = chk_ptr[c + 1] - chk_ptr[c]
        if d > max_deg:
            max_deg = d
    v2c = np.empty(n_edges)
    c2v = np.empty(n_edges)
    total = np.empty(n)
    fwd = np.empty(max_deg + 1)
    bwd = np.empty(max_deg + 1)
    t = np.empty(max_deg)
    pclip = np.tanh(MSG_CLIP / 2.0)
    for f in range(llrs.shape[0]):
        llr = llrs[f]
        for e in range(n_edges):
            v2c[e] = llr[chk_var[e]]
        valid = False
        it = 0
        while it < i_max:
            it += 1
            for c in range(m):
                s = chk_ptr[c]
                deg = chk_ptr[c + 1] - s
                if use_tanh:
                    for i in range(deg):
                        x = v2c[s + i]
                        if x > MSG_CLIP:
                            x = MSG_CLIP
                        elif x < -MSG_CLIP:
                            x = -MSG_CLIP
                        t[i] = np.tanh(0.5 * x)
                    fwd[0] = 1.0
                    for i in range(deg):
                        fwd[i + 1] = fwd[i] * t[i]
                    bwd[deg] = 1.0
                    for i in range(deg - 1, -1, -1):
                        bwd[i] = bwd[i + 1] * t[i]
                    for i in range(deg):
                        p = fwd[i] * bwd[i + 1]
                        if p > pclip:
                            p = pclip
                        elif p < -pclip:
                            p = -pclip
                        c2v[s + i] = 2.0 * np.arctanh(p)
                else:
                    min1 = np.inf
                    min2 = np.inf
                    imin = -1
                    sgn = 1.0
                    for i in range(deg):
                        x = v2c[s + i]
                        a = abs(x)
                        if x < 0:
                            sgn = -sgn
                        if a < min1:
                            min2 = min1
                            min1 = a
                            imin = i
                        elif a < min2:
                            min2 = a
                    for i in range(deg):
                        x = v2c[s + i]
                        mag = min2 if i == imin else min1
                        sg = -sgn if x < 0 else sgn
                        c2v[s + i] = alpha * sg * mag
            for v in range(n):
                acc = llr[v]
                for q in range(var_ptr[v], var_ptr[v + 1]):
                    acc += c2v[var_edge[q]]
                total[v] = acc
                out_bits[f, v] = 1 if acc < 0 else 0
            ok = True
            for c in range(m):
                par = 0
                for e in range(chk_ptr[c], chk_ptr[c + 1]):
                    par ^= out_bits[f, chk_var[e]]
                if par:
                    ok = False
                    break
            if ok:
                valid = True
                break
            for v in range(n):
                for q in range(var_ptr[v], var_ptr[v + 1]):
                    e = var_edge[q]
                    v2c[e] = total[v] - c2v[e]
        out_valid[f] = valid
        out_iters[f] = it


# -- most reliable basis -----------------------------------------------------


@njit(cache=True)
def _reliability_basis(G, rel):
    """Order positions by reliability and row-reduce G on the most reliable
    independent columns.

    Returns (perm, W, basis) where ``perm[j]`` is the original index of the
    j-th most reliable position, ``W`` is the reduced generator in permuted
    column order (packed), and ``basis[i]`` is the permuted column on which
    row ``i`` pivots (ascending).
    """
    k, n = G.shape
    perm = np.argsort(-rel, kind="mergesort")
    nw = (n + 63) >> 6
    W = np.zeros((k, nw), dtype=np.uint64)
    for i in range(k):
        for j in range(n):
            if G[i, perm[j]]:
                W[i, j >> 6] |= _ONE << np.uint64(j & 63)
    basis = np.empty(k, dtype=np.int64)
    r = 0
    for j in range(n):
        if r == k:
            break
        w = j >> 6
        b = _ONE << np.uint64(j & 63)
        p = -1
        for i in range(r, k):
            if W[i, w] & b:
                p = i
                break
        if p < 0:
            continue
        if p != r:
            for q in range(nw):
                tmp = W[r, q]
                W[r, q] = W[p, q]
                W[p, q] = tmp
        for i in range(k):
            if i != r and (W[i, w] & b):
                for q in range(nw):
                    W[i, q] ^= W[r, q]
        basis[r] = j
        r += 1
    return perm, W, basis


@njit(cache=True)
def _byte_tables(relp, nw):
    nb = nw * 8
    T = np.zeros((nb, 256))
    n = relp.shape[0]
    for b in range(nb):
        for t in range(8):
            j = 8 * b + t
            wj = relp[j] if j < n else 0.0
            lo = 1 << t
            for v in range(lo, 2 * lo):
                T[b, v] = T[b, v - lo] + wj
    return T


@njit(cache=True, inline="always")
def _weighted(D, T, nw):
    c = 0.0
    for q in range(nw):
        x = D[q]
        for t in range(8):
            c += T[8 * q + t, int((x >> np.uint64(8 * t)) & _BYTE)]
    return c


@njit(cache=True)
def _lex_smaller(Dnew, Dbest, zp, perm, nw, n):
    # codeword (zp ^ D) compared in original index order; first differing bit 0 wins
    best_pos = n
    new_bit = 0
    for q in range(nw):
        x = Dnew[q] ^ Dbest[q]
        t = 0
        while x:
            if x & _ONE:
                j = 64 * q + t
                if perm[j] < best_pos:
                    best_pos = perm[j]
                    new_bit = zp[j] ^ int((Dnew[q] >> np.uint64(t)) & _ONE)
            x >>= _ONE
            t += 1
    return best_pos < n and new_bit == 0


@njit(cache=True)
def _ml_certified(Dbest, best_cost, relp, dmin, n):
    # any other codeword differs from the candidate in >= dmin places, at least
    # dmin - |D| of them outside D; their cheapest total bounds its cost
    delta = 0
    for q in range(Dbest.shape[0]):
        delta += popcount64(Dbest[q])
    need = dmin - delta
    if need <= 0:
        return False
    acc = 0.0
    j = n - 1
    while need > 0 and j >= 0:
        if not ((Dbest[j >> 6] >> np.uint64(j & 63)) & _ONE):
            acc += relp[j]
            need -= 1
        j -= 1
    return need == 0 and best_cost < acc


@njit(cache=True)
def mrb_decode_one(G, llr, order, dmin, out):
    """Order-``order`` reprocessing on the most reliable basis.

    Writes the chosen codeword to ``out`` and returns (cost, evaluated
    candidates, order at which the search stopped).
    """
    k, n = G.shape
    rel = np.abs(llr)
    perm, W, basis = _reliability_basis(G, rel)
    nw = W.shape[1]
    relp = np.empty(n)
    zp = np.empty(n, dtype=np.int64)
    for j in range(n):
        relp[j] = rel[perm[j]]
        zp[j] = 1 if llr[perm[j]] < 0 else 0
    Z = np.zeros(nw, dtype=np.uint64)
    for j in range(n):
        if zp[j]:
            Z[j >> 6] |= _ONE << np.uint64(j & 63)
    D0 = Z.copy()
    for i in range(k):
        if zp[basis[i]]:
            for q in range(nw):
                D0[q] ^= W[i, q]
    T = _byte_tables(relp, nw)
    best = D0.copy()
    best_cost = _weighted(D0, T, nw)
    evaluated = 1
    # flip candidates, cheapest first: the least reliable basis rows
    rows = np.empty(k, dtype=np.int64)
    fc = np.empty(k)
    cum = np.zeros(k + 1)
    for a in range(k):
        rows[a] = k - 1 - a
        fc[a] = relp[basis[k - 1 - a]]
        cum[a + 1] = cum[a] + fc[a]
    stop_order = 0
    if not (dmin > 0 and _ml_certified(best, best_cost, relp, dmin, n)):
        idx = np.empty(order + 1, dtype=np.int64)
        stack = np.empty((order + 1, nw), dtype=np.uint64)
        lbs = np.empty(order + 1)
        cand = np.empty(nw, dtype=np.uint64)
        for o in range(1, order + 1):
            if o > k:
                break
            stop_order = o
            # depth-first over index sets of size o with partial lower bounds
            level = 0
            idx[0] = -1
            for q in range(nw):
                stack[0, q] = D0[q]
            lbs[0] = 0.0
            while level >= 0:
                idx[level] += 1
                a = idx[level]
                # remaining slots need distinct larger indices
                if a > k - (o - level):
                    level -= 1
                    continue
                lb = lbs[level] + fc[a]
                rem = o - level - 1
                extra = cum[a + rem + 1] - cum[a + 1]
                if lb + extra > best_cost:
                    level -= 1
                    continue
                ra = rows[a]
                if level == o - 1:
                    for q in range(nw):
                        cand[q] = stack[level, q] ^ W[ra, q]
                    c = _weighted(cand, T, nw)
                    evaluated += 1
                    if c < best_cost or (c == best_cost and _lex_smaller(cand, best, zp, perm, nw, n)):
                        best_cost = c
                        for q in range(nw):
                            best[q] = cand[q]
                else:
                    for q in range(nw):
                        stack[level + 1, q] = stack[level, q] ^ W[ra, q]
                    lbs[level + 1] = lb
                    level += 1
                    idx[level] = a
            if dmin > 0 and _ml_certified(best, best_cost, relp, dmin, n):
                break
    for j in range(n):
        bit = zp[j] ^ int((best[j >> 6] >> np.uint64(j & 63)) & _ONE)
        out[perm[j]] = bit
    return best_cost, evaluated, stop_order


@njit(cache=True)
def mrb_decode_batch(G, llrs, order, dmin, out_bits, out_evaluated):
    for f in range(llrs.shape[0]):
        _, ev, _ = mrb_decode_one(G, llrs[f], order, dmin, out_bits[f])
        out_evaluated[f] = ev


@njit(cache=True)
def mrb_collect_low_weight(G, llr, order, w_max, out_words, count):
    """Enumerate every order-``order`` candidate on the most reliable basis of
    ``llr`` and store each nonzero codeword of weight <= ``w_max``.

    Codewords are written in original bit order into ``out_words`` starting
    at row ``count``; returns the new count (capped at the buffer size).
    """
    k, n = G.shape
    rel = np.abs(llr)
    perm, W, basis = _reliability_basis(G, rel)
    nw = W.shape[1]
    cap = out_words.shape[0]
    Z = np.zeros(nw, dtype=np.uint64)
    for j in range(n):
        if llr[perm[j]] < 0:
            Z[j >> 6] |= _ONE << np.uint64(j & 63)
    # order-0 codeword: re-encode the hard decisions on the basis
    C0 = np.zeros(nw, dtype=np.uint64)
    for i in range(k):
        j = basis[i]
        if (Z[j >> 6] >> np.uint64(j & 63)) & _ONE:
            for q in range(nw):
                C0[q] ^= W[i, q]
    idx = np.empty(order + 1, dtype=np.int64)
    stack = np.empty((order + 1, nw), dtype=np.uint64)
    cand = np.empty(nw, dtype=np.uint64)
    for o in range(0, order + 1):
        if o > k:
            break
        if o == 0:
            wt = 0
            for q in range(nw):
                wt += popcount64(C0[q])
            if 0 < wt <= w_max and count < cap:
                _store(C0, perm, n, out_words, count)
                count += 1
            continue
        level = 0
        idx[0] = -1
        for q in range(nw):
            stack[0, q] = C0[q]
        while level >= 0:
            idx[level] += 1
            a = idx[level]
            if a > k - (o - level):
                level -= 1
                continue
            if level == o - 1:
                wt = 0
                for q in range(nw):
                    cand[q] = stack[level, q] ^ W[a, q]
                    wt += popcount64(cand[q])
                if 0 < wt <= w_max and count < cap:
                    _store(cand, perm, n, out_words, count)
                    count += 1
            else:
                for q in range(nw):
                    stack[level + 1, q] = stack[level, q] ^ W[a, q]
                level += 1
                idx[level] = a
    return count


@njit(cache=True)
def _store(cand, perm, n, out_words, row):
    for q in range(out_words.shape[1]):
        out_words[row, q] = 0
    for j in range(n):
        if (cand[j >> 6] >> np.uint64(j & 63)) & _ONE:
            o = perm[j]
            out_words[row, o >> 6] |= _ONE << np.uint64(o & 63)
