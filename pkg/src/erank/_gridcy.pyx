# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled grid kernel: nested loops with short-circuit evaluation.

Runs the same flat program as the numpy fallback and returns the identical
bitmap; existence loops exit on the first witness, which makes dense
satisfiable grids much cheaper than full vectorized sweeps.
"""

import numpy as np

cimport numpy as cnp

cdef enum:
    OP_VAR = 0
    OP_CONST = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_POW = 5
    OP_EQ = 6
    OP_NE = 7
    OP_AND = 8
    OP_OR = 9
    OP_NOT = 10
    OP_TRUE = 11
    OP_FALSE = 12
    OP_EXISTS = 13


cdef int _eval_term(const int[:] kinds, const int[:] a, const int[:] b,
                    int node, int[:] assign, int q,
                    const short[:, :] add_tab, const short[:, :] mul_tab,
                    const short[:] neg_tab):
    cdef int k = kinds[node]
    cdef int x, y, e, acc, result
    if k == OP_VAR:
        return assign[a[node]]
    if k == OP_CONST:
        return a[node]
    if k == OP_ADD:
        x = _eval_term(kinds, a, b, a[node], assign, q, add_tab, mul_tab, neg_tab)
        y = _eval_term(kinds, a, b, b[node], assign, q, add_tab, mul_tab, neg_tab)
        return add_tab[x, y]
    if k == OP_SUB:
        x = _eval_term(kinds, a, b, a[node], assign, q, add_tab, mul_tab, neg_tab)
        y = _eval_term(kinds, a, b, b[node], assign, q, add_tab, mul_tab, neg_tab)
        return add_tab[x, neg_tab[y]]
    if k == OP_MUL:
        x = _eval_term(kinds, a, b, a[node], assign, q, add_tab, mul_tab, neg_tab)
        y = _eval_term(kinds, a, b, b[node], assign, q, add_tab, mul_tab, neg_tab)
        return mul_tab[x, y]
    if k == OP_POW:
        x = _eval_term(kinds, a, b, a[node], assign, q, add_tab, mul_tab, neg_tab)
        e = b[node]
        result = 1  # index of the multiplicative unit
        acc = x
        while e:
            if e & 1:
                result = mul_tab[result, acc]
            e >>= 1
            if e:
                acc = mul_tab[acc, acc]
        return result
    return 0


cdef bint _eval_formula(const int[:] kinds, const int[:] a, const int[:] b,
                        const int[:] ex_starts, const int[:] ex_axes,
                        int node, int[:] assign, int q,
                        const short[:, :] add_tab, const short[:, :] mul_tab,
                        const short[:] neg_tab):
    cdef int k = kinds[node]
    cdef int x, y, blk, start, stop, nvars, i
    cdef bint found
    if k == OP_EQ or k == OP_NE:
        x = _eval_term(kinds, a, b, a[node], assign, q, add_tab, mul_tab, neg_tab)
        y = _eval_term(kinds, a, b, b[node], assign, q, add_tab, mul_tab, neg_tab)
        return (x == y) if k == OP_EQ else (x != y)
    if k == OP_AND:
        if not _eval_formula(kinds, a, b, ex_starts, ex_axes, a[node], assign, q,
                             add_tab, mul_tab, neg_tab):
            return False
        return _eval_formula(kinds, a, b, ex_starts, ex_axes, b[node], assign, q,
                             add_tab, mul_tab, neg_tab)
    if k == OP_OR:
        if _eval_formula(kinds, a, b, ex_starts, ex_axes, a[node], assign, q,
                         add_tab, mul_tab, neg_tab):
            return True
        return _eval_formula(kinds, a, b, ex_starts, ex_axes, b[node], assign, q,
                             add_tab, mul_tab, neg_tab)
    if k == OP_NOT:
        return not _eval_formula(kinds, a, b, ex_starts, ex_axes, a[node], assign, q,
                                 add_tab, mul_tab, neg_tab)
    if k == OP_TRUE:
        return True
    if k == OP_FALSE:
        return False
    if k == OP_EXISTS:
        blk = b[node]
        start = ex_starts[blk]
        stop = ex_starts[blk + 1]
        nvars = stop - start
        for i in range(nvars):
            assign[ex_axes[start + i]] = 0
        found = False
        while True:
            if _eval_formula(kinds, a, b, ex_starts, ex_axes, a[node], assign, q,
                             add_tab, mul_tab, neg_tab):
                found = True
                break
            # odometer over the block, last variable fastest
            i = nvars - 1
            while i >= 0:
                assign[ex_axes[start + i]] += 1
                if assign[ex_axes[start + i]] < q:
                    break
                assign[ex_axes[start + i]] = 0
                i -= 1
            if i < 0:
                break
        for i in range(nvars):
            assign[ex_axes[start + i]] = 0
        return found
    return False


def eval_program(kinds, a, b, ex_starts, ex_axes, root, int n_axes, int n_free, int q,
                 add_tab, mul_tab):
    cdef const int[:] kinds_v = np.ascontiguousarray(kinds, dtype=np.int32)
    cdef const int[:] a_v = np.ascontiguousarray(a, dtype=np.int32)
    cdef const int[:] b_v = np.ascontiguousarray(b, dtype=np.int32)
    cdef const int[:] ex_starts_v = np.ascontiguousarray(ex_starts, dtype=np.int32)
    cdef const int[:] ex_axes_v = np.ascontiguousarray(ex_axes, dtype=np.int32)
    cdef const short[:, :] add_v = np.ascontiguousarray(add_tab, dtype=np.int16)
    cdef const short[:, :] mul_v = np.ascontiguousarray(mul_tab, dtype=np.int16)
    neg = np.argmin(np.asarray(add_tab) != 0, axis=1).astype(np.int16)
    cdef const short[:] neg_v = neg

    cdef long total = 1
    cdef int i
    for i in range(n_free):
        total *= q

    out_arr = np.zeros(total, dtype=np.uint8)
    cdef unsigned char[:] out = out_arr
    assign_arr = np.zeros(max(n_axes, 1), dtype=np.int32)
    cdef int[:] assign = assign_arr

    cdef int root_c = root
    cdef long idx, rem
    for idx in range(total):
        rem = idx
        for i in range(n_free - 1, -1, -1):
            assign[i] = rem % q
            rem //= q
        if _eval_formula(kinds_v, a_v, b_v, ex_starts_v, ex_axes_v, root_c,
                         assign, q, add_v, mul_v, neg_v):
            out[idx] = 1
    return out_arr
