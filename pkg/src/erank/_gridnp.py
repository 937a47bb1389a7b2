"""Pure-Python grid kernel: vectorized evaluation via numpy table lookups.

Evaluates the same flat program as the compiled kernel.  Every node is an
array broadcastable over the full axis grid (size q or 1 per axis), so
memory stays proportional to the largest subformula actually coupling axes.
"""

from __future__ import annotations

import numpy as np

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


def eval_program(kinds, a, b, ex_starts, ex_axes, root, n_axes, n_free, q, add_tab, mul_tab):
    kinds = np.asarray(kinds)
    a = np.asarray(a)
    b = np.asarray(b)
    ex_starts = np.asarray(ex_starts)
    ex_axes = np.asarray(ex_axes)
    add_tab = np.asarray(add_tab)
    mul_tab = np.asarray(mul_tab)
    ndim = max(n_axes, 1)
    shape_one = (1,) * ndim
    # negation lookup: the unique z with y + z = 0, read off the add table
    neg_tab = np.argmin(add_tab != 0, axis=1).astype(np.int16)

    def axis_array(axis):
        shape = [1] * ndim
        shape[axis] = q
        return np.arange(q, dtype=np.int16).reshape(shape)

    def power(base, e):
        if e == 0:
            return np.full(shape_one, 1, dtype=np.int16)
        result = None
        acc = base
        while e:
            if e & 1:
                result = acc if result is None else mul_tab[result, acc]
            e >>= 1
            if e:
                acc = mul_tab[acc, acc]
        return result

    def ev(i):
        k = kinds[i]
        if k == OP_VAR:
            return axis_array(a[i])
        if k == OP_CONST:
            return np.full(shape_one, a[i], dtype=np.int16)
        if k == OP_ADD:
            return add_tab[ev(a[i]), ev(b[i])]
        if k == OP_SUB:
            return add_tab[ev(a[i]), neg_tab[ev(b[i])]]
        if k == OP_MUL:
            return mul_tab[ev(a[i]), ev(b[i])]
        if k == OP_POW:
            return power(ev(a[i]), int(b[i]))
        if k == OP_EQ:
            return ev(a[i]) == ev(b[i])
        if k == OP_NE:
            return ev(a[i]) != ev(b[i])
        if k == OP_AND:
            return ev(a[i]) & ev(b[i])
        if k == OP_OR:
            return ev(a[i]) | ev(b[i])
        if k == OP_NOT:
            return ~ev(a[i])
        if k == OP_TRUE:
            return np.full(shape_one, True)
        if k == OP_FALSE:
            return np.full(shape_one, False)
        if k == OP_EXISTS:
            body = ev(a[i])
            block = tuple(int(x) for x in ex_axes[ex_starts[b[i]] : ex_starts[b[i] + 1]])
            reduce_axes = tuple(ax for ax in block if body.shape[ax] > 1)
            if reduce_axes:
                body = body.any(axis=reduce_axes, keepdims=True)
            return body
        raise ValueError(f"bad opcode {k}")

    result = ev(root)
    if n_free == 0:
        return np.array([int(bool(result.ravel()[0]))], dtype=np.uint8)
    free_shape = (q,) * n_free + (1,) * (ndim - n_free)
    full = np.broadcast_to(result, free_shape)
    return full.reshape((q,) * n_free).ravel().astype(np.uint8)
