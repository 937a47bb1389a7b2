"""Exhaustive evaluation of formulas over finite-field assignment grids.

Formulas are compiled to a flat integer program over variable axes; the
program is then run by one of two interchangeable kernels:

* ``erank._gridcy`` - a compiled extension with plain nested loops and
  short-circuit evaluation (built from ``_gridcy.pyx``),
* ``erank._gridnp`` - a pure-Python fallback that evaluates the same program
  with vectorized table lookups.

Both kernels return the identical bitmap over the free-variable grid
(row-major, first variable most significant), so results never depend on
which one is active.  Set ``ERANK_KERNEL=py`` to force the fallback;
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import formulas as F
from .errors import CapExceededError, EvalError

# opcode table shared with the kernels
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

DEFAULT_MAX_STATES = 1 << 24


def max_states() -> int:
    raw = os.environ.get("ERANK_MAX_STATES")
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return DEFAULT_MAX_STATES


@dataclass
class Program:
    kinds: np.ndarray
    a: np.ndarray
    b: np.ndarray
    ex_starts: np.ndarray
    ex_axes: np.ndarray
    root: int
    n_axes: int
    n_free: int
    q: int


class _Compiler:
    def __init__(self, field, free_order: tuple[str, ...], constants: dict):
        self.field = field
        self.kinds: list[int] = []
        self.a: list[int] = []
        self.b: list[int] = []
        self.blocks: list[list[int]] = []
        self.env: dict[str, int] = {name: i for i, name in enumerate(free_order)}
        self.n_axes = len(free_order)
        self.constants = constants

    def emit(self, kind: int, a: int = 0, b: int = 0) -> int:
        self.kinds.append(kind)
        self.a.append(a)
        self.b.append(b)
        return len(self.kinds) - 1

    def const_index(self, name: str) -> int:
        fld = self.field
        if name in self.constants:
            return fld.index(self.constants[name])
        if name == "a" and fld.degree > 1:
            return fld.index(fld.generator)
        raise EvalError(f"no value assigned to constant {name!r}")

    def term(self, t: F.Term) -> int:
        if isinstance(t, F.Var):
            if t.name not in self.env:
                raise EvalError(f"variable {t.name!r} has no axis (not free, not bound)")
            return self.emit(OP_VAR, self.env[t.name])
        if isinstance(t, F.Const):
            return self.emit(OP_CONST, self.const_index(t.name))
        if isinstance(t, F.IntLit):
            return self.emit(OP_CONST, self.field.index(self.field.from_int(t.value)))
        if isinstance(t, F.Add):
            return self.emit(OP_ADD, self.term(t.left), self.term(t.right))
        if isinstance(t, F.Sub):
            return self.emit(OP_SUB, self.term(t.left), self.term(t.right))
        if isinstance(t, F.Mul):
            return self.emit(OP_MUL, self.term(t.left), self.term(t.right))
        if isinstance(t, F.Pow):
            return self.emit(OP_POW, self.term(t.base), t.exponent)
        raise TypeError(f"not a term node: {t!r}")

    def formula(self, f: F.Formula) -> int:
        if isinstance(f, F.Eq):
            return self.emit(OP_EQ, self.term(f.left), self.term(f.right))
        if isinstance(f, F.Ne):
            return self.emit(OP_NE, self.term(f.left), self.term(f.right))
        if isinstance(f, F.Lt):
            raise EvalError("order atoms cannot be evaluated over a field profile")
        if isinstance(f, F.And):
            return self.emit(OP_AND, self.formula(f.left), self.formula(f.right))
        if isinstance(f, F.Or):
            return self.emit(OP_OR, self.formula(f.left), self.formula(f.right))
        if isinstance(f, F.Not):
            return self.emit(OP_NOT, self.formula(f.body))
        if isinstance(f, F.Top):
            return self.emit(OP_TRUE)
        if isinstance(f, F.Bottom):
            return self.emit(OP_FALSE)
        if isinstance(f, F.Exists):
            saved = dict(self.env)
            axes = []
            for name in f.variables:
                self.env[name] = self.n_axes
                axes.append(self.n_axes)
                self.n_axes += 1
            body = self.formula(f.body)
            self.env = saved
            self.blocks.append(axes)
            return self.emit(OP_EXISTS, body, len(self.blocks) - 1)
        raise TypeError(f"not a formula node: {f!r}")


def compile_program(
    f: F.Formula,
    field,
    free_order: tuple[str, ...],
    constants: dict | None = None,
    cap: int | None = None,
) -> Program:
    comp = _Compiler(field, free_order, constants or {})
    root = comp.formula(f)
    cap = cap if cap is not None else max_states()
    if field.order**comp.n_axes > cap:
        raise CapExceededError(
            f"state space {field.order}^{comp.n_axes} exceeds the cap of {cap} states"
        )
    starts = [0]
    flat: list[int] = []
    for block in comp.blocks:
        flat.extend(block)
        starts.append(len(flat))
    return Program(
        kinds=np.array(comp.kinds, dtype=np.int32),
        a=np.array(comp.a, dtype=np.int32),
        b=np.array(comp.b, dtype=np.int32),
        ex_starts=np.array(starts, dtype=np.int32),
        ex_axes=np.array(flat or [0], dtype=np.int32),
        root=root,
        n_axes=comp.n_axes,
        n_free=len(free_order),
        q=field.order,
    )


def _load_kernel():
    if os.environ.get("ERANK_KERNEL", "").lower() not in ("py", "python", "numpy"):
        try:
            from . import _gridcy

            return _gridcy, "cython"
        except ImportError:
            pass
    from . import _gridnp

    return _gridnp, "python"


_KERNEL, KERNEL_NAME = _load_kernel()


def run_program(program: Program, add_tab: np.ndarray, mul_tab: np.ndarray, kernel=None) -> np.ndarray:
    """Bitmap over the free grid: entry 1 iff the formula holds at that tuple.

    The bitmap is raveled row-major over ``(q,) * n_free`` with the first
    free variable most significant.
    """
    mod = kernel if kernel is not None else _KERNEL
    out = mod.eval_program(
        program.kinds,
        program.a,
        program.b,
        program.ex_starts,
        program.ex_axes,
        program.root,
        program.n_axes,
        program.n_free,
        program.q,
        add_tab,
        mul_tab,
    )
    return np.asarray(out, dtype=np.uint8)


def available_kernels() -> dict[str, object]:
    kernels: dict[str, object] = {}
    try:
        from . import _gridcy

        kernels["cython"] = _gridcy
    except ImportError:
        pass
    from . import _gridnp

    kernels["python"] = _gridnp
    return kernels
