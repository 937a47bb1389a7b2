"""Translation between positive-primitive formulas and polynomial systems.

A presentation is a generator list in ambient variables (the free x's) and
fibre variables (the bound y's); the projection of its solution set to the
x-coordinates is the defined set.  Images and fibres over finite fields are
computed by direct point enumeration, deliberately not reusing the formula
evaluation kernels, so the two routes check each other.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import fields as fl
from . import formulas as F
from . import grid
from . import semantics as se
from .errors import CapExceededError, EvalError, PassError
from .passes import PrenexFormula, _atom_poly


@dataclass(frozen=True)
class VarietyPresentation:
    """Polynomial system with an ambient/fibre variable split.

    An empty generator list means the full ambient space (times the fibre
    coordinates).
    """

    x_vars: tuple[str, ...]
    y_vars: tuple[str, ...]
    generators: tuple[F.Term, ...]

    def __post_init__(self):
        if set(self.x_vars) & set(self.y_vars):
            raise PassError("ambient and fibre variable lists must be disjoint")
        allowed = set(self.x_vars) | set(self.y_vars)
        for g in self.generators:
            extra = set(F.term_variables(g)) - allowed
            if extra:
                raise PassError(f"generator uses undeclared variables {sorted(extra)}")

    def to_json(self) -> dict:
        return {
            "x_vars": list(self.x_vars),
            "y_vars": list(self.y_vars),
            "generators": [F.format_term(g) for g in self.generators],
        }

    @classmethod
    def from_json(cls, data: dict | str) -> "VarietyPresentation":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            tuple(data["x_vars"]),
            tuple(data["y_vars"]),
            tuple(F.parse_term(s) for s in data["generators"]),
        )


def formula_to_system(p: PrenexFormula) -> VarietyPresentation:
    """Generators from a positive-primitive matrix; bound variables become fibre coordinates."""
    polys: list[F.Term] = []

    def collect(matrix: F.Formula):
        if isinstance(matrix, F.And):
            collect(matrix.left)
            collect(matrix.right)
        elif isinstance(matrix, F.Eq):
            polys.append(_atom_poly(matrix.left, matrix.right))
        elif isinstance(matrix, F.Top):
            pass
        else:
            raise PassError("the matrix must be a conjunction of equations")

    collect(p.matrix)
    x_vars = F.free_variables(p.to_formula())
    return VarietyPresentation(x_vars, p.bound, tuple(polys))


def system_to_formula(vp: VarietyPresentation) -> PrenexFormula:
    """Exact inverse of formula_to_system up to variable naming."""
    if not vp.generators:
        matrix: F.Formula = F.TRUTH
    else:
        matrix = F.and_all([F.Eq(g, F.IntLit(0)) for g in vp.generators])
    return PrenexFormula(vp.y_vars, matrix)


# ---------------------------------------------------------------------------
# Point enumeration


def _field_tables(fld) -> tuple[np.ndarray, np.ndarray]:
    q = fld.order
    elems = [fld.from_index(i) for i in range(q)]
    add = np.zeros((q, q), dtype=np.int16)
    mul = np.zeros((q, q), dtype=np.int16)
    for i, x in enumerate(elems):
        for j, y in enumerate(elems):
            add[i, j] = fld.index(fld.add(x, y))
            mul[i, j] = fld.index(fld.mul(x, y))
    return add, mul


_TABLE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _tables_for(fld):
    key = id(fld)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = _field_tables(fld)
    return _TABLE_CACHE[key]


def _term_grid(term: F.Term, axes: dict[str, int], fixed: dict, fld, n_axes: int, tabs):
    """Evaluate a polynomial term over the full assignment grid."""
    add_tab, mul_tab = tabs
    q = fld.order
    neg_tab = np.argmin(np.asarray(add_tab) != 0, axis=1).astype(np.int16)
    shape_one = (1,) * max(n_axes, 1)

    def ev(t: F.Term):
        if isinstance(t, F.Var):
            if t.name in fixed:
                return np.full(shape_one, fld.index(fixed[t.name]), dtype=np.int16)
            if t.name not in axes:
                raise EvalError(f"variable {t.name!r} has no axis")
            shape = [1] * max(n_axes, 1)
            shape[axes[t.name]] = q
            return np.arange(q, dtype=np.int16).reshape(shape)
        if isinstance(t, F.Const):
            if t.name == "a" and fld.degree > 1:
                return np.full(shape_one, fld.index(fld.generator), dtype=np.int16)
            raise EvalError(f"no value for constant {t.name!r} in a polynomial system")
        if isinstance(t, F.IntLit):
            return np.full(shape_one, fld.index(fld.from_int(t.value)), dtype=np.int16)
        if isinstance(t, F.Add):
            return add_tab[ev(t.left), ev(t.right)]
        if isinstance(t, F.Sub):
            return add_tab[ev(t.left), neg_tab[ev(t.right)]]
        if isinstance(t, F.Mul):
            return mul_tab[ev(t.left), ev(t.right)]
        if isinstance(t, F.Pow):
            base = ev(t.base)
            e = t.exponent
            if e == 0:
                return np.full(shape_one, 1, dtype=np.int16)
            result = None
            while e:
                if e & 1:
                    result = base if result is None else mul_tab[result, base]
                e >>= 1
                if e:
                    base = mul_tab[base, base]
            return result
        raise TypeError(f"not a term node: {t!r}")

    return ev(term)


def image_over_finite(vp: VarietyPresentation, structure: se.Structure) -> se.DefinableSet:
    """Project the solution set onto the ambient coordinates by enumeration."""
    if not structure.is_finite():
        raise PassError("image computation requires a finite structure")
    fld = structure.field
    q = fld.order
    n_axes = len(vp.x_vars) + len(vp.y_vars)
    if q**n_axes > grid.max_states():
        raise CapExceededError(f"state space {q}^{n_axes} exceeds the enumeration cap")
    axes = {name: i for i, name in enumerate(vp.x_vars + vp.y_vars)}
    tabs = structure.tables()
    ndim = max(n_axes, 1)
    ok = np.full((1,) * ndim, True)
    for g in vp.generators:
        values = _term_grid(g, axes, {}, fld, n_axes, tabs)
        ok = ok & (values == 0)
    y_axes = tuple(axes[name] for name in vp.y_vars if ok.shape[axes[name]] > 1)
    if y_axes:
        ok = ok.any(axis=y_axes, keepdims=True)
    nx = len(vp.x_vars)
    if nx == 0:
        bit = int(bool(ok.ravel()[0]))
        return se.DefinableSet((), q, bytes([bit]))
    free_shape = (q,) * nx + (1,) * (ndim - nx)
    bitmap = np.broadcast_to(ok, free_shape).reshape((q,) * nx).ravel().astype(np.uint8)
    return se.DefinableSet(vp.x_vars, q, bitmap.tobytes())


def _embed(ext_fld, base_fld, elem):
    if ext_fld is base_fld:
        return elem
    return (elem,) + (base_fld.zero,) * (ext_fld.degree - 1)


def fibre_points(
    vp: VarietyPresentation, x0: tuple, structure: se.Structure, ext_k: int = 1
) -> list[tuple]:
    """Solutions in the fibre over x0, with the y's ranging over F_{q^k}.

    The extension field is a quotient by a deterministically chosen
    irreducible polynomial over the base, so base coordinates embed as
    constants; point counts do not depend on that choice.
    """
    if not structure.is_finite():
        raise PassError("fibre enumeration requires a finite structure")
    if len(x0) != len(vp.x_vars):
        raise PassError(f"expected {len(vp.x_vars)} ambient coordinates, got {len(x0)}")
    base = structure.field
    fld = fl.extension_field(base.order, ext_k)
    q = fld.order
    ny = len(vp.y_vars)
    if q**ny > grid.max_states():
        raise CapExceededError(f"fibre space {q}^{ny} exceeds the enumeration cap")
    fixed = {name: _embed(fld, base, value) for name, value in zip(vp.x_vars, x0)}
    axes = {name: i for i, name in enumerate(vp.y_vars)}
    tabs = _tables_for(fld)
    ndim = max(ny, 1)
    ok = np.full((1,) * ndim, True)
    for g in vp.generators:
        values = _term_grid(g, axes, fixed, fld, ny, tabs)
        ok = ok & (values == 0)
    if ny == 0:
        return [()] if bool(ok.ravel()[0]) else []
    full = np.broadcast_to(ok, (q,) * ny)
    points = []
    for flat in np.flatnonzero(full.ravel()):
        coords = []
        rest = int(flat)
        for _ in range(ny):
            coords.append(rest % q)
            rest //= q
        points.append(tuple(fld.from_index(i) for i in reversed(coords)))
    return points


def fibre_dim_estimate(
    vp: VarietyPresentation, x0: tuple, structure: se.Structure, max_k: int
) -> dict:
    """Heuristic fibre dimension from point counts over F_{q^k}, k = 1..max_k.

    Fits the slope of log_q N_k against k by least squares over k >= 2 and
    rounds; constant-bounded counts give 0.  Labeled heuristic: point counts
    bound dimension from below in general, they do not certify it.
    """
    if max_k < 2:
        raise PassError("the estimate needs max_k >= 2")
    q = structure.q
    counts = [len(fibre_points(vp, x0, structure, k)) for k in range(1, max_k + 1)]
    result = {"counts": counts, "heuristic": True, "empty": False, "exact_fit": True, "range": None}
    points = [(k, math.log(n, q)) for k, n in zip(range(1, max_k + 1), counts) if n > 0]
    if not points:
        result.update({"estimated_dim": 0, "empty": True})
        return result
    fit_points = [(k, L) for k, L in points if k >= 2]
    if len(fit_points) < 2:
        fit_points = points
    if len(fit_points) == 1:
        k, L = fit_points[0]
        slope = L / k
        slopes = [slope]
    else:
        ks = [k for k, _ in fit_points]
        Ls = [L for _, L in fit_points]
        kbar = sum(ks) / len(ks)
        Lbar = sum(Ls) / len(Ls)
        denom = sum((k - kbar) ** 2 for k in ks)
        slope = sum((k - kbar) * (L - Lbar) for k, L in fit_points) / denom
        slopes = [
            (fit_points[i + 1][1] - fit_points[i][1]) / (fit_points[i + 1][0] - fit_points[i][0])
            for i in range(len(fit_points) - 1)
        ]
    estimated = max(round(slope), 0)
    spread = (max(slopes) - min(slopes)) if slopes else 0.0
    if spread > 0.2:
        result["exact_fit"] = False
        result["range"] = [max(math.floor(min(slopes)), 0), math.ceil(max(slopes))]
    result["estimated_dim"] = estimated
    return result
