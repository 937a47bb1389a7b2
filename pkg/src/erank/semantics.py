"""Model-theoretic evaluation and encodings.

Finite structures get full Tarski semantics, both as a slow, obviously
correct scalar recursion (the reference oracle) and as exhaustive
definable-set enumeration through the grid kernels.  Function-field
structures get a sound one-sided semantics: a bounded witness search that
may answer "true" or "no witness up to the bound", never "false".

The module also houses substructure generation and the pairing injections
(the Cantor bijection on naturals and x^p + t*y^p in characteristic p).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import fields as fl
from . import formulas as F
from . import grid
from .errors import CapExceededError, EvalError, ParseError, ProfileError

DEFAULT_RATFUNC_BOUND = 3


class Structure:
    """A field profile plus what is needed to enumerate and display elements."""

    def __init__(self, profile: fl.FieldProfile, degree_bound: int = DEFAULT_RATFUNC_BOUND, constants: dict | None = None):
        self.profile = profile
        self.degree_bound = degree_bound
        self.constants = dict(constants or {})
        self._tables: tuple[np.ndarray, np.ndarray] | None = None
        if profile.kind in (fl.KIND_FINITE, fl.KIND_RATFUNC):
            self.field = fl.finite_field(profile.q)
        else:
            self.field = None

    @property
    def name(self) -> str:
        return self.profile.name

    def is_finite(self) -> bool:
        return self.profile.is_finite()

    @property
    def q(self) -> int:
        return self.profile.q

    def elements(self) -> list:
        if not self.is_finite():
            raise ProfileError(f"{self.name} is not a finite structure")
        return list(self.field.elements())

    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        """q x q add and mul tables over element indices, built once."""
        if self._tables is None:
            fld = self.field
            q = fld.order
            elems = [fld.from_index(i) for i in range(q)]
            add = np.zeros((q, q), dtype=np.int16)
            mul = np.zeros((q, q), dtype=np.int16)
            for i, x in enumerate(elems):
                for j, y in enumerate(elems):
                    add[i, j] = fld.index(fld.add(x, y))
                    mul[i, j] = fld.index(fld.mul(x, y))
            self._tables = (add, mul)
        return self._tables

    def constant_value(self, name: str):
        if name in self.constants:
            return self.constants[name]
        if self.profile.kind == fl.KIND_RATFUNC and name == "t":
            return fl.ratfunc_t(self.field)
        if self.field is not None and self.field.degree > 1 and name == "a":
            gen = self.field.generator
            if self.profile.kind == fl.KIND_RATFUNC:
                return fl.ratfunc_const(self.field, gen)
            return gen
        raise EvalError(f"no value assigned to constant {name!r}")


def make_structure(spec, degree_bound: int = DEFAULT_RATFUNC_BOUND, constants: dict | None = None) -> Structure:
    profile = fl.parse_profile(spec) if isinstance(spec, str) else spec
    return Structure(profile, degree_bound=degree_bound, constants=constants)


# ---------------------------------------------------------------------------
# Element text syntax (CLI): integers, [a^2+1] for extension fields, num/den
# in t for rational functions, p/q for rationals.


def parse_element(text: str, structure: Structure):
    text = text.strip()
    profile = structure.profile
    if profile.kind == fl.KIND_RATIONALS:
        return Fraction(text)
    if profile.kind == fl.KIND_FINITE:
        fld = structure.field
        if text.startswith("["):
            if not text.endswith("]"):
                raise ParseError("unterminated '[' element literal")
            term = F.parse_term(text[1:-1])
            assignment = {"a": fld.generator} if fld.degree > 1 else {}
            return fl.eval_term(term, assignment, profile)
        return fld.from_int(int(text))
    if profile.kind == fl.KIND_RATFUNC:
        num, den = _split_fraction(text)
        value = fl.eval_term(F.parse_term(num), {}, profile)
        if den is not None:
            value = value / fl.eval_term(F.parse_term(den), {}, profile)
        return value
    raise ProfileError(f"profile {profile.name} has no element syntax")


def _split_fraction(text: str) -> tuple[str, str | None]:
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "/" and depth == 0:
            return text[:i], text[i + 1 :]
    return text, None


def element_str(value, structure: Structure) -> str:
    profile = structure.profile
    if profile.kind == fl.KIND_RATIONALS:
        return str(value)
    if profile.kind == fl.KIND_FINITE:
        return finite_elem_str(structure.field, value)
    if profile.kind == fl.KIND_RATFUNC:
        return ratfunc_str(value)
    raise ProfileError(f"profile {profile.name} has no element syntax")


def finite_elem_str(fld, value) -> str:
    if fld.degree == 1:
        return str(value)
    return f"[{_poly_in_symbol(fld.base, value, 'a')}]"


def _poly_in_symbol(coeff_field, coeffs, symbol: str) -> str:
    parts = []
    for e in range(len(coeffs) - 1, -1, -1):
        c = coeffs[e]
        if c == coeff_field.zero:
            continue
        cs = str(c) if coeff_field.degree == 1 else f"[{_poly_in_symbol(coeff_field.base, c, 'a')}]"
        if e == 0:
            parts.append(cs)
        else:
            mono = symbol if e == 1 else f"{symbol}^{e}"
            parts.append(mono if cs == "1" else f"{cs}*{mono}")
    return " + ".join(parts) if parts else "0"


def ratfunc_str(u: fl.RatFunc) -> str:
    fld = u.field
    num = _ratfunc_poly_str(fld, u.num)
    if u.den == (fld.one,):
        return num
    return f"({num})/({_ratfunc_poly_str(fld, u.den)})"


def _ratfunc_poly_str(fld, coeffs) -> str:
    if not coeffs:
        return "0"
    parts = []
    for e in range(len(coeffs) - 1, -1, -1):
        c = coeffs[e]
        if c == fld.zero:
            continue
        if fld.degree == 1:
            cs = str(c)
            plain_one = c == 1
        else:
            cs = f"({F.format_term(fl.element_to_term(fld, c))})"
            plain_one = c == fld.one
        if e == 0:
            parts.append(cs)
        else:
            mono = "t" if e == 1 else f"t^{e}"
            parts.append(mono if plain_one else f"{cs}*{mono}")
    return " + ".join(parts)


# ---------------------------------------------------------------------------
# Finite semantics


def eval_formula_finite(f: F.Formula, assignment: dict, structure: Structure, constants: dict | None = None) -> bool:
    """Reference Tarski semantics; quantifiers range over all q^d elements.

    Deliberately plain recursion, independent of the grid kernels, so it can
    serve as the oracle they are checked against.
    """
    if not structure.is_finite():
        raise ProfileError("eval_formula_finite requires a finite structure")
    consts = _merged_constants(structure, constants)
    profile = structure.profile

    def ev(g: F.Formula, env: dict) -> bool:
        if isinstance(g, F.Top):
            return True
        if isinstance(g, F.Bottom):
            return False
        if isinstance(g, F.Eq):
            return fl.eval_term(g.left, env, profile, consts) == fl.eval_term(g.right, env, profile, consts)
        if isinstance(g, F.Ne):
            return fl.eval_term(g.left, env, profile, consts) != fl.eval_term(g.right, env, profile, consts)
        if isinstance(g, F.Lt):
            raise EvalError("order atoms cannot be evaluated over a field profile")
        if isinstance(g, F.And):
            return ev(g.left, env) and ev(g.right, env)
        if isinstance(g, F.Or):
            return ev(g.left, env) or ev(g.right, env)
        if isinstance(g, F.Not):
            return not ev(g.body, env)
        if isinstance(g, F.Exists):
            for values in itertools.product(structure.elements(), repeat=len(g.variables)):
                inner = dict(env)
                inner.update(zip(g.variables, values))
                if ev(g.body, inner):
                    return True
            return False
        raise TypeError(f"not a formula node: {g!r}")

    return ev(f, dict(assignment))


def eval_formula_qf(f: F.Formula, assignment: dict, profile: fl.FieldProfile, constants: dict | None = None) -> bool:
    """Quantifier-free evaluation over any profile supporting arithmetic."""
    if isinstance(f, F.Top):
        return True
    if isinstance(f, F.Bottom):
        return False
    if isinstance(f, F.Eq):
        return fl.eval_term(f.left, assignment, profile, constants) == fl.eval_term(f.right, assignment, profile, constants)
    if isinstance(f, F.Ne):
        return fl.eval_term(f.left, assignment, profile, constants) != fl.eval_term(f.right, assignment, profile, constants)
    if isinstance(f, F.And):
        return eval_formula_qf(f.left, assignment, profile, constants) and eval_formula_qf(f.right, assignment, profile, constants)
    if isinstance(f, F.Or):
        return eval_formula_qf(f.left, assignment, profile, constants) or eval_formula_qf(f.right, assignment, profile, constants)
    if isinstance(f, F.Not):
        return not eval_formula_qf(f.body, assignment, profile, constants)
    if isinstance(f, F.Exists):
        raise EvalError("eval_formula_qf cannot evaluate quantifiers")
    if isinstance(f, F.Lt):
        raise EvalError("order atoms cannot be evaluated over a field profile")
    raise TypeError(f"not a formula node: {f!r}")


def eval_formula_qf_pairs(f: F.Formula, assignment: dict, fld) -> bool:
    """Quantifier-free evaluation over unreduced rational-function pairs.

    Atom equality uses cross-multiplication, so no value is ever reduced;
    semantically identical to eval_formula_qf over the same field.
    """
    if isinstance(f, F.Top):
        return True
    if isinstance(f, F.Bottom):
        return False
    if isinstance(f, (F.Eq, F.Ne)):
        left = fl.eval_term_pairs(f.left, assignment, fld)
        right = fl.eval_term_pairs(f.right, assignment, fld)
        same = fl.pair_equal(left, right, fld)
        return same if isinstance(f, F.Eq) else not same
    if isinstance(f, F.And):
        return eval_formula_qf_pairs(f.left, assignment, fld) and eval_formula_qf_pairs(f.right, assignment, fld)
    if isinstance(f, F.Or):
        return eval_formula_qf_pairs(f.left, assignment, fld) or eval_formula_qf_pairs(f.right, assignment, fld)
    if isinstance(f, F.Not):
        return not eval_formula_qf_pairs(f.body, assignment, fld)
    raise EvalError(f"cannot evaluate {type(f).__name__} over pairs")


def eval_formula_qf_np(f: F.Formula, assignment: dict, ev: fl.NPPairEvaluator, cache: dict | None = None) -> bool:
    """Pair evaluation with numpy coefficient arrays and a shared term cache."""
    if cache is None:
        cache = {}
    if isinstance(f, F.Top):
        return True
    if isinstance(f, F.Bottom):
        return False
    if isinstance(f, (F.Eq, F.Ne)):
        left = ev.term(f.left, assignment, cache)
        right = ev.term(f.right, assignment, cache)
        same = ev.equal(left, right)
        return same if isinstance(f, F.Eq) else not same
    if isinstance(f, F.And):
        return eval_formula_qf_np(f.left, assignment, ev, cache) and eval_formula_qf_np(f.right, assignment, ev, cache)
    if isinstance(f, F.Or):
        return eval_formula_qf_np(f.left, assignment, ev, cache) or eval_formula_qf_np(f.right, assignment, ev, cache)
    if isinstance(f, F.Not):
        return not eval_formula_qf_np(f.body, assignment, ev, cache)
    raise EvalError(f"cannot evaluate {type(f).__name__} over pairs")


@dataclass(frozen=True)
class DefinableSet:
    """Explicit defined set over a finite structure, in enumeration order.

    Tuples hold field elements; enumeration order is lexicographic in element
    indices with the first variable most significant.
    """

    variables: tuple[str, ...]
    q: int
    bitmap: bytes  # raveled over (q,)*arity

    @property
    def arity(self) -> int:
        return len(self.variables)

    def __contains__(self, index_tuple: tuple[int, ...]) -> bool:
        return bool(self.bitmap[self._flat(index_tuple)])

    def _flat(self, index_tuple: tuple[int, ...]) -> int:
        idx = 0
        for v in index_tuple:
            idx = idx * self.q + v
        return idx

    def index_tuples(self) -> list[tuple[int, ...]]:
        out = []
        for flat, bit in enumerate(self.bitmap):
            if bit:
                out.append(self._unflat(flat))
        return out

    def _unflat(self, flat: int) -> tuple[int, ...]:
        coords = []
        for _ in range(self.arity):
            coords.append(flat % self.q)
            flat //= self.q
        return tuple(reversed(coords))

    def tuples(self, structure: Structure) -> list[tuple]:
        fld = structure.field
        return [tuple(fld.from_index(i) for i in idx) for idx in self.index_tuples()]

    def size(self) -> int:
        return sum(self.bitmap)


def _merged_constants(structure: Structure, constants: dict | None) -> dict:
    merged = dict(structure.constants)
    if constants:
        merged.update(constants)
    return merged


def definable_set(
    f: F.Formula,
    structure: Structure,
    var_order: tuple[str, ...] | None = None,
    constants: dict | None = None,
    kernel=None,
) -> DefinableSet:
    """Exhaustive defined set over all q^n assignments, via the grid kernel."""
    if not structure.is_finite():
        raise ProfileError("definable_set requires a finite structure")
    free = F.free_variables(f)
    if var_order is None:
        var_order = free
    elif not set(free) <= set(var_order):
        raise EvalError(f"var_order {var_order} does not cover free variables {free}")
    consts = _merged_constants(structure, constants)
    program = grid.compile_program(f, structure.field, tuple(var_order), consts)
    add_tab, mul_tab = structure.tables()
    bitmap = grid.run_program(program, add_tab, mul_tab, kernel=kernel)
    return DefinableSet(tuple(var_order), structure.q, bitmap.tobytes())


# ---------------------------------------------------------------------------
# Bounded semantics over rational function fields


@dataclass(frozen=True)
class BoundedEval:
    """Outcome of a bounded witness search: true, or inconclusive.

    ``no_witness_up_to_bound`` is never strengthened to false; existential
    truth over a function field is not decidable by bounded search.
    """

    found: bool
    bound: int
    witness: dict | None = None

    @property
    def verdict(self) -> str:
        return "true" if self.found else "no_witness_up_to_bound"


def enumerate_ratfuncs(fld, bound: int):
    """All reduced fractions with num/den degree <= bound, deterministically.

    Ordered by (max degree, denominator degree, denominator index, numerator
    index); the zero function comes first.
    """
    for d in range(bound + 1):
        for den_deg in range(d + 1):
            for den_idx in range(fld.order**den_deg):
                den = fl._decode_monic(fld, den_deg, den_idx)
                for num_idx in range(fld.order ** (d + 1)):
                    num = _decode_poly(fld, d, num_idx)
                    if max(fl.pdeg(num), fl.pdeg(den), 0) != d:
                        continue
                    if fl.pdeg(fl.pgcd(fld, num, den)) > 0:
                        continue
                    if not num and den != (fld.one,):
                        continue
                    yield fl.RatFunc(fld.order, num, den)


def _decode_poly(fld, max_deg: int, idx: int) -> tuple:
    coeffs = []
    for _ in range(max_deg + 1):
        coeffs.append(fld.from_index(idx % fld.order))
        idx //= fld.order
    return fl.pnormalize(fld, coeffs)


def eval_bounded_ratfunc(
    f: F.Formula,
    assignment: dict,
    structure: Structure,
    degree_bound: int | None = None,
    constants: dict | None = None,
) -> BoundedEval:
    """Sound one-sided semantics: search witnesses of bounded degree.

    Monotone in the bound: an answer of true at bound D remains true at any
    higher bound.
    """
    if structure.profile.kind != fl.KIND_RATFUNC:
        raise ProfileError("eval_bounded_ratfunc requires a rational function field structure")
    bound = structure.degree_bound if degree_bound is None else degree_bound
    cap = grid.max_states()
    consts = _merged_constants(structure, constants)
    profile = structure.profile
    fld = structure.field
    domain = list(enumerate_ratfuncs(fld, bound))
    if not F.is_existential(f):
        raise EvalError("bounded evaluation requires an existential formula")

    witness_box: dict = {}

    def ev(g: F.Formula, env: dict) -> bool:
        if isinstance(g, F.Top):
            return True
        if isinstance(g, F.Bottom):
            return False
        if isinstance(g, (F.Eq, F.Ne)) or (isinstance(g, F.Not) and F.is_atom(g.body)):
            return eval_formula_qf(g, env, profile, consts)
        if isinstance(g, F.And):
            return ev(g.left, env) and ev(g.right, env)
        if isinstance(g, F.Or):
            return ev(g.left, env) or ev(g.right, env)
        if isinstance(g, F.Exists):
            if len(domain) ** len(g.variables) > cap:
                raise CapExceededError(
                    f"bounded search space {len(domain)}^{len(g.variables)} exceeds {cap}"
                )
            for values in itertools.product(domain, repeat=len(g.variables)):
                inner = dict(env)
                inner.update(zip(g.variables, values))
                if ev(g.body, inner):
                    for name, val in zip(g.variables, values):
                        witness_box.setdefault(name, val)
                    return True
            return False
        raise TypeError(f"not a formula node: {g!r}")

    found = ev(f, dict(assignment))
    return BoundedEval(found, bound, dict(witness_box) if found else None)


# ---------------------------------------------------------------------------
# Substructure generation


def generated_subfield(structure: Structure, elements) -> tuple[list, int]:
    """Closure of the given elements plus 0,1 under +, -, *.

    In a finite field the closure is the generated subfield; the result is
    returned in enumeration order together with its size.
    """
    if not structure.is_finite():
        raise ProfileError("generated_subfield requires a finite structure")
    fld = structure.field
    closure = {fld.zero, fld.one}
    closure.update(elements)
    changed = True
    while changed:
        changed = False
        current = list(closure)
        for x in current:
            for y in current:
                for z in (fld.add(x, y), fld.sub(x, y), fld.mul(x, y)):
                    if z not in closure:
                        closure.add(z)
                        changed = True
    ordered = sorted(closure, key=fld.index)
    return ordered, len(ordered)


# ---------------------------------------------------------------------------
# Pairing injections


def encode_pair_nat(x: int, y: int) -> int:
    """Cantor pairing ((x+y)(x+y+1))/2 + y, a bijection N^2 -> N."""
    if x < 0 or y < 0:
        raise ValueError("the polynomial pairing is only a bijection on the naturals")
    s = x + y
    return s * (s + 1) // 2 + y


def decode_pair_nat(z: int) -> tuple[int, int]:
    if z < 0:
        raise ValueError("codes are nonnegative")
    w = (math.isqrt(8 * z + 1) - 1) // 2
    y = z - w * (w + 1) // 2
    return w - y, y


def encode_pair_charp(x: fl.RatFunc, y: fl.RatFunc, profile: fl.FieldProfile) -> fl.RatFunc:
    """The injection x^p + t*y^p on F_p(t)."""
    _require_prime_ratfunc(profile)
    p = profile.p
    fld = fl.finite_field(profile.q)
    return x**p + fl.ratfunc_t(fld) * y**p


def decode_pair_charp(z: fl.RatFunc, profile: fl.FieldProfile) -> tuple[fl.RatFunc, fl.RatFunc] | None:
    """Invert the char-p pairing via the p-basis decomposition.

    Returns None when z is not in the image (some component of index >= 2 is
    nonzero, which can only happen for p >= 3).
    """
    _require_prime_ratfunc(profile)
    parts = fl.p_basis_decompose(z, profile.p)
    if any(not c.is_zero() for c in parts[2:]):
        return None
    return parts[0], parts[1]


def _require_prime_ratfunc(profile: fl.FieldProfile):
    if profile.kind != fl.KIND_RATFUNC or profile.d != 1:
        raise ProfileError("the char-p pairing lives on F_p(t) with prime p")


def tuple_encode(xs: list, pair_encoder):
    """Left fold of the pair encoder: f(f(...f(x1,x2)...), xn)."""
    if not xs:
        raise ValueError("cannot encode an empty tuple")
    acc = xs[0]
    for x in xs[1:]:
        acc = pair_encoder(acc, x)
    return acc


def tuple_decode(code, n: int, pair_decoder):
    """Unfold an n-tuple; None as soon as any pair decode fails."""
    if n < 1:
        raise ValueError("tuple arity must be positive")
    out = []
    for _ in range(n - 1):
        decoded = pair_decoder(code)
        if decoded is None:
            return None
        code, last = decoded
        out.append(last)
    out.append(code)
    return tuple(reversed(out))
