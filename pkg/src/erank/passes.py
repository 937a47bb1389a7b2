"""Semantics-preserving rewriting passes with certified quantifier accounting.

Every pass records what it did to the quantifier count and under which
theory the rewrite is an equivalence.  The accounting rules:

* prenex/merge: disjunction blocks are shared greedily (max rule, aligned
  left to right), conjunction blocks concatenated after renaming (sum rule);
* positive-primitive conversion: inequalities of a disjunct are multiplied
  into one, and a single shared fresh variable turns "g nonzero" into
  "g has an inverse", so the whole pass adds at most one quantifier;
* single-equation folding via the homogenization of a rootless polynomial
  adds none;
* order elimination rewrites x < y as an existential square condition, and
  can route all n square conditions through a caller-supplied one-quantifier
  formula for tuples of squares, again adding just one quantifier.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import fields as fl
from . import formulas as F
from .errors import CapExceededError, NonExistentialError, PassError

DNF_NODE_LIMIT = 100_000


@dataclass(frozen=True)
class PrenexFormula:
    """An existential prefix over a quantifier-free matrix."""

    bound: tuple[str, ...]
    matrix: F.Formula

    def __post_init__(self):
        if not F.is_quantifier_free(self.matrix):
            raise PassError("prenex matrix must be quantifier-free")
        if len(set(self.bound)) != len(self.bound):
            raise PassError("prenex bound variables must be distinct")

    @property
    def count(self) -> int:
        return len(self.bound)

    def to_formula(self) -> F.Formula:
        if not self.bound:
            return self.matrix
        return F.Exists(self.bound, self.matrix)

    def __str__(self) -> str:
        return F.format_formula(self.to_formula())


# ---------------------------------------------------------------------------
# Prenexing with quantifier sharing


def to_prenex_existential(f: F.Formula) -> PrenexFormula:
    """Equivalent prenex form; never uses more quantifiers than the raw count.

    Quantifiers of disjuncts are shared (the result block is the pointwise
    max, shorter blocks padded on the right), quantifiers of conjuncts are
    concatenated after renaming.
    """
    if not F.is_existential(f):
        raise NonExistentialError("prenexing is only defined for existential formulas")
    # alpha-rename all binders to unique throwaway names so the final
    # renaming below can never conflate two different binders
    g = F.canonicalize(f, prefix="__b")

    def rec(h: F.Formula):
        if isinstance(h, F.Exists):
            k = len(h.variables)
            inner_m, inner_build = rec(h.body)
            outer_vars = h.variables

            def build(names, inner_m=inner_m, inner_build=inner_build, outer_vars=outer_vars, k=k):
                matrix = inner_build(names[k : k + inner_m])
                return F.substitute(matrix, {v: F.Var(n) for v, n in zip(outer_vars, names[:k])})

            return k + inner_m, build
        if isinstance(h, F.And):
            m1, b1 = rec(h.left)
            m2, b2 = rec(h.right)
            return m1 + m2, lambda names: F.And(b1(names[:m1]), b2(names[m1 : m1 + m2]))
        if isinstance(h, F.Or):
            m1, b1 = rec(h.left)
            m2, b2 = rec(h.right)
            return max(m1, m2), lambda names: F.Or(b1(names[:m1]), b2(names[:m2]))
        return 0, lambda names, h=h: h

    m, build = rec(g)
    taken = set(F.free_variables(f))
    names: list[str] = []
    i = 0
    while len(names) < m:
        i += 1
        cand = f"y{i}"
        if cand not in taken:
            names.append(cand)
    return PrenexFormula(tuple(names), build(names))


def merge_disjunction(p1: PrenexFormula, p2: PrenexFormula) -> PrenexFormula:
    """Shared-block union; the count is exactly max(m1, m2)."""
    merged = to_prenex_existential(F.Or(p1.to_formula(), p2.to_formula()))
    assert merged.count == max(p1.count, p2.count)
    return merged


def merge_conjunction(p1: PrenexFormula, p2: PrenexFormula) -> PrenexFormula:
    """Concatenated blocks; the count is exactly m1 + m2."""
    merged = to_prenex_existential(F.And(p1.to_formula(), p2.to_formula()))
    assert merged.count == p1.count + p2.count
    return merged


# ---------------------------------------------------------------------------
# Positive-primitive conversion


def _nnf(f: F.Formula) -> F.Formula:
    if isinstance(f, F.Not):
        body = f.body
        if isinstance(body, F.Eq):
            return F.Ne(body.left, body.right)
        if isinstance(body, F.Ne):
            return F.Eq(body.left, body.right)
        if isinstance(body, F.Top):
            return F.FALSITY
        if isinstance(body, F.Bottom):
            return F.TRUTH
        if isinstance(body, F.Not):
            return _nnf(body.body)
        if isinstance(body, F.And):
            return F.Or(_nnf(F.Not(body.left)), _nnf(F.Not(body.right)))
        if isinstance(body, F.Or):
            return F.And(_nnf(F.Not(body.left)), _nnf(F.Not(body.right)))
        raise PassError(f"cannot push negation through {type(body).__name__}")
    if isinstance(f, F.And):
        return F.And(_nnf(f.left), _nnf(f.right))
    if isinstance(f, F.Or):
        return F.Or(_nnf(f.left), _nnf(f.right))
    return f


def _atom_poly(left: F.Term, right: F.Term) -> F.Term:
    if right == F.IntLit(0):
        return left
    return F.Sub(left, right)


def _dnf(f: F.Formula, node_limit: int) -> list[tuple[list[F.Term], list[F.Term]]]:
    """Disjunctive normal form as (equations, inequations) polynomial lists.

    The empty disjunction is falsity; a disjunct with no literals is truth.
    """

    def combine(xs, ys):
        out = []
        for (e1, n1), (e2, n2) in itertools.product(xs, ys):
            out.append((e1 + e2, n1 + n2))
            if sum(len(e) + len(n) for e, n in out) > node_limit:
                raise CapExceededError(f"DNF exceeded the {node_limit}-literal limit")
        return out

    if isinstance(f, F.Eq):
        return [([_atom_poly(f.left, f.right)], [])]
    if isinstance(f, F.Ne):
        return [([], [_atom_poly(f.left, f.right)])]
    if isinstance(f, F.Top):
        return [([], [])]
    if isinstance(f, F.Bottom):
        return []
    if isinstance(f, F.And):
        return combine(_dnf(f.left, node_limit), _dnf(f.right, node_limit))
    if isinstance(f, F.Or):
        out = _dnf(f.left, node_limit) + _dnf(f.right, node_limit)
        if sum(len(e) + len(n) for e, n in out) > node_limit:
            raise CapExceededError(f"DNF exceeded the {node_limit}-literal limit")
        return out
    raise PassError(f"unexpected node in a normalized matrix: {type(f).__name__}")


def is_positive_primitive_matrix(matrix: F.Formula) -> bool:
    if isinstance(matrix, F.And):
        return is_positive_primitive_matrix(matrix.left) and is_positive_primitive_matrix(matrix.right)
    return isinstance(matrix, (F.Eq, F.Top))


def _is_equation_conjunction(matrix: F.Formula) -> bool:
    if isinstance(matrix, F.And):
        return _is_equation_conjunction(matrix.left) and _is_equation_conjunction(matrix.right)
    return isinstance(matrix, F.Eq)


def is_positive_matrix(matrix: F.Formula) -> bool:
    """No negation and no inequation anywhere."""
    if isinstance(matrix, (F.And, F.Or)):
        return is_positive_matrix(matrix.left) and is_positive_matrix(matrix.right)
    return isinstance(matrix, (F.Eq, F.Top, F.Bottom))


def to_positive_primitive(
    p: PrenexFormula, profile: fl.FieldProfile | None = None, node_limit: int = DNF_NODE_LIMIT
) -> PrenexFormula:
    """Rewrite the matrix into a conjunction of equations, adding <= 1 quantifier.

    Valid modulo the theory of fields: a conjunction of inequations is one
    inequation because models are domains, "g nonzero" becomes "g has an
    inverse" through a single fresh variable shared by all disjuncts, and a
    disjunction of equation conjunctions folds into a conjunction of
    products, one per choice of an equation from each disjunct.
    """
    if _is_equation_conjunction(p.matrix):
        return p
    disjuncts = _dnf(_nnf(p.matrix), node_limit)
    if any(not eqs and not nes for eqs, nes in disjuncts):
        return PrenexFormula(p.bound, F.Eq(F.IntLit(0), F.IntLit(0)))
    if not disjuncts:
        return PrenexFormula(p.bound, F.Eq(F.IntLit(0), F.IntLit(1)))
    needs_inverse = any(nes for _, nes in disjuncts)
    z_name = None
    if needs_inverse:
        taken = set(F.free_variables(p.matrix)) | set(p.bound)
        z_name = "z" if "z" not in taken else F._fresh_name("z", taken)
    conjunctions: list[list[F.Term]] = []
    for eqs, nes in disjuncts:
        polys = list(eqs)
        if nes:
            product = F.mul_all(nes)
            polys.append(F.Sub(F.Mul(product, F.Var(z_name)), F.IntLit(1)))
        conjunctions.append(polys)
    if len(conjunctions) == 1:
        equations = conjunctions[0]
    else:
        total = 1
        for polys in conjunctions:
            total *= len(polys)
            if total > node_limit:
                raise CapExceededError(f"product folding exceeded the {node_limit}-literal limit")
        equations = [F.mul_all(list(choice)) for choice in itertools.product(*conjunctions)]
    matrix = F.and_all([F.Eq(poly, F.IntLit(0)) for poly in equations])
    bound = p.bound + ((z_name,) if needs_inverse else ())
    return PrenexFormula(bound, matrix)


# ---------------------------------------------------------------------------
# Single-equation folding via homogenization


def _simp_add(a: F.Term, b: F.Term) -> F.Term:
    if isinstance(a, F.IntLit) and isinstance(b, F.IntLit):
        return F.IntLit(a.value + b.value)
    if a == F.IntLit(0):
        return b
    if b == F.IntLit(0):
        return a
    return F.Add(a, b)


def _simp_sub(a: F.Term, b: F.Term) -> F.Term:
    if isinstance(a, F.IntLit) and isinstance(b, F.IntLit):
        return F.IntLit(a.value - b.value)
    if b == F.IntLit(0):
        return a
    return F.Sub(a, b)


def _simp_mul(a: F.Term, b: F.Term) -> F.Term:
    if isinstance(a, F.IntLit) and isinstance(b, F.IntLit):
        return F.IntLit(a.value * b.value)
    if a == F.IntLit(0) or b == F.IntLit(0):
        return F.IntLit(0)
    if a == F.IntLit(1):
        return b
    if b == F.IntLit(1):
        return a
    return F.Mul(a, b)


def univariate_coefficients(g: F.Term, varname: str) -> dict[int, F.Term]:
    """Expand g as a polynomial in one variable; other symbols stay in coefficients."""

    def expand(t: F.Term) -> dict[int, F.Term]:
        if isinstance(t, F.Var) and t.name == varname:
            return {1: F.IntLit(1)}
        if isinstance(t, (F.Var, F.Const, F.IntLit)):
            return {0: t}
        if isinstance(t, (F.Add, F.Sub)):
            left = expand(t.left)
            right = expand(t.right)
            out = dict(left)
            mix = _simp_add if isinstance(t, F.Add) else _simp_sub
            for e, c in right.items():
                out[e] = mix(out.get(e, F.IntLit(0)), c)
            return out
        if isinstance(t, F.Mul):
            left = expand(t.left)
            right = expand(t.right)
            out: dict[int, F.Term] = {}
            for e1, c1 in left.items():
                for e2, c2 in right.items():
                    piece = _simp_mul(c1, c2)
                    out[e1 + e2] = _simp_add(out.get(e1 + e2, F.IntLit(0)), piece)
            return out
        if isinstance(t, F.Pow):
            base = expand(t.base)
            out = {0: F.IntLit(1)}
            for _ in range(t.exponent):
                nxt: dict[int, F.Term] = {}
                for e1, c1 in out.items():
                    for e2, c2 in base.items():
                        piece = _simp_mul(c1, c2)
                        nxt[e1 + e2] = _simp_add(nxt.get(e1 + e2, F.IntLit(0)), piece)
                out = nxt
            return out
        raise TypeError(f"not a term node: {t!r}")

    return {e: c for e, c in expand(g).items() if c != F.IntLit(0)}


def _split_sign(term: F.Term) -> tuple[bool, F.Term]:
    if isinstance(term, F.IntLit) and term.value < 0:
        return True, F.IntLit(-term.value)
    if isinstance(term, F.Sub) and term.left == F.IntLit(0):
        return True, term.right
    return False, term


def homogenized_fold(g: F.Term, varname: str, first: F.Term, second: F.Term) -> F.Term:
    """g*(first, second) where g* is the homogenization of g.

    When g has no root in the structure, g*(u, v) = 0 holds exactly when
    u = v = 0, which folds two equations into one.
    """
    coeffs = univariate_coefficients(g, varname)
    degree = max(coeffs)
    if degree < 1:
        raise PassError("the folding polynomial must be nonconstant")
    positive: list[F.Term] = []
    negative: list[F.Term] = []
    for e in sorted(coeffs):
        piece = F.IntLit(1)
        if degree - e:
            piece = _simp_mul(piece, F.Pow(first, degree - e) if degree - e > 1 else first)
        if e:
            piece = _simp_mul(piece, F.Pow(second, e) if e > 1 else second)
        negated, magnitude = _split_sign(coeffs[e])
        (negative if negated else positive).append(_simp_mul(magnitude, piece))
    acc = F.add_all(positive) if positive else F.IntLit(0)
    for part in negative:
        acc = _simp_sub(acc, part)
    return acc


def rootless_polynomial_variable(g: F.Term) -> str:
    names = F.term_variables(g)
    if len(names) != 1:
        raise PassError("the folding polynomial must be univariate")
    return names[0]


def check_rootless_finite(g: F.Term, profile: fl.FieldProfile) -> None:
    varname = rootless_polynomial_variable(g)
    fld = fl.finite_field(profile.q)
    for elem in fld.elements():
        if fl.eval_term(g, {varname: elem}, profile) == fld.zero:
            raise PassError(f"{F.format_term(g)} has a root over {profile.name}")


def to_single_equation(
    p: PrenexFormula, g: F.Term | None = None, profile: fl.FieldProfile | None = None
) -> PrenexFormula:
    """Fold a conjunction of equations into one; quantifier count unchanged.

    Rootlessness of g is verified exhaustively for finite profiles and
    trusted (with the validity scope recorded by the caller) otherwise.
    """
    if g is None:
        if profile is None:
            raise PassError("either a folding polynomial or a profile is required")
        g = fl.rootless_default(profile)
    varname = rootless_polynomial_variable(g)
    if max(univariate_coefficients(g, varname), default=0) < 1:
        raise PassError("the folding polynomial must be nonconstant")
    if profile is not None and profile.is_finite():
        check_rootless_finite(g, profile)

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
            raise PassError("single-equation folding needs a conjunction of equations")

    collect(p.matrix)
    if len(polys) <= 1:
        return p
    acc = polys[0]
    for nxt in polys[1:]:
        acc = homogenized_fold(g, varname, acc, nxt)
    return PrenexFormula(p.bound, F.Eq(acc, F.IntLit(0)))


# ---------------------------------------------------------------------------
# Order elimination


@dataclass(frozen=True)
class _SquareMarker(F.Formula):
    """Internal placeholder for one rewritten order atom; never escapes.

    ``square`` is the term that must be a square; ``strict`` carries the
    (left, right) pair of a positive occurrence, whose inequality side
    condition is not covered by the square-tuple helper.
    """

    index: int
    square: F.Term
    strict: tuple[F.Term, F.Term] | None


def _contains_lt(f: F.Formula) -> bool:
    if isinstance(f, F.Lt):
        return True
    if isinstance(f, (F.And, F.Or)):
        return _contains_lt(f.left) or _contains_lt(f.right)
    if isinstance(f, F.Not):
        return _contains_lt(f.body)
    if isinstance(f, F.Exists):
        return _contains_lt(f.body)
    return False


def eliminate_order(
    f: F.Formula,
    profile: fl.FieldProfile,
    square_tuple_formula: F.Formula | None = None,
) -> F.Formula:
    """Rewrite order atoms into existential square conditions.

    ``x < y`` becomes "y - x is a nonzero square" and ``!(x < y)`` becomes
    "x - y is a square"; this is an equivalence over real closed fields.
    Without a helper formula each order atom spends one fresh quantifier.
    With a caller-certified one-quantifier formula defining n-tuples of
    squares, all n square conditions are routed through it (padding unused
    slots with 1), for a single extra quantifier in the prenex count.  That
    routing is purely syntactic; the validity scope is RCF with the helper
    certified by the caller.
    """
    if not _contains_lt(f):
        return f
    if not profile.has_order:
        raise PassError(f"order atoms are not available in profile {profile.name}")

    def push(g: F.Formula, negated: bool) -> F.Formula:
        if isinstance(g, F.Not):
            return push(g.body, not negated)
        if isinstance(g, F.And):
            ctor = F.Or if negated else F.And
            return ctor(push(g.left, negated), push(g.right, negated))
        if isinstance(g, F.Or):
            ctor = F.And if negated else F.Or
            return ctor(push(g.left, negated), push(g.right, negated))
        if isinstance(g, F.Exists):
            if negated:
                raise PassError("cannot eliminate order under a negated quantifier")
            return F.Exists(g.variables, push(g.body, False))
        if isinstance(g, F.Top):
            return F.FALSITY if negated else g
        if isinstance(g, F.Bottom):
            return F.TRUTH if negated else g
        if negated:
            if isinstance(g, F.Eq):
                return F.Ne(g.left, g.right)
            if isinstance(g, F.Ne):
                return F.Eq(g.left, g.right)
            if isinstance(g, F.Lt):
                return F.Not(g)
        return g

    nnf = push(f, False)
    markers: list[_SquareMarker] = []

    def strip(g: F.Formula) -> F.Formula:
        if isinstance(g, F.Lt):
            marker = _SquareMarker(len(markers), F.Sub(g.right, g.left), (g.left, g.right))
            markers.append(marker)
            return marker
        if isinstance(g, F.Not) and isinstance(g.body, F.Lt):
            marker = _SquareMarker(len(markers), F.Sub(g.body.left, g.body.right), None)
            markers.append(marker)
            return marker
        if isinstance(g, F.And):
            return F.And(strip(g.left), strip(g.right))
        if isinstance(g, F.Or):
            return F.Or(strip(g.left), strip(g.right))
        if isinstance(g, F.Exists):
            return F.Exists(g.variables, strip(g.body))
        return g

    template = strip(nnf)
    n = len(markers)

    if square_tuple_formula is None:
        taken = F.all_variable_names(f) | set(F.free_variables(f))
        fresh: list[str] = []
        i = 0
        while len(fresh) < n:
            i += 1
            cand = f"z{i}"
            if cand not in taken:
                fresh.append(cand)

        def inline(g: F.Formula) -> F.Formula:
            if isinstance(g, _SquareMarker):
                z = fresh[g.index]
                condition: F.Formula = F.Eq(g.square, F.Pow(F.Var(z), 2))
                if g.strict is not None:
                    condition = F.And(condition, F.Not(F.Eq(*g.strict)))
                return F.Exists((z,), condition)
            if isinstance(g, F.And):
                return F.And(inline(g.left), inline(g.right))
            if isinstance(g, F.Or):
                return F.Or(inline(g.left), inline(g.right))
            if isinstance(g, F.Exists):
                return F.Exists(g.variables, inline(g.body))
            return g

        return inline(template)

    sigma_vars = F.free_variables(square_tuple_formula)
    if len(sigma_vars) != n:
        raise PassError(
            f"the square-tuple formula must have exactly {n} free variables, got {len(sigma_vars)}"
        )
    if n > 16:
        raise PassError("subset expansion is capped at 16 order atoms")

    def resolve(g: F.Formula, chosen: frozenset[int]) -> F.Formula:
        if isinstance(g, _SquareMarker):
            if g.index not in chosen:
                return F.FALSITY
            # the squareness itself routes through the helper; only the
            # strictness side condition of a positive occurrence stays
            return F.Not(F.Eq(*g.strict)) if g.strict is not None else F.TRUTH
        if isinstance(g, F.And):
            return F.And(resolve(g.left, chosen), resolve(g.right, chosen))
        if isinstance(g, F.Or):
            return F.Or(resolve(g.left, chosen), resolve(g.right, chosen))
        if isinstance(g, F.Exists):
            return F.Exists(g.variables, resolve(g.body, chosen))
        return g

    branches = []
    for bits in range(1 << n):
        chosen = frozenset(i for i in range(n) if bits >> i & 1)
        args = {
            name: (markers[i].square if i in chosen else F.IntLit(1))
            for i, name in enumerate(sigma_vars)
        }
        branches.append(F.And(resolve(template, chosen), F.substitute(square_tuple_formula, args)))
    return F.or_all(branches)


# ---------------------------------------------------------------------------
# Rank reports


@dataclass(frozen=True)
class TraceEntry:
    pass_id: str
    before: int
    after: int
    rule: str
    scope: str

    def to_json(self) -> dict:
        return {
            "pass": self.pass_id,
            "before": self.before,
            "after": self.after,
            "rule": self.rule,
            "scope": self.scope,
        }


@dataclass(frozen=True)
class RankReport:
    """Tracked upper bounds for the quantifier cost of a defined set.

    All figures are upper bounds realized by explicit formulas, never exact
    values: erk_upper by an existential prenex form, perk_upper by a
    positive-primitive form, and the fibre-dimension bound efd_upper is
    max(perk_upper - 1, 0), realized by projecting the solution set of the
    positive-primitive system.
    """

    erk_upper: int
    perk_upper: int
    efd_upper: int
    assumptions: str
    pass_trace: tuple[TraceEntry, ...] = field(default=())
    upper_bounds_only: bool = True

    def __post_init__(self):
        if not (self.erk_upper <= self.perk_upper <= self.erk_upper + 1):
            raise PassError("rank bookkeeping violated erk <= perk <= erk + 1")
        if self.efd_upper != max(self.perk_upper - 1, 0):
            raise PassError("rank bookkeeping violated efd = max(perk - 1, 0)")

    def to_json(self) -> dict:
        return {
            "erk_upper": self.erk_upper,
            "perk_upper": self.perk_upper,
            "efd_upper": self.efd_upper,
            "assumptions": self.assumptions,
            "upper_bounds_only": self.upper_bounds_only,
            "pass_trace": [entry.to_json() for entry in self.pass_trace],
        }


PASS_IDS = ("order_elim", "prenex", "merge", "pp", "single_eq")

_RULES = {
    "order_elim": "square-condition substitution",
    "prenex": "shared-prefix pull-out (max on |, sum on &)",
    "merge": "shared-prefix pull-out (max on |, sum on &)",
    "pp": "domain product law + shared inversion variable",
    "single_eq": "homogenized pair folding",
}


def _raw_quantifiers(f: F.Formula) -> int:
    """Bound-variable count without the existentiality check (for traces)."""
    if isinstance(f, F.Exists):
        return len(f.variables) + _raw_quantifiers(f.body)
    if isinstance(f, (F.And, F.Or)):
        return _raw_quantifiers(f.left) + _raw_quantifiers(f.right)
    if isinstance(f, F.Not):
        return _raw_quantifiers(f.body)
    return 0


def run_pipeline(
    f: F.Formula,
    profile: fl.FieldProfile,
    pipeline: tuple[str, ...] | None = None,
    rootless: F.Term | None = None,
    square_tuple_formula: F.Formula | None = None,
    node_limit: int = DNF_NODE_LIMIT,
) -> tuple[RankReport, PrenexFormula]:
    """Run the pass pipeline; report quantifier bounds plus the final form.

    The default pipeline is order elimination (only when needed), prenexing,
    and positive-primitive conversion.  erk_upper is the best prenex count
    seen; perk_upper the count of the positive-primitive form (computed even
    when `pp` is not in the pipeline: a positive matrix costs nothing, any
    other matrix at most one inversion variable).
    """
    has_lt = _contains_lt(f)
    if pipeline is None:
        pipeline = (("order_elim",) if has_lt else ()) + ("prenex", "pp")
    for pass_id in pipeline:
        if pass_id not in PASS_IDS:
            raise PassError(f"unknown pass id {pass_id!r}")

    trace: list[TraceEntry] = []
    scopes = {"T_fields"}
    current: F.Formula | PrenexFormula = f
    erk: int | None = None
    perk: int | None = None

    for pass_id in pipeline:
        if pass_id == "order_elim":
            if isinstance(current, PrenexFormula):
                raise PassError("order elimination must run before prenexing")
            before = _raw_quantifiers(current)
            current = eliminate_order(current, profile, square_tuple_formula)
            scope = "RCF, caller-certified helper" if square_tuple_formula is not None else "RCF"
            scopes.add(scope)
            trace.append(TraceEntry(pass_id, before, _raw_quantifiers(current), _RULES[pass_id], scope))
            continue
        if pass_id in ("prenex", "merge"):
            formula = current.to_formula() if isinstance(current, PrenexFormula) else current
            before = _raw_quantifiers(formula)
            current = to_prenex_existential(formula)
            trace.append(TraceEntry(pass_id, before, current.count, _RULES[pass_id], "T_fields"))
        elif pass_id == "pp":
            if not isinstance(current, PrenexFormula):
                current = to_prenex_existential(current)
            before = current.count
            erk = before if erk is None else min(erk, before)
            current = to_positive_primitive(current, profile, node_limit)
            trace.append(TraceEntry(pass_id, before, current.count, _RULES[pass_id], "T_fields"))
            perk = current.count
            continue
        elif pass_id == "single_eq":
            if not isinstance(current, PrenexFormula):
                current = to_prenex_existential(current)
            before = current.count
            current = to_single_equation(current, rootless, profile)
            if profile.is_finite():
                scope = f"profile:{profile.name} (rootless g verified)"
            else:
                scope = f"profile:{profile.name} (rootless g trusted, recorded)"
            scopes.add(scope)
            trace.append(TraceEntry(pass_id, before, current.count, _RULES[pass_id], scope))
        erk = current.count if erk is None else min(erk, current.count)

    if not isinstance(current, PrenexFormula):
        before = _raw_quantifiers(current)
        current = to_prenex_existential(current)
        trace.append(TraceEntry("prenex", before, current.count, _RULES["prenex"], "T_fields"))
    if erk is None:
        erk = current.count
    if perk is None:
        perk = erk if is_positive_matrix(current.matrix) else erk + 1

    report = RankReport(
        erk_upper=erk,
        perk_upper=perk,
        efd_upper=max(perk - 1, 0),
        assumptions=_join_scopes(scopes, profile),
        pass_trace=tuple(trace),
    )
    return report, current


def rank_report(
    f: F.Formula,
    profile: fl.FieldProfile,
    pipeline: tuple[str, ...] | None = None,
    rootless: F.Term | None = None,
    square_tuple_formula: F.Formula | None = None,
    node_limit: int = DNF_NODE_LIMIT,
) -> RankReport:
    report, _ = run_pipeline(f, profile, pipeline, rootless, square_tuple_formula, node_limit)
    return report


def _join_scopes(scopes: set[str], profile: fl.FieldProfile) -> str:
    specific = sorted(s for s in scopes if s != "T_fields")
    if not specific:
        if profile.kind == fl.KIND_ABSTRACT and profile.p:
            return f"char_p({profile.p})"
        return "T_fields"
    return "; ".join(specific)


# ---------------------------------------------------------------------------
# Quantifier-free interpolation over finite fields


def qf_interpolation_finite(points, structure, var_names: tuple[str, ...] | None = None) -> F.Formula:
    """A quantifier-free formula defining exactly the listed subset of F_q^n.

    Uses the pointwise indicator: the sum over members of the product over
    coordinates of 1 - (X_i - a_i)^(q-1) equals 1 exactly on the subset.
    """
    points = [tuple(p) for p in points]
    if not points:
        return F.Eq(F.IntLit(0), F.IntLit(1))
    n = len(points[0])
    if any(len(p) != n for p in points):
        raise PassError("all member tuples must have the same arity")
    if var_names is None:
        var_names = tuple(f"x{i + 1}" for i in range(n))
    fld = structure.field
    q = fld.order
    terms = []
    for point in points:
        factors = []
        for name, coord in zip(var_names, point):
            delta = F.Sub(F.Var(name), fl.element_to_term(fld, coord))
            factors.append(F.Sub(F.IntLit(1), F.Pow(delta, q - 1)))
        terms.append(F.mul_all(factors))
    return F.Eq(F.add_all(terms), F.IntLit(1))
