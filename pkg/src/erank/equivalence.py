"""Equivalence checking and refutation harness.

Finite fields are models of the theory of fields, so a disagreement of
defined sets over any battery member soundly refutes equivalence modulo
that theory (and modulo the characteristic-p theory when the battery is
restricted accordingly).  Agreement over the battery is reported as exactly
that - agreement on the battery - never as theory-level equivalence: the
tuples-of-p-th-powers formulas agree with "true" on every finite field yet
define proper subsets over rational function fields.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from . import collapse as cl
from . import fields as fl
from . import formulas as F
from . import semantics as se
from .errors import ProfileError

VERDICT_EQUIV = "equivalent_on_battery"
VERDICT_REFUTED = "refuted"
VERDICT_POSITIVE = "positive_direction_verified"
VERDICT_UNKNOWN = "unknown"

DEFAULT_BATTERY = ("F2", "F3", "F4", "F5", "F7", "F8", "F9")


@dataclass(frozen=True)
class EquivReport:
    verdict: str
    battery: tuple[str, ...] = ()
    counterexample: dict | None = None
    stats: dict = field(default_factory=dict)
    seed: int | None = None

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "battery": list(self.battery),
            "counterexample": self.counterexample,
            "stats": self.stats,
            "seed": self.seed,
        }


def default_battery() -> list[se.Structure]:
    return [se.make_structure(name) for name in DEFAULT_BATTERY]


def _shared_order(f1: F.Formula, f2: F.Formula) -> tuple[str, ...]:
    """Union of free variables, f1's first-occurrence order first.

    A formula not mentioning some variable defines a cylinder over it, which
    makes formulas with different free sets (e.g. a one-variable formula
    against truth) comparable.
    """
    order = list(F.free_variables(f1))
    for name in F.free_variables(f2):
        if name not in order:
            order.append(name)
    return tuple(order)


def check_equiv_finite(f1: F.Formula, f2: F.Formula, structure: se.Structure) -> bool:
    """Exhaustive comparison of the defined sets over one finite structure."""
    order = _shared_order(f1, f2)
    d1 = se.definable_set(f1, structure, var_order=order)
    d2 = se.definable_set(f2, structure, var_order=order)
    return d1.bitmap == d2.bitmap


def refute_equivalence(f1: F.Formula, f2: F.Formula, battery: list[se.Structure] | None = None) -> EquivReport:
    """First disagreeing (profile, tuple) across the battery, if any.

    A reported counterexample replays: evaluating both formulas at the tuple
    gives different truth values.
    """
    battery = default_battery() if battery is None else battery
    order = _shared_order(f1, f2)
    tuples_checked = 0
    for structure in battery:
        d1 = se.definable_set(f1, structure, var_order=order)
        d2 = se.definable_set(f2, structure, var_order=order)
        tuples_checked += structure.q ** len(order)
        if d1.bitmap == d2.bitmap:
            continue
        flat = next(i for i, (x, y) in enumerate(zip(d1.bitmap, d2.bitmap)) if x != y)
        idx = d1._unflat(flat)
        elems = tuple(structure.field.from_index(i) for i in idx)
        counterexample = {
            "profile": structure.name,
            "variables": list(order),
            "tuple": [se.element_str(e, structure) for e in elems],
            "f1_holds": bool(d1.bitmap[flat]),
            "f2_holds": bool(d2.bitmap[flat]),
        }
        return EquivReport(
            VERDICT_REFUTED,
            tuple(s.name for s in battery),
            counterexample,
            {"tuples_checked": tuples_checked},
        )
    return EquivReport(
        VERDICT_EQUIV,
        tuple(s.name for s in battery),
        None,
        {"tuples_checked": tuples_checked},
    )


# ---------------------------------------------------------------------------
# Collapse harness


def _powers_within_bound(profile: fl.FieldProfile, bound: int, k: int) -> list[fl.RatFunc]:
    """Elements of num/den degree <= bound that are componentwise p^k-th powers."""
    fld = fl.finite_field(profile.q)
    out = []
    for u in se.enumerate_ratfuncs(fld, bound):
        v = u
        ok = True
        for _ in range(k):
            root = fl.pth_root(v, profile)
            if root is None:
                ok = False
                break
            v = root
        if ok:
            out.append(u)
    return out


def _branch_value(xs: list[fl.RatFunc], cfg: cl.CollapseConfig, profile: fl.FieldProfile) -> fl.RatFunc:
    """Accumulated value of the unique branch whose side conditions hold at xs."""
    fld = fl.finite_field(profile.q)
    zero = fl.ratfunc_const(fld, fld.zero)
    g_ast = cfg.g_term(F.Var("X"))
    h_ast = cfg.h_term(F.Var("X"), F.Var("Y"))
    values = list(xs)
    while len(values) > 1:
        last = values[-1]
        g = fl.eval_term(g_ast, {"X": last}, profile)
        if g == zero:
            values = values[:-1]
        else:
            h = fl.eval_term(h_ast, {"X": last, "Y": values[-2]}, profile)
            values = values[:-2] + [h]
    return values[0]


def check_collapse_semantics(
    cfg: cl.CollapseConfig,
    structure: se.Structure,
    degree_bound: int,
    samples: int,
    seed: int = 42,
    mutate: bool = False,
) -> EquivReport:
    """Completeness exhaustively, soundness by seeded sampling.

    (a) every componentwise p^k-th-power tuple within the degree bound must
    be accepted by the emitted one-quantifier formula via witness synthesis;
    (b) seeded pseudo-random (tuple, y) pairs satisfying the collapse matrix
    must have every component pass the p-th power test.  ``mutate`` swaps in
    the absorption polynomial without its linear term, the sensitivity
    control expected to produce violations.
    """
    if structure.profile.kind != fl.KIND_RATFUNC:
        raise ProfileError("the collapse harness runs over rational function fields")
    profile = structure.profile
    if mutate:
        cfg = cl.CollapseConfig(
            p=cfg.p, n=cfg.n, k=cfg.k, mode=cfg.mode, r=cfg.r,
            f_override=cl.good_case_poly_mutated(cfg.p),
        )
    phi = cl.fin_gen_pipeline(cfg)
    stats = {
        "tuples_checked": 0,
        "witnesses_synthesized": 0,
        "completeness_failures": 0,
        "samples_satisfying": 0,
        "sample_attempts": 0,
        "soundness_violations": 0,
    }
    first_failure: dict | None = None

    # (a) completeness: exhaustive over bounded p^k-th power tuples.  The
    # witness is the branch chain evaluated at the componentwise p^k-th
    # roots: the chain has prime-field coefficients, so it commutes with
    # Frobenius, branch selection agrees between a tuple and its roots, and
    # chain(xs) = chain(roots)^(p^k) is an exponent stretch of the small
    # computation.  The matrix evaluation reuses that value through its
    # term cache.  Every 499th tuple is cross-checked against
    # synth_witness plus the reduced-arithmetic evaluator.
    fld0 = structure.field
    np_ev = fl.NPPairEvaluator(cfg.p) if profile.d == 1 else None
    branches = cl.branch_structure(cfg)
    pool = _powers_within_bound(profile, degree_bound, cfg.k)
    pool_roots = []
    for u in pool:
        w = u
        for _ in range(cfg.k):
            w = fl.pth_root(w, profile)
        pool_roots.append(w)
    stretch = cfg.p**cfg.k
    indices = range(len(pool))
    for idx in itertools.product(indices, repeat=cfg.n):
        xs = tuple(pool[i] for i in idx)
        stats["tuples_checked"] += 1
        witness_pair = None
        ok = False
        if np_ev is not None:
            roots = {f"x{i}": np_ev.from_ratfunc(pool_roots[j]) for i, j in enumerate(idx, start=1)}
            root_cache: dict = {}
            chain = None
            selected_term = None
            for conds, value_term in branches:
                if all(se.eval_formula_qf_np(c, roots, np_ev, root_cache) for c in conds):
                    chain = np_ev.term(value_term, roots, root_cache)
                    selected_term = value_term
                    break
            if chain is not None:
                np_assignment = {f"x{i}": np_ev.from_ratfunc(v) for i, v in enumerate(xs, start=1)}
                np_assignment["y"] = chain
                witness_pair = (tuple(int(c) for c in chain[0]), tuple(int(c) for c in chain[1]))
                cache = {selected_term: np_ev.frobenius_stretch(chain, stretch)}
                ok = se.eval_formula_qf_np(phi.matrix, np_assignment, np_ev, cache)
        else:
            witness_pair = cl.synth_witness_pair(list(xs), cfg, profile)
            if witness_pair is not None:
                pair_assignment = {f"x{i}": fl.pair_from_ratfunc(v) for i, v in enumerate(xs, start=1)}
                pair_assignment["y"] = witness_pair
                ok = se.eval_formula_qf_pairs(phi.matrix, pair_assignment, fld0)
        if witness_pair is not None:
            stats["witnesses_synthesized"] += 1
        if ok and stats["tuples_checked"] % 499 == 0:
            witness = cl.synth_witness(list(xs), cfg, profile)
            assert witness is not None and witness == fl.pair_to_ratfunc(fld0, witness_pair)
            assert se.eval_formula_qf(phi.matrix, cl.matrix_assignment(list(xs), witness, cfg), profile)
        if not ok:
            stats["completeness_failures"] += 1
            if first_failure is None:
                first_failure = {
                    "kind": "completeness",
                    "profile": structure.name,
                    "tuple": [se.ratfunc_str(x) for x in xs],
                }

    # (b) soundness: seeded samples of (tuple, y) satisfying the matrix of
    # the k = 1 collapse; the accumulated branch value determines y.
    # Branch replay runs on unreduced fraction pairs (reduction of the
    # deeply nested values would dominate the runtime); y is materialized
    # only for spot checks and recorded violations.
    rng = random.Random(seed)
    base_cfg = cl.CollapseConfig(p=cfg.p, n=cfg.n, k=1, mode=cfg.mode, r=cfg.r, f_override=cfg.f_override)
    matrix = cl.collapse_pth_powers(base_cfg).matrix
    fld = structure.field
    g_ast = base_cfg.g_term(F.Var("X"))
    h_ast = base_cfg.h_term(F.Var("X"), F.Var("Y"))
    elements = list(se.enumerate_ratfuncs(fld, degree_bound))
    element_is_power = [fl.pth_power_test(u, profile) for u in elements]
    ev = fl.NPPairEvaluator(cfg.p) if profile.d == 1 else None
    max_attempts = max(40 * samples, 1000)
    while stats["samples_satisfying"] < samples and stats["sample_attempts"] < max_attempts:
        stats["sample_attempts"] += 1
        xs = []
        xs_are_powers = []
        for _ in range(cfg.n):
            pick = rng.randrange(len(elements))
            u = elements[pick]
            if rng.random() < 0.65:
                xs.append(u**cfg.p)
                xs_are_powers.append(True)
            else:
                xs.append(u)
                xs_are_powers.append(element_is_power[pick])
        if ev is not None:
            pairs = [ev.from_ratfunc(x) for x in xs]
            while len(pairs) > 1:
                last = pairs[-1]
                if ev.is_zero(ev.term(g_ast, {"X": last})):
                    pairs = pairs[:-1]
                else:
                    pairs = pairs[:-2] + [ev.term(h_ast, {"X": last, "Y": pairs[-2]})]
            satisfiable = ev.is_pth_power(pairs[0])
            final_pair = (tuple(int(c) for c in pairs[0][0]), tuple(int(c) for c in pairs[0][1]))
        else:
            pairs = [fl.pair_from_ratfunc(x) for x in xs]
            while len(pairs) > 1:
                g_pair = fl.eval_term_pairs(g_ast, {"X": pairs[-1]}, fld)
                if not g_pair[0]:
                    pairs = pairs[:-1]
                else:
                    merged = fl.eval_term_pairs(h_ast, {"X": pairs[-1], "Y": pairs[-2]}, fld)
                    pairs = pairs[:-2] + [merged]
            satisfiable = fl.pair_is_pth_power(pairs[0], fld, cfg.p)
            final_pair = pairs[0]
        if not satisfiable:
            continue  # no y satisfies the matrix at this tuple
        stats["samples_satisfying"] += 1
        violation = not all(xs_are_powers)
        if violation or stats["samples_satisfying"] % 97 == 0:
            # materialize y and check the replay against the actual matrix
            value = fl.pair_to_ratfunc(fld, final_pair)
            y = fl.pth_root(value, profile)
            assert y is not None and se.eval_formula_qf(
                matrix, cl.matrix_assignment(xs, y, base_cfg), profile
            )
        if violation:
            stats["soundness_violations"] += 1
            if first_failure is None:
                first_failure = {
                    "kind": "soundness",
                    "profile": structure.name,
                    "tuple": [se.ratfunc_str(x) for x in xs],
                    "witness": se.ratfunc_str(y),
                }

    ok = stats["completeness_failures"] == 0 and stats["soundness_violations"] == 0
    verdict = VERDICT_POSITIVE if ok else VERDICT_REFUTED
    return EquivReport(verdict, (structure.name,), first_failure, stats, seed)


# ---------------------------------------------------------------------------
# Value sets of diagonal quadratic forms


def value_set_quadratic(coeffs: list, structure: se.Structure) -> se.DefinableSet:
    """The set of values of c_1*Y_1^2 + ... + c_m*Y_m^2 over F_q, q odd."""
    if not structure.is_finite():
        raise ProfileError("value sets are computed over finite structures")
    if structure.q % 2 == 0:
        raise ProfileError("diagonal quadratic forms need odd q")
    if not coeffs:
        raise ProfileError("the form needs at least one variable")
    fld = structure.field
    cs = [fld.from_int(c) if isinstance(c, int) else c for c in coeffs]
    bitmap = bytearray(structure.q)
    for ys in itertools.product(fld.elements(), repeat=len(cs)):
        total = fld.zero
        for c, y in zip(cs, ys):
            total = fld.add(total, fld.mul(c, fld.mul(y, y)))
        bitmap[fld.index(total)] = 1
    return se.DefinableSet(("x",), structure.q, bytes(bitmap))


# ---------------------------------------------------------------------------
# Formula corpus generation


def generate_corpus(
    seed: int = 20240601,
    size: int = 220,
    max_free: int = 3,
    max_quants: int = 3,
) -> list[F.Formula]:
    """Deterministic corpus of small existential formulas for battery testing.

    Biased toward shapes the passes care about: plain positive-primitive
    conjunctions, disjunction/conjunction mixes, inequations, and nested
    quantifier blocks.
    """
    rng = random.Random(seed)
    free_pool = [f"x{i}" for i in range(1, max_free + 1)]
    bound_pool = [f"w{i}" for i in range(1, max_quants + 1)]

    def rand_term(variables: list[str], depth: int) -> F.Term:
        roll = rng.random()
        if depth <= 0 or roll < 0.4:
            pick = rng.random()
            if pick < 0.65 and variables:
                base: F.Term = F.Var(rng.choice(variables))
                if rng.random() < 0.4:
                    return F.Pow(base, rng.randrange(2, 4))
                return base
            return F.IntLit(rng.randrange(0, 4))
        if roll < 0.65:
            return F.Add(rand_term(variables, depth - 1), rand_term(variables, depth - 1))
        if roll < 0.8:
            return F.Sub(rand_term(variables, depth - 1), rand_term(variables, depth - 1))
        return F.Mul(rand_term(variables, depth - 1), rand_term(variables, depth - 1))

    def rand_atom(variables: list[str]) -> F.Formula:
        left = rand_term(variables, 2)
        right = rand_term(variables, 1)
        if rng.random() < 0.22:
            return F.Ne(left, right)
        return F.Eq(left, right)

    def pp_shape() -> F.Formula:
        n_free = rng.randrange(1, max_free + 1)
        n_bound = rng.randrange(0, max_quants + 1)
        frees = free_pool[:n_free]
        bounds = bound_pool[:n_bound]
        variables = frees + bounds
        atoms = [F.Eq(rand_term(variables, 2), rand_term(variables, 1)) for _ in range(rng.randrange(1, 4))]
        matrix = F.and_all(atoms)
        return F.Exists(tuple(bounds), matrix) if bounds else matrix

    def mixed_shape() -> F.Formula:
        n_free = rng.randrange(1, max_free + 1)
        frees = free_pool[:n_free]

        def build(depth: int, quota: list[int], scope: list[str]) -> F.Formula:
            roll = rng.random()
            if depth <= 0 or roll < 0.35:
                atom = rand_atom(scope)
                if rng.random() < 0.12 and isinstance(atom, F.Eq):
                    return F.Not(atom)
                return atom
            if roll < 0.6:
                return F.And(build(depth - 1, quota, scope), build(depth - 1, quota, scope))
            if roll < 0.82 or quota[0] <= 0:
                return F.Or(build(depth - 1, quota, scope), build(depth - 1, quota, scope))
            take = rng.randrange(1, min(2, quota[0]) + 1)
            names = [bound_pool[max_quants - quota[0] + i] for i in range(take)]
            quota[0] -= take
            return F.Exists(tuple(names), build(depth - 1, quota, scope + names))

        return build(3, [max_quants], list(frees))

    corpus: list[F.Formula] = []
    while len(corpus) < size:
        f = pp_shape() if rng.random() < 0.45 else mixed_shape()
        if not F.is_existential(f):
            continue
        if len(F.free_variables(f)) > max_free or F.quantifier_count(f) > max_quants:
            continue
        corpus.append(f)
    return corpus
