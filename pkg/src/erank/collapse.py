"""One-quantifier formulas for tuples of p-th powers in characteristic p.

The construction: membership of a pair (x, y) in the p-th powers can be
tested through a single polynomial value h(x, y) whenever h has the
absorption property "h(x, y) a p-th power and g(x) nonzero imply x and y
are p-th powers".  Unfolding that reduction n-1 times turns the n
conditions "each x_i is a p-th power" into a disjunction over 2^(n-1)
branches, each demanding that one accumulated value is a p-th power, and a
single shared quantifier handles all branches.  Raising the witness
variable to the p^(k-1) power afterwards upgrades p-th to p^k-th powers,
because Frobenius is an injective endomorphism in characteristic p.

The workhorse absorption polynomial is

    f(X, Y) = X^(p+1)*Y + X^(p+1)*Y^(p^2) + X^(2p+1) + X

whose value, for x not a p-th power, has a valuation not divisible by p at
some discrete valuation unless every valuation of x is divisible by p.
Over fraction fields of UFDs with p-divisible unit group (the ``ufd``
collapse mode, e.g. rational function fields over a finite field) that
degenerate case never occurs and g(X) = X works; the ``general`` mode uses
g(X) = X^r + 1 with a configured r coprime to p.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import fields as fl
from . import formulas as F
from .errors import ProfileError
from .passes import PrenexFormula

MAX_BRANCH_VARS = 16


def pi_formula(n: int, m: int) -> F.Formula:
    """The formula stating each of x1..xn is an m-th power."""
    if n < 1 or m < 1:
        raise ValueError("pi_formula needs n, m >= 1")
    atoms = [F.Eq(F.Var(f"x{i}"), F.Pow(F.Var(f"y{i}"), m)) for i in range(1, n + 1)]
    return F.Exists(tuple(f"y{i}" for i in range(1, n + 1)), F.and_all(atoms))


def good_case_poly(p: int, x: str = "X", y: str = "Y") -> F.Term:
    """The absorption polynomial X^(p+1)*Y + X^(p+1)*Y^(p^2) + X^(2p+1) + X."""
    X, Y = F.Var(x), F.Var(y)
    return F.add_all(
        [
            F.Mul(F.Pow(X, p + 1), Y),
            F.Mul(F.Pow(X, p + 1), F.Pow(Y, p * p)),
            F.Pow(X, 2 * p + 1),
            X,
        ]
    )


def good_case_poly_mutated(p: int, x: str = "X", y: str = "Y") -> F.Term:
    """The absorption polynomial with its final linear term dropped.

    Breaks the absorption property; used as the sensitivity control in the
    soundness harness.
    """
    X, Y = F.Var(x), F.Var(y)
    return F.add_all(
        [
            F.Mul(F.Pow(X, p + 1), Y),
            F.Mul(F.Pow(X, p + 1), F.Pow(Y, p * p)),
            F.Pow(X, 2 * p + 1),
        ]
    )


MODE_UFD = "ufd"
MODE_GENERAL = "general"


@dataclass(frozen=True)
class CollapseConfig:
    """Parameters steering the construction.

    ``mode`` picks g: the identity in ``ufd`` mode, X^r + 1 (p not dividing
    r) in ``general`` mode.  The absorption polynomial h is f(g(X), Y); an
    explicit ``f_override`` replaces f for mutation testing.
    """

    p: int
    n: int
    k: int = 1
    mode: str = MODE_UFD
    r: int = 1
    f_override: F.Term | None = None

    def __post_init__(self):
        if self.p < 2 or any(self.p % i == 0 for i in range(2, int(self.p**0.5) + 1)):
            raise ProfileError(f"{self.p} is not prime")
        if self.n < 1 or self.k < 1:
            raise ProfileError("n and k must be positive")
        if self.n > MAX_BRANCH_VARS:
            raise ProfileError(f"branch unfolding is capped at n = {MAX_BRANCH_VARS}")
        if self.mode not in (MODE_UFD, MODE_GENERAL):
            raise ProfileError(f"unknown collapse mode {self.mode!r}")
        if self.mode == MODE_GENERAL and (self.r < 1 or self.r % self.p == 0):
            raise ProfileError("general mode needs r >= 1 not divisible by p")

    def g_term(self, arg: F.Term) -> F.Term:
        if self.mode == MODE_UFD:
            return arg
        power = arg if self.r == 1 else F.Pow(arg, self.r)
        return F.Add(power, F.IntLit(1))

    def f_term(self) -> F.Term:
        return self.f_override if self.f_override is not None else good_case_poly(self.p)

    def h_term(self, x_arg: F.Term, y_arg: F.Term) -> F.Term:
        """h(x, y) = f(g(x), y)."""
        return F.substitute_term(self.f_term(), {"X": self.g_term(x_arg), "Y": y_arg})


def _branches(cfg: CollapseConfig, args: list[F.Term]) -> list[tuple[list[F.Formula], F.Term]]:
    """Unfold the reduction: (side conditions, final accumulated value)."""
    if len(args) == 1:
        return [([], args[0])]
    last = args[-1]
    g_last = cfg.g_term(last)
    out = []
    for conds, value in _branches(cfg, args[:-1]):
        out.append(([F.Eq(g_last, F.IntLit(0))] + conds, value))
    merged = args[:-2] + [cfg.h_term(last, args[-2])]
    for conds, value in _branches(cfg, merged):
        out.append(([F.Ne(g_last, F.IntLit(0))] + conds, value))
    return out


def branch_structure(cfg: CollapseConfig) -> list[tuple[list[F.Formula], F.Term]]:
    """The 2^(n-1) (side conditions, accumulated value) pairs over x1..xn.

    Exactly the sub-terms the collapse matrix is assembled from, exposed so
    harnesses can select a branch and reuse its value without re-deriving
    the unfolding.
    """
    args: list[F.Term] = [F.Var(f"x{i}") for i in range(1, cfg.n + 1)]
    return _branches(cfg, args)


def collapse_pth_powers(cfg: CollapseConfig) -> PrenexFormula:
    """A one-quantifier formula for n-tuples of p-th powers (k is ignored).

    The matrix is a disjunction over 2^(n-1) branches sharing the single
    bound variable; each branch conjoins its zero/nonzero side conditions
    with "accumulated value = y^p".
    """
    y = F.Var("y")
    branch_formulas = []
    for conds, value in branch_structure(cfg):
        branch_formulas.append(F.and_all(conds + [F.Eq(value, F.Pow(y, cfg.p))]))
    return PrenexFormula(("y",), F.or_all(branch_formulas))


def frobenius_lift(phi: PrenexFormula, p: int, k: int) -> PrenexFormula:
    """Turn a one-quantifier formula for p-th powers into one for p^k-th powers.

    Substitutes y -> y^(p^(k-1)) in the matrix; k = 1 is the identity.
    """
    if k == 1:
        return phi
    if len(phi.bound) != 1:
        raise ProfileError("the lift applies to one-quantifier formulas")
    yname = phi.bound[0]
    lifted = F.substitute(phi.matrix, {yname: F.Pow(F.Var(yname), p ** (k - 1))})
    return PrenexFormula(phi.bound, lifted)


def fin_gen_pipeline(cfg: CollapseConfig) -> PrenexFormula:
    """Collapse with the configured g, then lift to exponent p^k."""
    return frobenius_lift(collapse_pth_powers(cfg), cfg.p, cfg.k)


# ---------------------------------------------------------------------------
# Witness synthesis over F_q(t)


def synth_witness_pair(xs: list[fl.RatFunc], cfg: CollapseConfig, profile: fl.FieldProfile):
    """Witness synthesis returning an unreduced (num, den) fraction.

    Replays the branch recursion on values: each step either drops a
    component with g = 0 or merges the last two through h, and the final
    accumulated value yields the witness by one p-th root.  For k > 1 the
    replay happens at the componentwise p^(k-1)-th roots, which is exactly
    what the substituted matrix demands.  Returns None as soon as any
    component fails the p-th power test at any level.
    """
    if profile.kind != fl.KIND_RATFUNC:
        raise ProfileError("witness synthesis runs over rational function field profiles")
    if profile.p != cfg.p:
        raise ProfileError(f"profile characteristic {profile.p} does not match p = {cfg.p}")
    if len(xs) != cfg.n:
        raise ProfileError(f"expected {cfg.n} components, got {len(xs)}")
    values = list(xs)
    for _ in range(cfg.k - 1):
        rooted = []
        for v in values:
            root = fl.pth_root(v, profile)
            if root is None:
                return None
            rooted.append(root)
        values = rooted
    if any(not fl.pth_power_test(v, profile) for v in values):
        return None

    # the accumulated value grows quickly, so the replay runs on unreduced
    # pairs and the result stays one
    fld = fl.finite_field(profile.q)
    g_ast = cfg.g_term(F.Var("X"))
    h_ast = cfg.h_term(F.Var("X"), F.Var("Y"))
    if profile.d == 1:
        ev = fl.NPPairEvaluator(cfg.p)
        pairs = [ev.from_ratfunc(v) for v in values]
        while len(pairs) > 1:
            last = pairs[-1]
            if ev.is_zero(ev.term(g_ast, {"X": last})):
                pairs = pairs[:-1]
            else:
                pairs = pairs[:-2] + [ev.term(h_ast, {"X": last, "Y": pairs[-2]})]
        root_pair = ev.pth_root(pairs[0])
        if root_pair is None:
            return None
        return (tuple(int(c) for c in root_pair[0]), tuple(int(c) for c in root_pair[1]))
    pairs = [fl.pair_from_ratfunc(v) for v in values]
    while len(pairs) > 1:
        last = pairs[-1]
        g_pair = fl.eval_term_pairs(g_ast, {"X": last}, fld)
        if not g_pair[0]:
            pairs = pairs[:-1]
        else:
            pairs = pairs[:-2] + [fl.eval_term_pairs(h_ast, {"X": last, "Y": pairs[-2]}, fld)]
    return fl.pair_pth_root(pairs[0], fld, cfg.p)


def synth_witness(xs: list[fl.RatFunc], cfg: CollapseConfig, profile: fl.FieldProfile) -> fl.RatFunc | None:
    """Reduced witness for the lifted collapse matrix at a power tuple.

    See synth_witness_pair for the replay; this wrapper normalizes the
    result to the canonical reduced form.
    """
    pair = synth_witness_pair(xs, cfg, profile)
    if pair is None:
        return None
    return fl.pair_to_ratfunc(fl.finite_field(profile.q), pair)


def matrix_assignment(xs: list[fl.RatFunc], witness: fl.RatFunc, cfg: CollapseConfig) -> dict:
    assignment = {f"x{i}": v for i, v in enumerate(xs, start=1)}
    assignment["y"] = witness
    return assignment
