"""AST, parser, printer, and structural utilities for formulas over rings.

Terms are built from variables, named constants, integer literals, ring
operations, and fixed nonnegative integer powers.  Formulas are built from
(in)equalities (plus ``<`` when order is enabled), the boolean connectives,
and existential quantifier blocks.  All values are immutable; every
operation here is a pure function.

Concrete syntax::

    formula := "E" var+ "." formula | disj
    disj    := conj ("|" conj)*
    conj    := neg ("&" neg)*
    neg     := "!" neg | atom | "(" formula ")" | "T" | "F"
    atom    := term ("=" | "!=" | "<") term
    term    := term ("+"|"-") term | term "*" term | factor "^" nat | factor
    factor  := var | "c:" name | integer | "(" term ")"

``E``, ``T``, ``F`` are reserved words.  The identifier ``t`` always denotes
the distinguished transcendental constant of function-field profiles, and is
parsed as a constant, never as a variable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import NonExistentialError, ParseError

# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Term:
    def __str__(self) -> str:
        return format_term(self)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Const(Term):
    """Named constant symbol, written ``c:<name>`` (``t`` abbreviates ``c:t``)."""

    name: str


@dataclass(frozen=True)
class IntLit(Term):
    value: int


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Sub(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Pow(Term):
    base: Term
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("power exponents must be nonnegative")


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Formula:
    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Ne(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Lt(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    variables: tuple[str, ...]
    body: Formula

    def __post_init__(self):
        if not self.variables:
            raise ValueError("exists blocks must bind at least one variable")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("bound variable names must be distinct within one block")


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


TRUTH = Top()
FALSITY = Bottom()

# Construction helpers.  These keep call sites terse when building formulas
# programmatically (the characteristic-p constructions build large ASTs).


def var(name: str) -> Var:
    return Var(name)


def const(name: str) -> Const:
    return Const(name)


def lit(value: int) -> IntLit:
    return IntLit(value)


def add(a: Term, b: Term) -> Term:
    return Add(a, b)


def sub(a: Term, b: Term) -> Term:
    return Sub(a, b)


def mul(a: Term, b: Term) -> Term:
    return Mul(a, b)


def pow_(a: Term, e: int) -> Term:
    return Pow(a, e)


def add_all(terms: list[Term]) -> Term:
    if not terms:
        return IntLit(0)
    acc = terms[0]
    for t in terms[1:]:
        acc = Add(acc, t)
    return acc


def mul_all(terms: list[Term]) -> Term:
    if not terms:
        return IntLit(1)
    acc = terms[0]
    for t in terms[1:]:
        acc = Mul(acc, t)
    return acc


def eq(a: Term, b: Term) -> Formula:
    return Eq(a, b)


def ne(a: Term, b: Term) -> Formula:
    return Ne(a, b)


def and_(a: Formula, b: Formula) -> Formula:
    return And(a, b)


def or_(a: Formula, b: Formula) -> Formula:
    return Or(a, b)


def not_(a: Formula) -> Formula:
    return Not(a)


def exists(variables, body: Formula) -> Formula:
    return Exists(tuple(variables), body)


def and_all(fs: list[Formula]) -> Formula:
    if not fs:
        return TRUTH
    acc = fs[0]
    for f in fs[1:]:
        acc = And(acc, f)
    return acc


def or_all(fs: list[Formula]) -> Formula:
    if not fs:
        return FALSITY
    acc = fs[0]
    for f in fs[1:]:
        acc = Or(acc, f)
    return acc


# ---------------------------------------------------------------------------
# Structural queries


def term_variables(t: Term) -> tuple[str, ...]:
    """Variables of a term in first-occurrence order."""
    seen: dict[str, None] = {}

    def walk(u: Term):
        if isinstance(u, Var):
            seen.setdefault(u.name, None)
        elif isinstance(u, (Add, Sub, Mul)):
            walk(u.left)
            walk(u.right)
        elif isinstance(u, Pow):
            walk(u.base)

    walk(t)
    return tuple(seen)


def term_constants(t: Term) -> tuple[str, ...]:
    seen: dict[str, None] = {}

    def walk(u: Term):
        if isinstance(u, Const):
            seen.setdefault(u.name, None)
        elif isinstance(u, (Add, Sub, Mul)):
            walk(u.left)
            walk(u.right)
        elif isinstance(u, Pow):
            walk(u.base)

    walk(t)
    return tuple(seen)


def free_variables(f: Formula) -> tuple[str, ...]:
    """Variables occurring outside any binding quantifier, in first-occurrence order."""
    seen: dict[str, None] = {}

    def walk(g: Formula, bound: frozenset[str]):
        if isinstance(g, (Eq, Ne, Lt)):
            for name in term_variables(g.left) + term_variables(g.right):
                if name not in bound:
                    seen.setdefault(name, None)
        elif isinstance(g, (And, Or)):
            walk(g.left, bound)
            walk(g.right, bound)
        elif isinstance(g, Not):
            walk(g.body, bound)
        elif isinstance(g, Exists):
            walk(g.body, bound | frozenset(g.variables))

    walk(f, frozenset())
    return tuple(seen)


def formula_constants(f: Formula) -> tuple[str, ...]:
    seen: dict[str, None] = {}

    def walk(g: Formula):
        if isinstance(g, (Eq, Ne, Lt)):
            for name in term_constants(g.left) + term_constants(g.right):
                seen.setdefault(name, None)
        elif isinstance(g, (And, Or)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, Exists):
            walk(g.body)

    walk(f)
    return tuple(seen)


def all_variable_names(f: Formula) -> frozenset[str]:
    """Every variable name occurring in f, free or bound."""
    names: set[str] = set()

    def walk(g: Formula):
        if isinstance(g, (Eq, Ne, Lt)):
            names.update(term_variables(g.left))
            names.update(term_variables(g.right))
        elif isinstance(g, (And, Or)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, Exists):
            names.update(g.variables)
            walk(g.body)

    walk(f)
    return frozenset(names)


def is_atom(f: Formula) -> bool:
    return isinstance(f, (Eq, Ne, Lt, Top, Bottom))


def is_existential(f: Formula) -> bool:
    """True iff f contains no ``<`` and every negation applies to an atom.

    The flag is recomputed on every call, never cached.
    """
    if isinstance(f, Lt):
        return False
    if isinstance(f, (Eq, Ne, Top, Bottom)):
        return True
    if isinstance(f, Not):
        return is_atom(f.body) and is_existential(f.body)
    if isinstance(f, (And, Or)):
        return is_existential(f.left) and is_existential(f.right)
    if isinstance(f, Exists):
        return is_existential(f.body)
    raise TypeError(f"not a formula node: {f!r}")


def is_quantifier_free(f: Formula) -> bool:
    if isinstance(f, Exists):
        return False
    if isinstance(f, (And, Or)):
        return is_quantifier_free(f.left) and is_quantifier_free(f.right)
    if isinstance(f, Not):
        return is_quantifier_free(f.body)
    return True


def quantifier_count(f: Formula) -> int:
    """Raw number of existentially bound variables in f.

    For a prenex formula this is the length of its quantifier block; for a
    non-prenex formula prenexing with quantifier sharing may produce fewer.
    """
    if not is_existential(f):
        raise NonExistentialError(f"quantifier_count requires an existential formula, got {f}")

    def count(g: Formula) -> int:
        if isinstance(g, Exists):
            return len(g.variables) + count(g.body)
        if isinstance(g, (And, Or)):
            return count(g.left) + count(g.right)
        if isinstance(g, Not):
            return count(g.body)
        return 0

    return count(f)


# ---------------------------------------------------------------------------
# Substitution


def substitute_term(t: Term, mapping: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Add):
        return Add(substitute_term(t.left, mapping), substitute_term(t.right, mapping))
    if isinstance(t, Sub):
        return Sub(substitute_term(t.left, mapping), substitute_term(t.right, mapping))
    if isinstance(t, Mul):
        return Mul(substitute_term(t.left, mapping), substitute_term(t.right, mapping))
    if isinstance(t, Pow):
        return Pow(substitute_term(t.base, mapping), t.exponent)
    return t


def _fresh_name(base: str, taken) -> str:
    if base not in taken:
        return base
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def substitute(f: Formula, mapping: dict[str, Term]) -> Formula:
    """Simultaneous capture-avoiding substitution of terms for free variables.

    Binders that would capture a variable of a substituted term are renamed
    automatically.
    """
    if not mapping:
        return f
    if isinstance(f, Eq):
        return Eq(substitute_term(f.left, mapping), substitute_term(f.right, mapping))
    if isinstance(f, Ne):
        return Ne(substitute_term(f.left, mapping), substitute_term(f.right, mapping))
    if isinstance(f, Lt):
        return Lt(substitute_term(f.left, mapping), substitute_term(f.right, mapping))
    if isinstance(f, And):
        return And(substitute(f.left, mapping), substitute(f.right, mapping))
    if isinstance(f, Or):
        return Or(substitute(f.left, mapping), substitute(f.right, mapping))
    if isinstance(f, Not):
        return Not(substitute(f.body, mapping))
    if isinstance(f, Exists):
        inner = {k: v for k, v in mapping.items() if k not in f.variables}
        if not inner:
            return f
        incoming = set()
        for replacement in inner.values():
            incoming.update(term_variables(replacement))
        body = f.body
        new_vars = list(f.variables)
        renames: dict[str, Term] = {}
        taken = incoming | all_variable_names(body) | set(inner)
        for i, v in enumerate(f.variables):
            if v in incoming:
                fresh = _fresh_name(v, taken)
                taken.add(fresh)
                renames[v] = Var(fresh)
                new_vars[i] = fresh
        if renames:
            body = substitute(body, renames)
        return Exists(tuple(new_vars), substitute(body, inner))
    return f


def promote_free_vars(f: Formula, names) -> Formula:
    """Turn the listed free variables into fresh constant symbols.

    The resulting formula no longer has those variables free; quantifier
    structure is untouched, so all rank figures are unchanged.
    """
    names = list(names)
    free = set(free_variables(f))
    for name in names:
        if name not in free:
            raise ValueError(f"variable {name!r} is not free in the formula")
    existing = set(formula_constants(f))
    mapping: dict[str, Term] = {}
    for name in names:
        cname = _fresh_name(name, existing)
        existing.add(cname)
        mapping[name] = Const(cname)
    return substitute(f, mapping)


# ---------------------------------------------------------------------------
# Canonical form


def canonicalize(f: Formula, prefix: str = "y") -> Formula:
    """Flatten nested quantifier blocks and rename binders to y1, y2, ...

    Canonical names never collide with free variables; when the default pool
    is taken the index simply keeps increasing.  Output is deterministic,
    which keeps golden tests stable.
    """
    avoid = set(free_variables(f))
    counter = [0]

    def next_name() -> str:
        while True:
            counter[0] += 1
            name = f"{prefix}{counter[0]}"
            if name not in avoid:
                return name

    def walk(g: Formula) -> Formula:
        if isinstance(g, Exists):
            block: list[str] = []
            body = g
            renames: dict[str, Term] = {}
            while isinstance(body, Exists):
                for v in body.variables:
                    fresh = next_name()
                    block.append(fresh)
                    renames[v] = Var(fresh)
                inner = substitute(body.body, renames)
                body = inner
                renames = {}
            return Exists(tuple(block), walk(body))
        if isinstance(g, And):
            return And(walk(g.left), walk(g.right))
        if isinstance(g, Or):
            return Or(walk(g.left), walk(g.right))
        if isinstance(g, Not):
            return Not(walk(g.body))
        return g

    return walk(f)


# ---------------------------------------------------------------------------
# Printing

_TERM_ATOM = 4
_TERM_POW = 3
_TERM_MUL = 2
_TERM_ADD = 1


def _fmt_term(t: Term, level: int) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return "t" if t.name == "t" else f"c:{t.name}"
    if isinstance(t, IntLit):
        s = str(t.value)
        return s if t.value >= 0 else f"({s})"
    if isinstance(t, (Add, Sub)):
        # binary +/- are left-associative in the grammar, so a right operand
        # that is itself additive needs parens for the text to reparse to
        # the same tree
        op = "+" if isinstance(t, Add) else "-"
        left = _fmt_term(t.left, _TERM_ADD)
        right = _fmt_term(t.right, _TERM_MUL)
        s = f"{left} {op} {right}"
        return f"({s})" if level > _TERM_ADD else s
    if isinstance(t, Mul):
        s = f"{_fmt_term(t.left, _TERM_MUL)}*{_fmt_term(t.right, _TERM_POW)}"
        return f"({s})" if level > _TERM_MUL else s
    if isinstance(t, Pow):
        base = _fmt_term(t.base, _TERM_ATOM)
        if not isinstance(t.base, (Var, Const, IntLit)):
            base = f"({_fmt_term(t.base, 0)})"
        s = f"{base}^{t.exponent}"
        return s
    raise TypeError(f"not a term node: {t!r}")


def format_term(t: Term) -> str:
    return _fmt_term(t, 0)


_F_OR = 1
_F_AND = 2
_F_NEG = 3


def _fmt_formula(f: Formula, level: int) -> str:
    if isinstance(f, Top):
        return "T"
    if isinstance(f, Bottom):
        return "F"
    if isinstance(f, Eq):
        return f"{format_term(f.left)} = {format_term(f.right)}"
    if isinstance(f, Ne):
        return f"{format_term(f.left)} != {format_term(f.right)}"
    if isinstance(f, Lt):
        return f"{format_term(f.left)} < {format_term(f.right)}"
    if isinstance(f, Not):
        body = f.body
        if is_atom(body) and not isinstance(body, (Top, Bottom)):
            return f"!({_fmt_formula(body, 0)})"
        return f"!{_fmt_formula(body, _F_NEG)}"
    if isinstance(f, And):
        # connectives are left-associative; right-nested trees keep parens
        s = f"{_fmt_formula(f.left, _F_AND)} & {_fmt_formula(f.right, _F_NEG)}"
        return f"({s})" if level > _F_AND else s
    if isinstance(f, Or):
        s = f"{_fmt_formula(f.left, _F_OR)} | {_fmt_formula(f.right, _F_AND)}"
        return f"({s})" if level > _F_OR else s
    if isinstance(f, Exists):
        # nested blocks print flattened: E a . E b . phi  ->  E a b . phi
        names = list(f.variables)
        body = f.body
        while isinstance(body, Exists) and not set(body.variables) & set(names):
            names.extend(body.variables)
            body = body.body
        # a shadowing inner block survives the loop and must keep its parens
        inner = _fmt_formula(body, 1) if isinstance(body, Exists) else _fmt_formula(body, 0)
        s = f"E {' '.join(names)} . {inner}"
        return f"({s})" if level > 0 else s
    raise TypeError(f"not a formula node: {f!r}")


def format_formula(f: Formula) -> str:
    """Canonical text form; reparsing yields the same AST up to binder flattening."""
    return _fmt_formula(f, 0)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<const>c:[A-Za-z_][A-Za-z0-9_]*)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>!=|[-+*^=<&|!().])
    """,
    re.VERBOSE,
)

_RESERVED = {"E", "T", "F"}


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []  # (kind, value, offset)
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                line, col = _line_col(text, pos)
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            pos = m.end()
            kind = m.lastgroup
            if kind == "ws":
                continue
            self.toks.append((kind, m.group(), m.start()))
        self.i = 0

    def peek(self) -> tuple[str, str] | None:
        if self.i < len(self.toks):
            kind, value, _ = self.toks[self.i]
            return kind, value
        return None

    def next(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of input")
        self.i += 1
        return tok

    def accept(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        if tok is None or tok[0] != kind or (value is not None and tok[1] != value):
            return False
        self.i += 1
        return True

    def expect(self, kind: str, value: str | None = None) -> str:
        tok = self.peek()
        if tok is None or tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            got = tok[1] if tok else "end of input"
            self.error(f"expected {want!r}, got {got!r}")
        self.i += 1
        return tok[1]

    def error(self, message: str):
        offset = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
        line, col = _line_col(self.text, offset)
        raise ParseError(message, line, col)


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1)
    return line, col


def _parse_factor(ts: _Tokens) -> Term:
    tok = ts.peek()
    if tok is None:
        ts.error("expected a term")
    kind, value = tok
    if kind == "num":
        ts.next()
        return IntLit(int(value))
    if kind == "const":
        ts.next()
        return Const(value[2:])
    if kind == "id":
        if value in _RESERVED:
            ts.error(f"{value!r} is reserved and cannot appear in a term")
        ts.next()
        if value == "t":
            return Const("t")
        return Var(value)
    if kind == "op" and value == "(":
        ts.next()
        t = _parse_term(ts)
        ts.expect("op", ")")
        return t
    ts.error(f"expected a term, got {value!r}")


def _parse_power(ts: _Tokens) -> Term:
    t = _parse_factor(ts)
    while ts.accept("op", "^"):
        exp = ts.expect("num")
        t = Pow(t, int(exp))
    return t


def _parse_product(ts: _Tokens) -> Term:
    t = _parse_power(ts)
    while ts.accept("op", "*"):
        t = Mul(t, _parse_power(ts))
    return t


def _parse_term(ts: _Tokens) -> Term:
    t = _parse_product(ts)
    while True:
        if ts.accept("op", "+"):
            t = Add(t, _parse_product(ts))
        elif ts.accept("op", "-"):
            t = Sub(t, _parse_product(ts))
        else:
            return t


def _parse_atom(ts: _Tokens, order_enabled: bool) -> Formula:
    left = _parse_term(ts)
    tok = ts.peek()
    if tok is None or tok[0] != "op" or tok[1] not in ("=", "!=", "<"):
        ts.error("expected '=', '!=' or '<' after term")
    ts.next()
    right = _parse_term(ts)
    if tok[1] == "=":
        return Eq(left, right)
    if tok[1] == "!=":
        return Ne(left, right)
    if not order_enabled:
        ts.error("'<' atoms are only allowed when order is enabled")
    return Lt(left, right)


def _parse_neg(ts: _Tokens, order_enabled: bool) -> Formula:
    if ts.accept("op", "!"):
        return Not(_parse_neg(ts, order_enabled))
    tok = ts.peek()
    if tok is None:
        ts.error("expected a formula")
    kind, value = tok
    if kind == "id" and value == "T":
        ts.next()
        return TRUTH
    if kind == "id" and value == "F":
        ts.next()
        return FALSITY
    if kind == "op" and value == "(":
        # Could open a parenthesized formula or a parenthesized term inside
        # an atom; try the atom reading first and fall back.
        saved = ts.i
        try:
            return _parse_atom(ts, order_enabled)
        except ParseError:
            ts.i = saved
        ts.next()
        f = _parse_formula(ts, order_enabled)
        ts.expect("op", ")")
        return f
    return _parse_atom(ts, order_enabled)


def _parse_conj(ts: _Tokens, order_enabled: bool) -> Formula:
    f = _parse_neg(ts, order_enabled)
    while ts.accept("op", "&"):
        f = And(f, _parse_neg(ts, order_enabled))
    return f


def _parse_disj(ts: _Tokens, order_enabled: bool) -> Formula:
    f = _parse_conj(ts, order_enabled)
    while ts.accept("op", "|"):
        f = Or(f, _parse_conj(ts, order_enabled))
    return f


def _parse_formula(ts: _Tokens, order_enabled: bool) -> Formula:
    tok = ts.peek()
    if tok == ("id", "E"):
        ts.next()
        names: list[str] = []
        while True:
            nxt = ts.peek()
            if nxt is not None and nxt[0] == "id" and nxt[1] not in _RESERVED and nxt[1] != "t":
                ts.next()
                names.append(nxt[1])
            else:
                break
        if not names:
            ts.error("expected at least one bound variable after 'E'")
        ts.expect("op", ".")
        body = _parse_formula(ts, order_enabled)
        return Exists(tuple(names), body)
    return _parse_disj(ts, order_enabled)


def parse_formula(text: str, order_enabled: bool = False) -> Formula:
    """Parse formula text; raises ParseError with line/column on bad input."""
    ts = _Tokens(text)
    f = _parse_formula(ts, order_enabled)
    if ts.peek() is not None:
        ts.error(f"trailing input {ts.peek()[1]!r}")
    return f


def parse_term(text: str) -> Term:
    ts = _Tokens(text)
    t = _parse_term(ts)
    if ts.peek() is not None:
        ts.error(f"trailing input {ts.peek()[1]!r}")
    return t
