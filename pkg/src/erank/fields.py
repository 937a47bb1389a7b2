"""Exact arithmetic for the supported coefficient structures.

Covers prime fields, finite extension fields (as polynomial quotients with a
deterministically chosen irreducible modulus), rationals, and rational
function fields, together with the characteristic-p predicates used by the
one-quantifier power collapse: p-th power membership, p-th roots, and the
p-basis decomposition of F_p(t).

Finite field elements are represented as coefficient tuples over the base
field (prime field elements are plain ints).  Every field object is cached,
so structural equality of elements is meaningful across call sites.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import formulas as F
from .errors import EvalError, ProfileError

# ---------------------------------------------------------------------------
# Finite fields


class PrimeField:
    """F_p with elements represented as ints in [0, p)."""

    def __init__(self, p: int):
        if p < 2 or any(p % k == 0 for k in range(2, int(p**0.5) + 1)):
            raise ProfileError(f"{p} is not prime")
        self.p = p
        self.char = p
        self.order = p
        self.degree = 1
        self.zero = 0
        self.one = 1

    def elements(self):
        return range(self.p)

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of 0")
        return pow(a, self.p - 2, self.p)

    def pow(self, a, e: int):
        return pow(a, e, self.p)

    def from_int(self, k: int):
        return k % self.p

    def index(self, a) -> int:
        return a

    def from_index(self, i: int):
        return i

    def __repr__(self):
        return f"GF({self.p})"


class ExtField:
    """Degree-d extension of a base field, modulo a fixed irreducible polynomial.

    Elements are length-d tuples of base elements (coefficients of
    1, a, ..., a^(d-1) where a is the class of the quotient variable).
    Enumeration order is lexicographic in these coefficients with the
    constant coefficient least significant, so indices 0..p-1 are the prime
    subfield.
    """

    def __init__(self, base, modulus: tuple):
        self.base = base
        self.modulus = tuple(modulus)  # coefficients of Z^0..Z^(d-1); leading 1 implicit
        self.degree = len(modulus)
        if self.degree < 2:
            raise ProfileError("extension degree must be at least 2")
        if not _poly_is_irreducible(base, self.modulus + (base.one,)):
            raise ProfileError("modulus is reducible")
        self.char = base.char
        self.order = base.order**self.degree
        self.zero = (base.zero,) * self.degree
        self.one = (base.one,) + (base.zero,) * (self.degree - 1)
        self.generator = (base.zero, base.one) + (base.zero,) * (self.degree - 2)

    def elements(self):
        return (self.from_index(i) for i in range(self.order))

    def add(self, a, b):
        return tuple(self.base.add(x, y) for x, y in zip(a, b))

    def sub(self, a, b):
        return tuple(self.base.sub(x, y) for x, y in zip(a, b))

    def neg(self, a):
        return tuple(self.base.neg(x) for x in a)

    def mul(self, a, b):
        base = self.base
        d = self.degree
        raw = [base.zero] * (2 * d - 1)
        for i, x in enumerate(a):
            if x == base.zero:
                continue
            for j, y in enumerate(b):
                raw[i + j] = base.add(raw[i + j], base.mul(x, y))
        # reduce modulo Z^d = -modulus
        for k in range(2 * d - 2, d - 1, -1):
            c = raw[k]
            if c == base.zero:
                continue
            raw[k] = base.zero
            for j, m in enumerate(self.modulus):
                raw[k - d + j] = base.sub(raw[k - d + j], base.mul(c, m))
        return tuple(raw[:d])

    def pow(self, a, e: int):
        result = self.one
        acc = a
        while e:
            if e & 1:
                result = self.mul(result, acc)
            acc = self.mul(acc, acc)
            e >>= 1
        return result

    def inv(self, a):
        if a == self.zero:
            raise ZeroDivisionError("inverse of 0")
        return self.pow(a, self.order - 2)

    def from_int(self, k: int):
        return (self.base.from_int(k),) + (self.base.zero,) * (self.degree - 1)

    def index(self, a) -> int:
        i = 0
        for c in reversed(a):
            i = i * self.base.order + self.base.index(c)
        return i

    def from_index(self, i: int):
        coeffs = []
        for _ in range(self.degree):
            coeffs.append(self.base.from_index(i % self.base.order))
            i //= self.base.order
        return tuple(coeffs)

    def __repr__(self):
        return f"GF({self.base.order}^{self.degree})"


# Univariate polynomial helpers.  Polynomials over a field are tuples of
# coefficients, low degree first, with no trailing zeros; () is the zero
# polynomial.


def pnormalize(f, coeffs) -> tuple:
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == f.zero:
        coeffs.pop()
    return tuple(coeffs)


def pdeg(coeffs) -> int:
    return len(coeffs) - 1


def padd(f, a, b) -> tuple:
    n = max(len(a), len(b))
    out = []
    for i in range(n):
        x = a[i] if i < len(a) else f.zero
        y = b[i] if i < len(b) else f.zero
        out.append(f.add(x, y))
    return pnormalize(f, out)


def psub(f, a, b) -> tuple:
    n = max(len(a), len(b))
    out = []
    for i in range(n):
        x = a[i] if i < len(a) else f.zero
        y = b[i] if i < len(b) else f.zero
        out.append(f.sub(x, y))
    return pnormalize(f, out)


def pmul(f, a, b) -> tuple:
    if not a or not b:
        return ()
    if isinstance(f, PrimeField) and len(a) + len(b) > 24:
        # products of long polynomials dominate the sampling harnesses;
        # coefficients are ints < p, so plain integer convolution is exact
        import numpy as _np

        out = _np.convolve(_np.array(a, dtype=_np.int64), _np.array(b, dtype=_np.int64)) % f.p
        return pnormalize(f, out.tolist())
    out = [f.zero] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == f.zero:
            continue
        for j, y in enumerate(b):
            out[i + j] = f.add(out[i + j], f.mul(x, y))
    return pnormalize(f, out)


def pscale(f, a, c) -> tuple:
    return pnormalize(f, tuple(f.mul(x, c) for x in a))


def ppow(f, a, e: int) -> tuple:
    result = (f.one,)
    acc = a
    while e:
        if e & 1:
            result = pmul(f, result, acc)
        acc = pmul(f, acc, acc)
        e >>= 1
    return result


def pdivmod(f, a, b) -> tuple[tuple, tuple]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if isinstance(f, PrimeField) and len(a) > 48:
        return _pdivmod_np(f, a, b)
    inv_lead = f.inv(b[-1])
    rem = list(a)
    quot = [f.zero] * max(len(a) - len(b) + 1, 0)
    while len(rem) >= len(b) and any(c != f.zero for c in rem):
        while rem and rem[-1] == f.zero:
            rem.pop()
        if len(rem) < len(b):
            break
        shift = len(rem) - len(b)
        c = f.mul(rem[-1], inv_lead)
        quot[shift] = c
        for i, bc in enumerate(b):
            rem[shift + i] = f.sub(rem[shift + i], f.mul(c, bc))
    return pnormalize(f, quot), pnormalize(f, rem)


def _pdivmod_np(f, a, b) -> tuple[tuple, tuple]:
    import numpy as np

    p = f.p
    rem = np.array(a, dtype=np.int64)
    barr = np.array(b, dtype=np.int64)
    nb = len(b)
    inv_lead = f.inv(b[-1])
    quot = np.zeros(max(len(a) - nb + 1, 0), dtype=np.int64)
    for shift in range(len(a) - nb, -1, -1):
        c = rem[shift + nb - 1] * inv_lead % p
        if c:
            quot[shift] = c
            rem[shift : shift + nb] = (rem[shift : shift + nb] - c * barr) % p
    return pnormalize(f, quot.tolist()), pnormalize(f, rem.tolist())


def pgcd(f, a, b) -> tuple:
    """Monic gcd."""
    while b:
        _, r = pdivmod(f, a, b)
        a, b = b, r
    if not a:
        return ()
    return pscale(f, a, f.inv(a[-1]))


def pmonic(f, a) -> tuple:
    if not a:
        return ()
    return pscale(f, a, f.inv(a[-1]))


def pderiv(f, a) -> tuple:
    out = []
    for i in range(1, len(a)):
        c = a[i]
        k = i % f.char if f.char else i
        out.append(f.mul(c, f.from_int(k)))
    return pnormalize(f, out)


def peval(f, a, x):
    acc = f.zero
    for c in reversed(a):
        acc = f.add(f.mul(acc, x), c)
    return acc


def _poly_is_irreducible(f, coeffs: tuple) -> bool:
    """Trial division by every monic polynomial of degree up to deg/2."""
    d = pdeg(coeffs)
    if d < 1:
        return False
    if d == 1:
        return True
    for k in range(1, d // 2 + 1):
        for idx in range(f.order**k):
            divisor = _decode_monic(f, k, idx)
            _, r = pdivmod(f, coeffs, divisor)
            if not r:
                return False
    return True


def _decode_monic(f, degree: int, idx: int) -> tuple:
    coeffs = []
    for _ in range(degree):
        coeffs.append(f.from_index(idx % f.order))
        idx //= f.order
    coeffs.append(f.one)
    return tuple(coeffs)


def lowest_irreducible(f, degree: int) -> tuple:
    """First irreducible monic polynomial of the given degree in index order.

    Index order compares the coefficient vector with the leading side most
    significant, so the choice is reproducible across runs and platforms.
    """
    for idx in range(f.order**degree):
        cand = _decode_monic(f, degree, idx)
        if _poly_is_irreducible(f, cand):
            return cand
    raise ProfileError(f"no irreducible polynomial of degree {degree} found")


@lru_cache(maxsize=None)
def prime_field(p: int) -> PrimeField:
    return PrimeField(p)


@lru_cache(maxsize=None)
def finite_field(q: int):
    """The field with q elements; the modulus is the lowest irreducible one."""
    p = _smallest_prime_factor(q)
    d = 0
    m = q
    while m > 1:
        if m % p:
            raise ProfileError(f"{q} is not a prime power")
        m //= p
        d += 1
    base = prime_field(p)
    if d == 1:
        return base
    return ExtField(base, lowest_irreducible(base, d)[:-1])


@lru_cache(maxsize=None)
def extension_field(base_q: int, k: int):
    """Degree-k extension of F_q, base elements embedding as constants."""
    base = finite_field(base_q)
    if k == 1:
        return base
    return ExtField(base, lowest_irreducible(base, k)[:-1])


def _smallest_prime_factor(n: int) -> int:
    if n < 2:
        raise ProfileError(f"{n} is not a prime power")
    k = 2
    while k * k <= n:
        if n % k == 0:
            return k
        k += 1
    return n


# ---------------------------------------------------------------------------
# Rational functions over F_q


@dataclass(frozen=True)
class RatFunc:
    """Reduced fraction of univariate polynomials over a finite field.

    The denominator is monic and coprime to the numerator; equality is
    therefore structural.  Construct through :func:`ratfunc`.
    """

    q: int
    num: tuple
    den: tuple

    @property
    def field(self):
        return finite_field(self.q)

    def __add__(self, other):
        f = self.field
        return ratfunc(
            f,
            padd(f, pmul(f, self.num, other.den), pmul(f, other.num, self.den)),
            pmul(f, self.den, other.den),
        )

    def __sub__(self, other):
        f = self.field
        return ratfunc(
            f,
            psub(f, pmul(f, self.num, other.den), pmul(f, other.num, self.den)),
            pmul(f, self.den, other.den),
        )

    def __mul__(self, other):
        f = self.field
        return ratfunc(f, pmul(f, self.num, other.num), pmul(f, self.den, other.den))

    def __truediv__(self, other):
        if not other.num:
            raise ZeroDivisionError("division by the zero rational function")
        f = self.field
        return ratfunc(f, pmul(f, self.num, other.den), pmul(f, self.den, other.num))

    def __neg__(self):
        f = self.field
        return ratfunc(f, tuple(f.neg(c) for c in self.num), self.den)

    def __pow__(self, e: int):
        f = self.field
        return ratfunc(f, ppow(f, self.num, e), ppow(f, self.den, e))

    def is_zero(self) -> bool:
        return not self.num

    def max_degree(self) -> int:
        return max(pdeg(self.num), pdeg(self.den), 0)


def ratfunc(f, num, den) -> RatFunc:
    if not den:
        raise ZeroDivisionError("zero denominator")
    num = pnormalize(f, num)
    den = pnormalize(f, den)
    if not num:
        return RatFunc(f.order, (), (f.one,))
    g = pgcd(f, num, den)
    if pdeg(g) > 0:
        num, _ = pdivmod(f, num, g)
        den, _ = pdivmod(f, den, g)
    lead = den[-1]
    if lead != f.one:
        c = f.inv(lead)
        num = pscale(f, num, c)
        den = pscale(f, den, c)
    return RatFunc(f.order, num, den)


def ratfunc_from_int(f, k: int) -> RatFunc:
    c = f.from_int(k)
    return RatFunc(f.order, (c,) if c != f.zero else (), (f.one,))


def ratfunc_t(f) -> RatFunc:
    return RatFunc(f.order, (f.zero, f.one), (f.one,))


def ratfunc_const(f, c) -> RatFunc:
    return RatFunc(f.order, (c,) if c != f.zero else (), (f.one,))


# ---------------------------------------------------------------------------
# Field profiles


KIND_FINITE = "finite"
KIND_RATIONALS = "rationals"
KIND_RATFUNC = "rational_function"
KIND_ABSTRACT = "abstract_char"
KIND_RCF = "rcf"


@dataclass(frozen=True)
class FieldProfile:
    """Declarative description of the target structure.

    ``collapse_mode`` selects the shape of g in the one-quantifier power
    collapse: ``ufd`` (g = X, valid when every element whose valuations are
    all divisible by p is already a p-th power, e.g. rational function fields
    over a finite field) or ``general`` with a configured exponent r coprime
    to p (g = X^r + 1).
    """

    kind: str
    p: int = 0
    d: int = 1
    perfect: bool = True
    has_order: bool = False
    collapse_mode: str = "none"
    collapse_r: int = 0
    name: str = ""

    @property
    def q(self) -> int:
        return self.p**self.d

    def is_finite(self) -> bool:
        return self.kind == KIND_FINITE

    def supports_eval(self) -> bool:
        return self.kind in (KIND_FINITE, KIND_RATIONALS, KIND_RATFUNC)

    def theory_tag(self) -> str:
        if self.kind == KIND_ABSTRACT:
            return f"char_p({self.p})" if self.p else "T_fields"
        if self.kind == KIND_RCF:
            return "RCF"
        return self.name


def finite_profile(q: int) -> FieldProfile:
    fld = finite_field(q)
    return FieldProfile(KIND_FINITE, p=fld.char, d=fld.degree, perfect=True, name=f"F{q}")


def rationals_profile() -> FieldProfile:
    return FieldProfile(KIND_RATIONALS, perfect=True, name="Q")


def ratfunc_profile(q: int, collapse_mode: str = "ufd", r: int = 0) -> FieldProfile:
    fld = finite_field(q)
    if collapse_mode == "general":
        if r < 1 or r % fld.char == 0:
            raise ProfileError("general collapse mode needs r >= 1 not divisible by p")
    elif collapse_mode != "ufd":
        raise ProfileError(f"unknown collapse mode {collapse_mode!r}")
    return FieldProfile(
        KIND_RATFUNC,
        p=fld.char,
        d=fld.degree,
        perfect=False,
        collapse_mode=collapse_mode,
        collapse_r=r,
        name=f"F{q}t",
    )


def abstract_profile(p: int = 0) -> FieldProfile:
    if p and p != _smallest_prime_factor(p):
        raise ProfileError(f"{p} is not prime")
    return FieldProfile(KIND_ABSTRACT, p=p, perfect=(p == 0), name=f"char{p}")


def rcf_profile() -> FieldProfile:
    return FieldProfile(KIND_RCF, perfect=True, has_order=True, name="RCF")


def parse_profile(spec: str) -> FieldProfile:
    """Parse CLI profile names: Q, F<q>, F<q>t, RCF."""
    spec = spec.strip()
    if spec == "Q":
        return rationals_profile()
    if spec == "RCF":
        return rcf_profile()
    m = re.fullmatch(r"F(\d+)(t?)", spec)
    if m is None:
        raise ProfileError(f"unknown profile {spec!r}")
    q = int(m.group(1))
    if m.group(2):
        return ratfunc_profile(q)
    return finite_profile(q)


def profile_field(profile: FieldProfile):
    """Coefficient field object for finite and function-field profiles."""
    if profile.kind not in (KIND_FINITE, KIND_RATFUNC):
        raise ProfileError(f"profile {profile.name} has no finite coefficient field")
    return finite_field(profile.q)


# ---------------------------------------------------------------------------
# Term evaluation over a profile


def eval_term(term: F.Term, assignment: dict, profile: FieldProfile, constants: dict | None = None):
    """Exact value of a term under the profile's ring operations.

    ``assignment`` maps variable names to elements, ``constants`` maps
    constant symbols (the builtin ``t`` and, for extension fields, the
    generator ``a`` are resolved automatically).
    """
    if not profile.supports_eval():
        raise ProfileError(f"profile {profile.name} does not support evaluation")
    ops = _profile_ops(profile)
    return _eval(term, assignment, ops, constants or {})


class _FiniteOps:
    def __init__(self, fld):
        self.fld = fld

    def from_int(self, k):
        return self.fld.from_int(k)

    def add(self, a, b):
        return self.fld.add(a, b)

    def sub(self, a, b):
        return self.fld.sub(a, b)

    def mul(self, a, b):
        return self.fld.mul(a, b)

    def pow(self, a, e):
        return self.fld.pow(a, e)

    def builtin_const(self, name):
        if name == "a" and self.fld.degree > 1:
            return self.fld.generator
        return None


class _RationalOps:
    def from_int(self, k):
        return Fraction(k)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def pow(self, a, e):
        return a**e

    def builtin_const(self, name):
        return None


class _RatFuncOps:
    def __init__(self, fld):
        self.fld = fld

    def from_int(self, k):
        return ratfunc_from_int(self.fld, k)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def pow(self, a, e):
        return a**e

    def builtin_const(self, name):
        if name == "t":
            return ratfunc_t(self.fld)
        if name == "a" and self.fld.degree > 1:
            return ratfunc_const(self.fld, self.fld.generator)
        return None


def _profile_ops(profile: FieldProfile):
    if profile.kind == KIND_FINITE:
        return _FiniteOps(finite_field(profile.q))
    if profile.kind == KIND_RATIONALS:
        return _RationalOps()
    if profile.kind == KIND_RATFUNC:
        return _RatFuncOps(finite_field(profile.q))
    raise ProfileError(f"profile {profile.name} does not support evaluation")


def _eval(term: F.Term, assignment: dict, ops, constants: dict):
    if isinstance(term, F.Var):
        if term.name not in assignment:
            raise EvalError(f"no value assigned to variable {term.name!r}")
        return assignment[term.name]
    if isinstance(term, F.Const):
        if term.name in constants:
            return constants[term.name]
        builtin = ops.builtin_const(term.name)
        if builtin is None:
            raise EvalError(f"no value assigned to constant {term.name!r}")
        return builtin
    if isinstance(term, F.IntLit):
        return ops.from_int(term.value)
    if isinstance(term, F.Add):
        return ops.add(_eval(term.left, assignment, ops, constants), _eval(term.right, assignment, ops, constants))
    if isinstance(term, F.Sub):
        return ops.sub(_eval(term.left, assignment, ops, constants), _eval(term.right, assignment, ops, constants))
    if isinstance(term, F.Mul):
        return ops.mul(_eval(term.left, assignment, ops, constants), _eval(term.right, assignment, ops, constants))
    if isinstance(term, F.Pow):
        return ops.pow(_eval(term.base, assignment, ops, constants), term.exponent)
    raise TypeError(f"not a term node: {term!r}")


# Unreduced fraction arithmetic.  Sampling harnesses evaluate deeply nested
# polynomial expressions where gcd-normalizing every intermediate value
# dominates the cost; these helpers work on raw (num, den) coefficient
# pairs and defer reduction until a final predicate needs it.


def pair_from_ratfunc(u: RatFunc) -> tuple[tuple, tuple]:
    return (u.num, u.den)


def pair_to_ratfunc(fld, pair: tuple[tuple, tuple]) -> RatFunc:
    return ratfunc(fld, pair[0], pair[1])


def eval_term_pairs(term: F.Term, assignment: dict, fld) -> tuple[tuple, tuple]:
    """Evaluate a term over unreduced (num, den) pairs; no gcd anywhere."""

    def ev(t: F.Term) -> tuple[tuple, tuple]:
        if isinstance(t, F.Var):
            if t.name not in assignment:
                raise EvalError(f"no value assigned to variable {t.name!r}")
            return assignment[t.name]
        if isinstance(t, F.Const):
            if t.name == "t":
                return ((fld.zero, fld.one), (fld.one,))
            raise EvalError(f"no value assigned to constant {t.name!r}")
        if isinstance(t, F.IntLit):
            c = fld.from_int(t.value)
            return ((c,) if c != fld.zero else (), (fld.one,))
        if isinstance(t, (F.Add, F.Sub)):
            ln, ld = ev(t.left)
            rn, rd = ev(t.right)
            mix = padd if isinstance(t, F.Add) else psub
            return mix(fld, pmul(fld, ln, rd), pmul(fld, rn, ld)), pmul(fld, ld, rd)
        if isinstance(t, F.Mul):
            ln, ld = ev(t.left)
            rn, rd = ev(t.right)
            return pmul(fld, ln, rn), pmul(fld, ld, rd)
        if isinstance(t, F.Pow):
            bn, bd = ev(t.base)
            return ppow(fld, bn, t.exponent), ppow(fld, bd, t.exponent)
        raise TypeError(f"not a term node: {t!r}")

    return ev(term)


def pair_is_pth_power(pair: tuple[tuple, tuple], fld, p: int) -> bool:
    """p-th power membership for an unreduced fraction.

    num/den is a p-th power iff the polynomial num * den^(p-1) is, and a
    polynomial is one iff every exponent carrying a nonzero coefficient is
    divisible by p (the coefficient field is perfect).
    """
    num, den = pair
    if not num:
        return True
    poly = pmul(fld, num, ppow(fld, den, p - 1))
    return all(c == fld.zero or e % p == 0 for e, c in enumerate(poly))


def pair_pth_root(pair: tuple[tuple, tuple], fld, p: int) -> tuple[tuple, tuple] | None:
    """p-th root of an unreduced fraction, as an unreduced fraction.

    With u = N/D, the root is (N * D^(p-1))^(1/p) / D; no gcd required.
    """
    num, den = pair
    if not num:
        return ((), (fld.one,))
    poly = pmul(fld, num, ppow(fld, den, p - 1))
    if any(c != fld.zero and e % p for e, c in enumerate(poly)):
        return None
    return (_poly_pth_root(fld, poly, p), den)


def pair_equal(a: tuple[tuple, tuple], b: tuple[tuple, tuple], fld) -> bool:
    """Exact field equality of unreduced fractions by cross-multiplication."""
    return pmul(fld, a[0], b[1]) == pmul(fld, b[0], a[1])


class NPPairEvaluator:
    """Unreduced fraction arithmetic on numpy coefficient arrays over F_p.

    The term evaluator memoizes structurally repeated subterms (the
    absorption polynomial reuses its powers), which together with
    vectorized convolution keeps deep replay chains cheap.  Prime fields
    only; the generic tuple-based path stays as the cross-check.
    """

    def __init__(self, p: int):
        import numpy as np

        self.np = np
        self.p = p
        self.empty = np.zeros(0, dtype=np.int64)
        self.one = np.ones(1, dtype=np.int64)

    def _trim(self, a):
        n = len(a)
        while n and a[n - 1] == 0:
            n -= 1
        return a[:n]

    def add(self, a, b):
        if len(a) < len(b):
            a, b = b, a
        out = a.copy()
        out[: len(b)] += b
        out %= self.p
        return self._trim(out)

    def sub(self, a, b):
        np = self.np
        out = np.zeros(max(len(a), len(b)), dtype=np.int64)
        out[: len(a)] += a
        out[: len(b)] -= b
        out %= self.p
        return self._trim(out)

    def mul(self, a, b):
        if not len(a) or not len(b):
            return self.empty
        # leading coefficients are nonzero, and F_p has no zero divisors,
        # so no trim is needed
        if len(a) * len(b) > 40_000:
            # FFT convolution; coefficients are < p, so the exact integer
            # result is at most min(len)*(p-1)^2, far below float53 range
            from scipy.signal import fftconvolve

            out = self.np.rint(fftconvolve(a.astype(float), b.astype(float)))
            return out.astype(self.np.int64) % self.p
        return self.np.convolve(a, b) % self.p

    def pow(self, a, e: int):
        if e == 0:
            return self.one
        result = None
        acc = a
        while e:
            if e & 1:
                result = acc if result is None else self.mul(result, acc)
            e >>= 1
            if e:
                acc = self.mul(acc, acc)
        return result

    def from_int(self, k: int):
        c = k % self.p
        return self.np.array([c], dtype=self.np.int64) if c else self.empty

    # fractions are (num, den) pairs of arrays, never reduced

    def from_ratfunc(self, u: RatFunc):
        np = self.np
        return (np.array(u.num, dtype=np.int64), np.array(u.den, dtype=np.int64))

    def to_ratfunc(self, pair) -> RatFunc:
        fld = prime_field(self.p)
        return ratfunc(fld, tuple(int(c) for c in pair[0]), tuple(int(c) for c in pair[1]))

    def term(self, t: F.Term, assignment: dict, cache: dict | None = None):
        if cache is None:
            cache = {}

        def ev(node: F.Term):
            hit = cache.get(node)
            if hit is not None:
                return hit
            if isinstance(node, F.Var):
                if node.name not in assignment:
                    raise EvalError(f"no value assigned to variable {node.name!r}")
                value = assignment[node.name]
            elif isinstance(node, F.Const):
                if node.name != "t":
                    raise EvalError(f"no value assigned to constant {node.name!r}")
                value = (self.np.array([0, 1], dtype=self.np.int64), self.one)
            elif isinstance(node, F.IntLit):
                value = (self.from_int(node.value), self.one)
            elif isinstance(node, (F.Add, F.Sub)):
                ln, ld = ev(node.left)
                rn, rd = ev(node.right)
                mix = self.add if isinstance(node, F.Add) else self.sub
                value = (mix(self.mul(ln, rd), self.mul(rn, ld)), self.mul(ld, rd))
            elif isinstance(node, F.Mul):
                ln, ld = ev(node.left)
                rn, rd = ev(node.right)
                value = (self.mul(ln, rn), self.mul(ld, rd))
            elif isinstance(node, F.Pow):
                bn, bd = ev(node.base)
                value = (self.pow(bn, node.exponent), self.pow(bd, node.exponent))
            else:
                raise TypeError(f"not a term node: {node!r}")
            cache[node] = value
            return value

        return ev(t)

    def equal(self, a, b) -> bool:
        return self.np.array_equal(self.mul(a[0], b[1]), self.mul(b[0], a[1]))

    def is_zero(self, pair) -> bool:
        return len(pair[0]) == 0

    def is_pth_power(self, pair) -> bool:
        num, den = pair
        if not len(num):
            return True
        poly = self.mul(num, self.pow(den, self.p - 1))
        return not self.np.any(self.np.nonzero(poly)[0] % self.p)

    def pth_root(self, pair):
        num, den = pair
        if not len(num):
            return (self.empty, self.one)
        poly = self.mul(num, self.pow(den, self.p - 1))
        if self.np.any(self.np.nonzero(poly)[0] % self.p):
            return None
        # only exponents divisible by p carry coefficients, and F_p is
        # fixed by Frobenius, so the root just compresses the exponents
        return (poly[:: self.p], den)

    def frobenius_stretch(self, pair, m: int):
        """The m-th power of a fraction when m is a power of p: exponents
        spread by m, coefficients fixed (Frobenius is the identity on F_p)."""

        def stretch(arr):
            if not len(arr):
                return self.empty
            out = self.np.zeros(m * (len(arr) - 1) + 1, dtype=self.np.int64)
            out[::m] = arr
            return out

        return (stretch(pair[0]), stretch(pair[1]))


# ---------------------------------------------------------------------------
# Characteristic-p predicates on rational function fields


def pth_power_test(u: RatFunc, profile: FieldProfile) -> bool:
    """Membership of u in the p-th powers of F_q(t).

    After reduction, u is a p-th power iff both numerator and denominator
    only have monomials with exponent divisible by p: the multiplicative
    group of F_q is p-divisible, so coefficients never obstruct.
    """
    _require_ratfunc(profile)
    p = profile.p
    for coeffs in (u.num, u.den):
        for e, c in enumerate(coeffs):
            if c != u.field.zero and e % p:
                return False
    return True


def pth_root(u: RatFunc, profile: FieldProfile) -> RatFunc | None:
    """The w with w^p = u, when u is a p-th power; None otherwise."""
    _require_ratfunc(profile)
    if not pth_power_test(u, profile):
        return None
    fld = finite_field(profile.q)
    p = profile.p
    return RatFunc(profile.q, _poly_pth_root(fld, u.num, p), _poly_pth_root(fld, u.den, p))


def _poly_pth_root(fld, coeffs: tuple, p: int) -> tuple:
    # coefficientwise: the Frobenius inverse on F_q is c -> c^(q/p)
    root_exp = fld.order // p
    out = [fld.zero] * (pdeg(coeffs) // p + 1) if coeffs else []
    for e, c in enumerate(coeffs):
        if c != fld.zero:
            out[e // p] = fld.pow(c, root_exp)
    return pnormalize(fld, out)


def pth_power_test_derivative(u: RatFunc, profile: FieldProfile) -> bool:
    """Independent oracle: u is a p-th power iff its formal derivative is 0.

    Uses the quotient rule; valid because the constant field is perfect.
    """
    _require_ratfunc(profile)
    fld = finite_field(profile.q)
    dnum = psub(
        fld,
        pmul(fld, pderiv(fld, u.num), u.den),
        pmul(fld, u.num, pderiv(fld, u.den)),
    )
    return not dnum


def p_basis_decompose(z: RatFunc, p: int) -> tuple[RatFunc, ...]:
    """Unique (c_0, ..., c_{p-1}) with z = sum of t^i * c_i^p over F_p(t).

    1, t, ..., t^(p-1) are a p-basis of F_p(t); the decomposition clears the
    denominator with a p-th power and splits numerator monomials by exponent
    residue.
    """
    fld = z.field
    if fld.order != p:
        raise ProfileError("p-basis decomposition requires the prime field profile F_p(t)")
    den_pow = ppow(fld, z.den, p - 1)
    big = pmul(fld, z.num, den_pow)  # z = big / den^p
    parts: list[RatFunc] = []
    for i in range(p):
        # monomials of big with exponent == i (mod p), divided by t^i, are
        # the p-th power of a polynomial with the same coefficients (F_p is
        # fixed by Frobenius)
        root = []
        for e, c in enumerate(big):
            if c != fld.zero and e % p == i:
                k = (e - i) // p
                while len(root) <= k:
                    root.append(fld.zero)
                root[k] = c
        parts.append(ratfunc(fld, pnormalize(fld, root), z.den))
    return tuple(parts)


def _require_ratfunc(profile: FieldProfile):
    if profile.kind != KIND_RATFUNC:
        raise ProfileError(f"operation requires a rational function field profile, got {profile.name}")


# ---------------------------------------------------------------------------
# Default rootless polynomials


def element_to_term(fld, elem) -> F.Term:
    """Embed a finite field element into the term language.

    Prime field elements become integer literals; extension elements become
    polynomials in the generator constant ``a``.
    """
    if isinstance(fld, PrimeField):
        return F.IntLit(elem)
    if not isinstance(fld.base, PrimeField):
        raise ProfileError("only elements of F_q with prime base embed into terms")
    parts: list[F.Term] = []
    for i, c in enumerate(elem):
        if c == 0:
            continue
        if i == 0:
            parts.append(F.IntLit(c))
        else:
            mono: F.Term = F.Const("a") if i == 1 else F.Pow(F.Const("a"), i)
            parts.append(mono if c == 1 else F.Mul(F.IntLit(c), mono))
    if not parts:
        return F.IntLit(0)
    return F.add_all(parts)


def rootless_default(profile: FieldProfile) -> F.Term:
    """A univariate polynomial in Z with no root in the profile's structure.

    Finite profiles search monic quadratics in index order and verify by
    exhaustive root check.  Function-field defaults are Z^2 - t (odd q; t has
    odd valuation) and Z^2 + Z + t (even q; a root would need a pole, but
    then the Z^2 term dominates).  For the rationals and RCF mode, Z^2 + 1.
    """
    Z = F.Var("Z")
    if profile.kind in (KIND_RATIONALS, KIND_RCF):
        return F.Add(F.Pow(Z, 2), F.IntLit(1))
    if profile.kind == KIND_FINITE:
        fld = finite_field(profile.q)
        for idx in range(fld.order**2):
            cand = _decode_monic(fld, 2, idx)
            if all(peval(fld, cand, x) != fld.zero for x in fld.elements()):
                a1 = element_to_term(fld, cand[1])
                a0 = element_to_term(fld, cand[0])
                term: F.Term = F.Pow(Z, 2)
                if cand[1] != fld.zero:
                    term = F.Add(term, F.Mul(a1, Z) if cand[1] != fld.one else Z)
                if cand[0] != fld.zero:
                    term = F.Add(term, a0)
                return term
        raise ProfileError(f"no rootless quadratic over F{profile.q}")
    if profile.kind == KIND_RATFUNC:
        if profile.p == 2:
            return F.Add(F.Add(F.Pow(Z, 2), Z), F.Const("t"))
        return F.Sub(F.Pow(Z, 2), F.Const("t"))
    raise ProfileError(f"no default rootless polynomial for profile {profile.name}")
