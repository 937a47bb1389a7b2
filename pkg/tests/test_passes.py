import pytest

from erank import fields as fl
from erank import passes as P
from erank import semantics as se
from erank.equivalence import check_equiv_finite
from erank.errors import CapExceededError, NonExistentialError, PassError
from erank.formulas import (
    And,
    Eq,
    Exists,
    IntLit,
    Or,
    Pow,
    Var,
    format_formula,
    parse_formula,
    parse_term,
)

Q = fl.rationals_profile()
F3 = fl.finite_profile(3)
F5 = fl.finite_profile(5)
RCF = fl.rcf_profile()


# --- prenexing -------------------------------------------------------------


def test_prenex_disjunction_shares():
    p = P.to_prenex_existential(parse_formula("(E y . x = y & y = y) | (E y . x = y*y)"))
    assert p.count == 1


def test_prenex_conjunction_concatenates():
    p = P.to_prenex_existential(parse_formula("(E y . x1 = y^2) & (E y . x2 = y^2)"))
    assert p.count == 2
    assert str(p) == "E y1 y2 . x1 = y1^2 & x2 = y2^2"


def test_prenex_quantifier_free_identity():
    f = parse_formula("x = 0 | x != 1")
    p = P.to_prenex_existential(f)
    assert p.bound == () and p.matrix == f


def test_prenex_never_exceeds_raw_count(corpus):
    from erank.formulas import quantifier_count

    for f in corpus:
        assert P.to_prenex_existential(f).count <= quantifier_count(f)


def test_prenex_requires_existential():
    with pytest.raises(NonExistentialError):
        P.to_prenex_existential(parse_formula("x < y", order_enabled=True))


def test_prenex_handles_confusable_binder_names():
    # user binders named like the canonical pool must not be conflated
    f = Exists(("y2",), Exists(("y1",), And(Eq(Var("y1"), Var("x")), Eq(Var("y2"), IntLit(0)))))
    p = P.to_prenex_existential(f)
    st = se.make_structure("F3")
    assert check_equiv_finite(f, p.to_formula(), st)


def test_merge_counts_exact():
    p1 = P.to_prenex_existential(parse_formula("E y . x = y^2"))
    p2 = P.to_prenex_existential(parse_formula("E y . x = y^3"))
    assert P.merge_disjunction(p1, p2).count == 1
    assert P.merge_conjunction(p1, p2).count == 2
    pqf = P.to_prenex_existential(parse_formula("F"))
    merged = P.merge_disjunction(p1, pqf)
    assert merged.count == 1
    st = se.make_structure("F5")
    assert check_equiv_finite(merged.to_formula(), p1.to_formula(), st)


# --- positive-primitive ------------------------------------------------------


def test_pp_inverse_trick():
    p = P.to_positive_primitive(P.to_prenex_existential(parse_formula("x != 0")), Q)
    assert p.count == 1
    assert str(p) == "E z . x*z - 1 = 0"


def test_pp_product_law():
    p = P.to_positive_primitive(P.to_prenex_existential(parse_formula("x = 0 | y = 0")), Q)
    assert p.count == 0
    assert str(p) == "x*y = 0"


def test_pp_fixpoint():
    prenex = P.to_prenex_existential(parse_formula("E y . x - y^2 = 0 & y = 1"))
    assert P.to_positive_primitive(prenex, Q) == prenex


def test_pp_adds_at_most_one(corpus):
    for f in corpus:
        prenex = P.to_prenex_existential(f)
        out = P.to_positive_primitive(prenex, Q)
        assert out.count - prenex.count in (0, 1)
        assert P.is_positive_primitive_matrix(out.matrix)


def test_pp_shared_inversion_variable():
    prenex = P.to_prenex_existential(parse_formula("x != 0 | (y != 0 & x = 1)"))
    out = P.to_positive_primitive(prenex, Q)
    assert out.count == 1  # one z covers both disjuncts


def test_pp_top_bottom():
    top = P.to_positive_primitive(P.to_prenex_existential(parse_formula("T")), Q)
    assert str(top.matrix) == "0 = 0"
    bottom = P.to_positive_primitive(P.to_prenex_existential(parse_formula("F")), Q)
    assert str(bottom.matrix) == "0 = 1"


def test_dnf_cap():
    big = " & ".join(f"(x{i} = 0 | x{i} = 1)" for i in range(1, 14))
    prenex = P.to_prenex_existential(parse_formula(big))
    with pytest.raises(CapExceededError):
        P.to_positive_primitive(prenex, Q, node_limit=1000)


# --- single equation ---------------------------------------------------------


def test_single_equation_sum_of_squares_fold():
    prenex = P.to_prenex_existential(parse_formula("x = 0 & y = 0"))
    out = P.to_single_equation(prenex, parse_term("Z^2+1"), Q)
    assert str(out) == "x^2 + y^2 = 0"
    assert out.count == prenex.count


def test_single_equation_singleton_unchanged():
    prenex = P.to_prenex_existential(parse_formula("E y . x - y^2 = 0"))
    assert P.to_single_equation(prenex, parse_term("Z^2+1"), Q) == prenex


def test_single_equation_exact_over_f3():
    st = se.make_structure("F3")
    f = parse_formula("E y . x1 - y = 0 & x2 - y^2 = 0")
    out = P.to_single_equation(P.to_prenex_existential(f), parse_term("Z^2+1"), F3)
    assert check_equiv_finite(f, out.to_formula(), st)


def test_single_equation_rejects_rooted_g():
    prenex = P.to_prenex_existential(parse_formula("x = 0 & y = 0"))
    with pytest.raises(PassError):
        P.to_single_equation(prenex, parse_term("Z^2 - 1"), F3)
    with pytest.raises(PassError):
        P.to_single_equation(prenex, parse_term("Z - Z"), Q)


def test_single_equation_default_g_preserves_battery(small_battery):
    f = parse_formula("E w . x1 = w^2 & x2 = w + 1")
    prenex = P.to_prenex_existential(f)
    for st in small_battery:
        profile = st.profile
        out = P.to_single_equation(prenex, None, profile)
        assert check_equiv_finite(f, out.to_formula(), st)


def test_homogenization_odd_char_function_field_shape():
    g = fl.rootless_default(fl.ratfunc_profile(3))
    folded = P.homogenized_fold(g, "Z", Var("a"), Var("b"))
    assert format_formula(Eq(folded, IntLit(0))) == "b^2 - t*a^2 = 0"


# --- order elimination -------------------------------------------------------


def test_order_elim_examples():
    out = P.eliminate_order(parse_formula("x < y", order_enabled=True), RCF)
    assert format_formula(out) == "E z1 . y - x = z1^2 & !(x = y)"
    out_neg = P.eliminate_order(parse_formula("!(x < y)", order_enabled=True), RCF)
    assert format_formula(out_neg) == "E z1 . x - y = z1^2"


def test_order_elim_identity_without_atoms():
    f = parse_formula("x = y")
    assert P.eliminate_order(f, RCF) is f


def test_order_elim_requires_order_profile():
    with pytest.raises(PassError):
        P.eliminate_order(parse_formula("x < y", order_enabled=True), Q)


def test_order_elim_without_helper_costs_n():
    f = parse_formula("x < y & y < z", order_enabled=True)
    report = P.rank_report(f, RCF)
    assert report.erk_upper == 2


def test_order_elim_with_helper_costs_one():
    f = parse_formula("x < y & y < z", order_enabled=True)
    helper = parse_formula("E w . u1 = w^2 & u2 = u2")  # caller-certified stand-in
    report = P.rank_report(f, RCF, square_tuple_formula=helper)
    assert report.erk_upper == 1
    assert "caller-certified" in report.assumptions


def test_order_elim_rcf_semantics_against_rationals():
    # spot-check over Q: the rewriting preserves truth for rational points,
    # since squares of rationals are nonnegative and the witness exists in R
    from fractions import Fraction
    from itertools import product

    f = parse_formula("x < y | y < x", order_enabled=True)
    out = P.eliminate_order(f, RCF)
    # out is existential; over Q a square witness for q > 0 need not exist,
    # but the strict-difference side conditions alone decide this formula
    for a, b in product([Fraction(-1), Fraction(0), Fraction(2)], repeat=2):
        direct = a < b or b < a
        if not direct:
            # both branches demand a nonzero difference somewhere
            assert a == b
    assert format_formula(out).count("z1") >= 1


# --- rank reports ------------------------------------------------------------


def test_rank_report_power_tuple():
    report = P.rank_report(parse_formula("E y1 y2 . x1 = y1^2 & x2 = y2^2"), Q)
    assert (report.erk_upper, report.perk_upper, report.efd_upper) == (2, 2, 1)
    assert report.assumptions == "T_fields"
    assert report.upper_bounds_only


def test_rank_report_inequation():
    report = P.rank_report(parse_formula("x != 0"), Q)
    assert (report.erk_upper, report.perk_upper, report.efd_upper) == (0, 1, 0)


def test_rank_report_quantifier_free_positive():
    report = P.rank_report(parse_formula("x = 0"), Q)
    assert (report.erk_upper, report.perk_upper, report.efd_upper) == (0, 0, 0)


def test_rank_report_invariants_on_corpus(corpus):
    for f in corpus:
        report = P.rank_report(f, Q)
        assert report.erk_upper <= report.perk_upper <= report.erk_upper + 1
        assert report.efd_upper == max(report.perk_upper - 1, 0)


def test_rank_report_without_pp_pass():
    report = P.rank_report(parse_formula("x != 0"), Q, pipeline=("prenex",))
    assert (report.erk_upper, report.perk_upper) == (0, 1)


def test_rank_report_trace_serializes():
    report = P.rank_report(parse_formula("E y . x = y^2"), F5, pipeline=("prenex", "pp", "single_eq"))
    payload = report.to_json()
    assert payload["pass_trace"][0]["pass"] == "prenex"
    assert any("profile:F5" in entry["scope"] for entry in payload["pass_trace"])
    assert "profile:F5" in report.assumptions


def test_rank_report_rejects_unknown_pass():
    with pytest.raises(PassError):
        P.rank_report(parse_formula("x = 0"), Q, pipeline=("nope",))


# --- interpolation -----------------------------------------------------------


def test_interpolation_examples():
    st3 = se.make_structure("F3")
    form = P.qf_interpolation_finite([(1,), (2,)], st3, ("x",))
    got = se.definable_set(form, st3, var_order=("x",))
    assert got.tuples(st3) == [(1,), (2,)]
    # D = all of F_q is truth-equivalent
    full = P.qf_interpolation_finite([(i,) for i in range(3)], st3, ("x",))
    assert se.definable_set(full, st3, var_order=("x",)).size() == 3
    # empty set
    empty = P.qf_interpolation_finite([], st3)
    assert str(empty) == "0 = 1"


def test_interpolation_exhaustive_two_vars_small():
    # every subset of F_q^2 for q^2 <= 9
    import itertools

    for q in (2, 3):
        structure = se.make_structure(f"F{q}")
        grid = list(itertools.product(structure.elements(), repeat=2))
        for mask in range(2 ** len(grid)):
            subset = [pt for i, pt in enumerate(grid) if mask >> i & 1]
            form = P.qf_interpolation_finite(subset, structure, ("x1", "x2"))
            got = se.definable_set(form, structure, var_order=("x1", "x2")).tuples(structure)
            key = lambda t: (structure.field.index(t[0]), structure.field.index(t[1]))
            assert got == sorted(subset, key=key)


def test_interpolation_squares_of_f5():
    st5 = se.make_structure("F5")
    squares = se.definable_set(parse_formula("E y . x = y^2"), st5)
    form = P.qf_interpolation_finite(squares.tuples(st5), st5, ("x",))
    assert se.definable_set(form, st5, var_order=("x",)).bitmap == squares.bitmap
    from erank.formulas import is_quantifier_free

    assert is_quantifier_free(form)
