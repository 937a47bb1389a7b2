import random

import pytest

from erank import collapse as cl
from erank import equivalence as eq
from erank import fields as fl
from erank import passes as P
from erank import semantics as se
from erank.formulas import Var, parse_formula


def test_inverse_trick_equivalence():
    st5 = se.make_structure("F5")
    assert eq.check_equiv_finite(parse_formula("x != 0"), parse_formula("E z . x*z = 1"), st5)


def test_product_law_equivalence_random_polys(small_battery):
    rng = random.Random(9)
    st3 = se.make_structure("F3")
    for _ in range(20):
        coeffs = [rng.randrange(3) for _ in range(4)]
        f = f"{coeffs[0]} + {coeffs[1]}*x + {coeffs[2]}*x^2"
        g = f"{coeffs[3]} + x"
        assert eq.check_equiv_finite(
            parse_formula(f"{f} = 0 | {g} = 0"),
            parse_formula(f"({f})*({g}) = 0"),
            st3,
        )


def test_pi_square_vs_truth_depends_on_field():
    pi = parse_formula("E y . x = y^2")
    top = parse_formula("T")
    assert eq.refute_equivalence(pi, top, [se.make_structure("F4")]).verdict == eq.VERDICT_EQUIV
    report = eq.refute_equivalence(pi, top, [se.make_structure("F5")])
    assert report.verdict == eq.VERDICT_REFUTED


def test_refutation_example_squares_vs_fourth_powers():
    report = eq.refute_equivalence(
        parse_formula("E y . x = y^2"), parse_formula("E y . x = y^4"),
        [se.make_structure("F5")],
    )
    assert report.verdict == eq.VERDICT_REFUTED
    cx = report.counterexample
    assert cx["profile"] == "F5" and cx["tuple"] == ["4"]
    assert cx["f1_holds"] and not cx["f2_holds"]


def test_counterexamples_replay(corpus, small_battery):
    # every refutation must replay to disagreeing truth values
    rng = random.Random(31)
    pairs = []
    by_frees = {}
    from erank.formulas import free_variables

    for f in corpus:
        by_frees.setdefault(frozenset(free_variables(f)), []).append(f)
    for group in by_frees.values():
        rng.shuffle(group)
        pairs.extend(zip(group[0::2], group[1::2]))
    replayed = 0
    for f1, f2 in pairs[:25]:
        report = eq.refute_equivalence(f1, f2, small_battery)
        if report.verdict != eq.VERDICT_REFUTED:
            continue
        cx = report.counterexample
        st = se.make_structure(cx["profile"])
        assignment = {
            name: se.parse_element(text, st) for name, text in zip(cx["variables"], cx["tuple"])
        }
        v1 = se.eval_formula_finite(f1, assignment, st)
        v2 = se.eval_formula_finite(f2, assignment, st)
        assert v1 != v2
        assert v1 == cx["f1_holds"] and v2 == cx["f2_holds"]
        replayed += 1
    assert replayed >= 5


def test_pass_outputs_equivalent_on_battery(corpus, battery):
    # sanity slice here; the full exhaustive run lives in the acceptance suite
    profile = fl.rationals_profile()
    for f in corpus[:15]:
        prenex = P.to_prenex_existential(f)
        pp = P.to_positive_primitive(prenex, profile)
        report = eq.refute_equivalence(f, pp.to_formula(), battery[:4])
        assert report.verdict == eq.VERDICT_EQUIV


def test_qf_candidates_cannot_match_squares():
    # quantifier-free one-variable candidates disagree with the squares
    # formula over a largish prime field: squares are neither thin nor
    # everything there
    st13 = se.make_structure("F13")
    pi = parse_formula("E y . x = y^2")
    rng = random.Random(5)
    refuted = 0
    for _ in range(25):
        coeffs = [rng.randrange(13) for _ in range(3)]
        candidate = parse_formula(
            f"{coeffs[0]} + {coeffs[1]}*x + {coeffs[2]}*x^2 = 0"
        )
        report = eq.refute_equivalence(pi, candidate, [st13])
        if report.verdict == eq.VERDICT_REFUTED:
            refuted += 1
    assert refuted == 25


def test_value_set_quadratic_examples():
    st3 = se.make_structure("F3")
    st5 = se.make_structure("F5")
    assert [t[0] for t in eq.value_set_quadratic([1, 1], st3).tuples(st3)] == [0, 1, 2]
    assert [t[0] for t in eq.value_set_quadratic([1], st5).tuples(st5)] == [0, 1, 4]
    assert [t[0] for t in eq.value_set_quadratic([2], st5).tuples(st5)] == [0, 2, 3]
    with pytest.raises(Exception):
        eq.value_set_quadratic([1], se.make_structure("F4"))


def test_value_set_matches_pi_style_formula():
    st7 = se.make_structure("F7")
    vs = eq.value_set_quadratic([1, 1], st7)
    f = parse_formula("E y1 y2 . x = y1^2 + y2^2")
    assert vs.bitmap == se.definable_set(f, st7, var_order=("x",)).bitmap


def test_collapse_check_small_runs():
    cfg = cl.CollapseConfig(p=2, n=2)
    report = eq.check_collapse_semantics(cfg, se.make_structure("F2t"), 2, samples=500, seed=7)
    assert report.verdict == eq.VERDICT_POSITIVE
    assert report.stats["completeness_failures"] == 0
    assert report.stats["soundness_violations"] == 0
    assert report.stats["samples_satisfying"] == 500
    assert report.seed == 7


def test_collapse_check_deterministic_given_seed():
    cfg = cl.CollapseConfig(p=2, n=2)
    r1 = eq.check_collapse_semantics(cfg, se.make_structure("F2t"), 1, samples=300, seed=11)
    r2 = eq.check_collapse_semantics(cfg, se.make_structure("F2t"), 1, samples=300, seed=11)
    assert r1 == r2


def test_collapse_check_mutation_finds_violation():
    cfg = cl.CollapseConfig(p=2, n=2)
    report = eq.check_collapse_semantics(
        cfg, se.make_structure("F2t"), 2, samples=3000, seed=42, mutate=True
    )
    assert report.verdict == eq.VERDICT_REFUTED
    assert report.stats["soundness_violations"] >= 1
    cx = report.counterexample
    assert cx["kind"] == "soundness"
    # the recorded violation replays: matrix holds, some component is not a square
    profile = fl.ratfunc_profile(2)
    mutated = cl.CollapseConfig(p=2, n=2, f_override=cl.good_case_poly_mutated(2))
    matrix = cl.collapse_pth_powers(mutated).matrix
    st = se.make_structure("F2t")
    xs = [se.parse_element(s, st) for s in cx["tuple"]]
    y = se.parse_element(cx["witness"], st)
    assert se.eval_formula_qf(matrix, cl.matrix_assignment(xs, y, mutated), profile)
    assert not all(fl.pth_power_test(x, profile) for x in xs)


def test_corpus_generator_deterministic_and_in_bounds():
    from erank.formulas import free_variables, is_existential, quantifier_count

    c1 = eq.generate_corpus(seed=123, size=50)
    c2 = eq.generate_corpus(seed=123, size=50)
    assert c1 == c2
    assert eq.generate_corpus(seed=124, size=50) != c1
    for f in c1:
        assert is_existential(f)
        assert len(free_variables(f)) <= 3
        assert quantifier_count(f) <= 3


def test_battery_default_names(battery):
    assert [st.name for st in battery] == ["F2", "F3", "F4", "F5", "F7", "F8", "F9"]


def test_branch_value_reduced_route_matches_pair_route():
    # the reduced-arithmetic replay and the unreduced numpy replay are two
    # routes to the same branch value
    rng = random.Random(4)
    for p in (2, 3):
        profile = fl.ratfunc_profile(p)
        fld = fl.finite_field(p)
        cfg = cl.CollapseConfig(p=p, n=2)
        elems = list(se.enumerate_ratfuncs(fld, 1))
        ev = fl.NPPairEvaluator(p)
        g_ast = cfg.g_term(Var("X"))
        h_ast = cfg.h_term(Var("X"), Var("Y"))
        for _ in range(25):
            xs = [elems[rng.randrange(len(elems))] for _ in range(2)]
            slow = eq._branch_value(xs, cfg, profile)
            pairs = [ev.from_ratfunc(x) for x in xs]
            while len(pairs) > 1:
                last = pairs[-1]
                if ev.is_zero(ev.term(g_ast, {"X": last})):
                    pairs = pairs[:-1]
                else:
                    pairs = pairs[:-2] + [ev.term(h_ast, {"X": last, "Y": pairs[-2]})]
            fast = ev.to_ratfunc(pairs[0])
            assert fast == slow
