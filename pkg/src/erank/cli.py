"""Command-line front end.

Every subcommand has stable text output and a ``--json`` variant whose
payload validates against ``schemas/output.schema.json``.  Exit codes:
0 success / property verified; 1 a refutation, counterexample, or negative
result was found; 2 usage or syntax error; 3 unsupported profile or an
enumeration cap was exceeded.  Randomized commands take a ``--seed``
(default 42) which is echoed in the output; identical invocations produce
byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import collapse as cl
from . import equivalence as eq
from . import fields as fl
from . import formulas as F
from . import geometry as geo
from . import passes as ps
from . import semantics as se
from .errors import CapExceededError, ErankError, ProfileError

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_UNSUPPORTED = 3


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=False))


def _split_top_level(text: str, sep: str = ",") -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return [p.strip() for p in parts if p.strip()]


def _parse_assignment(spec: str, structure: se.Structure) -> dict:
    assignment = {}
    for item in _split_top_level(spec):
        name, _, value = item.partition("=")
        if not _ or not name.strip():
            raise ErankError(f"bad assignment item {item!r}; expected name=value")
        assignment[name.strip()] = se.parse_element(value.strip(), structure)
    return assignment


def _load_system(spec: str) -> geo.VarietyPresentation:
    text = spec
    if spec.startswith("@"):
        with open(spec[1:], "r", encoding="utf-8") as handle:
            text = handle.read()
    return geo.VarietyPresentation.from_json(text)


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_parse(args) -> int:
    f = F.parse_formula(args.formula, order_enabled=args.order)
    payload = {
        "formula": F.format_formula(f),
        "free_variables": list(F.free_variables(f)),
        "existential": F.is_existential(f),
        "quantifiers": ps._raw_quantifiers(f),
    }
    if args.json:
        _print_json(payload)
    else:
        print(payload["formula"])
        print(f"free: {' '.join(payload['free_variables']) or '(none)'}")
        print(f"existential: {str(payload['existential']).lower()}")
        print(f"quantifiers: {payload['quantifiers']}")
    return EXIT_OK


def _cmd_fmt(args) -> int:
    f = F.parse_formula(args.formula, order_enabled=args.order)
    print(F.format_formula(F.canonicalize(f) if args.canonical else f))
    return EXIT_OK


def _pipeline_arg(spec: str | None):
    if not spec:
        return None
    return tuple(p.strip() for p in spec.split(",") if p.strip())


def _cmd_rank(args) -> int:
    profile = fl.parse_profile(args.profile)
    f = F.parse_formula(args.formula, order_enabled=profile.has_order)
    report = ps.rank_report(f, profile, pipeline=_pipeline_arg(args.passes))
    payload = report.to_json()
    if args.text:
        print(f"erk_upper: {report.erk_upper}")
        print(f"perk_upper: {report.perk_upper}")
        print(f"efd_upper: {report.efd_upper}")
        print(f"assumptions: {report.assumptions}")
        for entry in report.pass_trace:
            print(f"  {entry.pass_id}: {entry.before} -> {entry.after} [{entry.scope}]")
    else:
        _print_json(payload)
    return EXIT_OK


def _cmd_transform(args) -> int:
    profile = fl.parse_profile(args.profile)
    f = F.parse_formula(args.formula, order_enabled=profile.has_order)
    report, result = ps.run_pipeline(f, profile, pipeline=_pipeline_arg(args.passes))
    payload = {"formula": str(result), "rank_report": report.to_json()}
    if args.json:
        _print_json(payload)
    else:
        print(payload["formula"])
        trace = " ; ".join(f"{e.pass_id} {e.before}->{e.after}" for e in report.pass_trace)
        print(f"trace: {trace}")
    return EXIT_OK


def _collapse_config(args) -> cl.CollapseConfig:
    return cl.CollapseConfig(p=args.p, n=args.n, k=args.k, mode=args.mode, r=args.r)


def _cmd_pi_collapse(args) -> int:
    cfg = _collapse_config(args)
    profile = fl.parse_profile(args.profile) if args.profile else fl.ratfunc_profile(args.p)
    phi = cl.fin_gen_pipeline(cfg)
    report = ps.rank_report(phi.to_formula(), profile, pipeline=("prenex", "pp"))
    payload = {
        "config": {"p": cfg.p, "n": cfg.n, "k": cfg.k, "mode": cfg.mode, "r": cfg.r},
        "certified_for": profile.name,
        "formula": str(phi),
        "rank_report": report.to_json(),
    }
    exit_code = EXIT_OK
    if args.witness is not None:
        xs = [se.parse_element(item, se.Structure(profile)) for item in _split_top_level(args.witness)]
        witness = cl.synth_witness(xs, cfg, profile)
        if witness is None:
            payload["witness"] = None
            payload["matrix"] = False
            exit_code = EXIT_NEGATIVE
        else:
            holds = se.eval_formula_qf(phi.matrix, cl.matrix_assignment(xs, witness, cfg), profile)
            payload["witness"] = se.ratfunc_str(witness)
            payload["matrix"] = bool(holds)
    if args.json:
        _print_json(payload)
    else:
        print(payload["formula"])
        print(f"certified_for: {payload['certified_for']} ({cfg.mode} mode)")
        rr = payload["rank_report"]
        print(f"erk_upper: {rr['erk_upper']}  perk_upper: {rr['perk_upper']}  efd_upper: {rr['efd_upper']}")
        if "witness" in payload:
            print(f"witness: {payload['witness'] if payload['witness'] is not None else '(none up to componentwise power test)'}")
            print(f"matrix: {str(payload['matrix']).lower()}")
    return exit_code


def _cmd_collapse_check(args) -> int:
    cfg = _collapse_config(args)
    structure = se.make_structure(args.profile if args.profile else f"F{args.p}t")
    report = eq.check_collapse_semantics(
        cfg, structure, degree_bound=args.bound, samples=args.samples, seed=args.seed, mutate=args.mutate
    )
    payload = report.to_json()
    payload["mutated"] = args.mutate
    if args.json:
        _print_json(payload)
    else:
        print(f"verdict: {report.verdict}")
        print(f"seed: {report.seed}")
        for key, value in report.stats.items():
            print(f"{key}: {value}")
        if report.counterexample:
            print(f"counterexample: {json.dumps(report.counterexample)}")
    return EXIT_OK if report.verdict == eq.VERDICT_POSITIVE else EXIT_NEGATIVE


def _cmd_eval(args) -> int:
    structure = se.make_structure(args.profile)
    order = structure.profile.has_order
    f = F.parse_formula(args.formula, order_enabled=order)
    if structure.profile.kind == fl.KIND_RATFUNC:
        rows = []
        exit_code = EXIT_OK
        for spec in args.assign or [""]:
            assignment = _parse_assignment(spec, structure) if spec else {}
            outcome = se.eval_bounded_ratfunc(f, assignment, structure, args.bound)
            row = {
                "assignment": spec,
                "verdict": outcome.verdict,
                "bound": outcome.bound,
                "witness": {k: se.ratfunc_str(v) for k, v in outcome.witness.items()} if outcome.witness else None,
            }
            rows.append(row)
            if not outcome.found:
                exit_code = EXIT_NEGATIVE
        if args.json:
            _print_json({"profile": structure.name, "rows": rows})
        else:
            for row in rows:
                witness = ""
                if row["witness"]:
                    witness = "  witness: " + ", ".join(f"{k}={v}" for k, v in sorted(row["witness"].items()))
                print(f"{row['assignment'] or '(empty)'}: {row['verdict']}{witness}")
        return exit_code
    if not structure.is_finite():
        raise ProfileError(f"profile {structure.name} does not support evaluation")
    if args.table:
        ds = se.definable_set(f, structure)
        tuples = [[se.element_str(e, structure) for e in tup] for tup in ds.tuples(structure)]
        if args.json:
            _print_json({"profile": structure.name, "variables": list(ds.variables), "tuples": tuples})
        else:
            print(f"variables: {' '.join(ds.variables) or '(sentence)'}")
            for tup in tuples:
                print(", ".join(tup))
            print(f"count: {len(tuples)}")
        return EXIT_OK
    assignment = _parse_assignment(args.assign[0], structure) if args.assign else {}
    value = se.eval_formula_finite(f, assignment, structure)
    if args.json:
        _print_json({"profile": structure.name, "value": bool(value)})
    else:
        print(str(bool(value)).lower())
    return EXIT_OK if value else EXIT_NEGATIVE


def _cmd_equiv(args) -> int:
    f1 = F.parse_formula(args.f1)
    f2 = F.parse_formula(args.f2)
    if args.battery == "default":
        battery = eq.default_battery()
    else:
        battery = [se.make_structure(name.strip()) for name in args.battery.split(",")]
    report = eq.refute_equivalence(f1, f2, battery)
    if args.json:
        _print_json(report.to_json())
    else:
        print(f"verdict: {report.verdict}")
        if report.counterexample:
            cx = report.counterexample
            point = ", ".join(f"{v}={t}" for v, t in zip(cx["variables"], cx["tuple"]))
            print(f"counterexample over {cx['profile']}: {point} (f1={cx['f1_holds']}, f2={cx['f2_holds']})")
    return EXIT_OK if report.verdict == eq.VERDICT_EQUIV else EXIT_NEGATIVE


def _cmd_geom(args) -> int:
    if args.geom_cmd == "to-system":
        f = F.parse_formula(args.formula)
        prenex = ps.to_prenex_existential(f)
        vp = geo.formula_to_system(prenex)
        _print_json(vp.to_json())
        return EXIT_OK
    if args.geom_cmd == "from-system":
        vp = _load_system(args.system)
        print(str(geo.system_to_formula(vp)))
        return EXIT_OK
    vp = _load_system(args.system)
    structure = se.make_structure(args.profile)
    if args.geom_cmd == "image":
        ds = geo.image_over_finite(vp, structure)
        tuples = [[se.element_str(e, structure) for e in tup] for tup in ds.tuples(structure)]
        if args.json:
            _print_json({"profile": structure.name, "variables": list(ds.variables), "tuples": tuples})
        else:
            for tup in tuples:
                print(", ".join(tup))
            print(f"count: {len(tuples)}")
        return EXIT_OK
    point = tuple(se.parse_element(item, structure) for item in _split_top_level(args.point or ""))
    if args.geom_cmd == "fibre":
        pts = geo.fibre_points(vp, point, structure, args.ext_k)
        fld = fl.extension_field(structure.q, args.ext_k)
        rows = [[_ext_elem_str(fld, coord) for coord in pt] for pt in pts]
        if args.json:
            _print_json({"profile": structure.name, "ext_k": args.ext_k, "points": rows})
        else:
            for row in rows:
                print(", ".join(row) if row else "()")
            print(f"count: {len(rows)}")
        return EXIT_OK
    if args.geom_cmd == "fibre-dim":
        result = geo.fibre_dim_estimate(vp, point, structure, args.max_k)
        if args.json:
            _print_json(result)
        else:
            print(f"counts: {result['counts']}")
            print(f"estimated_dim: {result['estimated_dim']} (HEURISTIC)")
            if not result["exact_fit"]:
                print(f"range: {result['range']}")
        return EXIT_OK
    raise ErankError(f"unknown geom subcommand {args.geom_cmd!r}")


def _ext_elem_str(fld, elem) -> str:
    if fld.degree == 1:
        return str(elem)
    return se.finite_elem_str(fld, elem) if isinstance(fld.base, fl.PrimeField) else str(fld.index(elem))


def _cmd_pair(args) -> int:
    if args.profile == "nat":
        if args.pair_cmd == "encode":
            code = se.encode_pair_nat(int(args.x), int(args.y))
            _emit_pair(args, {"code": str(code)})
            return EXIT_OK
        x, y = se.decode_pair_nat(int(args.z))
        _emit_pair(args, {"x": str(x), "y": str(y)})
        return EXIT_OK
    profile = fl.parse_profile(args.profile)
    structure = se.Structure(profile)
    if args.pair_cmd == "encode":
        x = se.parse_element(args.x, structure)
        y = se.parse_element(args.y, structure)
        code = se.encode_pair_charp(x, y, profile)
        _emit_pair(args, {"code": se.ratfunc_str(code)})
        return EXIT_OK
    z = se.parse_element(args.z, structure)
    decoded = se.decode_pair_charp(z, profile)
    if decoded is None:
        _emit_pair(args, {"error": "not a code"})
        return EXIT_NEGATIVE
    _emit_pair(args, {"x": se.ratfunc_str(decoded[0]), "y": se.ratfunc_str(decoded[1])})
    return EXIT_OK


def _emit_pair(args, payload: dict) -> None:
    if args.json:
        _print_json(payload)
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="erank",
        description="Existential formulas over rings: rewriting with quantifier accounting, "
        "characteristic-p power collapses, and finite-model checking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a formula and report its structure")
    p.add_argument("--formula", required=True)
    p.add_argument("--order", action="store_true", help="allow < atoms")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_parse)

    p = sub.add_parser("fmt", help="print the canonical text form")
    p.add_argument("--formula", required=True)
    p.add_argument("--order", action="store_true")
    p.add_argument("--canonical", action="store_true", help="also flatten and rename binders")
    p.set_defaults(handler=_cmd_fmt)

    p = sub.add_parser("rank", help="run passes and print the rank report (JSON by default)")
    p.add_argument("--profile", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--passes", help="comma-separated pass ids (default: prenex,pp)")
    p.add_argument("--text", action="store_true")
    p.set_defaults(handler=_cmd_rank)

    p = sub.add_parser("transform", help="apply a pass pipeline and print the result")
    p.add_argument("--profile", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--passes", help="comma-separated pass ids (default: prenex,pp)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_transform)

    p = sub.add_parser("pi-collapse", help="emit the one-quantifier power-tuple formula")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--mode", choices=[cl.MODE_UFD, cl.MODE_GENERAL], default=cl.MODE_UFD)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--profile", help="function-field profile (default F<p>t)")
    p.add_argument("--witness", help="comma-separated tuple to synthesize a witness for")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_pi_collapse)

    p = sub.add_parser("collapse-check", help="completeness/soundness harness for the collapse")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--mode", choices=[cl.MODE_UFD, cl.MODE_GENERAL], default=cl.MODE_UFD)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--profile")
    p.add_argument("--bound", type=int, default=3)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--mutate", action="store_true", help="drop the linear absorption term (sensitivity control)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_collapse_check)

    p = sub.add_parser("eval", help="evaluate over a finite field or bounded search over F_q(t)")
    p.add_argument("--profile", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--assign", action="append", help="name=value,... (repeatable)")
    p.add_argument("--table", action="store_true", help="print the full defined set (finite profiles)")
    p.add_argument("--bound", type=int, default=None, help="witness degree bound (function fields)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("equiv", help="compare defined sets over a battery of finite fields")
    p.add_argument("--f1", required=True)
    p.add_argument("--f2", required=True)
    p.add_argument("--battery", default="default")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_equiv)

    p = sub.add_parser("geom", help="formula <-> polynomial system bridge")
    gsub = p.add_subparsers(dest="geom_cmd", required=True)
    g = gsub.add_parser("to-system")
    g.add_argument("--formula", required=True)
    g.set_defaults(handler=_cmd_geom)
    g = gsub.add_parser("from-system")
    g.add_argument("--system", required=True, help="inline JSON or @file")
    g.set_defaults(handler=_cmd_geom)
    g = gsub.add_parser("image")
    g.add_argument("--system", required=True)
    g.add_argument("--profile", required=True)
    g.add_argument("--json", action="store_true")
    g.set_defaults(handler=_cmd_geom)
    g = gsub.add_parser("fibre")
    g.add_argument("--system", required=True)
    g.add_argument("--profile", required=True)
    g.add_argument("--point", required=True)
    g.add_argument("--ext-k", type=int, default=1)
    g.add_argument("--json", action="store_true")
    g.set_defaults(handler=_cmd_geom)
    g = gsub.add_parser("fibre-dim")
    g.add_argument("--system", required=True)
    g.add_argument("--profile", required=True)
    g.add_argument("--point", required=True)
    g.add_argument("--max-k", type=int, default=4)
    g.add_argument("--json", action="store_true")
    g.set_defaults(handler=_cmd_geom)

    p = sub.add_parser("pair", help="pairing injections: Cantor on naturals, x^p + t*y^p on F_p(t)")
    psub = p.add_subparsers(dest="pair_cmd", required=True)
    for name in ("encode", "decode"):
        q = psub.add_parser(name)
        q.add_argument("--profile", required=True, help="nat or F<p>t")
        if name == "encode":
            q.add_argument("--x", required=True)
            q.add_argument("--y", required=True)
        else:
            q.add_argument("--z", required=True)
        q.add_argument("--json", action="store_true")
        q.set_defaults(handler=_cmd_pair)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ProfileError, CapExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except ErankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
