import json
from importlib import resources

import jsonschema
import pytest

from erank.cli import main

SCHEMA = json.loads(
    resources.files("erank").joinpath("schemas/output.schema.json").read_text()
)


def _validate(payload, def_name):
    jsonschema.validate(
        payload,
        {"$ref": f"#/$defs/{def_name}", "$defs": SCHEMA["$defs"]},
    )


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_command(capsys):
    code, out, _ = _run(capsys, "parse", "--formula", "E y . x = y^2", "--json")
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "parse_result")
    assert payload == {
        "formula": "E y . x = y^2",
        "free_variables": ["x"],
        "existential": True,
        "quantifiers": 1,
    }


def test_parse_syntax_error_is_usage(capsys):
    code, _, err = _run(capsys, "parse", "--formula", "x = ")
    assert code == 2
    assert "error:" in err


def test_fmt_command(capsys):
    code, out, _ = _run(capsys, "fmt", "--formula", "((x=0))|(E a . (E b . a=b))", "--canonical")
    assert code == 0
    assert out == "x = 0 | (E y1 y2 . y1 = y2)\n"


def test_rank_command_json_default(capsys):
    code, out, _ = _run(
        capsys, "rank", "--profile", "Q", "--formula", "E y1 y2 . x1=y1^2 & x2=y2^2"
    )
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "rank_report")
    assert payload["erk_upper"] == 2
    assert payload["perk_upper"] == 2
    assert payload["efd_upper"] == 1


def test_transform_command(capsys):
    code, out, _ = _run(
        capsys, "transform", "--profile", "Q", "--formula", "x != 0",
        "--passes", "prenex,pp", "--json",
    )
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "transform_result")
    assert payload["formula"] == "E z . x*z - 1 = 0"


def test_pi_collapse_with_witness(capsys):
    code, out, _ = _run(
        capsys, "pi-collapse", "--p", "2", "--n", "2", "--mode", "ufd",
        "--witness", "t^2,(t+1)^2", "--json",
    )
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "collapse_result")
    assert payload["matrix"] is True
    assert payload["witness"] == "t^7 + t^6 + t^4 + t^3 + t^2 + t"
    assert payload["certified_for"] == "F2t"
    assert payload["rank_report"]["erk_upper"] == 1


def test_pi_collapse_negative_witness_exit(capsys):
    code, out, _ = _run(
        capsys, "pi-collapse", "--p", "2", "--n", "2", "--witness", "t,1", "--json"
    )
    assert code == 1
    payload = json.loads(out)
    assert payload["witness"] is None and payload["matrix"] is False


def test_collapse_check_command(capsys):
    code, out, _ = _run(
        capsys, "collapse-check", "--p", "2", "--n", "2", "--bound", "1",
        "--samples", "200", "--seed", "42", "--json",
    )
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "equiv_report")
    assert payload["verdict"] == "positive_direction_verified"
    assert payload["seed"] == 42


def test_collapse_check_mutation_exit(capsys):
    code, out, _ = _run(
        capsys, "collapse-check", "--p", "2", "--n", "2", "--bound", "2",
        "--samples", "3000", "--seed", "42", "--mutate", "--json",
    )
    assert code == 1
    payload = json.loads(out)
    assert payload["verdict"] == "refuted"
    assert payload["stats"]["soundness_violations"] >= 1


def test_eval_table(capsys):
    code, out, _ = _run(
        capsys, "eval", "--profile", "F5", "--formula", "E y . x = y^2", "--table", "--json"
    )
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "table_result")
    assert payload["tuples"] == [["0"], ["1"], ["4"]]


def test_eval_point(capsys):
    code, out, _ = _run(
        capsys, "eval", "--profile", "F5", "--formula", "E y . x = y^2", "--assign", "x=4"
    )
    assert code == 0 and out == "true\n"
    code, out, _ = _run(
        capsys, "eval", "--profile", "F5", "--formula", "E y . x = y^2", "--assign", "x=2"
    )
    assert code == 1 and out == "false\n"


def test_eval_bounded_function_field(capsys):
    code, out, _ = _run(
        capsys, "eval", "--profile", "F2t", "--bound", "4",
        "--formula", "E y . x = y^2", "--assign", "x=t^2", "--json",
    )
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "bounded_eval_result")
    assert payload["rows"][0]["verdict"] == "true"
    assert payload["rows"][0]["witness"] == {"y": "t"}
    code, out, _ = _run(
        capsys, "eval", "--profile", "F2t", "--bound", "4",
        "--formula", "E y . x = y^2", "--assign", "x=t",
    )
    assert code == 1
    assert "no_witness_up_to_bound" in out


def test_equiv_command(capsys):
    code, out, _ = _run(
        capsys, "equiv", "--f1", "x != 0", "--f2", "E z . x*z = 1", "--battery", "default"
    )
    assert code == 0
    assert out.startswith("verdict: equivalent_on_battery")
    code, out, _ = _run(
        capsys, "equiv", "--f1", "E y . x = y^2", "--f2", "E y . x = y^4",
        "--battery", "F5", "--json",
    )
    assert code == 1
    payload = json.loads(out)
    _validate(payload, "equiv_report")
    assert payload["counterexample"]["tuple"] == ["4"]


def test_geom_pipeline(capsys, tmp_path):
    code, out, _ = _run(capsys, "geom", "to-system", "--formula", "E y . x = y^2")
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "variety_presentation")
    system_file = tmp_path / "system.json"
    system_file.write_text(out)

    code, out, _ = _run(capsys, "geom", "from-system", "--system", f"@{system_file}")
    assert code == 0 and out == "E y1 . x - y1^2 = 0\n"

    code, out, _ = _run(
        capsys, "geom", "image", "--system", f"@{system_file}", "--profile", "F7", "--json"
    )
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "table_result")
    assert payload["tuples"] == [["0"], ["1"], ["2"], ["4"]]

    code, out, _ = _run(
        capsys, "geom", "fibre", "--system", f"@{system_file}", "--profile", "F5",
        "--point", "1", "--json",
    )
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "fibre_result")
    assert payload["points"] == [["1"], ["4"]]

    code, out, _ = _run(
        capsys, "geom", "fibre-dim", "--system", f"@{system_file}", "--profile", "F5",
        "--point", "1", "--max-k", "4", "--json",
    )
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "fibre_dim_result")
    assert payload["estimated_dim"] == 0


def test_pair_commands(capsys):
    code, out, _ = _run(capsys, "pair", "encode", "--profile", "nat", "--x", "0", "--y", "1", "--json")
    assert code == 0
    payload = json.loads(out)
    _validate(payload, "pair_result")
    assert payload == {"code": "2"}

    code, out, _ = _run(capsys, "pair", "decode", "--profile", "nat", "--z", "2")
    assert code == 0 and out == "x: 0\ny: 1\n"

    code, out, _ = _run(
        capsys, "pair", "encode", "--profile", "F2t", "--x", "t", "--y", "t+1", "--json"
    )
    assert code == 0
    assert json.loads(out) == {"code": "t^3 + t^2 + t"}

    code, out, _ = _run(capsys, "pair", "decode", "--profile", "F2t", "--z", "t^3+t^2+t")
    assert code == 0 and out == "x: t\ny: t + 1\n"

    code, out, _ = _run(capsys, "pair", "decode", "--profile", "F3t", "--z", "t^2", "--json")
    assert code == 1
    assert json.loads(out) == {"error": "not a code"}


def test_unsupported_profile_exit(capsys):
    code, _, err = _run(capsys, "eval", "--profile", "F6", "--formula", "x = 0", "--table")
    assert code == 3
    assert "error:" in err


def test_cap_exceeded_exit(capsys, monkeypatch):
    monkeypatch.setenv("ERANK_MAX_STATES", "4")
    code, _, err = _run(capsys, "eval", "--profile", "F5", "--formula", "E y . x = y^2", "--table")
    assert code == 3


def test_byte_identical_reruns(capsys):
    outputs = []
    for _ in range(2):
        code, out, _ = _run(
            capsys, "collapse-check", "--p", "2", "--n", "2", "--bound", "1",
            "--samples", "150", "--seed", "9", "--json",
        )
        assert code == 0
        outputs.append(out)
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize(
    "argv",
    [
        ("rank", "--profile", "Q", "--formula", "E y . x = y^2"),
        ("pi-collapse", "--p", "3", "--n", "2", "--json"),
        ("equiv", "--f1", "T", "--f2", "T", "--json"),
    ],
)
def test_more_byte_identical_reruns(capsys, argv):
    first = _run(capsys, *argv)
    second = _run(capsys, *argv)
    assert first == second
