"""Frontend behaviour: the set-literal DSL, report emission, verbs, and
exit codes."""

import json
from fractions import Fraction

import pytest

from densitas.cli import emit_report, format_set_literal, main, parse_set_literal
from densitas.exceptions import ParseError
from densitas.natset import (
    APUnionSet,
    DyadicBlockSet,
    FiniteSet,
    HorizonSet,
    PeriodicSet,
)
from densitas.reports import AxiomReport, CheckRecord


# ---------------------------------------------------------------------------
# the DSL


def test_parse_finite():
    a = parse_set_literal("fin{1,2,3}")
    assert isinstance(a, FiniteSet) and a.elements == (1, 2, 3)
    assert parse_set_literal("fin{}").is_empty_surely()


def test_parse_periodic_with_threshold():
    a = parse_set_literal("per m=6 R={1,3} t=2")
    assert isinstance(a, PeriodicSet)
    assert (a.modulus, a.residues, a.threshold) == (6, (1, 3), 2)


def test_parse_ap_terms_with_factorial_modulus():
    a = parse_set_literal("ap a=6! h=1 j0=1")
    assert isinstance(a, APUnionSet) and len(a.terms) == 1
    assert a.terms[0].modulus == 720
    assert a.terms[0].label == "6!"
    b = parse_set_literal("ap a=720 h=1 j0=1 | ap a=5040 h=3 j0=1")
    assert [t.modulus for t in b.terms] == [720, 5040]


def test_parse_blocks_and_horizon():
    a = parse_set_literal("blocks f(n)=2^-3")
    assert isinstance(a, DyadicBlockSet)
    assert a.fill.cycle == (Fraction(1, 8),)
    b = parse_set_literal("blocks f(n)=3/4")
    assert b.fill.cycle == (Fraction(3, 4),)
    h = parse_set_literal("horizon H=8 bits=a5")
    assert isinstance(h, HorizonSet)
    assert list(h.elements_in(0, 8)) == [0, 2, 5, 7]


def test_parse_errors_carry_position():
    with pytest.raises(ParseError):
        parse_set_literal("per m=6 R=oops")
    with pytest.raises(ParseError):
        parse_set_literal("fin{1,2")
    with pytest.raises(ParseError):
        parse_set_literal("gadget{3}")
    with pytest.raises(ParseError):
        parse_set_literal("blocks f(n)=5/4")
    with pytest.raises(ParseError):
        parse_set_literal("horizon H=4 bits=ff")
    err = ParseError("boom", "per x", 4)
    assert "^" in str(err)


@pytest.mark.parametrize("text", [
    "fin{1,2,3}",
    "fin{}",
    "per m=6 R={1,3}",
    "per m=6 R={1,3} t=2",
    "ap a=6! h=1 j0=1",
    "ap a=720 h=1 j0=1 | ap a=5040 h=3 j0=1",
    "blocks f(n)=2^-3",
    "blocks f(n)=3/4",
    "horizon H=8 bits=a5",
])
def test_literal_round_trip(text):
    a = parse_set_literal(text)
    assert parse_set_literal(format_set_literal(a)) == a


def test_format_refuses_exception_lists():
    with pytest.raises(ValueError):
        format_set_literal(PeriodicSet(2, (0,), threshold=4, added=(1,)))


# ---------------------------------------------------------------------------
# emission


def test_emit_json_embeds_version_and_config():
    rep = AxiomReport("demo", (CheckRecord("a", "pass", "fine"),))
    doc = json.loads(emit_report(rep, "json").decode())
    assert doc["version"]
    assert "modulus_budget" in doc["config"]
    assert doc["report"]["records"][0]["name"] == "a"


def test_emit_formats_are_deterministic():
    rep = AxiomReport("demo", (CheckRecord("a", "pass", "fine",
                                           witness=Fraction(1, 3)),))
    for fmt in ("json", "csv", "text"):
        assert emit_report(rep, fmt) == emit_report(rep, fmt)
    assert b"1/3" in emit_report(rep, "json")


# ---------------------------------------------------------------------------
# verbs and exit codes


def test_eval_prints_exact_fraction(capsys):
    assert main(["eval", "d-star", "per m=6 R={1,3}"]) == 0
    assert capsys.readouterr().out.strip() == "1/3"


def test_dist_example(capsys):
    assert main(["dist", "d-star", "per m=1 R={0}", "per m=2 R={0}"]) == 0
    assert capsys.readouterr().out.strip() == "1/2"


def test_norm_verb(capsys):
    assert main(["norm", "psi-dyadic", "blocks f(n)=2^-3"]) == 0
    assert capsys.readouterr().out.strip() == "1/8"


def test_eval_infinite_counting(capsys):
    assert main(["eval", "counting", "per m=2 R={0}"]) == 0
    assert capsys.readouterr().out.strip() == "infinity"


def test_parse_failure_exits_2(capsys):
    assert main(["eval", "d-star", "per m=6 R={9}"]) == 2
    assert main(["eval", "no-such-functional", "fin{1}"]) == 2
    capsys.readouterr()


def test_truncated_evidence_degrades_to_observational(capsys):
    # exhaustive norms on horizon sets degrade honestly instead of guessing
    assert main(["norm", "phi-prefix", "horizon H=8 bits=a5"]) == 0
    assert "observational" in capsys.readouterr().out


def test_schedule_shortfall_exits_3(tmp_path, capsys):
    out = tmp_path / "family.json"
    main(["witness", "build", "--depth", "2", "--format", "json",
          "--out", str(out)])
    doc = json.loads(out.read_text())
    doc["report"]["depth"] = 7
    out.write_text(json.dumps(doc))
    assert main(["witness", "verify", str(out)]) == 3
    capsys.readouterr()


def test_axioms_battery_passes(capsys):
    assert main(["axioms", "pseudometric", "d-star",
                 "--samples", "24", "--seed", "7"]) == 0
    out = capsys.readouterr().out
    assert "0 failed" in out


def test_axioms_json_battery_deterministic(capsys):
    argv = ["axioms", "upper-density", "bd-star", "--samples", "15",
            "--seed", "11", "--format", "json"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first
    doc = json.loads(first)
    names = [r["name"] for r in doc["report"]["records"]]
    assert any(n.endswith("dilation[0,k=5]") for n in names)
    assert any(n.endswith("shift-invariant[0,h=100]") for n in names)


def test_limit_verbs(capsys):
    assert main(["limit", "tail-cut", "powers", "--depth", "8",
                 "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["report"]["verdict"] == "certified"
    assert main(["limit", "sigma", "multiples", "--depth", "6",
                 "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["report"]["verdict"] == "certified"
    assert main(["limit", "cauchy", "evens", "--depth", "6",
                 "--format", "json"]) == 0
    capsys.readouterr()


def test_limit_usage_errors(capsys):
    assert main(["limit", "sigma", "nonesuch"]) == 2
    assert main(["limit", "tail-cut", "powers", "--measure", "d-star"]) == 2
    capsys.readouterr()


def test_witness_build_verify_round_trip(tmp_path, capsys):
    out = tmp_path / "family.json"
    assert main(["witness", "build", "--kappa", "1/2", "--depth", "3",
                 "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["report"]["params"]["schedule"] == [8, 9, 10, 11, 12, 13]
    assert doc["report"]["levels"][2]["residues"] == [1, 2]
    assert main(["witness", "verify", str(out), "--horizon", "100000",
                 "--format", "json"]) == 0
    vdoc = json.loads(capsys.readouterr().out)
    assert vdoc["report"]["invariants_passed"] is True
    assert vdoc["report"]["cauchy_certified"] is True
    assert vdoc["report"]["gap"]["verdict"] == \
        "no-banach-density-over-certified-range"


def test_witness_verify_rejects_tampered_file(tmp_path, capsys):
    out = tmp_path / "family.json"
    main(["witness", "build", "--depth", "2", "--format", "json",
          "--out", str(out)])
    doc = json.loads(out.read_text())
    doc["report"]["levels"][1]["residues"] = [7]
    out.write_text(json.dumps(doc))
    assert main(["witness", "verify", str(out)]) == 3
    capsys.readouterr()


def test_probe_verb_finds_divergence(capsys):
    assert main(["probe", "norm:phi-infty-trunc:a=4", "norm:psi-dyadic",
                 "--depth", "4", "--targets", "1,2", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["report"]["verdict"] == "ratio-diverges"


def test_probe_verb_inconclusive_exits_1(capsys):
    assert main(["probe", "norm:phi-infty-trunc:a=4", "norm:psi-dyadic",
                 "--depth", "3", "--targets", "1000000"]) == 1
    capsys.readouterr()


def test_config_file_is_honoured(tmp_path, capsys):
    cfg = tmp_path / "densitas.cfg"
    cfg.write_text("modulus_budget = 12\n")
    # the symdiff needs lcm(6, 35) = 210 residues, beyond the tiny budget
    assert main(["dist", "d-star", "per m=6 R={1}", "per m=35 R={2}",
                 "--config", str(cfg)]) == 3
    capsys.readouterr()


def test_bad_config_file_exits_2(tmp_path, capsys):
    cfg = tmp_path / "densitas.cfg"
    cfg.write_text("nonsense_knob = 3\n")
    assert main(["eval", "d-star", "fin{1}", "--config", str(cfg)]) == 2
    capsys.readouterr()
