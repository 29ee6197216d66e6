"""The incomplete-metric witness family: parameters, construction,
invariants, and the two certificates."""

import math
from dataclasses import replace
from fractions import Fraction

import pytest

from densitas.exceptions import (
    InsufficientPrefix,
    InvariantsFailed,
    KappaMismatch,
    ScheduleTooShort,
)
from densitas.metric import cauchy_profile, evaluate_measure
from densitas.natset import APTerm, APUnionSet
from densitas.witness import (
    WitnessParams,
    banach_gap_certificate,
    build_witness,
    check_witness_invariants,
    derive_params,
    divergence_certificate,
    increment_tail_bound,
    stage_density,
    validate_params,
    witness_sequence,
)

HALF = Fraction(1, 2)


@pytest.fixture(scope="module")
def params():
    return derive_params(HALF)


@pytest.fixture(scope="module")
def family(params):
    return build_witness(params, 4)


# ---------------------------------------------------------------------------
# parameters


def test_derived_params_at_one_half(params):
    assert params.kappa == HALF
    assert params.scale == 75
    assert params.cover == 2
    assert params.schedule == (8, 9, 10, 11, 12, 13)


def test_scale_is_minimal():
    smaller = WitnessParams(HALF, 74, 2, (8, 9, 10, 11, 12, 13))
    report = validate_params(smaller)
    assert not report.passed
    assert any(r.name == "log-squared-condition" for r in report.report.failures)


def test_schedule_start_is_minimal():
    # 7! = 5040 does not clear (N+1)^2 = 5776
    low = WitnessParams(HALF, 75, 2, (7, 9, 10, 11, 12, 13))
    report = validate_params(low)
    assert not report.passed
    assert any(r.name == "factorial-threshold[0]"
               for r in report.report.failures)


def test_derived_params_validate(params):
    assert validate_params(params).passed


def test_cover_is_ceiling_of_inverse():
    assert derive_params(Fraction(1, 3)).cover == 3
    assert derive_params(Fraction(2, 3)).cover == 2
    assert derive_params(Fraction(2, 3), levels=4).schedule == \
        derive_params(Fraction(2, 3), levels=6).schedule[:4]


def test_other_ratios_validate():
    for kappa in (Fraction(1, 3), Fraction(2, 3), Fraction(1, 5)):
        assert validate_params(derive_params(kappa, levels=4)).passed


def test_ratio_must_be_strictly_inside_unit_interval():
    with pytest.raises(ValueError):
        derive_params(Fraction(0))
    with pytest.raises(ValueError):
        derive_params(Fraction(3, 2))


def test_wrong_cover_flagged():
    p = WitnessParams(HALF, 75, 3, (8, 9, 10, 11, 12, 13))
    report = validate_params(p)
    assert any(r.name == "cover-is-inverse-ceiling"
               for r in report.report.failures)


# ---------------------------------------------------------------------------
# construction


def test_residues_take_closed_form(family):
    for lev in family.levels[1:]:
        i = lev.index
        assert lev.residues == tuple(math.comb(i, 2) + j for j in range(i))
        assert lev.span == i


def test_level_blocks_start_past_their_modulus(family):
    for lev in family.levels[1:]:
        assert all(t.start == 1 for t in lev.block.terms)
        assert all(t.modulus == math.factorial(lev.entry)
                   for t in lev.block.terms)
        assert not lev.block.member(lev.residues[0])
        assert lev.block.member(lev.modulus + lev.residues[0])


def test_excluded_probe_shows_the_greedy_skips(family):
    # every natural below the chosen residues lies in an earlier class
    lv3 = family.levels[3]
    assert lv3.excluded_probe == (0, 1, 2)
    lv5 = family.levels[5]
    assert lv5.excluded_probe == (0, 1, 2, 3, 4, 5, 6, 7)


def test_stages_accumulate_blocks(family):
    assert len(family.stages) == 5
    assert [len(s.terms) for s in family.stages] == [1, 3, 6, 10, 15]
    # A_0 is the first nonempty block
    assert family.stages[0].terms == family.levels[1].block.terms


def test_stage_density_matches_functionals(family):
    a4 = family.stages[4]
    expected = stage_density(family, 4)
    assert expected == Fraction(7039, 2075673600)
    for nu in ("d-star", "bd-star", "buck"):
        v = evaluate_measure(nu, a4)
        assert v.status == "exact" and v.value == expected


def test_depth_needs_schedule_room(params):
    with pytest.raises(ScheduleTooShort):
        build_witness(params, 5)
    assert len(build_witness(params, 3).levels) == 5


def test_invalid_params_refuse_to_build():
    bad = WitnessParams(HALF, 74, 2, (8, 9, 10, 11, 12, 13))
    with pytest.raises(InvariantsFailed):
        build_witness(bad, 2)


def test_demo_mode_builds_and_taints_certificates():
    small = WitnessParams(HALF, 10, 2, (3, 4, 5, 6))
    w = build_witness(small, 2, demo=True)
    assert w.demo
    assert w.levels[1].residues == (0,)
    assert w.levels[2].residues == (1, 2)
    assert w.levels[3].residues == (3, 4, 5)
    div = divergence_certificate(w, horizon=10 ** 4)
    assert div.demo
    gap = banach_gap_certificate(w, horizon=10 ** 4)
    assert gap.demo


def test_demo_blocks_against_brute_membership():
    small = WitnessParams(HALF, 10, 2, (3, 4, 5, 6))
    w = build_witness(small, 2, demo=True)
    for lev in w.levels[1:]:
        a = lev.modulus
        brute = {a * q + h for q in (1, 2) for h in lev.residues}
        assert set(lev.block.elements_in(0, 3 * a)) == brute
        for n in range(3 * a):
            assert lev.block.member(n) == (n in brute)


# ---------------------------------------------------------------------------
# invariants


def test_invariants_pass_exactly(family):
    report = check_witness_invariants(family, horizon=10 ** 6)
    assert report.passed
    assert len(report.records) == 29
    assert all(r.status == "pass" for r in report.records)


def test_stage_elements_below_horizon(family):
    a4 = family.stages[4]
    assert list(a4.elements_in(0, 10 ** 6)) == [362880, 725760]


def test_tampered_residues_fail_disjointness(family):
    lv = list(family.levels)
    bad_h = (0, 5)
    bad_block = APUnionSet(tuple(APTerm(lv[2].modulus, h, 1) for h in bad_h))
    lv[2] = replace(lv[2], residues=bad_h, block=bad_block)
    tampered = replace(family, levels=tuple(lv))
    report = check_witness_invariants(tampered, horizon=10 ** 4)
    assert not report.passed
    assert any(r.name == "disjoint[2]" for r in report.failures)
    with pytest.raises(InvariantsFailed):
        divergence_certificate(tampered, horizon=10 ** 4)


def test_oversized_span_fails_ratio_check(family):
    lv = list(family.levels)
    wide = (0, 100)
    block = APUnionSet(tuple(APTerm(lv[2].modulus, h, 1) for h in wide))
    lv[2] = replace(lv[2], residues=wide, span=101, block=block)
    report = check_witness_invariants(replace(family, levels=tuple(lv)),
                                      horizon=10 ** 4)
    assert any(r.name == "span-ratio[2]" and r.status == "fail"
               for r in report.records)


# ---------------------------------------------------------------------------
# certificates


def test_divergence_certificate_contents(family):
    cert = divergence_certificate(family)
    assert cert.verdict == "Cauchy-with-kappa-obstruction"
    assert not cert.demo
    assert cert.increments == tuple(
        (n, Fraction(n, math.factorial(n + 8))) for n in range(1, 6))
    assert cert.sum_target == Fraction(1, 4)
    assert all(s < Fraction(1, 4) for s in cert.partial_sums)
    assert list(cert.partial_sums) == sorted(cert.partial_sums)
    for win in cert.windows:
        assert win.length == win.level
        assert win.fill == win.level
        assert win.ratio >= HALF


def test_gap_certificate_upper_and_lower(family):
    cert = banach_gap_certificate(family, horizon=10 ** 6)
    assert cert.verdict == "no-banach-density-over-certified-range"
    assert cert.prefix_bound == sum(
        (Fraction(n, math.factorial(n + 8)) for n in range(1, 5)), Fraction(0))
    assert cert.prefix_bound < Fraction(1, 4)
    points = [m for m, _, _ in cert.prefix_checks]
    assert 362881 in points and 725761 in points
    assert max(points) == math.factorial(13)
    assert all(ratio <= Fraction(1, 4) for _, _, ratio in cert.prefix_checks)
    assert all(w.ratio >= HALF for w in cert.windows)
    assert {w.level for w in cert.windows} == {1, 2, 3, 4}


def test_gap_certificate_requires_one_half():
    p = derive_params(Fraction(1, 3), levels=4)
    w = build_witness(p, 2)
    with pytest.raises(KappaMismatch):
        banach_gap_certificate(w, horizon=10 ** 4)


# ---------------------------------------------------------------------------
# the Cauchy sequence


def test_tail_bound_dominates_schedule_tail(params):
    exact_tail = sum((Fraction(m, math.factorial(params.schedule[m]))
                      for m in range(2, 6)), Fraction(0))
    bound = increment_tail_bound(params, 2)
    assert exact_tail < bound < exact_tail + Fraction(1, 10 ** 9)
    bounds = [increment_tail_bound(params, s) for s in range(2, 10)]
    assert all(b > 0 for b in bounds)
    assert bounds == sorted(bounds, reverse=True)


def test_witness_sequence_profile_is_certified(family):
    seq = witness_sequence(family)
    prof = cauchy_profile("bd-star", seq, depth=5)
    assert prof.certified
    assert prof.table[0][4].value == Fraction(1319, 2075673600)
    assert prof.table[0][1].value == Fraction(2, math.factorial(10))
    assert prof.observed_max == Fraction(1319, 2075673600)
    # the certified modulus collapses to the first index: the whole tail
    # bound already sits far below 2^-15
    assert dict(prof.modulus)[15] == 0
    assert increment_tail_bound(family.params, 2) < Fraction(1, 2 ** 15)


def test_witness_sequence_rule_extends_then_runs_out(family):
    seq = witness_sequence(family)
    assert seq.item(4) == family.stages[4]
    with pytest.raises(InsufficientPrefix):
        seq.item(5)
