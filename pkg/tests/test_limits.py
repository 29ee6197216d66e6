"""Union limits, tail-cut limits, and the oracle-driven Cauchy pipeline."""

from fractions import Fraction

import pytest

from densitas.exceptions import (
    NoExactNorm,
    NonSummableIncrements,
    NotCauchy,
    NotMonotone,
    NoValidCut,
    OracleContractViolated,
)
from densitas.limits import (
    Ap0Oracle,
    cauchy_to_limit,
    lscsm_limit,
    sigma_limit,
    sigma_union_oracle,
)
from densitas.metric import SetSequence, dist, evaluate_measure
from densitas.natset import (
    EMPTY,
    EVENS,
    OMEGA,
    DyadicBlockSet,
    FillRule,
    FiniteSet,
    HorizonSet,
    PeriodicSet,
    boolean_op,
)


def growing_evens(n):
    return FiniteSet(tuple(range(0, 2 * n, 2)))


EVENS_CHAIN = SetSequence(
    prefix=tuple(growing_evens(n) for n in range(6)), rule=growing_evens,
    monotone=True, limit=EVENS,
    tail_bound=lambda i: Fraction(2, 3) / 4 ** i,
    label="expanding-evens")


def doubling_powers(n):
    return FiniteSet(tuple(2 ** j for j in range(n)))


POWER_CHAIN = SetSequence(
    prefix=tuple(doubling_powers(n) for n in range(22)), rule=doubling_powers,
    monotone=True, tail_bound=lambda i: Fraction(2, 2 ** i),
    label="power-blocks")


# ---------------------------------------------------------------------------
# sigma_limit


def test_sigma_limit_of_a_constant_sequence_is_the_set_itself():
    cert = sigma_limit("geometric", SetSequence.constant(EVENS, length=4))
    assert cert.verdict == "certified"
    assert cert.limit == EVENS
    assert all(s.removed.value == 0 and s.added.value == 0 for s in cert.stages)
    assert cert.increment_sum == 0


def test_sigma_limit_certifies_geometric_tails_on_the_evens_chain():
    cert = sigma_limit("geometric", EVENS_CHAIN)
    assert cert.verdict == "certified" and cert.all_ok
    assert cert.limit == EVENS
    # residuals are the exact geometric tails of the even weights
    for s in cert.stages:
        assert s.removed.value == 0
        assert s.added.value == Fraction(2, 3) / 4 ** s.index
        assert s.added.value <= s.bound


def test_sigma_limit_singleton_growth_recovers_the_full_progression():
    # A_n collects multiples of 3 one at a time; the declared limit is the
    # whole progression and the residuals are its geometric weight tails
    def stage(n):
        return FiniteSet(tuple(3 * j for j in range(n + 1)))

    seq = SetSequence(prefix=tuple(stage(n) for n in range(5)), rule=stage,
                      monotone=True, limit=PeriodicSet(3, (0,)),
                      tail_bound=lambda i: Fraction(4, 7) / 8 ** (i + 1))
    cert = sigma_limit("geometric", seq)
    assert cert.verdict == "certified" and cert.all_ok
    for s in cert.stages:
        direct = evaluate_measure(
            "geometric",
            boolean_op(cert.limit, stage(s.index), "difference"))
        assert s.added.value == direct.value == Fraction(4, 7) / 8 ** (s.index + 1)


def test_sigma_limit_reports_when_the_upper_density_breaks_the_tail_bound():
    # d* is not sigma-subadditive: null increments accumulate density 1/2,
    # so the certificate must refuse to certify
    seq = SetSequence(prefix=EVENS_CHAIN.prefix, rule=growing_evens,
                      monotone=True, limit=EVENS,
                      tail_bound=lambda i: Fraction(0))
    cert = sigma_limit("d-star", seq)
    assert cert.verdict == "observed-only"
    assert not cert.all_ok
    assert cert.stages[0].added.value == Fraction(1, 2)


def test_sigma_limit_requires_the_monotone_flag():
    with pytest.raises(NotMonotone):
        sigma_limit("geometric", SetSequence(prefix=(EMPTY, EVENS)))


def test_sigma_limit_rejects_infinite_increments():
    seq = SetSequence(prefix=(EMPTY, EVENS), monotone=True)
    with pytest.raises(NonSummableIncrements):
        sigma_limit("counting", seq)


def test_sigma_limit_rejects_inexact_increments():
    h1 = HorizonSet.from_members(64, range(0, 10))
    h2 = HorizonSet.from_members(64, range(0, 20))
    seq = SetSequence(prefix=(h1, h2), monotone=True)
    with pytest.raises(NoExactNorm):
        sigma_limit("d-star", seq)


# ---------------------------------------------------------------------------
# lscsm_limit


def test_tail_cut_limit_on_the_power_chain_is_fully_certified():
    cert = lscsm_limit("phi-prefix", POWER_CHAIN)
    assert cert.verdict == "certified" and cert.all_ok
    # every trimmed increment is empty here, so the limit is the empty set
    assert cert.limit.is_empty_surely()
    cuts = [s.cut for s in cert.stages]
    assert all(a < b for a, b in zip(cuts, cuts[1:]))
    for s in cert.stages:
        assert s.removed.value == 0
        assert s.symdiff.value == 0
        # 4 * sum_{j >= k} 2^-j = 2^{3-k}
        assert s.bound == Fraction(8, 2 ** s.index)


def test_tail_cut_limit_constant_sequence():
    cert = lscsm_limit("psi-dyadic", SetSequence.constant(EVENS, length=3))
    assert cert.verdict == "certified"
    assert dist("norm:psi-dyadic", cert.limit, EVENS).value == 0
    assert all(s.symdiff.value == 0 for s in cert.stages)


def test_tail_cut_limit_periodic_growth_observed_only_without_a_rule():
    chain = [PeriodicSet(16, (0,)), PeriodicSet(8, (0,)), PeriodicSet(4, (0,))]
    cert = lscsm_limit("phi-prefix", SetSequence(prefix=tuple(chain),
                                                 monotone=True))
    assert cert.verdict == "observed-only"
    assert cert.all_ok  # observed stages still respect the 4x tail bounds
    assert cert.increment_sum == Fraction(1, 16) + Fraction(1, 8)
    # the constructed limit keeps the final density
    assert evaluate_measure("d-star", cert.limit).value == Fraction(1, 4)


def test_tail_cut_limit_raises_when_no_cut_tames_a_null_increment():
    thin = DyadicBlockSet(FillRule.vanishing(
        lambda n: Fraction(1, n), "1/n", threshold=1,
        slice_growth="unbounded"))
    seq = SetSequence(prefix=(EMPTY, thin), monotone=True)
    with pytest.raises(NoValidCut):
        lscsm_limit("phi-prefix", seq, cut_cap=1 << 12)


def test_tail_cut_limit_requires_monotone_and_exact_norms():
    with pytest.raises(NotMonotone):
        lscsm_limit("phi-prefix", SetSequence(prefix=(EVENS, EMPTY)))
    h1 = HorizonSet.from_members(32, range(0, 8))
    h2 = HorizonSet.from_members(32, range(0, 16))
    with pytest.raises(NoExactNorm):
        lscsm_limit("phi-prefix", SetSequence(prefix=(h1, h2), monotone=True))


def test_tail_cut_limit_idempotent_on_its_own_output():
    cert = lscsm_limit("phi-prefix", POWER_CHAIN, depth=6)
    again = lscsm_limit("phi-prefix",
                        SetSequence.constant(cert.limit, length=3))
    assert again.verdict == "certified"
    assert all(s.symdiff.value == 0 for s in again.stages)


# ---------------------------------------------------------------------------
# cauchy_to_limit


def test_pipeline_on_a_constant_sequence_returns_an_equivalent_set():
    cert = cauchy_to_limit("d-star", SetSequence.constant(EVENS, length=4),
                           sigma_union_oracle("d-star"))
    assert cert.verdict == "certified"
    assert dist("d-star", cert.limit, EVENS).value == 0
    for s in cert.stages:
        assert s.symdiff.value == 0 and s.ok


def test_pipeline_matches_sigma_limit_on_a_monotone_chain():
    cert = cauchy_to_limit("geometric", EVENS_CHAIN,
                           sigma_union_oracle("geometric"))
    sig = sigma_limit("geometric", EVENS_CHAIN)
    assert cert.verdict == "certified"
    # both pipelines land on nu-equivalent limits
    assert dist("geometric", cert.limit, sig.limit).value == 0
    for s in cert.stages:
        assert s.ok and s.symdiff.value < s.bound


def test_pipeline_tolerates_null_finite_perturbations():
    # alternating A, A delta F_n with d*-null finite noise
    def stage(n):
        if n % 2 == 0:
            return EVENS
        return boolean_op(EVENS, FiniteSet((n, n + 2)), "symdiff")

    seq = SetSequence(prefix=tuple(stage(n) for n in range(6)), rule=stage,
                      tail_bound=lambda i: Fraction(0))
    cert = cauchy_to_limit("d-star", seq, sigma_union_oracle("d-star"))
    assert cert.verdict == "certified"
    assert dist("d-star", cert.limit, EVENS).value == 0


def test_pipeline_rejects_uncertified_sequences():
    bare = SetSequence(prefix=(EVENS, EVENS, EVENS))
    with pytest.raises(NotCauchy):
        cauchy_to_limit("d-star", bare, sigma_union_oracle("d-star"))


def test_pipeline_catches_a_cheating_oracle():
    cheat = Ap0Oracle("empty-always", lambda seq: EMPTY)
    with pytest.raises(OracleContractViolated):
        cauchy_to_limit("d-star", SetSequence.constant(EVENS, length=4),
                        cheat)


def test_pipeline_limit_feeds_back_with_zero_residuals():
    cert = cauchy_to_limit("d-star", SetSequence.constant(EVENS, length=3),
                           sigma_union_oracle("d-star"))
    back = cauchy_to_limit("d-star",
                           SetSequence.constant(cert.limit, length=3),
                           sigma_union_oracle("d-star"))
    assert all(s.symdiff.value == 0 for s in back.stages)
