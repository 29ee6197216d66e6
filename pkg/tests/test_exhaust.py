import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densitas.exceptions import QueryBeyondHorizon, UnsupportedBackend
from densitas.exhaust import (
    LscsmDescriptor,
    check_lscsm_axioms,
    exh_member,
    exhaustive_norm,
    faulhaber,
    get_lscsm,
    lscsm_eval,
    phi_infty_eval,
    tail_value,
)
from densitas.natset import (
    APTerm,
    APUnionSet,
    DyadicBlockSet,
    FillRule,
    FiniteSet,
    HorizonSet,
    PeriodicSet,
    boolean_op,
)
from densitas.values import exact

from conftest import random_structured_set


EVENS = PeriodicSet(2, (0,))
OMEGA = PeriodicSet(1, (0,))
THIRDS = PeriodicSet(3, (1,))
MESSY = PeriodicSet(12, (0, 3, 7, 11), threshold=32, added=(4, 5), removed=(27, 31))
AP_UNION = APUnionSet((APTerm(6, 1), APTerm(10, 3)), extras=(0, 4), removals=(13,))
HALF_BLOCKS = DyadicBlockSet(FillRule.constant(Fraction(1, 2)))
CYCLE_BLOCKS = DyadicBlockSet(FillRule.cycled([Fraction(1, 3), Fraction(0), Fraction(3, 4)],
                                              threshold=2, head=(1, 0)))
DIRTY_BLOCKS = DyadicBlockSet(FillRule.cycled([Fraction(2, 5), Fraction(1, 7)]),
                              extras=(3, 9), removals=(4,))
POW2 = DyadicBlockSet(FillRule.vanishing(lambda n: Fraction(1, 2 ** n), "2^-n",
                                         slice_growth="bounded"))
THIN = DyadicBlockSet(FillRule.vanishing(lambda n: Fraction(1, n), "1/n"))


def brute_sup_ratio(elements, weight):
    """sup over k of (sum of weights over members <= k) / (sum over [1,k])."""
    best = Fraction(0)
    num = Fraction(0)
    den = Fraction(0)
    members = set(elements)
    hi = max(members) + 2 if members else 2
    for i in range(1, hi):
        w = weight(i)
        den += w
        if i in members:
            num += w
            if num / den > best:
                best = num / den
    return best


# ---------------------------------------------------------------------------
# power sums


def test_faulhaber_matches_brute_sums():
    rng = random.Random(7)
    for _ in range(40):
        e = rng.randrange(0, 9)
        k = rng.randrange(0, 400)
        assert faulhaber(k, e) == sum(i ** e for i in range(1, k + 1))


def test_faulhaber_large_arguments_stay_integral():
    # the Bernoulli-coefficient form must cancel exactly, not approximately
    assert faulhaber(10 ** 12, 3) == (10 ** 12 * (10 ** 12 + 1) // 2) ** 2
    assert faulhaber(10 ** 6, 17) == sum(i ** 17 for i in range(1, 10 ** 6 + 1))


# ---------------------------------------------------------------------------
# registry


def test_registry_round_trips():
    assert get_lscsm("phi-prefix").kind == "prefix"
    assert get_lscsm("psi-dyadic").kind == "psi"
    assert get_lscsm("phi-alpha:a=3").alpha == 3
    assert get_lscsm("phi-alpha:a=0").alpha == 0
    assert get_lscsm("phi-infty:eps=1/128").eps == Fraction(1, 128)
    assert get_lscsm("phi-infty-trunc:a=4").trunc == 4
    assert get_lscsm("counting").kind == "counting"
    assert get_lscsm("weighted:f=harmonic").weight == "harmonic"


def test_registry_rejects_bad_names():
    with pytest.raises(KeyError):
        get_lscsm("phi-alpha:a=1/2")  # non-integer exponents are out
    with pytest.raises(KeyError):
        get_lscsm("phi-alpha:a=-1")
    with pytest.raises(KeyError):
        get_lscsm("phi-infty:eps=0")
    with pytest.raises(KeyError):
        get_lscsm("phi-infty-trunc:a=12")
    with pytest.raises(KeyError):
        get_lscsm("weighted:f=nope")
    with pytest.raises(KeyError):
        get_lscsm("submeasure-of-the-month")


# ---------------------------------------------------------------------------
# finite-prefix evaluation


def test_prefix_eval_frozen_values():
    # evens below 10: members 2,4,6,8; the ratio peaks at k=2
    assert lscsm_eval("phi-prefix", EVENS, 10) == exact(Fraction(1, 2))
    assert lscsm_eval("phi-prefix", OMEGA, 5) == exact(Fraction(1))
    assert lscsm_eval("phi-prefix", FiniteSet(()), 50) == exact(0)
    # {3,4,5} below 6: best at k=5
    assert lscsm_eval("phi-prefix", FiniteSet((3, 4, 5)), 6) == exact(Fraction(3, 5))


def test_alpha_eval_frozen_values():
    assert lscsm_eval("phi-alpha:a=1", OMEGA, 4) == exact(Fraction(1))
    # {2,3} with weight i: best at k=3 is (2+3)/(1+2+3)
    assert lscsm_eval("phi-alpha:a=1", FiniteSet((2, 3)), 4) == exact(Fraction(5, 6))
    # alpha=0 must agree with phi-prefix everywhere it is queried
    for s in (EVENS, THIRDS, MESSY):
        assert lscsm_eval("phi-alpha:a=0", s, 64) == lscsm_eval("phi-prefix", s, 64)


def test_psi_eval_counts_blocks():
    # members 2,3 fill block [2,4) completely
    assert lscsm_eval("psi-dyadic", FiniteSet((2, 3)), 10) == exact(Fraction(1))
    # half of block [4,8)
    assert lscsm_eval("psi-dyadic", FiniteSet((4, 6)), 10) == exact(Fraction(1, 2))
    # a truncated block still divides by the full block length
    assert lscsm_eval("psi-dyadic", OMEGA, 6) == exact(Fraction(1))
    assert lscsm_eval("psi-dyadic", FiniteSet((8, 9)), 10) == exact(Fraction(1, 4))


def test_measure_kind_evals_are_plain_sums():
    s = FiniteSet((0, 1, 4))
    assert lscsm_eval("counting", s, 10) == exact(3)
    assert lscsm_eval("harmonic", s, 10) == exact(Fraction(1) + Fraction(1, 2) + Fraction(1, 5))
    assert lscsm_eval("geometric", s, 10) == exact(Fraction(1, 2) + Fraction(1, 4) + Fraction(1, 32))
    assert lscsm_eval("counting", s, 2) == exact(2)


def test_weighted_eval_agrees_with_brute_sup():
    w = lambda i: Fraction(1, i + 1)
    for s in (EVENS, FiniteSet((1, 2, 9)), THIRDS):
        got = lscsm_eval("weighted:f=harmonic", s, 40)
        want = brute_sup_ratio(s.elements_in(1, 40), w)
        assert got == exact(want)


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(min_value=1, max_value=120), max_size=25),
       st.integers(min_value=0, max_value=4))
def test_alpha_eval_matches_brute_sup_on_finite_sets(members, e):
    s = FiniteSet(tuple(sorted(members)))
    got = lscsm_eval(f"phi-alpha:a={e}", s, 121)
    want = brute_sup_ratio(sorted(members), lambda i: Fraction(i ** e))
    assert got == exact(want)


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(min_value=1, max_value=100), max_size=20),
       st.sets(st.integers(min_value=1, max_value=100), max_size=20))
def test_eval_monotone_and_subadditive_on_finite_sets(xs, ys):
    a, b = FiniteSet(tuple(sorted(xs))), FiniteSet(tuple(sorted(ys)))
    u = FiniteSet(tuple(sorted(xs | ys)))
    for name in ("phi-prefix", "psi-dyadic", "phi-alpha:a=2", "harmonic"):
        va = lscsm_eval(name, a, 101).value
        vb = lscsm_eval(name, b, 101).value
        vu = lscsm_eval(name, u, 101).value
        assert vu >= va and vu >= vb
        assert vu <= va + vb


def test_eval_is_monotone_in_the_prefix_length():
    for name in ("phi-prefix", "psi-dyadic", "phi-alpha:a=3", "counting", "harmonic"):
        prev = Fraction(0)
        for n in (8, 16, 32, 64, 128):
            v = lscsm_eval(name, MESSY, n).value
            assert v >= prev
            prev = v


def test_eval_beyond_horizon_raises():
    h = HorizonSet.from_members(64, range(0, 64, 2))
    assert lscsm_eval("phi-prefix", h, 64) == exact(Fraction(1, 2))
    with pytest.raises(QueryBeyondHorizon):
        lscsm_eval("phi-prefix", h, 65)


# ---------------------------------------------------------------------------
# phi-infty evaluation


def test_phi_infty_eval_brackets_the_direct_sum():
    eps = Fraction(1, 256)
    for s, n in ((EVENS, 32), (FiniteSet((2, 5, 6)), 10), (THIRDS, 48)):
        got = phi_infty_eval(s, n, eps)
        assert got.status == "bracket"
        assert got.upper - got.lower <= eps
        # the direct sum to the same truncation depth (2^-9 <= eps/2) lies
        # inside the bracket
        direct = sum(Fraction(1, 2 ** a)
                     * lscsm_eval(f"phi-alpha:a={2 ** a}", s, n).value
                     for a in range(0, 10))
        assert got.lower <= direct <= got.upper


def test_phi_infty_eval_omega_prefix_is_near_two():
    # every component ratio is 1 on a full prefix, so the sum approaches 2
    v = phi_infty_eval(OMEGA, 8, Fraction(1, 64))
    assert v.lower >= 2 - Fraction(1, 16)
    assert v.upper <= 2


def test_phi_infty_eval_rejects_bad_eps():
    with pytest.raises(ValueError):
        phi_infty_eval(EVENS, 16, 0)


# ---------------------------------------------------------------------------
# tails


def brute_tail(name, a, n, horizon):
    elems = [x for x in a.elements_in(max(n, 1), horizon)]
    return lscsm_eval(name, FiniteSet(tuple(elems)), horizon).value


@pytest.mark.parametrize("a", [EVENS, THIRDS, MESSY, AP_UNION,
                               FiniteSet((1, 2, 3, 50, 51, 52, 53))])
@pytest.mark.parametrize("n", [0, 1, 7, 64])
def test_prefix_tails_certify_the_supremum(a, n):
    t = tail_value("phi-prefix", a, n)
    b = brute_tail("phi-prefix", a, n, 100_000)
    assert t.status == "exact"
    assert b <= t.value
    # the brute scan should get close; the certified value is a sup, not a guess
    assert t.value - b <= Fraction(1, 50)


@pytest.mark.parametrize("a", [EVENS, MESSY, AP_UNION])
@pytest.mark.parametrize("e", [1, 2, 5])
def test_alpha_tails_bound_brute_scans(a, e):
    for n in (0, 9, 65):
        t = tail_value(f"phi-alpha:a={e}", a, n)
        b = brute_tail(f"phi-alpha:a={e}", a, n, 50_000)
        hi = t.value if t.status == "exact" else t.upper
        lo = t.value if t.status == "exact" else t.lower
        assert b <= hi
        assert lo <= hi


@pytest.mark.parametrize("a", [EVENS, THIRDS, MESSY, AP_UNION])
def test_psi_tails_are_exact_on_periodic_backends(a):
    for n in (0, 5, 33):
        t = tail_value("psi-dyadic", a, n)
        assert t.status == "exact"
        assert brute_tail("psi-dyadic", a, n, 1 << 17) <= t.value


@pytest.mark.parametrize("a", [HALF_BLOCKS, CYCLE_BLOCKS, DIRTY_BLOCKS, POW2, THIN])
def test_block_tails_bound_brute_scans(a):
    for name in ("phi-prefix", "phi-alpha:a=2", "psi-dyadic"):
        for n in (0, 6, 40):
            t = tail_value(name, a, n)
            b = brute_tail(name, a, n, 1 << 16)
            hi = t.value if t.status == "exact" else t.upper
            assert b <= hi, (name, n, t, b)


def test_tails_shrink_toward_the_norm():
    est = exhaustive_norm("phi-prefix", MESSY)
    tails = [tail_value("phi-prefix", MESSY, n).value for n in (1, 16, 256, 4096)]
    assert all(x >= y for x, y in zip(tails, tails[1:]))
    assert all(x >= est.value.value for x in tails)


def test_horizon_tails_are_observational():
    h = HorizonSet.from_members(2048, range(0, 2048, 3))
    for name in ("phi-prefix", "psi-dyadic", "phi-alpha:a=2"):
        t = tail_value(name, h, 10)
        assert t.status == "observational"


def test_counting_and_harmonic_tails_know_divergence():
    assert tail_value("counting", EVENS, 1000).status == "infinite"
    assert tail_value("harmonic", EVENS, 1000).status == "infinite"
    assert tail_value("harmonic", CYCLE_BLOCKS, 64).status == "infinite"
    t = tail_value("harmonic", POW2, 4)
    assert t.status == "bracket" and t.upper is not None
    # one member per block from 4 on: sum 1/(2^j+1) over j >= 2 stays tiny
    assert t.upper < Fraction(1, 2)
    fin = tail_value("counting", FiniteSet((3, 8, 9)), 4)
    assert fin == exact(2)


def test_geometric_tail_is_a_thin_bracket():
    t = tail_value("geometric", EVENS, 10)
    assert t.status == "bracket"
    assert t.upper - t.lower <= Fraction(1, 2 ** 1000)


# ---------------------------------------------------------------------------
# norms


def test_prefix_norm_is_the_upper_density():
    from densitas.density import upper_asymptotic
    for a in (EVENS, THIRDS, MESSY, AP_UNION, HALF_BLOCKS, CYCLE_BLOCKS, POW2, THIN):
        est = exhaustive_norm("phi-prefix", a)
        assert est.exact
        assert est.value == upper_asymptotic(a).value


def test_psi_norm_on_dyadic_fills_is_two_to_minus_n():
    for n in range(0, 13):
        a = DyadicBlockSet(FillRule.constant(Fraction(1, 2 ** n)))
        est = exhaustive_norm("psi-dyadic", a)
        assert est.exact and est.value.value == Fraction(1, 2 ** n)


def test_psi_norm_values():
    assert exhaustive_norm("psi-dyadic", EVENS).value == exact(Fraction(1, 2))
    assert exhaustive_norm("psi-dyadic", CYCLE_BLOCKS).value == exact(Fraction(3, 4))
    assert exhaustive_norm("psi-dyadic", POW2).value == exact(0)
    assert exhaustive_norm("psi-dyadic", FiniteSet((5, 6, 7))).value == exact(0)


def test_alpha_norm_constant_fill_closed_form():
    # constant fill c: norm = (1 - (1+c)^-(e+1)) * 2^(e+1) / (2^(e+1) - 1)
    for c in (Fraction(1, 2), Fraction(1, 3), Fraction(1)):
        for e in (0, 1, 2, 4):
            a = DyadicBlockSet(FillRule.constant(c))
            want = (1 - Fraction(1, (1 + c) ** (e + 1))) * Fraction(2 ** (e + 1), 2 ** (e + 1) - 1)
            assert exhaustive_norm(f"phi-alpha:a={e}", a).value == exact(want)


def test_alpha_norm_on_periodic_sets_is_the_density():
    for a in (EVENS, THIRDS, MESSY):
        for e in (1, 2, 8):
            est = exhaustive_norm(f"phi-alpha:a={e}", a)
            assert est.value == exact(a.density())


def test_block_norm_limits_are_approached_by_far_tails():
    # the certified norm must match what a deep tail scan sees
    for a in (CYCLE_BLOCKS, DIRTY_BLOCKS):
        for name in ("phi-prefix", "phi-alpha:a=1"):
            norm = exhaustive_norm(name, a).value.value
            far = brute_tail(name, a, 1 << 12, 1 << 18)
            assert abs(far - norm) <= Fraction(1, 30)


def test_infty_norm_on_periodic_is_twice_the_density():
    for a in (EVENS, THIRDS):
        est = exhaustive_norm("phi-infty:eps=1/64", a)
        assert est.value == exact(2 * a.density())


def test_infty_trunc_norm_is_the_partial_geometric_sum():
    for a in (EVENS, THIRDS):
        for depth in (0, 2, 4):
            est = exhaustive_norm(f"phi-infty-trunc:a={depth}", a)
            want = a.density() * (2 - Fraction(1, 2 ** depth))
            assert est.value == exact(want)


def test_counting_and_harmonic_norms():
    assert exhaustive_norm("counting", EVENS).value.status == "infinite"
    assert exhaustive_norm("counting", FiniteSet((1, 2))).value == exact(0)
    assert exhaustive_norm("harmonic", EVENS).value.status == "infinite"
    assert exhaustive_norm("harmonic", POW2).value == exact(0)
    assert exhaustive_norm("harmonic", THIN).value.status == "bracket"


def test_geometric_norm_is_zero_for_every_backend():
    for a in (EVENS, MESSY, AP_UNION, HALF_BLOCKS, THIN, FiniteSet((9,)),
              HorizonSet.from_members(128, (1, 2))):
        assert exhaustive_norm("geometric", a).value == exact(0)


def test_norm_ignores_finite_modifications():
    bump = FiniteSet((1, 5, 11, 200))
    for a in (EVENS, THIRDS, AP_UNION):
        for name in ("phi-prefix", "psi-dyadic", "phi-alpha:a=2"):
            base = exhaustive_norm(name, a).value
            more = exhaustive_norm(name, boolean_op(a, bump, "union")).value
            less = exhaustive_norm(name, boolean_op(a, bump, "difference")).value
            assert base == more == less


def test_profiles_are_nonincreasing_certified_uppers():
    for a in (EVENS, MESSY, CYCLE_BLOCKS, POW2):
        for name in ("phi-prefix", "psi-dyadic", "phi-alpha:a=2", "geometric"):
            est = exhaustive_norm(name, a)
            prev = None
            for cut, up in est.profile:
                if est.value.status == "exact":
                    assert up >= est.value.value
                if prev is not None:
                    assert up <= prev
                prev = up


def test_horizon_norms_are_observational_with_empty_profile():
    h = HorizonSet.from_members(4096, range(0, 4096, 3))
    est = exhaustive_norm("phi-prefix", h)
    assert est.value.status == "observational"
    assert est.profile == () and not est.exact


def test_custom_profile_cuts_are_respected():
    est = exhaustive_norm("phi-prefix", EVENS, profile_cuts=[10, 100])
    assert [c for c, _ in est.profile] == [10, 100]


# ---------------------------------------------------------------------------
# the sandwich between psi and the upper density


def test_psi_sandwich_on_mixed_backends():
    rng = random.Random(0xE1)
    cases = [EVENS, THIRDS, MESSY, HALF_BLOCKS, CYCLE_BLOCKS, DIRTY_BLOCKS]
    for _ in range(30):
        m = rng.randrange(2, 40)
        rs = tuple(sorted(rng.sample(range(m), rng.randrange(1, m))))
        cases.append(PeriodicSet(m, rs))
    for a in cases:
        psi = exhaustive_norm("psi-dyadic", a).value.value
        d = exhaustive_norm("phi-prefix", a).value.value
        assert psi / 2 <= d <= 16 * psi


# ---------------------------------------------------------------------------
# Exh membership


def test_exh_membership_classification():
    assert exh_member("psi-dyadic", POW2) == "in"
    assert exh_member("psi-dyadic", FiniteSet((4, 5))) == "in"
    assert exh_member("phi-prefix", EVENS) == "out"
    assert exh_member("counting", EVENS) == "out"
    assert exh_member("phi-prefix", HorizonSet.from_members(256, range(0, 256, 2))) == "unknown"
    # vanishing fill with unbounded slices: in Exh(psi) but its harmonic mass
    # cannot be certified either way
    assert exh_member("psi-dyadic", THIN) == "in"
    assert exh_member("harmonic", THIN) == "unknown"


# ---------------------------------------------------------------------------
# axiom batteries


def test_axiom_battery_passes_for_the_catalog(rng):
    sets = [EVENS, THIRDS, MESSY] + [random_structured_set(rng) for _ in range(5)]
    for name in ("phi-prefix", "psi-dyadic", "phi-alpha:a=2", "phi-infty-trunc:a=2",
                 "counting", "harmonic", "geometric", "weighted:f=harmonic"):
        rep = check_lscsm_axioms(name, sets)
        assert rep.passed, (name, rep.failures)


def test_axiom_battery_flags_a_broken_functional():
    # constant nonzero value fails the empty-set axiom outright
    rep = check_lscsm_axioms("phi-prefix", [EVENS],
                             eval_fn=lambda s, m: exact(Fraction(1, 3)))
    assert not rep.passed
    assert any(r.name == "empty-null" and r.status == "fail" for r in rep.records)


def test_axiom_battery_flags_non_monotone_evaluation():
    # an "evaluation" that shrinks with the prefix length breaks lower
    # semicontinuity; the battery must notice
    def shrinking(s, m):
        if not s.elements_in(0, m):
            return exact(0)
        return exact(Fraction(1, m))

    rep = check_lscsm_axioms("phi-prefix", [EVENS], eval_fn=shrinking)
    assert any(r.name.startswith("prefix-monotone") and r.status == "fail"
               for r in rep.records)
