"""Upper densities and companion submeasures on structured sets.

Four functionals are implemented:

- upper asymptotic density: limsup of |A ∩ [1,n]| / n;
- upper Banach density: lim over n of the max window ratio
  max_k |A ∩ [k, k+n)| / n (the limit exists by subadditivity and equals the
  infimum, so doubling-length profiles are nonincreasing);
- the cover density: inf over covers of A by finite unions of infinite
  arithmetic progressions of the upper asymptotic density of the cover;
- weighted upper density for a divergent weight sequence f: limsup of
  (Σ_{i∈A, i≤n} f(i)) / (Σ_{i≤n} f(i)).

The evaluation strategy is closed-form per backend wherever the structure
pins the value down exactly:

- finite sets: everything is 0;
- eventually periodic sets (PeriodicSet, APUnionSet): all four functionals
  equal the natural density |R|/m (windows of length qm hold exactly q|R|
  rule elements; the set covers itself; slowly varying weights average to the
  same limit);
- dyadic block sets: prefix ratios have their local maxima exactly at slice
  ends, which gives a rational closed form for cyclic fills; unbounded slices
  are runs of consecutive members, which force both the window and cover
  densities to 1, while bounded-slice vanishing fills force them to 0;
- horizon sets: no tail, no theorem. Results are observational point
  estimates with profiles, never certificates. The cover density is refused
  outright because finite evidence bounds no cover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .config import Config, DEFAULT_CONFIG
from .exceptions import NotErdosUlam, UnsupportedBackend
from .natset import (
    APUnionSet,
    DyadicBlockSet,
    FiniteSet,
    HorizonSet,
    NatSet,
    PeriodicSet,
    boolean_op,
    complement,
    format_set,
    normalize_periodic,
    transform,
)
from .reports import AxiomReport, CheckRecord
from .values import ExtValue, bracket, exact, infinite, observational, surely_eq, surely_lt

__all__ = [
    "DensityEstimate",
    "Profile",
    "DomVerdict",
    "WeightFunction",
    "eventual_density",
    "upper_asymptotic",
    "lower_asymptotic",
    "upper_banach",
    "upper_buck",
    "weighted_upper",
    "weighted_prefix_profile",
    "lower_dual",
    "dom_membership",
    "prefix_profile",
    "window_profile",
    "counting_measure",
    "geometric_measure",
    "get_weight",
    "validate_weight",
    "check_upper_density_axioms",
    "check_submeasure_axioms",
    "FunctionalDescriptor",
    "get_functional",
    "FUNCTIONAL_NAMES",
]


@dataclass(frozen=True)
class Profile:
    kind: str  # "prefix" | "window-max" | "weighted-prefix"
    entries: tuple[tuple[int, Fraction], ...]
    method: str  # "exact" | "exact-sweep" | "candidate-probe" | "observational"


@dataclass(frozen=True)
class DensityEstimate:
    functional: str
    value: ExtValue
    method: str
    profile: Optional[Profile] = None


# ---------------------------------------------------------------------------
# eventual-density core


def eventual_density(a: NatSet) -> Optional[Fraction]:
    """Exact natural density when the backend structure guarantees it exists."""
    if isinstance(a, FiniteSet):
        return Fraction(0)
    if isinstance(a, PeriodicSet):
        return a.density()
    if isinstance(a, APUnionSet):
        return a.density()
    return None


# ---------------------------------------------------------------------------
# block closed forms


def _cycle_limits(b: DyadicBlockSet) -> tuple[Fraction, Fraction]:
    """(limsup, liminf) of prefix ratios for a cyclic fill rule.

    Within block n the ratio C(x)/x rises while x crosses the member slice
    and falls across the gap, so local maxima sit exactly at slice ends
    x = 2^n + l_n and local minima at block starts x = 2^{n+1}. Along the
    phase class p = (n - t) mod P the prefix count below 2^n tends to
    L_p * 2^n with

        L_p = (sum_{s=1..P} c_{(p-s) mod P} 2^{-s}) * 2^P / (2^P - 1),

    because earlier blocks contribute a geometric series with cycle-periodic
    coefficients (rounding errors total O(n), which vanishes against 2^n).
    Hence limsup = max_p (L_p + c_p)/(1 + c_p) and liminf = min_p (L_p + c_p)/2.
    """
    fill = b.fill
    P = len(fill.cycle)
    two_p = Fraction(2 ** P, 2 ** P - 1)
    best_hi: Optional[Fraction] = None
    best_lo: Optional[Fraction] = None
    for p in range(P):
        s_sum = sum(
            (fill.cycle[(p - s) % P] * Fraction(1, 2 ** s) for s in range(1, P + 1)),
            Fraction(0),
        )
        L = s_sum * two_p
        c = fill.cycle[p]
        hi = (L + c) / (1 + c)
        lo = (L + c) / 2
        best_hi = hi if best_hi is None or hi > best_hi else best_hi
        best_lo = lo if best_lo is None or lo < best_lo else best_lo
    return best_hi, best_lo


def _block_asymptotic(b: DyadicBlockSet) -> tuple[Fraction, Fraction]:
    """(limsup, liminf) of prefix ratios for any supported fill structure."""
    if b.fill.structure == "cycle":
        return _cycle_limits(b)
    # vanishing fill: fills below eps beyond some block keep every later
    # prefix ratio below 2 eps, so both limits are 0
    return Fraction(0), Fraction(0)


# ---------------------------------------------------------------------------
# profiles


def _default_prefix_lengths(a: NatSet, config: Config) -> list[int]:
    cap = config.prefix_horizon
    if isinstance(a, HorizonSet):
        cap = min(cap, a.horizon - 1)
    out = []
    n = 1
    while n <= cap:
        out.append(n)
        n *= 2
    if out and out[-1] != cap and cap >= 1:
        out.append(cap)
    return out


def prefix_profile(a: NatSet, config: Config = DEFAULT_CONFIG,
                   lengths: Optional[Sequence[int]] = None) -> Profile:
    """Exact prefix ratios |A ∩ [1,n]| / n at the requested lengths."""
    ns = list(lengths) if lengths is not None else _default_prefix_lengths(a, config)
    entries = tuple((n, Fraction(a.count_range(1, n + 1), n)) for n in ns)
    return Profile("prefix", entries, "exact")


def _max_window_in_elements(elems: Sequence[int], n: int,
                            hard_end: Optional[int] = None) -> int:
    """Max #elements in any length-n window; windows must end by hard_end."""
    best = 0
    j = 0
    for i, e in enumerate(elems):
        if hard_end is not None and e + n > hard_end:
            break
        while j < len(elems) and elems[j] < e + n:
            j += 1
        best = max(best, j - i)
    if hard_end is not None and elems:
        k = hard_end - n
        cnt = sum(1 for e in elems if k <= e < hard_end)
        best = max(best, cnt)
    return best


def _window_max(a: NatSet, n: int, config: Config) -> tuple[int, bool]:
    """(max_k |A ∩ [k, k+n)|, exact?) over all admissible window starts."""
    if isinstance(a, FiniteSet):
        return _max_window_in_elements(a.elements, n), True
    if isinstance(a, HorizonSet):
        elems = a.elements_in(0, a.horizon)
        return _max_window_in_elements(elems, n, hard_end=a.horizon), True
    if isinstance(a, PeriodicSet):
        sweep = a.threshold + a.modulus
        if sweep <= config.window_sweep_budget:
            return max(a.count_range(k, k + n) for k in range(sweep)), True
        ks = list(range(0, min(a.threshold, 64))) + [a.threshold + j for j in range(64)]
        return max(a.count_range(k, k + n) for k in ks), False
    if isinstance(a, APUnionSet):
        l = 1
        for t in a.terms:
            l = l // math.gcd(l, t.modulus) * t.modulus
            if l > config.window_sweep_budget:
                break
        t0 = max([t.min_element for t in a.terms]
                 + [x + 1 for x in a.extras] + [x + 1 for x in a.removals] + [0])
        if l <= config.window_sweep_budget and t0 + l <= 4 * config.window_sweep_budget:
            return max(a.count_range(k, k + n) for k in range(t0 + l)), True
        cands = {0, t0} | {t.min_element for t in a.terms} | set(a.extras)
        return max(a.count_range(k, k + n) for k in sorted(cands)), False
    if isinstance(a, DyadicBlockSet):
        if a.slices_unbounded():
            # find a slice at least n long: the window inside it is all members
            blk = a.fill.threshold
            for m in range(blk, blk + 4 * max(len(a.fill.cycle), 1) + n.bit_length() + 64):
                if a.slice_len(m) >= n:
                    return n, True
        span = max(4 * n, 64)
        elems = a.elements_in(0, span)
        return _max_window_in_elements(elems, n), False
    raise UnsupportedBackend(f"window scan not supported for backend {a.kind}")


def window_profile(a: NatSet, config: Config = DEFAULT_CONFIG,
                   lengths: Optional[Sequence[int]] = None) -> Profile:
    """Max window ratios max_k |A ∩ [k,k+n)| / n at the requested lengths.

    Doubling the length never increases the ratio (subadditivity of the
    window maximum), so power-of-two profiles are nonincreasing whenever the
    scan is exact.
    """
    if lengths is None:
        cap = config.window_max
        if isinstance(a, HorizonSet):
            cap = min(cap, a.horizon // 2)
        ns, n = [], 1
        while n <= cap:
            ns.append(n)
            n *= 2
    else:
        ns = list(lengths)
    entries = []
    all_exact = True
    for n in ns:
        cnt, is_exact = _window_max(a, n, config)
        all_exact = all_exact and is_exact
        entries.append((n, Fraction(cnt, n)))
    return Profile("window-max", tuple(entries),
                   "exact-sweep" if all_exact else "candidate-probe")


# ---------------------------------------------------------------------------
# the four functionals


def upper_asymptotic(a: NatSet, config: Config = DEFAULT_CONFIG,
                     with_profile: bool = False) -> DensityEstimate:
    name = "d-star"
    d = eventual_density(a)
    if d is not None:
        method = "finite" if isinstance(a, FiniteSet) else "eventual-period"
        prof = prefix_profile(a, config) if with_profile else None
        return DensityEstimate(name, exact(d), method, prof)
    if isinstance(a, DyadicBlockSet):
        hi, _ = _block_asymptotic(a)
        prof = prefix_profile(a, config) if with_profile else None
        return DensityEstimate(name, exact(hi), "block-fill", prof)
    if isinstance(a, HorizonSet):
        prof = prefix_profile(a, config)
        val = prof.entries[-1][1] if prof.entries else Fraction(0)
        return DensityEstimate(
            name,
            observational(val, "prefix ratio at the evidence horizon; no tail information"),
            "observational", prof)
    raise UnsupportedBackend(f"upper asymptotic density undefined for backend {a.kind}")


def lower_asymptotic(a: NatSet, config: Config = DEFAULT_CONFIG) -> DensityEstimate:
    """liminf of prefix ratios (the lower dual of d-star under complement)."""
    name = "d-star-lower"
    d = eventual_density(a)
    if d is not None:
        val = Fraction(0) if isinstance(a, FiniteSet) else d
        return DensityEstimate(name, exact(val), "eventual-period")
    if isinstance(a, DyadicBlockSet):
        _, lo = _block_asymptotic(a)
        return DensityEstimate(name, exact(lo), "block-fill")
    if isinstance(a, HorizonSet):
        prof = prefix_profile(a, config)
        val = prof.entries[-1][1] if prof.entries else Fraction(0)
        return DensityEstimate(
            name, observational(val, "prefix ratio at the evidence horizon; no tail information"),
            "observational", prof)
    raise UnsupportedBackend(f"lower asymptotic density undefined for backend {a.kind}")


def upper_banach(a: NatSet, config: Config = DEFAULT_CONFIG,
                 with_profile: bool = False) -> DensityEstimate:
    name = "bd-star"
    d = eventual_density(a)
    if d is not None:
        # beyond the exceptional prefix every window of length q*m holds
        # exactly q rule elements per residue, so the window limit is the
        # natural density
        method = "finite" if isinstance(a, FiniteSet) else "eventual-period"
        prof = window_profile(a, config) if with_profile else None
        return DensityEstimate(name, exact(d), method, prof)
    if isinstance(a, DyadicBlockSet):
        if a.slices_unbounded():
            val, why = Fraction(1), "unbounded runs of consecutive members"
        else:
            val, why = Fraction(0), "bounded clusters separated by doubling gaps"
        prof = window_profile(a, config) if with_profile else None
        return DensityEstimate(name, exact(val), why, prof)
    if isinstance(a, HorizonSet):
        prof = window_profile(a, config)
        val = prof.entries[-1][1] if prof.entries else Fraction(0)
        return DensityEstimate(
            name,
            observational(val, "max window ratio within the horizon; no tail information"),
            "observational", prof)
    raise UnsupportedBackend(f"upper Banach density undefined for backend {a.kind}")


def upper_buck(a: NatSet, config: Config = DEFAULT_CONFIG) -> DensityEstimate:
    name = "buck"
    if isinstance(a, FiniteSet):
        return DensityEstimate(
            name, exact(0),
            "each point sits on a progression of arbitrarily large modulus")
    d = eventual_density(a)
    if d is not None:
        # the rule part covers itself; sparse progressions absorb the finite
        # exceptions, so the infimum meets the monotone lower bound d
        return DensityEstimate(name, exact(d), "self-cover")
    if isinstance(a, DyadicBlockSet):
        if a.slices_unbounded():
            # a cover that is periodic mod M swallows any run of length M
            # whole, so unbounded runs force every cover to density 1
            return DensityEstimate(name, exact(1), "runs exhaust every residue system")
        return DensityEstimate(
            name, exact(0),
            "clusters of bounded size embed in unions of progressions with "
            "vanishing total density")
    if isinstance(a, HorizonSet):
        raise UnsupportedBackend(
            "cover density needs tail structure; horizon evidence bounds no cover")
    raise UnsupportedBackend(f"cover density undefined for backend {a.kind}")


# ---------------------------------------------------------------------------
# weighted upper density


@dataclass(frozen=True)
class WeightFunction:
    """A weight sequence f with its declared asymptotic regime.

    The flags assert, respectively: f(i) >= 0 everywhere; f(i) > 0 from some
    point on; partial sums F(n) diverge; f(n)/F(n) -> 0; and f varies slowly
    enough that weighted densities of eventually periodic sets equal their
    natural densities (true for constant and 1/(i+1) weights, where the
    weighted count over a residue class tracks |R|/m times the total weight).
    """

    name: str
    nonnegative: bool
    eventually_positive: bool
    divergent_partials: bool
    vanishing_ratio: bool
    slowly_varying: bool
    func: Callable[[int], Fraction] = None  # type: ignore[assignment]

    def __eq__(self, other):
        return isinstance(other, WeightFunction) and self.name == other.name

    def __hash__(self):
        return hash(self.name)


_WEIGHTS = {
    "constant": WeightFunction("constant", True, True, True, True, True,
                               lambda i: Fraction(1)),
    "harmonic": WeightFunction("harmonic", True, True, True, True, True,
                               lambda i: Fraction(1, i + 1)),
    # deliberately invalid examples, kept for the validator tests
    "doubling": WeightFunction("doubling", True, True, True, False, False,
                               lambda i: Fraction(2 ** min(i, 512))),
    "halving": WeightFunction("halving", True, True, False, True, False,
                              lambda i: Fraction(1, 2 ** min(i, 512))),
}


def get_weight(name: str) -> WeightFunction:
    try:
        return _WEIGHTS[name]
    except KeyError:
        raise KeyError(f"unknown weight {name!r}; have {sorted(_WEIGHTS)}") from None


def validate_weight(w: WeightFunction, config: Config = DEFAULT_CONFIG) -> AxiomReport:
    """Checks the divergent-weight axioms: nonnegativity, eventual positivity,
    divergent partial sums, vanishing term-to-sum ratio, finite rational values."""
    probes = list(range(0, 64)) + [255, 1024, 4095]
    records = []

    vals = {i: w.func(i) for i in probes}
    records.append(CheckRecord(
        "nonnegative", "pass" if w.nonnegative and all(v >= 0 for v in vals.values()) else "fail",
        "f(i) >= 0 on probe points and by declaration"))
    records.append(CheckRecord(
        "eventually-positive",
        "pass" if w.eventually_positive and all(vals[i] > 0 for i in probes[8:]) else "fail",
        "f(i) > 0 from some index on"))

    # growth probe for divergence: F(4095) against F(63)
    f63 = sum((w.func(i) for i in range(64)), Fraction(0))
    f4095 = f63 + sum((w.func(i) for i in range(64, 4096)), Fraction(0))
    growth_seen = f4095 > f63 * Fraction(11, 10) or not w.divergent_partials
    records.append(CheckRecord(
        "divergent-partials",
        "pass" if w.divergent_partials and growth_seen else "fail",
        "partial sums declared divergent and still growing at the probe horizon"))

    r63 = w.func(63) / f63 if f63 > 0 else Fraction(1)
    r4095 = w.func(4095) / f4095 if f4095 > 0 else Fraction(1)
    ratio_ok = w.vanishing_ratio and (r4095 < r63 or r4095 == 0)
    records.append(CheckRecord(
        "vanishing-ratio", "pass" if ratio_ok else "fail",
        "f(n)/F(n) declared null and decreasing across probe horizons"))

    records.append(CheckRecord(
        "finite-rational", "pass" if all(isinstance(v, Fraction) for v in vals.values()) else "fail",
        "weights are exact rationals"))
    return AxiomReport(f"weight {w.name}", tuple(records))


def _require_erdos_ulam(w: WeightFunction, config: Config):
    report = validate_weight(w, config)
    if not report.passed:
        bad = ", ".join(r.name for r in report.failures)
        raise NotErdosUlam(f"weight {w.name} fails: {bad}")


def weighted_prefix_profile(a: NatSet, w: WeightFunction,
                            config: Config = DEFAULT_CONFIG,
                            lengths: Optional[Sequence[int]] = None) -> Profile:
    """Observational weighted prefix ratios, float-accumulated.

    Exact rational accumulation is intentionally avoided here: denominators
    of partial harmonic sums grow exponentially and the profile is evidence,
    not a certificate.
    """
    ns = list(lengths) if lengths is not None else _default_prefix_lengths(a, config)
    cap = max(ns) + 1
    num = 0.0
    den = 0.0
    marks = sorted(set(ns))
    entries = []
    mi = 0
    for i in range(cap):
        fi = float(w.func(i))
        den += fi
        if a.member(i):
            num += fi
        while mi < len(marks) and i == marks[mi]:
            entries.append((marks[mi], Fraction(num / den if den else 0.0).limit_denominator(10**12)))
            mi += 1
    return Profile("weighted-prefix", tuple(entries), "observational")


def weighted_upper(a: NatSet, weight: WeightFunction | str = "harmonic",
                   config: Config = DEFAULT_CONFIG,
                   with_profile: bool = False) -> DensityEstimate:
    w = get_weight(weight) if isinstance(weight, str) else weight
    _require_erdos_ulam(w, config)
    name = f"weighted:f={w.name}"
    if w.name == "constant":
        inner = upper_asymptotic(a, config, with_profile)
        return DensityEstimate(name, inner.value, inner.method, inner.profile)
    if isinstance(a, FiniteSet):
        return DensityEstimate(name, exact(0), "finite weighted mass against divergent totals")
    d = eventual_density(a)
    if d is not None and w.slowly_varying:
        prof = weighted_prefix_profile(a, w, config) if with_profile else None
        return DensityEstimate(name, exact(d), "slowly-varying-weights", prof)
    if isinstance(a, (HorizonSet, DyadicBlockSet, PeriodicSet, APUnionSet)):
        prof = weighted_prefix_profile(a, w, config)
        val = prof.entries[-1][1] if prof.entries else Fraction(0)
        return DensityEstimate(
            name,
            observational(val, "weighted prefix ratio at the evidence horizon"),
            "observational", prof)
    raise UnsupportedBackend(f"weighted density undefined for backend {a.kind}")


# ---------------------------------------------------------------------------
# duals and dom membership


def _evaluate_upper(functional: str, a: NatSet, config: Config) -> ExtValue:
    if functional == "d-star":
        return upper_asymptotic(a, config).value
    if functional == "bd-star":
        return upper_banach(a, config).value
    if functional == "buck":
        return upper_buck(a, config).value
    if functional.startswith("weighted"):
        wname = functional.partition("f=")[2] or "harmonic"
        return weighted_upper(a, wname, config).value
    raise KeyError(f"unknown upper density {functional!r}")


def lower_dual(a: NatSet, functional: str = "d-star",
               config: Config = DEFAULT_CONFIG) -> DensityEstimate:
    """The dual lower density: 1 - mu*(complement of A)."""
    name = f"{functional}-lower"
    if isinstance(a, DyadicBlockSet):
        # the complement is not a prefix-fill block set, but its densities
        # are still pinned down by the fill structure
        if functional == "d-star":
            _, lo = _block_asymptotic(a)
            return DensityEstimate(name, exact(lo), "block-fill")
        if functional in ("bd-star", "buck"):
            gaps_unbounded = (a.fill.structure == "vanishing"
                              or any(v < 1 for v in a.fill.cycle))
            val = Fraction(0) if gaps_unbounded else Fraction(1)
            return DensityEstimate(name, exact(val),
                                   "complement run structure")
        raise UnsupportedBackend(f"no dual evaluation for {functional} on blocks")
    comp = complement(a, config)
    upper = _evaluate_upper(functional, comp, config)
    if upper.status == "exact":
        return DensityEstimate(name, exact(1 - upper.value), "dual-of-complement")
    if upper.status == "bracket":
        lo = None if upper.upper is None else 1 - upper.upper
        hi = None if upper.lower is None else 1 - upper.lower
        return DensityEstimate(name, bracket(lo, hi, upper.note), "dual-of-complement")
    return DensityEstimate(
        name,
        observational(1 - upper.value, upper.note or "dual of an observational value"),
        "observational")


@dataclass(frozen=True)
class DomVerdict:
    functional: str
    upper: ExtValue
    lower: ExtValue
    verdict: str  # "in" | "out" | "unknown"
    note: str = ""


def dom_membership(a: NatSet, functional: str = "d-star",
                   config: Config = DEFAULT_CONFIG,
                   bounds: Optional[tuple[ExtValue, ExtValue]] = None) -> DomVerdict:
    """Whether upper and dual lower values agree (measurability for mu).

    `bounds`, when given, supplies externally certified (upper, lower)
    estimates (for sets whose functionals this module cannot evaluate); the
    verdict logic is the same either way and never concludes from
    observational evidence.
    """
    if bounds is not None:
        up, lo = bounds
    else:
        up = _evaluate_upper(functional, a, config)
        lo = lower_dual(a, functional, config).value
    if surely_eq(up, lo):
        return DomVerdict(functional, up, lo, "in", "upper and lower values coincide exactly")
    if surely_lt(lo, up):
        return DomVerdict(functional, up, lo, "out",
                          "certified gap between lower and upper values")
    note = "evidence is not certified" if not (up.is_certified and lo.is_certified) \
        else "certificates overlap without pinning equality"
    return DomVerdict(functional, up, lo, "unknown", note)


# ---------------------------------------------------------------------------
# counting and geometric measures (companions for the metric layer)


def counting_measure(a: NatSet, config: Config = DEFAULT_CONFIG) -> ExtValue:
    if isinstance(a, FiniteSet):
        return exact(len(a.elements))
    if isinstance(a, HorizonSet):
        n = a.count_range(0, a.horizon)
        return bracket(n, None, "count within the horizon; tail unknown")
    if isinstance(a, PeriodicSet):
        if a.residues:
            return infinite()
        return exact(len(a.added))
    if isinstance(a, APUnionSet):
        if a.terms:
            return infinite()
        return exact(len(a.extras))
    if isinstance(a, DyadicBlockSet):
        if a.fill.structure == "cycle":
            if any(v > 0 for v in a.fill.cycle):
                return infinite()
            return exact(len(a.extras))
        lo = a.count_range(0, 1 << 16)
        return bracket(lo, None, "vanishing fill: tail slice occupancy undetermined")
    raise UnsupportedBackend(f"counting measure undefined for backend {a.kind}")


_GEO_EXP_BUDGET = 4096


def _geo_partial(a: NatSet, bits: int) -> Fraction:
    num = 0
    for x in a.elements_in(0, bits):
        num += 1 << (bits - x - 1)
    return Fraction(num, 1 << bits)


def geometric_measure(a: NatSet, config: Config = DEFAULT_CONFIG) -> ExtValue:
    """nu(A) = sum over A of 2^-(a+1); a genuine finite measure on all of P(omega)."""
    if isinstance(a, FiniteSet):
        return exact(_geo_partial(a, (a.elements[-1] + 1) if a.elements else 0))
    if isinstance(a, HorizonSet):
        b = min(a.horizon, _GEO_EXP_BUDGET)
        p = _geo_partial(a, b)
        return bracket(p, p + Fraction(1, 2 ** b), "tail bounded by residual mass")
    if isinstance(a, (PeriodicSet, APUnionSet)):
        big = max((t.modulus for t in a.terms), default=0) if isinstance(a, APUnionSet) \
            else a.modulus
        start = max((t.min_element for t in a.terms), default=0) if isinstance(a, APUnionSet) \
            else a.threshold
        if big <= _GEO_EXP_BUDGET and start <= _GEO_EXP_BUDGET:
            # exact: each residue class r (mod m) from its first element x0
            # contributes 2^-(x0+1) / (1 - 2^-m); inclusion-exclusion handles
            # overlaps between terms
            u = a if isinstance(a, APUnionSet) else None
            if u is None:
                from .natset import as_ap_union
                u = as_ap_union(a)
            from .natset import _ie_terms
            def geo_term(M: int, c: int, mn: int) -> Fraction:
                x0 = c if c >= mn else c + M * (-((mn - c) // -M))
                return Fraction(1, 2 ** (x0 + 1)) * Fraction(2 ** M, 2 ** M - 1)
            total = _ie_terms(u.terms, geo_term)
            total += sum((Fraction(1, 2 ** (x + 1)) for x in u.extras), Fraction(0))
            total -= sum((Fraction(1, 2 ** (x + 1)) for x in u.removals
                          if u._in_terms(x)), Fraction(0))
            return exact(total)
        p = _geo_partial(a, _GEO_EXP_BUDGET)
        return bracket(p, p + Fraction(1, 2 ** _GEO_EXP_BUDGET),
                       "moduli beyond the exponent budget; tail bounded by residual mass")
    if isinstance(a, DyadicBlockSet):
        p = _geo_partial(a, _GEO_EXP_BUDGET)
        return bracket(p, p + Fraction(1, 2 ** _GEO_EXP_BUDGET),
                       "tail bounded by residual mass")
    raise UnsupportedBackend(f"geometric measure undefined for backend {a.kind}")


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class FunctionalDescriptor:
    name: str
    kind: str  # "upper-density" | "measure"
    evaluate: Callable[[NatSet, Config], ExtValue]


def _weighted_eval(wname: str):
    def run(a: NatSet, config: Config) -> ExtValue:
        return weighted_upper(a, wname, config).value
    return run


FUNCTIONAL_NAMES = ("d-star", "bd-star", "buck", "weighted:f=harmonic",
                    "weighted:f=constant", "counting", "geometric")


def get_functional(name: str) -> FunctionalDescriptor:
    if name == "d-star":
        return FunctionalDescriptor(name, "upper-density",
                                    lambda a, c: upper_asymptotic(a, c).value)
    if name == "bd-star":
        return FunctionalDescriptor(name, "upper-density",
                                    lambda a, c: upper_banach(a, c).value)
    if name == "buck":
        return FunctionalDescriptor(name, "upper-density",
                                    lambda a, c: upper_buck(a, c).value)
    if name.startswith("weighted"):
        wname = name.partition("f=")[2] or "harmonic"
        get_weight(wname)  # fail fast on unknown weights
        return FunctionalDescriptor(f"weighted:f={wname}", "upper-density",
                                    _weighted_eval(wname))
    if name == "counting":
        return FunctionalDescriptor(name, "measure", counting_measure)
    if name in ("geometric", "geo"):
        return FunctionalDescriptor("geometric", "measure", geometric_measure)
    raise KeyError(f"unknown functional {name!r}; have {list(FUNCTIONAL_NAMES)}")


# ---------------------------------------------------------------------------
# axiom checkers


def _try_exact(fn, *args) -> tuple[Optional[ExtValue], str]:
    try:
        v = fn(*args)
    except UnsupportedBackend as e:
        return None, f"unsupported: {e}"
    except NotErdosUlam as e:
        return None, f"invalid weight: {e}"
    if not v.is_certified:
        return None, "value is observational"
    return v, ""


def check_upper_density_axioms(functional: str, sets: Sequence[NatSet],
                               config: Config = DEFAULT_CONFIG,
                               shifts: Sequence[int] = (7,),
                               dilations: Sequence[int] = (3,)) -> AxiomReport:
    """Verifies the upper-density axioms on a concrete family of sets:
    normalization, vanishing on finite sets, monotonicity, subadditivity,
    shift invariance for each given shift, and the dilation law
    mu*(k A) = mu*(A)/k for each given factor."""
    desc = get_functional(functional)
    ev = lambda s: _try_exact(desc.evaluate, s, config)
    records: list[CheckRecord] = []

    omega = PeriodicSet(1, (0,))
    v, why = ev(omega)
    if v is None:
        records.append(CheckRecord("normalization", "skip", why))
    else:
        records.append(CheckRecord(
            "normalization", "pass" if surely_eq(v, exact(1)) else "fail",
            "value on the full set", witness=v.value))

    fin = FiniteSet(tuple(range(0, 40, 3)))
    v, why = ev(fin)
    if v is None:
        records.append(CheckRecord("finite-null", "skip", why))
    else:
        records.append(CheckRecord(
            "finite-null", "pass" if surely_eq(v, exact(0)) else "fail",
            "value on a finite probe set", witness=v.value))

    for i, a in enumerate(sets):
        for j, b in enumerate(sets):
            if j <= i:
                continue
            try:
                u = boolean_op(a, b, "union", config)
            except Exception as e:
                records.append(CheckRecord(f"monotone[{i},{j}]", "skip", f"union failed: {e}"))
                continue
            va, wa = ev(a)
            vb, wb = ev(b)
            vu, wu = ev(u)
            if va is None or vb is None or vu is None:
                records.append(CheckRecord(
                    f"monotone[{i},{j}]", "skip", wa or wb or wu))
                continue
            records.append(CheckRecord(
                f"monotone[{i},{j}]",
                "pass" if not surely_lt(vu, va) and not surely_lt(vu, vb) else "fail",
                "value never drops under union"))
            sub_ok = (vu.lower is None or
                      (va.upper is not None and vb.upper is not None
                       and vu.lower <= va.upper + vb.upper)
                      or vu.status == "infinite")
            records.append(CheckRecord(
                f"subadditive[{i},{j}]", "pass" if sub_ok else "fail",
                "union value at most the sum"))

    for i, a in enumerate(sets):
        va, wa = ev(a)
        if va is None:
            records.append(CheckRecord(f"shift-invariant[{i}]", "skip", wa))
            continue
        for h in shifts:
            try:
                sh = transform(a, "shift", h)
            except UnsupportedBackend as e:
                records.append(CheckRecord(f"shift-invariant[{i},h={h}]",
                                           "skip", str(e)))
                continue
            vs, ws = ev(sh)
            if vs is None:
                records.append(CheckRecord(f"shift-invariant[{i},h={h}]",
                                           "skip", ws))
            else:
                records.append(CheckRecord(
                    f"shift-invariant[{i},h={h}]",
                    "pass" if surely_eq(va, vs) else "fail",
                    f"value unchanged by shifting {h}",
                    witness=(va.value, vs.value)))
        for k in dilations:
            try:
                di = transform(a, "dilate", k)
            except UnsupportedBackend as e:
                records.append(CheckRecord(f"dilation[{i},k={k}]", "skip",
                                           str(e)))
                continue
            vd, wd = ev(di)
            if vd is None or va.value is None:
                records.append(CheckRecord(f"dilation[{i},k={k}]", "skip",
                                           wd or "value not exact"))
            else:
                want = va.value / k
                records.append(CheckRecord(
                    f"dilation[{i},k={k}]",
                    "pass" if vd.status == "exact" and vd.value == want else "fail",
                    f"value scales by 1/k under dilation by k={k}",
                    witness=(va.value, vd.value)))

    return AxiomReport(f"upper density {desc.name}", tuple(records))


def check_submeasure_axioms(functional: str, sets: Sequence[NatSet],
                            config: Config = DEFAULT_CONFIG) -> AxiomReport:
    """Verifies submeasure axioms on a family: empty set maps to 0,
    monotonicity under union, and subadditivity."""
    desc = get_functional(functional)
    ev = lambda s: _try_exact(desc.evaluate, s, config)
    records: list[CheckRecord] = []

    v, why = ev(FiniteSet(()))
    if v is None:
        records.append(CheckRecord("empty-null", "skip", why))
    else:
        records.append(CheckRecord(
            "empty-null", "pass" if surely_eq(v, exact(0)) else "fail",
            "value on the empty set", witness=v.value))

    for i, a in enumerate(sets):
        for j, b in enumerate(sets):
            if j <= i:
                continue
            try:
                u = boolean_op(a, b, "union", config)
            except Exception as e:
                records.append(CheckRecord(f"monotone[{i},{j}]", "skip", f"union failed: {e}"))
                continue
            va, wa = ev(a)
            vb, wb = ev(b)
            vu, wu = ev(u)
            if va is None or vb is None or vu is None:
                records.append(CheckRecord(f"monotone[{i},{j}]", "skip", wa or wb or wu))
                continue
            records.append(CheckRecord(
                f"monotone[{i},{j}]",
                "pass" if not surely_lt(vu, va) and not surely_lt(vu, vb) else "fail",
                "value never drops under union"))
            if vu.status == "infinite":
                sub_ok = va.status == "infinite" or vb.status == "infinite"
            elif va.status == "infinite" or vb.status == "infinite":
                sub_ok = True
            else:
                sub_ok = (vu.upper is None or va.lower is None or vb.lower is None
                          or vu.lower <= va.upper + vb.upper)
            records.append(CheckRecord(
                f"subadditive[{i},{j}]", "pass" if sub_ok else "fail",
                "union value at most the sum"))

    return AxiomReport(f"submeasure {desc.name}", tuple(records))
