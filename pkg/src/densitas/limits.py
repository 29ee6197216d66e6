"""Constructive limit builders for Cauchy sequences of sets.

Three pipelines produce a candidate limit together with a machine-checkable
certificate: a union limit for increasing sequences under sigma-subadditive
measures, a tail-cut construction for lower semicontinuous submeasures whose
increments have summable exhaustive norms, and a general Cauchy-to-limit
pipeline that delegates the existence step to a pluggable oracle and then
audits what the oracle returned.

Certificates never promise more than was computed: a verdict of "certified"
requires rule-backed sequences, exact values throughout, and a declared tail
bound that the observed data respects. Everything else is "observed-only".
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Optional

from .config import Config, DEFAULT_CONFIG
from .exceptions import (
    NoExactNorm,
    NonSummableIncrements,
    NotCauchy,
    NotMonotone,
    NoValidCut,
    OracleContractViolated,
)
from .exhaust import exhaustive_norm, get_lscsm, tail_value
from .metric import SetSequence, cauchy_profile, dist, evaluate_measure
from .natset import OMEGA, FiniteSet, NatSet, PeriodicSet, boolean_op
from .values import ExtValue, exact

__all__ = [
    "Ap0Oracle",
    "LimitCertificate",
    "StageRecord",
    "sigma_limit",
    "lscsm_limit",
    "cauchy_to_limit",
    "sigma_union_oracle",
]

_CUT_CAP = 1 << 34


@dataclass(frozen=True)
class StageRecord:
    """One audited stage of a limit certificate.

    `removed` is the measure of A_n minus A and `added` that of A minus A_n;
    `symdiff` is recorded when the pipeline checks the symmetric difference
    as a whole. `bound` is the certified cap the stage must respect and
    `cut` the tail cut chosen for the matching increment, when one exists.
    """

    index: int
    removed: ExtValue
    added: ExtValue
    symdiff: Optional[ExtValue] = None
    bound: Optional[Fraction] = None
    cut: Optional[int] = None
    ok: bool = True


@dataclass(frozen=True)
class LimitCertificate:
    limit: NatSet
    method: str
    stages: tuple[StageRecord, ...]
    increment_sum: Optional[Fraction]
    verdict: str  # "certified" | "observed-only"
    note: str = ""

    @property
    def all_ok(self) -> bool:
        return all(s.ok for s in self.stages)


@dataclass(frozen=True)
class Ap0Oracle:
    """Existence step for the Cauchy-to-limit pipeline.

    The resolver takes an increasing sequence with summable increment
    measures and returns a set A that contains every member up to measure
    zero: nu(A_n minus A) = 0 at all observed n, with nu(A minus A_n)
    sinking along the profile. The pipeline re-checks the zero residuals
    and raises OracleContractViolated if the resolver cheats.
    """

    name: str
    resolver: Callable[[SetSequence], NatSet]


def _exact_or_raise(v: ExtValue, what: str) -> Fraction:
    if v.status == "infinite":
        raise NonSummableIncrements(f"{what} has infinite measure")
    if v.status != "exact":
        raise NoExactNorm(f"{what} does not evaluate exactly ({v.status})")
    return v.value


def _union(parts, config):
    sets = [p for p in parts if not p.is_empty_surely()]
    if not sets:
        return FiniteSet(())
    return reduce(lambda x, y: boolean_op(x, y, "union", config), sets)


def _observed_depth(seq: SetSequence, depth: Optional[int]) -> int:
    if depth is None:
        depth = len(seq.prefix)
    if depth < 1:
        raise ValueError("need at least one stage")
    if depth > len(seq.prefix) and seq.rule is None:
        depth = len(seq.prefix)
    return depth


# ---------------------------------------------------------------------------
# union limits for increasing sequences


def sigma_limit(nu: str, seq: SetSequence, depth: Optional[int] = None,
                config: Config = DEFAULT_CONFIG) -> LimitCertificate:
    """Union limit of an increasing sequence under a sigma-subadditive
    measure.

    The limit is the declared one when the sequence carries it (verified to
    contain every observed member), otherwise the union of the observed
    prefix. Residuals nu(A minus A_n) are bounded by the increment tail
    sums; the verdict is certified only when a rule and a declared tail
    bound back the observed data.
    """
    if not seq.monotone:
        raise NotMonotone("sigma_limit needs the monotone flag, verified on the prefix")
    depth = _observed_depth(seq, depth)
    items = [seq.item(i) for i in range(depth)]

    increments: list[Fraction] = []
    for j in range(depth - 1):
        d = boolean_op(items[j + 1], items[j], "difference", config)
        increments.append(_exact_or_raise(
            evaluate_measure(nu, d, config), f"increment {j}"))
    observed_sum = sum(increments, Fraction(0))

    limit = seq.limit if seq.limit is not None else _union(items, config)

    stages = []
    all_exact = True
    for n in range(depth):
        out_part = boolean_op(items[n], limit, "difference", config)
        if not out_part.is_empty_surely() and out_part.elements_in(0, 1 << 16):
            raise NotMonotone(
                f"stage {n} is not contained in the limit candidate")
        removed = evaluate_measure(nu, out_part, config)
        added = evaluate_measure(nu, boolean_op(limit, items[n], "difference",
                                                config), config)
        if removed.status != "exact" or added.status != "exact":
            all_exact = False
            stages.append(StageRecord(n, removed, added, ok=False))
            continue
        tail = sum(increments[n:], Fraction(0))
        cap = seq.tail_bound(n) if seq.tail_bound is not None else None
        bound = max(tail, cap) if cap is not None else tail
        ok = removed.value == 0 and added.value <= bound
        stages.append(StageRecord(n, removed, added, bound=bound, ok=ok))

    certified = (all_exact and all(s.ok for s in stages)
                 and seq.rule is not None and seq.tail_bound is not None)
    note = "" if certified else (
        "prefix-only or unbounded tail; residuals are observed, not certified")
    return LimitCertificate(limit, "sigma-union", tuple(stages),
                            observed_sum,
                            "certified" if certified else "observed-only",
                            note)


# ---------------------------------------------------------------------------
# tail-cut limits for lscsm norms


def _drop_below(a: NatSet, n: int, config: Config) -> NatSet:
    """The set A with its elements under n removed."""
    if n == 0:
        return a
    if isinstance(a, FiniteSet):
        return FiniteSet(tuple(e for e in a.elements if e >= n))
    if n > (1 << 20):
        raise NoValidCut(f"cut {n} is too deep to materialize on {a.kind}")
    return boolean_op(a, FiniteSet(tuple(range(n))), "difference", config)


def _least_cut(desc, b: NatSet, target: Fraction, config: Config,
               cut_cap: int) -> int:
    """The least n with phi(B minus n) at most the target, by exponential
    probe plus binary refinement (tail values are nonincreasing in the cut)."""
    def ok(n: int) -> bool:
        t = tail_value(desc, b, n, config)
        if t.status != "exact":
            raise NoExactNorm(f"tail of {b.kind} at cut {n} is {t.status}")
        return t.value <= target

    if ok(0):
        return 0
    if isinstance(b, FiniteSet):
        hi = max(b.elements) + 1 if b.elements else 1
        if not ok(hi):
            raise NoValidCut("finite set keeps positive tail past its maximum")
    else:
        hi = 1
        while not ok(hi):
            hi *= 2
            if hi > cut_cap:
                raise NoValidCut(
                    f"no cut below {cut_cap} brings the tail under {target}")
    lo = 0  # ok(lo) is False once we get here, ok(hi) True
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _finite_tail_elements(a: NatSet, cut: int) -> Optional[int]:
    """Largest element of A at or beyond the cut if A is surely finite
    there, else None."""
    if isinstance(a, FiniteSet):
        past = [e for e in a.elements if e >= cut]
        return max(past) if past else -1
    if isinstance(a, PeriodicSet) and not a.residues:
        past = [e for e in a.added if e >= cut]
        return max(past) if past else -1
    return None


def lscsm_limit(phi: str, seq: SetSequence, depth: Optional[int] = None,
                config: Config = DEFAULT_CONFIG,
                cut_cap: int = _CUT_CAP) -> LimitCertificate:
    """Limit of an increasing sequence whose increments have summable
    exhaustive norms under a lower semicontinuous submeasure.

    For each increment B_j the builder picks the least cut n_j with
    phi(B_j minus n_j) <= 2 ||B_j|| (the factor 2 is kept verbatim even when
    the norm is 0), forces the cuts strictly increasing, and returns
    A = A_0 ∪ ⋃_j (B_j minus n_j). The certificate verifies A_k minus A ⊆ n_k
    exactly and bounds ||A △ A_k|| by 4 times the increment norm tail.
    """
    if not seq.monotone:
        raise NotMonotone("lscsm_limit needs the monotone flag, verified on the prefix")
    desc = get_lscsm(phi)
    depth = _observed_depth(seq, depth)
    items = [seq.item(i) for i in range(depth)]

    incs: list[NatSet] = []
    norms: list[Fraction] = []
    for j in range(depth - 1):
        b = boolean_op(items[j + 1], items[j], "difference", config)
        incs.append(b)
        est = exhaustive_norm(phi, b, config)
        norms.append(_exact_or_raise(est.value, f"increment norm {j}"))
    observed_sum = sum(norms, Fraction(0))

    cuts: list[int] = []
    trimmed: list[NatSet] = []
    prev = -1
    for j, b in enumerate(incs):
        n_j = max(_least_cut(desc, b, 2 * norms[j], config, cut_cap), prev + 1)
        prev = n_j
        cuts.append(n_j)
        trimmed.append(_drop_below(b, n_j, config))

    limit = _union([items[0]] + trimmed, config)

    stages = []
    all_exact = True
    for k in range(depth):
        out_part = boolean_op(items[k], limit, "difference", config)
        cut_k = cuts[k] if k < len(cuts) else (cuts[-1] + 1 if cuts else 0)
        top = _finite_tail_elements(out_part, cut_k)
        contained = top is not None and top < cut_k
        removed = exhaustive_norm(phi, out_part, config).value
        sym = boolean_op(limit, items[k], "symdiff", config)
        residual = exhaustive_norm(phi, sym, config).value
        if removed.status != "exact" or residual.status != "exact":
            all_exact = False
            stages.append(StageRecord(k, removed, removed, symdiff=residual,
                                      cut=cut_k, ok=False))
            continue
        tail = 4 * sum(norms[k:], Fraction(0))
        if seq.tail_bound is not None:
            tail = max(tail, 4 * seq.tail_bound(k))
        ok = contained and removed.value == 0 and residual.value <= tail
        stages.append(StageRecord(k, removed, exhaustive_norm(
            phi, boolean_op(limit, items[k], "difference", config),
            config).value, symdiff=residual, bound=tail, cut=cut_k, ok=ok))

    certified = (all_exact and all(s.ok for s in stages)
                 and seq.rule is not None and seq.tail_bound is not None)
    note = "" if certified else (
        "prefix-only or unbounded tail; residuals are observed, not certified")
    return LimitCertificate(limit, "tail-cut", tuple(stages), observed_sum,
                            "certified" if certified else "observed-only",
                            note)


# ---------------------------------------------------------------------------
# the general pipeline


def _complement(a: NatSet, config: Config) -> NatSet:
    return boolean_op(OMEGA, a, "difference", config)


def sigma_union_oracle(nu: str, config: Config = DEFAULT_CONFIG) -> Ap0Oracle:
    """The shipped oracle: resolve an increasing sequence by its union
    (via sigma_limit, so the zero-residual half of the contract is a
    construction invariant)."""
    def resolve(seq: SetSequence) -> NatSet:
        return sigma_limit(nu, seq, config=config).limit

    return Ap0Oracle(f"sigma-union[{nu}]", resolve)


def _increasing(prefix, config, limit: Optional[NatSet] = None) -> SetSequence:
    """Wrap an already-increasing chain of sets, accumulating unions so the
    monotone verification cannot trip over representation quirks."""
    acc = []
    cur = None
    for a in prefix:
        cur = a if cur is None else boolean_op(cur, a, "union", config)
        acc.append(cur)
    return SetSequence(prefix=tuple(acc), monotone=True, limit=limit)


def cauchy_to_limit(nu: str, seq: SetSequence, oracle: Ap0Oracle,
                    depth: Optional[int] = None,
                    config: Config = DEFAULT_CONFIG) -> LimitCertificate:
    """Limit of a certified Cauchy sequence through an existence oracle.

    The pipeline extracts a subsequence realizing nu(A_i △ A_j) < 2^-i,
    forms the nested intersections B_{i,j}, applies the oracle to their
    complement chains to recover the per-level sets B_i, then applies it
    once more to the increasing unions C_i to obtain A. The certificate
    re-checks the oracle's zero residuals exactly (OracleContractViolated
    otherwise) and audits nu(A_i △ A) < 2^{1-i} + nu(C_i △ A) stage by
    stage.
    """
    depth = _observed_depth(seq, depth)
    profile = cauchy_profile(nu, seq, depth, config)
    if not profile.certified:
        raise NotCauchy(
            "the sequence has no certified Cauchy modulus: " + profile.note)
    levels = dict(profile.modulus)
    sub = []
    for i in range(depth):
        if i not in levels:
            break
        sub.append(seq.item(levels[i]))
    if len(sub) < 2:
        raise NotCauchy("modulus extraction produced fewer than two stages")
    m = len(sub)

    # B_i from the oracle on the increasing complement chains
    b_sets: list[NatSet] = []
    for i in range(m):
        nested = []
        cur = sub[i]
        for j in range(i, m):
            cur = cur if j == i else boolean_op(cur, sub[j], "intersection", config)
            nested.append(cur)
        comp_chain = _increasing([_complement(x, config) for x in nested], config)
        e_i = oracle.resolver(comp_chain)
        for j, x in enumerate(comp_chain.prefix):
            r = evaluate_measure(nu, boolean_op(x, e_i, "difference", config),
                                 config)
            if r.status != "exact" or r.value != 0:
                raise OracleContractViolated(
                    f"oracle {oracle.name} left measure {r.value if r.status == 'exact' else r.status} "
                    f"of stage {j} outside its level-{i} answer")
        b_sets.append(_complement(e_i, config))

    # C_i = union of the B_k so far, then one more oracle call for A
    c_sets = []
    cur = None
    for b in b_sets:
        cur = b if cur is None else boolean_op(cur, b, "union", config)
        c_sets.append(cur)
    c_chain = _increasing(c_sets, config, limit=seq.limit)
    limit = oracle.resolver(c_chain)
    for j, x in enumerate(c_chain.prefix):
        r = evaluate_measure(nu, boolean_op(x, limit, "difference", config),
                             config)
        if r.status != "exact" or r.value != 0:
            raise OracleContractViolated(
                f"oracle {oracle.name} left measure {r.value if r.status == 'exact' else r.status} "
                f"of C_{j} outside the final answer")

    stages = []
    for i in range(m):
        di = dist(nu, sub[i], limit, config)
        ci = dist(nu, c_sets[i], limit, config)
        removed = evaluate_measure(
            nu, boolean_op(sub[i], limit, "difference", config), config)
        added = evaluate_measure(
            nu, boolean_op(limit, sub[i], "difference", config), config)
        if di.status != "exact" or ci.status != "exact":
            stages.append(StageRecord(i, removed, added, symdiff=di, ok=False))
            continue
        cap = Fraction(2, 2 ** i) + ci.value
        stages.append(StageRecord(i, removed, added, symdiff=di,
                                  bound=cap, ok=di.value < cap))

    all_ok = all(s.ok for s in stages)
    return LimitCertificate(limit, "cauchy-pipeline", tuple(stages), None,
                            "certified" if all_ok else "observed-only",
                            "" if all_ok else "a stage misses the pipeline bound")
