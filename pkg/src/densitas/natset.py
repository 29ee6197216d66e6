"""Structured subsets of the naturals with exact counting.

Five backends, each carrying enough structure for the density and norm
evaluators to work in closed form where the mathematics allows it:

- ``FiniteSet``: explicit sorted elements.
- ``HorizonSet``: a bit table on [0, H); membership beyond H is *unknown* and
  queries there raise ``QueryBeyondHorizon`` rather than guessing.
- ``PeriodicSet``: residues mod m from a threshold t on, with finitely many
  signed exceptions below t.
- ``APUnionSet``: finite unions of arithmetic-progression tails
  {a*j + h : j >= j0}, plus finite extras/removals. Term moduli keep an
  optional factored label (e.g. "9!") so reports can print them symbolically.
- ``DyadicBlockSet``: per block I_n = [2^n, 2^{n+1}) the member slice is the
  prefix [2^n, 2^n + round(f_n * 2^n)) for a declared fill rule f. Rounding is
  half-up. Fill rules must declare one of three structures (constant cycle,
  eventually periodic cycle, vanishing) so downstream evaluators never have to
  guess tail behaviour.

``count_range`` runs in time independent of the interval length on the
Periodic and APUnion backends (per-residue floor arithmetic; CRT-pruned
inclusion-exclusion over term subsets). The set-literal grammar lives here and
is exposed by the CLI:

    fin{1,2,3}   fin{0..9}   fin{}
    per m=6 R={1,3} t=0 [add={..}] [rm={..}]
    ap a=720 h=1 j0=1 | ap a=6! h=3 j0=0      (factorial moduli allowed)
    blocks f(n)=2^-3 | =1/4 | =cycle{1/2,1/4}@2 | =1/n | =2^-n
    horizon H=16 bits=ff00     (hex, byte 0 = indices 0..7, LSB first)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional

from .config import Config, DEFAULT_CONFIG
from .exceptions import (
    IncompatibleBackends,
    ModulusBudgetExceeded,
    ParseError,
    QueryBeyondHorizon,
    UnsupportedBackend,
)

__all__ = [
    "NatSet",
    "FiniteSet",
    "HorizonSet",
    "PeriodicSet",
    "APTerm",
    "APUnionSet",
    "FillRule",
    "DyadicBlockSet",
    "boolean_op",
    "transform",
    "normalize_periodic",
    "complement",
    "drop_below",
    "parse_set",
    "format_set",
    "round_half_up",
]


def round_half_up(x: Fraction) -> int:
    """Nearest integer to x, halves rounded up. Used for block slice lengths."""
    return (2 * x.numerator + x.denominator) // (2 * x.denominator)


def _sorted_unique(xs: Iterable[int]) -> tuple[int, ...]:
    out = tuple(sorted(set(int(x) for x in xs)))
    if out and out[0] < 0:
        raise ValueError("elements must be naturals")
    return out


class NatSet:
    """Common interface; concrete backends subclass this."""

    kind: str = "?"

    def member(self, n: int) -> bool:
        raise NotImplementedError

    def count_range(self, lo: int, hi: int) -> int:
        """Exact |A ∩ [lo, hi)|."""
        raise NotImplementedError

    def elements_in(self, lo: int, hi: int) -> list[int]:
        """Sorted elements of A ∩ [lo, hi). Output-sensitive on structured backends."""
        return [n for n in range(max(lo, 0), hi) if self.member(n)]

    def is_empty_surely(self) -> bool:
        return False


# ---------------------------------------------------------------------------
# finite


@dataclass(frozen=True)
class FiniteSet(NatSet):
    elements: tuple[int, ...] = ()
    kind = "finite"

    def __post_init__(self):
        object.__setattr__(self, "elements", _sorted_unique(self.elements))

    def member(self, n: int) -> bool:
        return n in set(self.elements) if len(self.elements) > 16 else n in self.elements

    def count_range(self, lo: int, hi: int) -> int:
        return sum(1 for x in self.elements if lo <= x < hi)

    def elements_in(self, lo: int, hi: int) -> list[int]:
        return [x for x in self.elements if lo <= x < hi]

    def is_empty_surely(self) -> bool:
        return not self.elements


EMPTY = FiniteSet(())


def finite_range(lo: int, hi: int) -> FiniteSet:
    return FiniteSet(tuple(range(max(lo, 0), hi)))


# ---------------------------------------------------------------------------
# horizon bit table


@dataclass(frozen=True)
class HorizonSet(NatSet):
    horizon: int
    bits: bytes
    kind = "horizon"

    def __post_init__(self):
        need = (self.horizon + 7) // 8
        if len(self.bits) < need:
            object.__setattr__(self, "bits", self.bits + b"\x00" * (need - len(self.bits)))
        elif len(self.bits) > need:
            object.__setattr__(self, "bits", self.bits[:need])
        # cache the bit table as one big int; popcounts become O(1)-ish
        object.__setattr__(self, "_word", int.from_bytes(self.bits, "little"))

    @classmethod
    def from_members(cls, horizon: int, members: Iterable[int]) -> "HorizonSet":
        word = 0
        for m in members:
            if 0 <= m < horizon:
                word |= 1 << m
            else:
                raise QueryBeyondHorizon(f"member {m} outside horizon {horizon}")
        return cls(horizon, word.to_bytes((horizon + 7) // 8, "little"))

    def member(self, n: int) -> bool:
        if n < 0:
            return False
        if n >= self.horizon:
            raise QueryBeyondHorizon(f"membership of {n} unknown beyond horizon {self.horizon}")
        return bool((self._word >> n) & 1)

    def count_range(self, lo: int, hi: int) -> int:
        if hi > self.horizon:
            raise QueryBeyondHorizon(f"count beyond horizon {self.horizon}")
        lo = max(lo, 0)
        if hi <= lo:
            return 0
        mask = ((1 << (hi - lo)) - 1) << lo
        return (self._word & mask).bit_count()

    def elements_in(self, lo: int, hi: int) -> list[int]:
        if hi > self.horizon:
            raise QueryBeyondHorizon(f"elements beyond horizon {self.horizon}")
        return [n for n in range(max(lo, 0), hi) if (self._word >> n) & 1]


# ---------------------------------------------------------------------------
# periodic


def _ap_count(m: int, r: int, lo: int, hi: int) -> int:
    """#{x : x ≡ r (mod m), x >= r, lo <= x < hi} for 0 <= r < m."""
    lo = max(lo, r)
    if hi <= lo:
        return 0
    # smallest x >= lo with x ≡ r: r + m*ceil((lo-r)/m)
    j_lo = -((lo - r) // -m)
    j_hi = -((hi - r) // -m)  # count of j with r + m j < hi is ceil((hi-r)/m)
    return max(0, j_hi - j_lo)


@dataclass(frozen=True)
class PeriodicSet(NatSet):
    """n >= threshold: n ∈ A iff n mod modulus ∈ residues; below threshold the
    rule applies too, corrected by the signed exceptions `added`/`removed`."""

    modulus: int
    residues: tuple[int, ...]
    threshold: int = 0
    added: tuple[int, ...] = ()
    removed: tuple[int, ...] = ()
    kind = "periodic"

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be >= 1")
        rs = _sorted_unique(self.residues)
        if rs and rs[-1] >= self.modulus:
            raise ValueError("residues must lie in [0, modulus)")
        object.__setattr__(self, "residues", rs)
        added = _sorted_unique(self.added)
        removed = _sorted_unique(self.removed)
        rset = set(rs)
        for x in added:
            if x >= self.threshold or (x % self.modulus) in rset:
                raise ValueError(f"added exception {x} must be < threshold and not a rule member")
        for x in removed:
            if x >= self.threshold or (x % self.modulus) not in rset:
                raise ValueError(f"removed exception {x} must be < threshold and a rule member")
        object.__setattr__(self, "added", added)
        object.__setattr__(self, "removed", removed)

    def rule_member(self, n: int) -> bool:
        return (n % self.modulus) in set(self.residues)

    def member(self, n: int) -> bool:
        if n < 0:
            return False
        if n < self.threshold:
            if n in self.added:
                return True
            if n in self.removed:
                return False
        return self.rule_member(n)

    def count_range(self, lo: int, hi: int) -> int:
        lo = max(lo, 0)
        if hi <= lo:
            return 0
        total = 0
        for r in self.residues:
            total += _ap_count(self.modulus, r, lo, hi)
        total += sum(1 for x in self.added if lo <= x < hi)
        total -= sum(1 for x in self.removed if lo <= x < hi)
        return total

    def elements_in(self, lo: int, hi: int) -> list[int]:
        out = []
        for r in self.residues:
            first = r + self.modulus * (-((max(lo, 0) - r) // -self.modulus)) if max(lo, 0) > r else r
            out.extend(range(max(first, r), hi, self.modulus))
        out = set(out)
        out.update(x for x in self.added if lo <= x < hi)
        out.difference_update(self.removed)
        return sorted(out)

    def density(self) -> Fraction:
        return Fraction(len(self.residues), self.modulus)

    def is_empty_surely(self) -> bool:
        return not self.residues and not self.added


OMEGA = PeriodicSet(1, (0,))
EVENS = PeriodicSet(2, (0,))
ODDS = PeriodicSet(2, (1,))


# ---------------------------------------------------------------------------
# AP unions


@dataclass(frozen=True)
class APTerm:
    """{modulus * j + offset : j >= start}. Canonical form keeps offset < modulus."""

    modulus: int
    offset: int
    start: int = 0
    label: Optional[str] = None

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("term modulus must be >= 1")
        if self.offset < 0 or self.start < 0:
            raise ValueError("offset and start must be naturals")
        if self.offset >= self.modulus:
            shift, off = divmod(self.offset, self.modulus)
            object.__setattr__(self, "offset", off)
            object.__setattr__(self, "start", self.start + shift)

    @property
    def min_element(self) -> int:
        return self.modulus * self.start + self.offset

    def member(self, n: int) -> bool:
        return n >= self.min_element and n % self.modulus == self.offset

    def count_range(self, lo: int, hi: int) -> int:
        return _ap_count(self.modulus, self.offset, max(lo, self.min_element), hi)

    def modulus_text(self) -> str:
        return self.label if self.label else str(self.modulus)


def factorial_label(n: int) -> str:
    return f"{n}!"


def _crt_merge(m1: int, c1: int, m2: int, c2: int) -> Optional[tuple[int, int]]:
    """Solve x ≡ c1 (m1), x ≡ c2 (m2). Returns (lcm, c) or None if empty."""
    g = math.gcd(m1, m2)
    if (c1 - c2) % g:
        return None
    l = m1 // g * m2
    # c = c1 + m1 * t with t ≡ (c2-c1)/g * inv(m1/g) (mod m2/g)
    m2g = m2 // g
    t = ((c2 - c1) // g * pow(m1 // g, -1, m2g)) % m2g if m2g > 1 else 0
    return l, (c1 + m1 * t) % l


@dataclass(frozen=True)
class APUnionSet(NatSet):
    """((union of terms) ∪ extras) ∖ removals, extras/removals finite."""

    terms: tuple[APTerm, ...]
    extras: tuple[int, ...] = ()
    removals: tuple[int, ...] = ()
    kind = "ap-union"

    def __post_init__(self):
        object.__setattr__(self, "extras", _sorted_unique(self.extras))
        object.__setattr__(self, "removals", _sorted_unique(self.removals))
        if set(self.extras) & set(self.removals):
            raise ValueError("extras and removals must be disjoint")

    def _in_terms(self, n: int) -> bool:
        return any(t.member(n) for t in self.terms)

    def member(self, n: int) -> bool:
        if n < 0:
            return False
        if n in self.removals:
            return False
        return n in self.extras or self._in_terms(n)

    def count_range(self, lo: int, hi: int) -> int:
        lo = max(lo, 0)
        if hi <= lo:
            return 0
        total = _ie_terms(self.terms, lambda M, c, mn: _ap_count(M, c, max(lo, mn), hi))
        total += sum(1 for x in self.extras if lo <= x < hi and not self._in_terms(x))
        total -= sum(1 for x in self.removals if lo <= x < hi and (x in self.extras or self._in_terms(x)))
        return total

    def elements_in(self, lo: int, hi: int) -> list[int]:
        out = set()
        for t in self.terms:
            first = max(lo, t.min_element)
            rem = (first - t.offset) % t.modulus
            if rem:
                first += t.modulus - rem
            out.update(range(first, hi, t.modulus))
        out.update(x for x in self.extras if lo <= x < hi)
        out.difference_update(self.removals)
        return sorted(out)

    def density(self) -> Fraction:
        """Natural density of the union (limit exists; finite parts ignored)."""
        return _ie_terms(self.terms, lambda M, c, mn: Fraction(1, M))

    def is_empty_surely(self) -> bool:
        return not self.terms and not self.extras


def _ie_terms(terms: tuple[APTerm, ...], measure: Callable[[int, int, int], object]):
    """Inclusion-exclusion over nonempty CRT-compatible term subsets.

    ``measure(M, c, min_x)`` evaluates one intersection: the AP x ≡ c (mod M)
    restricted to x >= min_x. Branches die as soon as an intersection is empty,
    so pairwise-disjoint families cost O(k^2) instead of 2^k.
    """
    total = None

    def rec(idx: int, M: int, c: int, mn: int, sign: int):
        nonlocal total
        for i in range(idx, len(terms)):
            t = terms[i]
            merged = _crt_merge(M, c, t.modulus, t.offset)
            if merged is None:
                continue
            M2, c2 = merged
            mn2 = max(mn, t.min_element)
            contrib = measure(M2, c2, mn2)
            total_local = contrib if sign > 0 else -contrib
            if total is None:
                total_store = total_local
            else:
                total_store = total + total_local
            total = total_store
            rec(i + 1, M2, c2, mn2, -sign)

    rec(0, 1, 0, 0, +1)
    if total is None:
        # empty term list: measure of nothing
        zero = measure(1, 0, 0)
        return zero - zero  # typed zero (int 0 or Fraction 0)
    return total


# ---------------------------------------------------------------------------
# dyadic blocks


@dataclass(frozen=True)
class FillRule:
    """Block fill rule n -> f_n ∈ [0,1] ∩ Q with declared tail structure.

    structure "cycle": f_n = cycle[(n - threshold) % len(cycle)] for
    n >= threshold, with explicit head values for n < threshold.
    structure "vanishing": f is nonincreasing to 0 beyond the threshold
    (declared by the rule author; spot-checked at construction).
    """

    structure: str  # "cycle" | "vanishing"
    cycle: tuple[Fraction, ...] = ()
    threshold: int = 0
    head: tuple[Fraction, ...] = ()
    func_label: str = ""
    slice_growth: str = ""  # "bounded" | "unbounded" (declared; required for vanishing)
    _func: Optional[Callable[[int], Fraction]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.structure not in ("cycle", "vanishing"):
            raise ValueError("fill structure must be 'cycle' or 'vanishing'")
        for v in tuple(self.cycle) + tuple(self.head):
            if not (0 <= v <= 1):
                raise ValueError("fill values must lie in [0, 1]")
        if self.structure == "cycle":
            if not self.cycle:
                raise ValueError("cycle structure needs at least one value")
            derived = "unbounded" if any(v > 0 for v in self.cycle) else "bounded"
            object.__setattr__(self, "slice_growth", derived)
        if self.structure == "vanishing":
            if self._func is None:
                raise ValueError("vanishing rule needs a callable")
            if self.slice_growth not in ("bounded", "unbounded"):
                raise ValueError("vanishing rule must declare slice_growth bounded/unbounded")
            last = None
            lens = []
            for n in range(max(self.threshold, 1), max(self.threshold, 1) + 48):
                v = self._func(n)
                if not (0 <= v <= 1):
                    raise ValueError("fill values must lie in [0, 1]")
                if last is not None and v > last:
                    raise ValueError("vanishing rule must be nonincreasing beyond threshold")
                last = v
                lens.append(round_half_up(v * (1 << n)))
            # spot-check the declared slice growth against a probe window
            growing = lens[-1] > 4 * max(lens[0], 1)
            if self.slice_growth == "bounded" and growing:
                raise ValueError("slice lengths grow but rule declares them bounded")
            if self.slice_growth == "unbounded" and lens[-1] <= lens[0]:
                raise ValueError("slice lengths do not grow but rule declares them unbounded")

    @classmethod
    def constant(cls, c: Fraction) -> "FillRule":
        c = Fraction(c)
        return cls(structure="cycle", cycle=(c,), threshold=0, func_label=str(c))

    @classmethod
    def cycled(cls, values: Iterable[Fraction], threshold: int = 0,
               head: Iterable[Fraction] = ()) -> "FillRule":
        vals = tuple(Fraction(v) for v in values)
        hd = tuple(Fraction(v) for v in head)
        if len(hd) < threshold:
            hd = hd + (Fraction(0),) * (threshold - len(hd))
        label = "cycle{" + ",".join(str(v) for v in vals) + "}" + (f"@{threshold}" if threshold else "")
        return cls(structure="cycle", cycle=vals, threshold=threshold, head=hd[:threshold],
                   func_label=label)

    @classmethod
    def vanishing(cls, func: Callable[[int], Fraction], label: str, threshold: int = 1,
                  slice_growth: str = "unbounded") -> "FillRule":
        return cls(structure="vanishing", threshold=threshold, func_label=label,
                   slice_growth=slice_growth, _func=func)

    def value(self, n: int) -> Fraction:
        if n < self.threshold:
            return self.head[n] if n < len(self.head) else Fraction(0)
        if self.structure == "cycle":
            return self.cycle[(n - self.threshold) % len(self.cycle)]
        return self._func(n)


@dataclass(frozen=True)
class DyadicBlockSet(NatSet):
    """Member slice in block I_n = [2^n, 2^{n+1}) is [2^n, 2^n + round(f_n 2^n)).

    0 belongs to no block, hence never to the rule part. Finite extras/removals
    let boolean ops against finite sets stay representable.
    """

    fill: FillRule
    extras: tuple[int, ...] = ()
    removals: tuple[int, ...] = ()
    kind = "dyadic-block"

    def __post_init__(self):
        object.__setattr__(self, "extras", _sorted_unique(self.extras))
        object.__setattr__(self, "removals", _sorted_unique(self.removals))
        if set(self.extras) & set(self.removals):
            raise ValueError("extras and removals must be disjoint")

    def slice_len(self, n: int) -> int:
        return round_half_up(self.fill.value(n) * (1 << n))

    def slices_unbounded(self) -> bool:
        """Whether member-run lengths grow without bound (declared structure)."""
        return self.fill.slice_growth == "unbounded"

    def _rule_member(self, n: int) -> bool:
        if n < 1:
            return False
        blk = n.bit_length() - 1
        return n - (1 << blk) < self.slice_len(blk)

    def member(self, n: int) -> bool:
        if n < 0:
            return False
        if n in self.removals:
            return False
        return n in self.extras or self._rule_member(n)

    def count_range(self, lo: int, hi: int) -> int:
        lo = max(lo, 0)
        if hi <= lo:
            return 0
        total = 0
        if hi > 1:
            b_lo = max(lo, 1).bit_length() - 1
            b_hi = (hi - 1).bit_length() - 1
            for blk in range(b_lo, b_hi + 1):
                s, e = 1 << blk, (1 << blk) + self.slice_len(blk)
                total += max(0, min(e, hi) - max(s, lo))
        total += sum(1 for x in self.extras if lo <= x < hi and not self._rule_member(x))
        total -= sum(1 for x in self.removals if lo <= x < hi and (x in self.extras or self._rule_member(x)))
        return total

    def elements_in(self, lo: int, hi: int) -> list[int]:
        out = set()
        if hi > 1:
            b_lo = max(lo, 1).bit_length() - 1
            b_hi = (hi - 1).bit_length() - 1
            for blk in range(b_lo, b_hi + 1):
                s, e = 1 << blk, (1 << blk) + self.slice_len(blk)
                out.update(range(max(s, lo), min(e, hi)))
        out.update(x for x in self.extras if lo <= x < hi)
        out.difference_update(self.removals)
        return sorted(out)


# ---------------------------------------------------------------------------
# boolean algebra


def _finite_op(a: set, b: set, op: str) -> set:
    if op == "union":
        return a | b
    if op == "intersection":
        return a & b
    if op == "difference":
        return a - b
    if op == "symdiff":
        return a ^ b
    raise ValueError(f"unknown op {op!r}")


_OPS = ("union", "intersection", "difference", "symdiff")


def boolean_op(a: NatSet, b: NatSet, op: str, config: Config = DEFAULT_CONFIG) -> NatSet:
    """Exact set algebra on combinable backend pairs.

    Combinable: finite x finite; any x finite (both orders); periodic x
    periodic via lcm (modulus budget guarded); ap-union pairs by term
    concatenation (union) or term-level disjoint/identical analysis, falling
    back to lcm normalization; periodic x ap-union through the ap-union route;
    horizon x horizon with equal horizons. Anything else raises
    IncompatibleBackends. a == b short-circuits for every backend.
    """
    if op not in _OPS:
        raise ValueError(f"unknown op {op!r}")
    if a == b:
        if op in ("difference", "symdiff"):
            return EMPTY
        return a

    if isinstance(a, FiniteSet) and isinstance(b, FiniteSet):
        return FiniteSet(tuple(_finite_op(set(a.elements), set(b.elements), op)))

    if isinstance(b, FiniteSet):
        return _op_with_finite(a, b, op)
    if isinstance(a, FiniteSet):
        if op == "difference":
            # finite minus anything stays finite: filter elements
            kept = []
            for x in a.elements:
                try:
                    inb = b.member(x)
                except QueryBeyondHorizon:
                    raise
                if not inb:
                    kept.append(x)
            return FiniteSet(tuple(kept))
        if op == "intersection":
            return FiniteSet(tuple(x for x in a.elements if b.member(x)))
        return _op_with_finite(b, a, op)  # union and symdiff commute

    if isinstance(a, HorizonSet) and isinstance(b, HorizonSet):
        if a.horizon != b.horizon:
            raise IncompatibleBackends("horizon sets must share the same horizon")
        w = _finite_word_op(a._word, b._word, op, a.horizon)
        return HorizonSet(a.horizon, w.to_bytes((a.horizon + 7) // 8, "little"))

    if isinstance(a, PeriodicSet) and isinstance(b, PeriodicSet):
        return _periodic_pair_op(a, b, op, config)

    if isinstance(a, (PeriodicSet, APUnionSet)) and isinstance(b, (PeriodicSet, APUnionSet)):
        au = as_ap_union(a)
        bu = as_ap_union(b)
        return _ap_pair_op(au, bu, op, config)

    raise IncompatibleBackends(f"cannot combine {a.kind} with {b.kind} under {op}")


def _finite_word_op(wa: int, wb: int, op: str, horizon: int) -> int:
    mask = (1 << horizon) - 1
    if op == "union":
        return (wa | wb) & mask
    if op == "intersection":
        return wa & wb
    if op == "difference":
        return wa & ~wb & mask
    return (wa ^ wb) & mask


def _op_with_finite(a: NatSet, f: FiniteSet, op: str) -> NatSet:
    """Absorb a finite operand into the structured backend's exception fields."""
    if isinstance(a, HorizonSet):
        if f.elements and f.elements[-1] >= a.horizon:
            raise QueryBeyondHorizon("finite operand exceeds the horizon")
        wf = 0
        for x in f.elements:
            wf |= 1 << x
        w = _finite_word_op(a._word, wf, op, a.horizon)
        return HorizonSet(a.horizon, w.to_bytes((a.horizon + 7) // 8, "little"))

    if op == "intersection":
        return FiniteSet(tuple(x for x in f.elements if a.member(x)))

    if isinstance(a, PeriodicSet):
        need_t = max([a.threshold] + [x + 1 for x in f.elements])
        added = set(a.added)
        removed = set(a.removed)
        # land every rule decision below need_t explicitly where exceptions live
        def is_mem(x):
            return a.member(x)
        for x in f.elements:
            mem = is_mem(x)
            if op == "union":
                want = True
            elif op == "difference":
                want = False
            else:  # symdiff
                want = not mem
            rule = a.rule_member(x)
            added.discard(x)
            removed.discard(x)
            if want and not rule:
                added.add(x)
            if not want and rule:
                removed.add(x)
        return _shrunk_periodic(a.modulus, a.residues, need_t,
                                sorted(added), sorted(removed))

    if isinstance(a, APUnionSet):
        extras = set(a.extras)
        removals = set(a.removals)
        for x in f.elements:
            mem = a.member(x)
            want = True if op == "union" else (False if op == "difference" else not mem)
            extras.discard(x)
            removals.discard(x)
            if want and not a._in_terms(x):
                extras.add(x)
            if not want and a._in_terms(x):
                removals.add(x)
        return APUnionSet(a.terms, tuple(sorted(extras)), tuple(sorted(removals)))

    if isinstance(a, DyadicBlockSet):
        extras = set(a.extras)
        removals = set(a.removals)
        for x in f.elements:
            mem = a.member(x)
            want = True if op == "union" else (False if op == "difference" else not mem)
            extras.discard(x)
            removals.discard(x)
            if want and not a._rule_member(x):
                extras.add(x)
            if not want and a._rule_member(x):
                removals.add(x)
        return DyadicBlockSet(a.fill, tuple(sorted(extras)), tuple(sorted(removals)))

    raise IncompatibleBackends(f"cannot combine {a.kind} with finite under {op}")


def _shrunk_periodic(m: int, residues, t: int, added, removed) -> PeriodicSet:
    """PeriodicSet with the threshold shrunk to the minimal value covering the
    exceptions, so extensionally equal constructions compare equal."""
    exc = tuple(added) + tuple(removed)
    t_min = max(exc) + 1 if exc else 0
    return PeriodicSet(m, tuple(residues), t_min, tuple(added), tuple(removed))


def _periodic_pair_op(a: PeriodicSet, b: PeriodicSet, op: str, config: Config) -> PeriodicSet:
    l = a.modulus // math.gcd(a.modulus, b.modulus) * b.modulus
    if l > config.modulus_budget:
        raise ModulusBudgetExceeded(f"lcm {l} exceeds modulus budget {config.modulus_budget}")
    ra = {x for x in range(l) if (x % a.modulus) in set(a.residues)}
    rb = {x for x in range(l) if (x % b.modulus) in set(b.residues)}
    residues = _finite_op(ra, rb, op)
    t = max(a.threshold, b.threshold)
    added, removed = [], []
    rset = residues
    for x in range(t):
        want_a = a.member(x)
        want_b = b.member(x)
        want = _finite_op({1} if want_a else set(), {1} if want_b else set(), op) == {1}
        rule = (x % l) in rset
        if want and not rule:
            added.append(x)
        elif not want and rule:
            removed.append(x)
    return _shrunk_periodic(l, sorted(residues), t, added, removed)


def as_ap_union(a: NatSet) -> APUnionSet:
    """View a periodic or AP-union set as an AP union (cheap, exact)."""
    if isinstance(a, APUnionSet):
        return a
    if isinstance(a, PeriodicSet):
        terms = tuple(APTerm(a.modulus, r, 0) for r in a.residues)
        base = APUnionSet(terms)
        extras, removals = [], []
        for x in range(a.threshold):
            mem = a.member(x)
            if mem and not base._in_terms(x):
                extras.append(x)
            elif not mem and base._in_terms(x):
                removals.append(x)
        return APUnionSet(terms, tuple(extras), tuple(removals))
    if isinstance(a, FiniteSet):
        return APUnionSet((), a.elements, ())
    raise IncompatibleBackends(f"{a.kind} has no AP-union view")


def _terms_disjoint(t1: APTerm, t2: APTerm) -> bool:
    g = math.gcd(t1.modulus, t2.modulus)
    return (t1.offset - t2.offset) % g != 0


def _same_progression(t1: APTerm, t2: APTerm) -> bool:
    return t1.modulus == t2.modulus and t1.offset == t2.offset and t1.start == t2.start


def _ap_pair_op(a: APUnionSet, b: APUnionSet, op: str, config: Config) -> NatSet:
    if op == "union":
        merged = list(a.terms)
        for t in b.terms:
            if not any(_same_progression(t, s) for s in merged):
                merged.append(t)
        u = APUnionSet(tuple(merged))
        fix = sorted((set(a.extras) | set(b.extras)))
        cuts = [x for x in set(a.removals) | set(b.removals) if not APUnionSet(tuple(merged), tuple(fix)).member(x) or True]
        # removals survive only where neither operand holds the element
        extras = [x for x in fix if not u._in_terms(x)]
        removals = [x for x in (set(a.removals) | set(b.removals))
                    if not a.member(x) and not b.member(x) and (u._in_terms(x) or x in extras)]
        extras = [x for x in extras if x not in removals]
        return APUnionSet(tuple(merged), tuple(sorted(extras)), tuple(sorted(removals)))

    if op == "symdiff":
        left = _ap_pair_op(a, b, "difference", config)
        right = _ap_pair_op(b, a, "difference", config)
        return boolean_op(left, right, "union", config)

    if op == "difference":
        # term-level analysis: works when each subtrahend term is either
        # identical to a minuend term or CRT-disjoint from all of them
        analyzable = True
        kill = set()
        for tb in b.terms:
            hit = None
            for i, ta in enumerate(a.terms):
                if _same_progression(ta, tb):
                    hit = i
                elif not _terms_disjoint(ta, tb):
                    analyzable = False
                    break
            if not analyzable:
                break
            if hit is not None:
                kill.add(hit)
        if analyzable:
            terms = tuple(t for i, t in enumerate(a.terms) if i not in kill)
            stub = APUnionSet(terms)
            extras = [x for x in a.extras if not b.member(x) and not stub._in_terms(x)]
            removals = set(a.removals)
            # b's finite extras must leave the result
            for x in b.extras:
                if stub._in_terms(x) or x in extras:
                    if x in extras:
                        extras.remove(x)
                    else:
                        removals.add(x)
            removals = {x for x in removals if stub._in_terms(x) or x in set(extras)}
            return APUnionSet(terms, tuple(sorted(extras)), tuple(sorted(removals)))
        # fall back to lcm normalization
        pa = normalize_periodic(a, config)
        pb = normalize_periodic(b, config)
        return _periodic_pair_op(pa, pb, "difference", config)

    # intersection
    pa = normalize_periodic(a, config)
    pb = normalize_periodic(b, config)
    return _periodic_pair_op(pa, pb, "intersection", config)


def normalize_periodic(a: NatSet, config: Config = DEFAULT_CONFIG) -> PeriodicSet:
    """Rewrite an AP union (or periodic/finite set) as a single PeriodicSet.

    The lcm of term moduli and the resulting residue materialization are
    guarded by config.modulus_budget.
    """
    if isinstance(a, PeriodicSet):
        return a
    if isinstance(a, FiniteSet):
        t = (a.elements[-1] + 1) if a.elements else 0
        return PeriodicSet(1, (), t, a.elements, ())
    if not isinstance(a, APUnionSet):
        raise UnsupportedBackend(f"cannot normalize backend {a.kind}")
    if not a.terms:
        t = (a.extras[-1] + 1) if a.extras else 0
        return PeriodicSet(1, (), t, a.extras, ())
    l = 1
    for t in a.terms:
        l = l // math.gcd(l, t.modulus) * t.modulus
        if l > config.modulus_budget:
            raise ModulusBudgetExceeded(
                f"lcm of term moduli exceeds modulus budget {config.modulus_budget}")
    residues = set()
    for t in a.terms:
        residues.update(range(t.offset, l, t.modulus))
    threshold = max([t.min_element for t in a.terms]
                    + [x + 1 for x in a.extras] + [x + 1 for x in a.removals] + [0])
    added, removed = [], []
    for x in range(threshold):
        mem = a.member(x)
        rule = (x % l) in residues
        if mem and not rule:
            added.append(x)
        elif not mem and rule:
            removed.append(x)
    return _shrunk_periodic(l, sorted(residues), threshold, added, removed)


def complement(a: NatSet, config: Config = DEFAULT_CONFIG) -> NatSet:
    """omega minus a, where representable."""
    if isinstance(a, FiniteSet):
        t = (a.elements[-1] + 1) if a.elements else 0
        return PeriodicSet(1, (0,), t, (), a.elements)
    if isinstance(a, PeriodicSet):
        co_res = tuple(r for r in range(a.modulus) if r not in set(a.residues))
        return PeriodicSet(a.modulus, co_res, a.threshold, a.removed, a.added)
    if isinstance(a, APUnionSet):
        return complement(normalize_periodic(a, config), config)
    if isinstance(a, HorizonSet):
        mask = (1 << a.horizon) - 1
        w = ~a._word & mask
        return HorizonSet(a.horizon, w.to_bytes((a.horizon + 7) // 8, "little"))
    raise UnsupportedBackend(f"complement not representable for backend {a.kind}")


def drop_below(a: NatSet, n: int, config: Config = DEFAULT_CONFIG) -> NatSet:
    """A ∖ [0, n), the tail of A from n on.

    Backends map to themselves except PeriodicSet, whose tail is returned as
    an APUnionSet (term starts advance past n; this stays O(residues) even
    for cuts far beyond the period).
    """
    if n <= 0:
        return a
    if isinstance(a, FiniteSet):
        return FiniteSet(tuple(x for x in a.elements if x >= n))
    if isinstance(a, HorizonSet):
        w = a._word >> n << n if n < a.horizon else 0
        return HorizonSet(a.horizon, w.to_bytes((a.horizon + 7) // 8, "little"))
    if isinstance(a, PeriodicSet):
        return drop_below(as_ap_union(a), n, config)
    if isinstance(a, APUnionSet):
        new_terms = []
        for t in a.terms:
            if t.min_element >= n:
                new_terms.append(t)
            else:
                j0 = -((n - t.offset) // -t.modulus)
                new_terms.append(APTerm(t.modulus, t.offset, max(j0, 0), t.label))
        extras = tuple(x for x in a.extras if x >= n)
        stub = APUnionSet(tuple(new_terms))
        removals = tuple(x for x in a.removals if x >= n and stub._in_terms(x))
        return APUnionSet(tuple(new_terms), extras, removals)
    if isinstance(a, DyadicBlockSet):
        cut = FiniteSet(tuple(a.elements_in(0, n)))
        return boolean_op(a, cut, "difference", config)
    raise UnsupportedBackend(f"drop_below not supported for backend {a.kind}")


def transform(a: NatSet, kind: str, amount: int) -> NatSet:
    """Dilation k·A = {k·a : a ∈ A} or shift A + h = {a + h : a ∈ A}."""
    if kind not in ("dilate", "shift"):
        raise ValueError("transform kind must be 'dilate' or 'shift'")
    if amount < 0 or (kind == "dilate" and amount == 0):
        raise ValueError("dilation needs k >= 1, shift needs h >= 0")
    k, h = (amount, 0) if kind == "dilate" else (1, amount)

    if isinstance(a, FiniteSet):
        return FiniteSet(tuple(k * x + h for x in a.elements))
    if isinstance(a, PeriodicSet):
        m = a.modulus * k
        residues = tuple(sorted((k * r + h) % m for r in a.residues))
        if kind == "dilate":
            # k·A is supported on multiples of k only; residues k*r capture that
            t = a.threshold * k
            added = tuple(k * x for x in a.added)
            removed = tuple(k * x for x in a.removed)
        else:
            t = a.threshold + h
            added = tuple(x + h for x in a.added)
            removed = tuple(x + h for x in a.removed)
            # shifting may expose [0, h) as rule members that must not exist
            rset = {(x % m) for x in residues}
            extra_removed = tuple(x for x in range(min(h, t)) if (x % m) in rset)
            removed = tuple(sorted(set(removed) | set(extra_removed)))
            t = max(t, h)
        return PeriodicSet(m, residues, t, added, removed)
    if isinstance(a, APUnionSet):
        terms = tuple(APTerm(t.modulus * k, t.offset * k + h, t.start,
                             None if kind == "dilate" and t.label is None else t.label and f"{k}*{t.label}" if kind == "dilate" else t.label)
                      for t in a.terms)
        return APUnionSet(terms,
                          tuple(k * x + h for x in a.extras),
                          tuple(k * x + h for x in a.removals))
    if isinstance(a, HorizonSet):
        members = [k * x + h for x in a.elements_in(0, a.horizon)]
        new_h = k * (a.horizon - 1) + h + 1 if a.horizon > 0 else h
        return HorizonSet.from_members(new_h, members)
    raise UnsupportedBackend(f"transform not supported for backend {a.kind}")


# ---------------------------------------------------------------------------
# set-literal grammar


_TOKEN = re.compile(r"\s*")


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def eat(self, literal: str) -> bool:
        self.skip_ws()
        if self.text.startswith(literal, self.pos):
            self.pos += len(literal)
            return True
        return False

    def expect(self, literal: str):
        if not self.eat(literal):
            raise ParseError(f"expected {literal!r}", self.text, self.pos)

    def nat(self) -> int:
        self.skip_ws()
        m = re.match(r"\d+", self.text[self.pos:])
        if not m:
            raise ParseError("expected a natural number", self.text, self.pos)
        self.pos += m.end()
        return int(m.group())

    def modulus(self) -> tuple[int, Optional[str]]:
        n = self.nat()
        if self.eat("!"):
            return math.factorial(n), factorial_label(n)
        return n, None

    def rational(self) -> Fraction:
        self.skip_ws()
        if self.text.startswith("2^-", self.pos):
            self.pos += 3
            return Fraction(1, 2 ** self.nat())
        num = self.nat()
        if self.eat("/"):
            return Fraction(num, self.nat())
        return Fraction(num)

    def nat_list(self) -> tuple[int, ...]:
        self.expect("{")
        out: list[int] = []
        self.skip_ws()
        if self.eat("}"):
            return ()
        while True:
            n = self.nat()
            if self.eat(".."):
                out.extend(range(n, self.nat() + 1))
            else:
                out.append(n)
            if self.eat("}"):
                return tuple(out)
            self.expect(",")

    def done(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def parse_set(text: str) -> NatSet:
    """Parse the set-literal grammar (see module docstring)."""
    cur = _Cursor(text)
    s = _parse_one(cur)
    if not cur.done():
        raise ParseError("trailing input after set literal", text, cur.pos)
    return s


def _parse_one(cur: _Cursor) -> NatSet:
    cur.skip_ws()
    if cur.eat("fin"):
        return FiniteSet(cur.nat_list())
    if cur.eat("per"):
        cur.expect("m=")
        m = cur.nat()
        cur.expect("R=")
        residues = cur.nat_list()
        t = 0
        added: tuple[int, ...] = ()
        removed: tuple[int, ...] = ()
        if cur.eat("t="):
            t = cur.nat()
        if cur.eat("add="):
            added = cur.nat_list()
        if cur.eat("rm="):
            removed = cur.nat_list()
        try:
            return PeriodicSet(m, residues, t, added, removed)
        except ValueError as e:
            raise ParseError(str(e), cur.text, cur.pos) from e
    if cur.eat("blocks"):
        cur.expect("f(n)=")
        return DyadicBlockSet(_parse_fill(cur))
    if cur.eat("horizon"):
        cur.expect("H=")
        h = cur.nat()
        cur.expect("bits=")
        cur.skip_ws()
        m = re.match(r"[0-9a-fA-F]+", cur.text[cur.pos:])
        if not m:
            raise ParseError("expected hex bits", cur.text, cur.pos)
        cur.pos += m.end()
        hexstr = m.group()
        if len(hexstr) % 2:
            hexstr = hexstr + "0"
        return HorizonSet(h, bytes.fromhex(hexstr))
    if cur.text[cur.pos:].lstrip().startswith("ap"):
        terms = []
        while True:
            cur.expect("ap")
            cur.expect("a=")
            a, label = cur.modulus()
            cur.expect("h=")
            h = cur.nat()
            j0 = 0
            if cur.eat("j0="):
                j0 = cur.nat()
            terms.append(APTerm(a, h, j0, label))
            if not cur.eat("|"):
                break
        return APUnionSet(tuple(terms))
    raise ParseError("expected one of fin/per/ap/blocks/horizon", cur.text, cur.pos)


def _parse_fill(cur: _Cursor) -> FillRule:
    cur.skip_ws()
    rest = cur.text[cur.pos:]
    if rest.startswith("1/n"):
        cur.pos += 3
        return FillRule.vanishing(lambda n: Fraction(1, max(n, 1)), "1/n",
                                  slice_growth="unbounded")
    if rest.startswith("2^-n"):
        cur.pos += 4
        return FillRule.vanishing(lambda n: Fraction(1, 2 ** n) if n >= 0 else Fraction(1),
                                  "2^-n", slice_growth="bounded")
    if cur.eat("cycle"):
        cur.expect("{")
        vals = [cur.rational()]
        while cur.eat(","):
            vals.append(cur.rational())
        cur.expect("}")
        t = cur.nat() if cur.eat("@") else 0
        return FillRule.cycled(vals, t)
    try:
        c = cur.rational()
    except ParseError:
        raise ParseError("expected a fill rule (const, cycle{..}, 1/n, 2^-n)", cur.text, cur.pos)
    if not (0 <= c <= 1):
        raise ParseError("fill constant must lie in [0,1]", cur.text, cur.pos)
    return FillRule.constant(c)


def _fmt_rat(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _fmt_nats(xs: Iterable[int]) -> str:
    return "{" + ",".join(str(x) for x in xs) + "}"


def format_set(a: NatSet) -> str:
    """Inverse of parse_set on canonical forms (round-trips to an equal set)."""
    if isinstance(a, FiniteSet):
        return "fin" + _fmt_nats(a.elements)
    if isinstance(a, PeriodicSet):
        out = f"per m={a.modulus} R={_fmt_nats(a.residues)} t={a.threshold}"
        if a.added:
            out += f" add={_fmt_nats(a.added)}"
        if a.removed:
            out += f" rm={_fmt_nats(a.removed)}"
        return out
    if isinstance(a, APUnionSet):
        if a.extras or a.removals:
            raise UnsupportedBackend("ap-union literals cannot carry extras/removals")
        parts = [f"ap a={t.modulus_text()} h={t.offset} j0={t.start}" for t in a.terms]
        return " | ".join(parts)
    if isinstance(a, DyadicBlockSet):
        if a.extras or a.removals:
            raise UnsupportedBackend("block literals cannot carry extras/removals")
        return f"blocks f(n)={a.fill.func_label}"
    if isinstance(a, HorizonSet):
        return f"horizon H={a.horizon} bits={a.bits.hex()}"
    raise UnsupportedBackend(f"no literal form for backend {a.kind}")
