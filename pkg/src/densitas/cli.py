"""Command-line frontend.

Verbs: eval, dist, norm, axioms, limit, witness, probe. Set arguments use
the literal DSL (`fin{1,2,3}`, `per m=6 R={1,3} t=0`,
`ap a=6! h=1 j0=1 | ap a=5040 h=3 j0=1`, `blocks f(n)=2^-3`,
`horizon H=64 bits=<hex>`). Reports embed the tool version and the resolved
config; under a fixed seed and config the json and csv outputs are
byte-identical across runs.

Exit codes: 0 all checks passed, 1 a certificate or battery failed,
2 usage or parse error, 3 internal contract violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import re
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__
from .config import Config, DEFAULT_CONFIG, load_config
from .density import (
    FUNCTIONAL_NAMES,
    check_submeasure_axioms,
    check_upper_density_axioms,
    get_functional,
)
from .exceptions import DensitasError, OracleContractViolated, ParseError
from .exhaust import LSCSM_NAMES, check_lscsm_axioms, exhaustive_norm
from .limits import cauchy_to_limit, lscsm_limit, sigma_limit, sigma_union_oracle
from .metric import (
    CauchyReport,
    RatioReport,
    SetSequence,
    cauchy_profile,
    check_pseudometric,
    dist,
    evaluate_measure,
    metric_equivalence_probe,
)
from .natset import (
    APTerm,
    APUnionSet,
    DyadicBlockSet,
    FiniteSet,
    FillRule,
    HorizonSet,
    NatSet,
    PeriodicSet,
    factorial_label,
)
from .reports import AxiomReport, CheckRecord, format_fraction, to_payload
from .samples import chunked, pool_battery, thinning_blocks
from .values import ExtValue
from .witness import (
    WitnessParams,
    banach_gap_certificate,
    build_witness,
    check_witness_invariants,
    derive_params,
    divergence_certificate,
    witness_sequence,
)

__all__ = ["parse_set_literal", "format_set_literal", "emit_report", "main"]


# ---------------------------------------------------------------------------
# set literals


_FIN_RE = re.compile(r"fin\{([0-9,\s]*)\}\Z")
_PER_RE = re.compile(r"per\s+m=(\d+)\s+R=\{([0-9,\s]*)\}(?:\s+t=(\d+))?\Z")
_AP_RE = re.compile(r"ap\s+a=(\d+)(!?)\s+h=(\d+)\s+j0=(\d+)\Z")
_BLOCKS_RE = re.compile(r"blocks\s+f\(n\)=(?:2\^-(\d+)|(\d+)(?:/(\d+))?)\Z")
_HORIZON_RE = re.compile(r"horizon\s+H=(\d+)\s+bits=([0-9a-fA-F]+)\Z")


def _parse_int_list(body: str) -> tuple[int, ...]:
    body = body.strip()
    if not body:
        return ()
    return tuple(int(tok.strip()) for tok in body.split(","))


def _parse_ap_term(part: str, full: str, offset: int) -> APTerm:
    m = _AP_RE.match(part.strip())
    if not m:
        raise ParseError("expected `ap a=<int[!]> h=<int> j0=<int>`",
                         full, offset)
    base = int(m.group(1))
    if m.group(2):
        return APTerm(math.factorial(base), int(m.group(3)),
                      int(m.group(4)), label=factorial_label(base))
    return APTerm(base, int(m.group(3)), int(m.group(4)))


def parse_set_literal(text: str) -> NatSet:
    """Parse the set-literal DSL; raises ParseError with a caret position."""
    s = text.strip()
    if not s:
        raise ParseError("empty set literal", text, 0)
    lead = s.split(None, 1)[0].split("{", 1)[0]
    if "|" in s or lead == "ap":
        terms = []
        offset = 0
        for part in s.split("|"):
            terms.append(_parse_ap_term(part, text, text.find("ap", offset)))
            offset += len(part) + 1
        return APUnionSet(tuple(terms))
    if lead == "fin":
        m = _FIN_RE.match(s)
        if not m:
            raise ParseError("expected `fin{n1,n2,...}`", text, 0)
        return FiniteSet(_parse_int_list(m.group(1)))
    if lead == "per":
        m = _PER_RE.match(s)
        if not m:
            raise ParseError("expected `per m=<int> R={r1,...} [t=<int>]`",
                             text, 0)
        return PeriodicSet(int(m.group(1)), _parse_int_list(m.group(2)),
                           threshold=int(m.group(3) or 0))
    if lead == "blocks":
        m = _BLOCKS_RE.match(s)
        if not m:
            raise ParseError("expected `blocks f(n)=2^-<k>` or "
                             "`blocks f(n)=<p>[/<q>]`", text, 0)
        if m.group(1) is not None:
            fill = Fraction(1, 2 ** int(m.group(1)))
        else:
            fill = Fraction(int(m.group(2)), int(m.group(3) or 1))
        if not 0 <= fill <= 1:
            raise ParseError("fill value must lie in [0, 1]", text,
                             s.find("=") + 1)
        return DyadicBlockSet(FillRule.constant(fill))
    if lead == "horizon":
        m = _HORIZON_RE.match(s)
        if not m:
            raise ParseError("expected `horizon H=<int> bits=<hex>`", text, 0)
        h = int(m.group(1))
        bits = int(m.group(2), 16)
        if bits >> h:
            raise ParseError("bitmap sets members at or beyond the horizon",
                             text, s.find("bits="))
        members = tuple(i for i in range(h) if (bits >> i) & 1)
        return HorizonSet.from_members(h, members)
    raise ParseError(f"unknown set form {lead!r}", text, 0)


def format_set_literal(a: NatSet) -> str:
    """Print a set in the literal DSL; parse(format(a)) equals a."""
    if isinstance(a, FiniteSet):
        return "fin{" + ",".join(str(x) for x in a.elements) + "}"
    if isinstance(a, PeriodicSet):
        if a.added or a.removed:
            raise ValueError("periodic exception lists have no literal form")
        base = f"per m={a.modulus} R={{{','.join(str(r) for r in a.residues)}}}"
        return base + (f" t={a.threshold}" if a.threshold else "")
    if isinstance(a, APUnionSet):
        if a.extras or a.removals:
            raise ValueError("ap extras/removals have no literal form")
        parts = []
        for t in a.terms:
            atext = t.label if t.label else str(t.modulus)
            parts.append(f"ap a={atext} h={t.offset} j0={t.start}")
        return " | ".join(parts)
    if isinstance(a, DyadicBlockSet):
        if a.extras or a.removals or a.fill.structure != "cycle" \
                or len(a.fill.cycle) != 1 or a.fill.threshold:
            raise ValueError("only constant fills have a literal form")
        c = a.fill.cycle[0]
        if c.numerator == 1 and c.denominator & (c.denominator - 1) == 0 \
                and c.denominator > 1:
            return f"blocks f(n)=2^-{c.denominator.bit_length() - 1}"
        return f"blocks f(n)={c}"
    if isinstance(a, HorizonSet):
        bits = 0
        for x in a.elements_in(0, a.horizon):
            bits |= 1 << x
        return f"horizon H={a.horizon} bits={bits:x}"
    raise ValueError(f"no literal form for backend {a.kind!r}")


# ---------------------------------------------------------------------------
# report emission


def _format_value(v: ExtValue) -> str:
    if v.status == "exact":
        return format_fraction(v.value)
    if v.status == "infinite":
        return "infinity"
    if v.status == "bracket":
        return f"[{format_fraction(v.lower)}, {format_fraction(v.upper)}]"
    return f"~{format_fraction(v.value)} (observational)"


def _flatten(prefix: str, obj, rows: list):
    if isinstance(obj, dict):
        for k in obj:
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, list):
        for i, x in enumerate(obj):
            _flatten(f"{prefix}[{i}]", x, rows)
    else:
        rows.append((prefix, "" if obj is None else str(obj)))


def _csv_rows(report) -> tuple[list[str], list[list[str]]]:
    if isinstance(report, AxiomReport):
        return (["name", "status", "detail"],
                [[r.name, r.status, r.detail] for r in report.records])
    if isinstance(report, CauchyReport):
        header = ["i\\j"] + [str(j) for j in range(report.depth)]
        body = [[str(i)] + [_format_value(v) for v in row]
                for i, row in enumerate(report.table)]
        return header, body
    if isinstance(report, RatioReport):
        header = ["index", report.name1, report.name2, "ratio"]
        body = []
        for i, (v1, v2) in enumerate(report.values):
            r = report.ratios[i]
            body.append([str(i), _format_value(v1), _format_value(v2),
                         "" if r is None else format_fraction(r)])
        return header, body
    rows: list = []
    _flatten("", to_payload(report), rows)
    return ["key", "value"], [[k, v] for k, v in rows]


def _text_lines(report) -> list[str]:
    if isinstance(report, AxiomReport):
        lines = [report.summary()]
        for r in report.records:
            if r.status != "pass":
                lines.append(f"  {r.status}: {r.name} ({r.detail})")
        return lines
    rows: list = []
    _flatten("", to_payload(report), rows)
    return [f"{k} = {v}" for k, v in rows]


def emit_report(report, fmt: str = "json",
                config: Config = DEFAULT_CONFIG) -> bytes:
    """Serialize any report dataclass deterministically."""
    meta = {"version": __version__,
            "config": {f.name: getattr(config, f.name)
                       for f in dataclasses.fields(config)}}
    if fmt == "json":
        doc = dict(meta)
        doc["report"] = to_payload(report)
        return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# version={meta['version']}\n")
        buf.write("# config=" + ",".join(
            f"{k}:{v}" for k, v in sorted(meta["config"].items())) + "\n")
        header, body = _csv_rows(report)
        buf.write(",".join(header) + "\n")
        for row in body:
            buf.write(",".join(cell.replace(",", ";") for cell in row) + "\n")
        return buf.getvalue().encode()
    if fmt == "text":
        lines = [f"densitas {meta['version']}"] + _text_lines(report)
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# batteries over seeded samples


def _merged_battery(check, functional: str, sets, config: Config,
                    group: int = 3, **kw) -> AxiomReport:
    """Run a pairwise battery on small disjoint groups and merge the records
    under group-qualified names. Grouping keeps the quadratic part linear in
    the sample count."""
    records = []
    for gi, chunk in enumerate(chunked(sets, group)):
        rep = check(functional, chunk, config, **kw)
        records.extend(CheckRecord(f"g{gi}.{r.name}", r.status, r.detail,
                                   r.witness) for r in rep.records)
        subject = rep.subject
    return AxiomReport(subject, tuple(records))


def _axioms_report(battery: str, functional: str, samples: int, seed: int,
                   config: Config) -> AxiomReport:
    sets = pool_battery(samples, seed)
    if battery == "pseudometric":
        triples = [c for c in chunked(sets, 3) if len(c) == 3]
        return check_pseudometric(functional, triples, config)
    if battery == "upper-density":
        return _merged_battery(check_upper_density_axioms, functional, sets,
                               config, shifts=(1, 7, 100), dilations=(2, 3, 5))
    if battery == "submeasure":
        return _merged_battery(check_submeasure_axioms, functional, sets,
                               config)
    if battery == "lscsm":
        return check_lscsm_axioms(functional, sets[:min(samples, 40)], config)
    raise ValueError(f"unknown battery {battery!r}; have pseudometric, "
                     "upper-density, submeasure, lscsm")


# ---------------------------------------------------------------------------
# named sequence families for the limit verb


def _powers_sequence(depth: int) -> SetSequence:
    rule = lambda n: FiniteSet(tuple(2 ** j for j in range(n)))
    return SetSequence(prefix=tuple(rule(n) for n in range(depth)),
                       rule=rule, monotone=True,
                       tail_bound=lambda i: Fraction(2, 2 ** i),
                       limit=FiniteSet(()), label="powers")


def _multiples_sequence(depth: int) -> SetSequence:
    rule = lambda n: FiniteSet(tuple(3 * k for k in range(n + 1)))
    return SetSequence(prefix=tuple(rule(n) for n in range(depth)),
                       rule=rule, monotone=True,
                       tail_bound=lambda i: Fraction(4, 7 * 8 ** (i + 1)),
                       limit=PeriodicSet(3, (0,)), label="multiples")


def _evens_sequence(depth: int) -> SetSequence:
    rule = lambda n: FiniteSet(tuple(2 * k for k in range(n + 1)))
    return SetSequence(prefix=tuple(rule(n) for n in range(depth)),
                       rule=rule, monotone=True,
                       tail_bound=lambda i: Fraction(2, 3 * 4 ** (i + 1)),
                       limit=PeriodicSet(2, (0,)), label="evens")


_FAMILIES = {
    "powers": (_powers_sequence, "norm:phi-prefix"),
    "multiples": (_multiples_sequence, "geometric"),
    "evens": (_evens_sequence, "geometric"),
}


def _limit_report(method: str, family: str, measure: Optional[str],
                  depth: int, config: Config):
    if family not in _FAMILIES:
        raise ValueError(f"unknown family {family!r}; have "
                         + ", ".join(sorted(_FAMILIES)))
    factory, default_measure = _FAMILIES[family]
    seq = factory(depth)
    nu = measure or default_measure
    if method == "sigma":
        return sigma_limit(nu, seq, config=config)
    if method == "tail-cut":
        if not nu.startswith("norm:"):
            raise ValueError("tail-cut works on submeasure norms; pass "
                             "--measure norm:<lscsm>")
        return lscsm_limit(nu.partition(":")[2], seq, config=config)
    if method == "cauchy":
        oracle = sigma_union_oracle(nu, config)
        return cauchy_to_limit(nu, seq, oracle, config=config)
    raise ValueError(f"unknown method {method!r}; have sigma, tail-cut, cauchy")


# ---------------------------------------------------------------------------
# witness pipeline


def _witness_build_payload(kappa: Fraction, depth: int, demo: bool) -> dict:
    p = derive_params(kappa, levels=max(6, depth + 2))
    w = build_witness(p, depth, demo=demo)
    return {
        "params": to_payload(p),
        "depth": depth,
        "demo": demo,
        "levels": [{"index": lev.index, "entry": lev.entry,
                    "residues": list(lev.residues), "span": lev.span}
                   for lev in w.levels],
        "increments": [format_fraction(lev.increment_density)
                       for lev in w.levels],
    }


def _parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"bad rational {text!r}: {e}")


def _witness_verify(doc: dict, horizon: int, config: Config):
    params = WitnessParams(
        kappa=_parse_fraction(doc["params"]["kappa"]),
        scale=int(doc["params"]["scale"]),
        cover=int(doc["params"]["cover"]),
        schedule=tuple(int(x) for x in doc["params"]["schedule"]))
    depth = int(doc["depth"])
    demo = bool(doc.get("demo", False))
    w = build_witness(params, depth, demo=demo)
    for lev, stored in zip(w.levels, doc["levels"]):
        if list(lev.residues) != [int(r) for r in stored["residues"]]:
            raise OracleContractViolated(
                f"stored residues at level {lev.index} do not match "
                "the deterministic construction")
    inv = check_witness_invariants(w, horizon=horizon)
    payload: dict = {"invariants": to_payload(inv),
                     "invariants_passed": inv.passed}
    ok = inv.passed
    if ok:
        div = divergence_certificate(w, horizon=horizon)
        payload["divergence"] = to_payload(div)
        if params.kappa == Fraction(1, 2):
            gap = banach_gap_certificate(w, horizon=horizon)
            payload["gap"] = to_payload(gap)
        prof = cauchy_profile("bd-star", witness_sequence(w),
                              depth=depth + 1, config=config)
        payload["cauchy_certified"] = prof.certified
        ok = prof.certified
    return payload, ok


# ---------------------------------------------------------------------------
# argument plumbing


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="densitas",
        description="Exact densities, submeasure norms, and their "
                    "completeness certificates on subsets of the naturals.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--format", choices=("json", "csv", "text"),
                       default="text")
        p.add_argument("--config", default=None, metavar="PATH",
                       help="config file (flat key = value); default "
                            "$DENSITAS_CONFIG")
        p.add_argument("--out", default=None, metavar="PATH",
                       help="write the report here instead of stdout")

    p = sub.add_parser("eval", help="evaluate a functional on a set")
    p.add_argument("functional", help="one of %s or norm:<lscsm>"
                   % (FUNCTIONAL_NAMES,))
    p.add_argument("set", help="set literal")
    common(p)

    p = sub.add_parser("dist", help="pseudometric distance between two sets")
    p.add_argument("functional")
    p.add_argument("set_a", help="set literal")
    p.add_argument("set_b", help="set literal")
    common(p)

    p = sub.add_parser("norm", help="exhaustive norm of a set under an lscsm")
    p.add_argument("lscsm", help="one of %s" % (LSCSM_NAMES,))
    p.add_argument("set")
    common(p)

    p = sub.add_parser("axioms", help="seeded axiom batteries")
    p.add_argument("battery",
                   choices=("pseudometric", "upper-density", "submeasure",
                            "lscsm"))
    p.add_argument("functional")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser("limit", help="limit pipelines on named families")
    p.add_argument("method", choices=("sigma", "tail-cut", "cauchy"))
    p.add_argument("family", help="one of %s" % ", ".join(sorted(_FAMILIES)))
    p.add_argument("--measure", default=None)
    p.add_argument("--depth", type=int, default=12)
    common(p)

    p = sub.add_parser("witness", help="build or verify the witness family")
    wsub = p.add_subparsers(dest="wverb", required=True)
    pb = wsub.add_parser("build")
    pb.add_argument("--kappa", default="1/2")
    pb.add_argument("--depth", type=int, default=4)
    pb.add_argument("--demo", action="store_true",
                    help="skip parameter validation (certificates carry "
                         "the demo flag)")
    common(pb)
    pv = wsub.add_parser("verify")
    pv.add_argument("file", help="JSON emitted by `witness build`")
    pv.add_argument("--horizon", type=int, default=10 ** 6)
    common(pv)

    p = sub.add_parser("probe", help="metric-equivalence probe of two "
                                     "measures over a named family")
    p.add_argument("measure_1")
    p.add_argument("measure_2")
    p.add_argument("--family", choices=("thinning",), default="thinning")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--targets", default=None,
                   help="comma-separated ratios the probe must exceed")
    p.add_argument("--bounds", default=None,
                   help="lo,hi claimed two-sided bounds to confirm")
    common(p)
    return ap


def _dispatch(args, config: Config) -> tuple[object, bool, Optional[str]]:
    """Returns (report, ok, plain). `plain`, when set, is printed bare in
    text format (the eval/dist fast path)."""
    if args.verb == "eval":
        v = evaluate_measure(args.functional, parse_set_literal(args.set),
                             config)
        return v, True, _format_value(v)
    if args.verb == "dist":
        v = dist(args.functional, parse_set_literal(args.set_a),
                 parse_set_literal(args.set_b), config)
        return v, True, _format_value(v)
    if args.verb == "norm":
        est = exhaustive_norm(args.lscsm, parse_set_literal(args.set), config)
        return est, True, _format_value(est.value)
    if args.verb == "axioms":
        rep = _axioms_report(args.battery, args.functional, args.samples,
                             args.seed, config)
        return rep, rep.passed, None
    if args.verb == "limit":
        cert = _limit_report(args.method, args.family, args.measure,
                             args.depth, config)
        return cert, cert.verdict == "certified", None
    if args.verb == "witness":
        if args.wverb == "build":
            payload = _witness_build_payload(_parse_fraction(args.kappa),
                                             args.depth, args.demo)
            return payload, True, None
        with open(args.file, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if "report" in doc:
            doc = doc["report"]
        payload, ok = _witness_verify(doc, args.horizon, config)
        return payload, ok, None
    if args.verb == "probe":
        family = SetSequence(prefix=thinning_blocks(args.depth),
                             label="thinning")
        targets = tuple(_parse_fraction(t)
                        for t in (args.targets or "").split(",") if t)
        bounds = None
        if args.bounds:
            parts = args.bounds.split(",")
            if len(parts) != 2:
                raise ValueError("--bounds wants `lo,hi`")
            bounds = (_parse_fraction(parts[0]), _parse_fraction(parts[1]))
        rep = metric_equivalence_probe(args.measure_1, args.measure_2,
                                       family, claimed_bounds=bounds,
                                       targets=targets, config=config)
        if targets:
            ok = rep.verdict == "ratio-diverges"
        elif bounds:
            ok = rep.verdict == "two-sided-bounded"
        else:
            ok = True
        return rep, ok, None
    raise ValueError(f"unknown verb {args.verb!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        report, ok, plain = _dispatch(args, config)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except OracleContractViolated as e:
        print(f"contract violation: {e}", file=sys.stderr)
        return 3
    except DensitasError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 3
    if args.format == "text" and plain is not None and args.out is None:
        print(plain)
        return 0
    data = emit_report(report, args.format, config)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
