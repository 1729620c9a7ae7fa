"""Executable metatheory: run generated programs through every property.

Properties (each can be switched off independently):

``termination``    the program normalizes within the fuel bound
``uniqueness``     every program on the trace has exactly one redex
                   decomposition (none once it is a value)
``reconstitution`` plugging a decomposition back gives the program verbatim
``preservation``   each intermediate program still has the original type
                   (abortive: plus the answer-type discipline for reified
                   contexts)
``agreement``      the abstract machine and the stepper agree
``roundtrip``      parsing the pretty-printed program gives it back
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import TypingError
from .generate import GenConfig, GenerationExhausted, gen_typed_program
from .machines import machine_eval
from .reduction import (
    DEFAULT_FUEL, Program, Trace, decompose, reconstitute, redex_decompositions,
    redex_rule, trace,
)
from .surface import format_source, parse, pretty
from .syntax import (
    App, CalcMode, Callcc, Lam, Reset, Shift, ThrowVar, TyApp, TyLam, alpha_eq,
)
from .types_abortive import check_program, check_refined
from .types_delimited import check_program_delim

PROPERTIES = ("termination", "uniqueness", "reconstitution", "preservation",
              "agreement", "roundtrip")

MAX_COUNTEREXAMPLES = 5


class PropertyFailure(Exception):
    pass


def check_source(p: Program):
    """Type of a source program under its mode's checker."""
    if p.mode.delimited:
        return check_program_delim(p.term, p.mode)
    return check_program(p.term, p.mode)


def _recheck(p: Program, term, S) -> None:
    if p.mode.delimited:
        check_program_delim(term, p.mode, expected=S, plain=False)
    else:
        check_refined(term, S, p.mode)


# --------------------------------------------------------------------------
# individual properties; each raises PropertyFailure with a message


def prop_termination(p: Program, tr: Trace, S) -> None:
    if tr.outcome not in ("value", "program-value"):
        reason = f" ({tr.stuck_reason})" if tr.stuck_reason else ""
        raise PropertyFailure(f"outcome {tr.outcome}{reason} after {len(tr.steps)} steps")


def _programs(tr: Trace):
    for st in tr.steps:
        yield st.before, st.decomposition
    if tr.final_decomposition is not None:
        yield tr.final, tr.final_decomposition


def prop_uniqueness(p: Program, tr: Trace, S) -> None:
    for i, (term, d) in enumerate(_programs(tr)):
        found = redex_decompositions(Program(p.mode, term))
        if d.kind == "redex":
            if len(found) != 1:
                raise PropertyFailure(f"step {i}: {len(found)} redex decompositions")
            t, E = found[0][0], found[0][1]
            F = found[0][2] if p.mode.delimited else None
            if not (t == d.term and E == d.context and F == d.meta):
                raise PropertyFailure(f"step {i}: enumerator and decompose disagree")
            if redex_rule(t, p.mode) != d.rule:
                raise PropertyFailure(f"step {i}: rule mismatch")
        elif found:
            raise PropertyFailure(f"step {i}: value has {len(found)} redex decompositions")


def prop_reconstitution(p: Program, tr: Trace, S) -> None:
    for i, (term, d) in enumerate(_programs(tr)):
        if reconstitute(d) != term:
            raise PropertyFailure(f"step {i}: reconstituted program differs")


def prop_preservation(p: Program, tr: Trace, S) -> None:
    for i, st in enumerate(tr.steps):
        try:
            _recheck(p, st.after, S)
        except TypingError as exc:
            raise PropertyFailure(f"after step {i + 1} ({st.rule}): {exc}")


def prop_agreement(p: Program, tr: Trace, S) -> None:
    ref = tr.result()
    got = machine_eval(p)
    if got.outcome != ref.outcome:
        raise PropertyFailure(f"machine {got.outcome}, reduction {ref.outcome}")
    if ref.outcome == "normalized" and not alpha_eq(got.value, ref.value):
        raise PropertyFailure(f"machine {pretty(got.value)} vs reduction {pretty(ref.value)}")


def prop_roundtrip(p: Program, tr: Trace, S) -> None:
    text = pretty(p.term)
    back = parse(text, p.mode)
    if not alpha_eq(back, p.term):
        raise PropertyFailure(f"reparsed program differs: {pretty(back)}")


CHECKS: dict = {
    "termination": prop_termination,
    "uniqueness": prop_uniqueness,
    "reconstitution": prop_reconstitution,
    "preservation": prop_preservation,
    "agreement": prop_agreement,
    "roundtrip": prop_roundtrip,
}


def failing_properties(p: Program, props, fuel: int = DEFAULT_FUEL) -> dict:
    """{property: message} for the properties ``p`` violates."""
    S = check_source(p)
    tr = trace(p, fuel)
    out = {}
    for name in props:
        try:
            CHECKS[name](p, tr, S)
        except PropertyFailure as exc:
            out[name] = str(exc)
        except Exception as exc:  # a crash is a failure of that property too
            out[name] = f"{type(exc).__name__}: {exc}"
    return out


# --------------------------------------------------------------------------
# shrinking


def _replacements(t):
    """Terms obtained by replacing one subterm of ``t`` with one of its own
    proper subterms (children first, so the result shrinks quickly)."""
    kids = _children(t)
    for k in kids:
        yield k
    for i, k in enumerate(kids):
        for smaller in _replacements(k):
            yield _rebuild(t, i, smaller)


def _children(t) -> list:
    cls = type(t)
    if cls is App:
        return [t.fn, t.arg]
    if cls in (Lam, TyLam, Callcc, Shift, Reset, ThrowVar):
        return [t.body]
    if cls is TyApp:
        return [t.fn]
    return []


def _rebuild(t, i: int, new):
    cls = type(t)
    if cls is App:
        return App(new, t.arg) if i == 0 else App(t.fn, new)
    if cls is Lam:
        return Lam(t.var, t.ann, new)
    if cls is TyLam:
        return TyLam(t.var, new)
    if cls is Callcc or cls is Shift:
        return cls(t.k, t.ann, new)
    if cls is Reset:
        return Reset(new)
    if cls is ThrowVar:
        return ThrowVar(t.k, t.ann, new)
    if cls is TyApp:
        return TyApp(new, t.ty)
    raise ValueError(t)


def shrink(p: Program, prop: str, fuel: int = DEFAULT_FUEL, budget: int = 500) -> Program:
    """Greedily shrink ``p`` while it stays well typed at the same type and
    still violates ``prop``."""
    S = check_source(p)
    same = (lambda a, b: a == b) if p.mode.delimited else alpha_eq
    current = p
    tries = 0
    improved = True
    while improved and tries < budget:
        improved = False
        for cand in _replacements(current.term):
            tries += 1
            if tries > budget:
                break
            if p.mode.delimited and type(cand) is not Reset:
                continue
            q = Program(p.mode, cand)
            try:
                T = check_source(q)
            except TypingError:
                continue
            if p.mode.delimited:
                try:
                    check_program_delim(cand, p.mode, expected=S)
                except TypingError:
                    continue
            elif not same(T, S):
                continue
            if prop in failing_properties(q, [prop], fuel):
                current = q
                improved = True
                break
    return current


# --------------------------------------------------------------------------
# suite


@dataclass
class PropertyStats:
    passed: int = 0
    failed: int = 0
    seconds: float = 0.0
    counterexamples: list = field(default_factory=list)


@dataclass
class SuiteReport:
    mode: str
    seed: int
    count: int
    max_depth: int
    control_prob: float
    fuel: int
    properties: dict
    generated: int = 0
    generation_failures: int = 0
    ill_typed: list = field(default_factory=list)
    steps_total: int = 0
    rules: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return (not self.ill_typed and self.generation_failures == 0
                and all(s.failed == 0 for s in self.properties.values()))

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "count": self.count,
            "max_depth": self.max_depth,
            "control_prob": self.control_prob,
            "fuel": self.fuel,
            "generated": self.generated,
            "generation_failures": self.generation_failures,
            "ill_typed": self.ill_typed,
            "steps_total": self.steps_total,
            "rules": dict(sorted(self.rules.items())),
            "ok": self.ok,
            "properties": {
                name: {"passed": s.passed, "failed": s.failed,
                       "seconds": round(s.seconds, 3),
                       "counterexamples": s.counterexamples}
                for name, s in self.properties.items()
            },
        }

    def dumps(self) -> str:
        out = self.to_json()
        out["seconds"] = round(self.seconds, 3)
        return json.dumps(out, indent=2, ensure_ascii=False) + "\n"

    def to_text(self) -> str:
        lines = [
            f"mode {self.mode}  seed {self.seed}  programs {self.generated}/{self.count}  "
            f"depth <= {self.max_depth}  control {self.control_prob}  fuel {self.fuel}",
            f"reduction steps {self.steps_total}  "
            + "  ".join(f"{k}={v}" for k, v in sorted(self.rules.items())),
        ]
        if self.generation_failures:
            lines.append(f"generation failures: {self.generation_failures}")
        for item in self.ill_typed:
            lines.append(f"ILL-TYPED generated program #{item['index']}: {item['error']}")
        for name, s in self.properties.items():
            status = "ok" if s.failed == 0 else "FAIL"
            lines.append(f"  {name:<15} {status:<4} passed {s.passed:>6}  failed {s.failed:>4}"
                         f"  {s.seconds:7.2f}s")
            for ce in s.counterexamples:
                lines.append(f"    #{ce['index']} (seed {ce['seed']}): {ce['message']}")
                for src in ce["program"].rstrip().splitlines():
                    lines.append(f"      {src}")
        lines.append(f"result: {'PASS' if self.ok else 'FAIL'}  ({self.seconds:.1f}s)")
        return "\n".join(lines) + "\n"


def run_suite(cfg: GenConfig, props=PROPERTIES, fuel: int = DEFAULT_FUEL,
              shrink_failures: bool = True,
              progress: Optional[Callable[[int], None]] = None) -> SuiteReport:
    props = [p for p in PROPERTIES if p in props]
    stats = {name: PropertyStats() for name in props}
    report = SuiteReport(str(cfg.mode), cfg.seed, cfg.count, cfg.max_depth,
                         cfg.control_prob, fuel, stats)
    start = time.perf_counter()
    for i in range(cfg.count):
        if progress is not None:
            progress(i)
        try:
            p = gen_typed_program(cfg, i)
        except GenerationExhausted:
            report.generation_failures += 1
            continue
        report.generated += 1
        try:
            S = check_source(p)
        except TypingError as exc:
            report.ill_typed.append({"index": i, "error": str(exc),
                                     "program": format_source(p.term, p.mode)})
            continue
        tr = trace(p, fuel)
        report.steps_total += len(tr.steps)
        for r in tr.rules:
            report.rules[r] = report.rules.get(r, 0) + 1
        for name in props:
            st = stats[name]
            t0 = time.perf_counter()
            try:
                CHECKS[name](p, tr, S)
                st.passed += 1
            except Exception as exc:
                st.failed += 1
                msg = str(exc) if isinstance(exc, PropertyFailure) else f"{type(exc).__name__}: {exc}"
                if len(st.counterexamples) < MAX_COUNTEREXAMPLES:
                    q = shrink(p, name, fuel) if shrink_failures else p
                    st.counterexamples.append({
                        "index": i, "seed": cfg.seed, "message": msg,
                        "program": format_source(q.term, q.mode),
                        "shrunk": q is not p,
                    })
            st.seconds += time.perf_counter() - t0
    report.seconds = time.perf_counter() - start
    return report
