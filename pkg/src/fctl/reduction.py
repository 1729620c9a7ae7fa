"""Reduction semantics with explicit contexts for the four calculi.

A delimited program ``<t>`` is decomposed with its top reset as the
delimiter of the current context: a decomposition ``(r, E, F)`` stands for
``F[<E[r]>]``.  Entering a nested reset pushes ``E`` onto ``F``.

``step`` always decomposes from the root (no refocusing), so every rule is a
direct transcription; the machines module is the fast path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .syntax import (
    App, AppFrame, CalcMode, Callcc, EvalContext, FunFrame, HOLE, Hole, Lam,
    Reset, Shift, Term, ThrowFrame, ThrowReified, ThrowVar, TyApp, TyAppFrame,
    TyLam, Var, extend_outside, is_value, subst_cont, subst_term, subst_type,
)

DEFAULT_FUEL = 100_000

RULES = ("beta_v", "beta_n", "beta_T", "callcc", "throw_v", "throw_n", "shift", "reset")


@dataclass(frozen=True)
class Program:
    mode: CalcMode
    term: Term


@dataclass(frozen=True)
class Decomposition:
    """``kind`` is ``redex``, ``value`` or ``program-value``; ``rule`` names the
    redex's reduction rule.  ``meta`` is ``None`` in the abortive calculus."""

    kind: str
    term: Term
    context: EvalContext
    meta: Optional[tuple] = None
    rule: Optional[str] = None


@dataclass(frozen=True)
class StepResult:
    rule: str
    before: Term
    after: Term
    decomposition: Decomposition


@dataclass(frozen=True)
class Finished:
    decomposition: Decomposition

    @property
    def value(self) -> Term:
        return self.decomposition.term


@dataclass(frozen=True)
class Normalized:
    value: Term
    steps: int
    outcome = "normalized"


@dataclass(frozen=True)
class FuelExhausted:
    last: Term
    steps: int
    outcome = "fuel-exhausted"


@dataclass(frozen=True)
class Stuck:
    reason: str
    term: Term
    steps: int = 0
    outcome = "stuck"


Outcome = Union[Normalized, FuelExhausted, Stuck]


class StuckError(Exception):
    def __init__(self, reason: str, term: Term):
        super().__init__(reason)
        self.reason = reason
        self.term = term


# --------------------------------------------------------------------------
# plugging


def plug(t: Term, E: EvalContext) -> Term:
    while True:
        cls = type(E)
        if cls is Hole:
            return t
        if cls is AppFrame:
            t = App(t, E.arg)
        elif cls is FunFrame:
            t = App(E.fn, t)
        elif cls is TyAppFrame:
            t = TyApp(t, E.ty)
        elif cls is ThrowFrame:
            t = ThrowReified(E.ctx, t, E.ann)
        else:
            raise TypeError(f"not a context: {E!r}")
        E = E.outer


def plug_meta(t: Term, F: tuple) -> Term:
    for E in F:
        t = Reset(plug(t, E))
    return t


def recompose(t: Term, E: EvalContext, F: Optional[tuple]) -> Term:
    """The program a decomposition stands for."""
    if F is None:
        return plug(t, E)
    return plug_meta(Reset(plug(t, E)), F)


def reconstitute(d: Decomposition) -> Term:
    return recompose(d.term, d.context, d.meta)


# --------------------------------------------------------------------------
# decomposition


def redex_rule(t: Term, mode: CalcMode) -> Optional[str]:
    """Rule that applies to ``t`` sitting in a reduction context, if any."""
    cls = type(t)
    cbn = mode.cbn
    if cls is App:
        if type(t.fn) is Lam and (cbn or is_value(t.arg)):
            return "beta_n" if cbn else "beta_v"
        return None
    if cls is TyApp:
        return "beta_T" if type(t.fn) is TyLam else None
    if cls is ThrowReified:
        if cbn:
            return "throw_n"
        return "throw_v" if is_value(t.body) else None
    if mode.delimited:
        if cls is Shift:
            return "shift"
        if cls is Reset:
            return "reset" if is_value(t.body) else None
        return None
    return "callcc" if cls is Callcc else None


def decompose(p: Program) -> Decomposition:
    """Unique decomposition of ``p``; raises StuckError on ill-typed shapes."""
    mode = p.mode
    delimited, cbn = mode.delimited, mode.cbn
    if delimited:
        if type(p.term) is not Reset:
            raise StuckError("delimited program is not wrapped in reset", p.term)
        t = p.term.body
        F: Optional[tuple] = ()
        if is_value(t):
            return Decomposition("program-value", t, HOLE, F)
    else:
        t = p.term
        F = None
        if is_value(t):
            return Decomposition("value", t, HOLE, F)
    E: EvalContext = HOLE
    while True:
        cls = type(t)
        if cls is App:
            fn = t.fn
            if is_value(fn):
                if type(fn) is TyLam:
                    raise StuckError("type abstraction applied to a term", t)
                if cbn:
                    return Decomposition("redex", t, E, F, "beta_n")
                if is_value(t.arg):
                    return Decomposition("redex", t, E, F, "beta_v")
                E = FunFrame(fn, E)
                t = t.arg
            else:
                E = AppFrame(t.arg, E)
                t = fn
        elif cls is TyApp:
            fn = t.fn
            if is_value(fn):
                if type(fn) is Lam:
                    raise StuckError("term abstraction applied to a type", t)
                return Decomposition("redex", t, E, F, "beta_T")
            E = TyAppFrame(t.ty, E)
            t = fn
        elif cls is ThrowReified:
            if cbn:
                return Decomposition("redex", t, E, F, "throw_n")
            if is_value(t.body):
                return Decomposition("redex", t, E, F, "throw_v")
            E = ThrowFrame(t.ctx, E, t.ann)
            t = t.body
        elif cls is Callcc:
            if delimited:
                raise StuckError("callcc in the delimited calculus", t)
            return Decomposition("redex", t, E, F, "callcc")
        elif cls is Shift:
            if not delimited:
                raise StuckError("shift in the abortive calculus", t)
            return Decomposition("redex", t, E, F, "shift")
        elif cls is Reset:
            if not delimited:
                raise StuckError("reset in the abortive calculus", t)
            if is_value(t.body):
                return Decomposition("redex", t, E, F, "reset")
            F = (E,) + F
            E = HOLE
            t = t.body
        elif cls is Var:
            raise StuckError(f"free variable {t.name}", t)
        elif cls is ThrowVar:
            raise StuckError(f"throw to free continuation variable {t.k}", t)
        else:
            raise StuckError(f"unexpected term {t!r}", t)


def contract(d: Decomposition, mode: CalcMode) -> Term:
    """Apply the redex's rule and rebuild the whole program."""
    r, E, F = d.term, d.context, d.meta
    rule = d.rule
    if rule == "beta_v" or rule == "beta_n":
        out = subst_term(r.fn.body, r.fn.var, r.arg)
    elif rule == "beta_T":
        out = subst_type(r.fn.body, r.fn.var, r.ty)
    elif rule == "callcc":
        return plug(subst_cont(r.body, r.k, E), E)
    elif rule == "throw_v" or rule == "throw_n":
        if F is None:
            return plug(r.body, r.ctx)
        return recompose(r.body, r.ctx, (E,) + F)
    elif rule == "shift":
        return plug_meta(Reset(subst_cont(r.body, r.k, E)), F)
    elif rule == "reset":
        out = r.body
    else:
        raise ValueError(f"not a redex: {d!r}")
    return recompose(out, E, F)


def step(p: Program) -> Union[StepResult, Finished, Stuck]:
    try:
        d = decompose(p)
    except StuckError as exc:
        return Stuck(exc.reason, p.term)
    if d.kind != "redex":
        return Finished(d)
    return StepResult(d.rule, p.term, contract(d, p.mode), d)


def evaluate(p: Program, fuel: int = DEFAULT_FUEL) -> Outcome:
    t = p.term
    steps = 0
    while True:
        try:
            d = decompose(Program(p.mode, t))
        except StuckError as exc:
            return Stuck(exc.reason, t, steps)
        if d.kind != "redex":
            return Normalized(d.term, steps)
        if steps >= fuel:
            return FuelExhausted(t, steps)
        t = contract(d, p.mode)
        steps += 1


@dataclass
class Trace:
    mode: CalcMode
    steps: list
    final: Term
    final_decomposition: Optional[Decomposition]
    outcome: str  # value | program-value | fuel-exhausted | stuck
    stuck_reason: Optional[str] = None

    @property
    def rules(self) -> list:
        return [s.rule for s in self.steps]

    def result(self) -> Outcome:
        n = len(self.steps)
        if self.outcome in ("value", "program-value"):
            return Normalized(self.final_decomposition.term, n)
        if self.outcome == "fuel-exhausted":
            return FuelExhausted(self.final, n)
        return Stuck(self.stuck_reason, self.final, n)


def trace(p: Program, fuel: int = DEFAULT_FUEL) -> Trace:
    t = p.term
    steps: list = []
    while True:
        try:
            d = decompose(Program(p.mode, t))
        except StuckError as exc:
            return Trace(p.mode, steps, t, None, "stuck", exc.reason)
        if d.kind != "redex":
            return Trace(p.mode, steps, t, d, d.kind)
        if len(steps) >= fuel:
            return Trace(p.mode, steps, t, d, "fuel-exhausted")
        after = contract(d, p.mode)
        steps.append(StepResult(d.rule, t, after, d))
        t = after


# --------------------------------------------------------------------------
# brute-force enumeration


def _children(u: Term, mode: CalcMode):
    """Immediate subterms in reduction-context position, with their frame."""
    cls = type(u)
    if cls is App:
        yield u.fn, AppFrame(u.arg)
        if not mode.cbn and type(u.fn) is Lam:
            yield u.arg, FunFrame(u.fn)
    elif cls is TyApp:
        yield u.fn, TyAppFrame(u.ty)
    elif cls is ThrowReified and not mode.cbn:
        yield u.body, ThrowFrame(u.ctx, HOLE, u.ann)


def _splits(u: Term, mode: CalcMode):
    out = [(u, HOLE, ())]
    for child, frame in _children(u, mode):
        for t, E, F in _splits(child, mode):
            if F:
                out.append((t, E, F[:-1] + (extend_outside(F[-1], frame),)))
            else:
                out.append((t, extend_outside(E, frame), ()))
    if type(u) is Reset and mode.delimited:
        for t, E, F in _splits(u.body, mode):
            out.append((t, E, F + (HOLE,)))
    return out


def enumerate_decompositions(p: Program) -> list:
    """Every way of writing ``p`` as a term in a context (and metacontext).

    Abortive entries are pairs ``(t, E)``; delimited entries are triples
    ``(t, E, F)`` with ``p == F[<E[t]>]``.
    """
    if p.mode.delimited:
        if type(p.term) is not Reset:
            return []
        return _splits(p.term.body, p.mode)
    return [(t, E) for t, E, _ in _splits(p.term, p.mode)]


def redex_decompositions(p: Program) -> list:
    return [d for d in enumerate_decompositions(p) if redex_rule(d[0], p.mode) is not None]
