"""Abstract machines: the CPS evaluators behind the normalization proofs,
defunctionalized so that continuations are the same contexts and
metacontexts the reduction engine uses.

The abortive machine has states ``Eval(t, E)``, ``Continue(E, v)`` and
``Done(v)``; the delimited one threads a metacontext ``F`` through them and
adds ``ContinueMeta(F, v)`` for returning across a reset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .reduction import DEFAULT_FUEL, FuelExhausted, Normalized, Program, Stuck
from .syntax import (
    App, AppFrame, Callcc, EvalContext, FunFrame, HOLE, Hole, Lam, Reset,
    Shift, Term, ThrowFrame, ThrowReified, ThrowVar, TyApp, TyAppFrame, TyLam,
    Var, subst_cont, subst_term, subst_type,
)

DEFAULT_MACHINE_FUEL = 10 * DEFAULT_FUEL


@dataclass(frozen=True)
class Eval:
    term: Term
    context: EvalContext
    meta: Optional[tuple] = None


@dataclass(frozen=True)
class Continue:
    context: EvalContext
    value: Term
    meta: Optional[tuple] = None


@dataclass(frozen=True)
class ContinueMeta:
    meta: tuple
    value: Term


@dataclass(frozen=True)
class Done:
    value: Term


class _Stuck(Exception):
    pass


def initial_state(p: Program):
    if p.mode.delimited:
        if type(p.term) is not Reset:
            raise _Stuck("delimited program is not wrapped in reset")
        return Eval(p.term.body, HOLE, ())
    return Eval(p.term, HOLE, None)


def transition(s, delimited: bool, cbn: bool):
    """One machine move."""
    cls = type(s)
    if cls is Eval:
        t, E, F = s.term, s.context, s.meta
        tc = type(t)
        if tc is Lam or tc is TyLam:
            return Continue(E, t, F)
        if tc is App:
            return Eval(t.fn, AppFrame(t.arg, E), F)
        if tc is TyApp:
            return Eval(t.fn, TyAppFrame(t.ty, E), F)
        if tc is ThrowReified:
            if not cbn:
                return Eval(t.body, ThrowFrame(t.ctx, E, t.ann), F)
            if delimited:
                return Eval(t.body, t.ctx, (E,) + F)
            return Eval(t.body, t.ctx, None)
        if tc is Callcc and not delimited:
            return Eval(subst_cont(t.body, t.k, E), E, None)
        if tc is Shift and delimited:
            return Eval(subst_cont(t.body, t.k, E), HOLE, F)
        if tc is Reset and delimited:
            return Eval(t.body, HOLE, (E,) + F)
        if tc is Var:
            raise _Stuck(f"free variable {t.name}")
        if tc is ThrowVar:
            raise _Stuck(f"throw to free continuation variable {t.k}")
        raise _Stuck(f"{tc.__name__} is not part of this calculus")
    if cls is Continue:
        E, v, F = s.context, s.value, s.meta
        ec = type(E)
        if ec is Hole:
            return ContinueMeta(F, v) if delimited else Done(v)
        if ec is AppFrame:
            if type(v) is not Lam:
                raise _Stuck("type abstraction applied to a term")
            if cbn:
                return Eval(subst_term(v.body, v.var, E.arg), E.outer, F)
            return Eval(E.arg, FunFrame(v, E.outer), F)
        if ec is FunFrame:
            return Eval(subst_term(E.fn.body, E.fn.var, v), E.outer, F)
        if ec is TyAppFrame:
            if type(v) is not TyLam:
                raise _Stuck("term abstraction applied to a type")
            return Eval(subst_type(v.body, v.var, E.ty), E.outer, F)
        if ec is ThrowFrame:
            if delimited:
                return Continue(E.ctx, v, (E.outer,) + F)
            return Continue(E.ctx, v, None)
        raise _Stuck(f"unexpected context {E!r}")
    if cls is ContinueMeta:
        if not s.meta:
            return Done(s.value)
        return Continue(s.meta[0], s.value, s.meta[1:])
    raise ValueError(f"no transition from {s!r}")


def machine_eval(p: Program, fuel: int = DEFAULT_MACHINE_FUEL, states: Optional[list] = None):
    """Run the machine; ``steps`` in the outcome counts transitions.

    When ``states`` is a list every visited state is appended to it.
    """
    delimited, cbn = p.mode.delimited, p.mode.cbn
    try:
        s = initial_state(p)
    except _Stuck as exc:
        return Stuck(str(exc), p.term, 0)
    n = 0
    while True:
        if states is not None:
            states.append(s)
        if type(s) is Done:
            return Normalized(s.value, n)
        if n >= fuel:
            return FuelExhausted(_rebuild(s, p), n)
        try:
            s = transition(s, delimited, cbn)
        except _Stuck as exc:
            return Stuck(str(exc), _rebuild(s, p), n)
        n += 1


def _rebuild(s, p: Program) -> Term:
    """The program a machine state corresponds to (for diagnostics)."""
    from .reduction import plug, plug_meta

    delimited = p.mode.delimited
    if type(s) is Eval:
        t, E, F = s.term, s.context, s.meta
    elif type(s) is Continue:
        t, E, F = s.value, s.context, s.meta
    elif type(s) is ContinueMeta:
        t, E, F = s.value, HOLE, s.meta
    else:
        return Reset(s.value) if delimited else s.value
    if delimited:
        return plug_meta(Reset(plug(t, E)), F)
    return plug(t, E)


def state_json(s) -> dict:
    from .surface import context_json, pretty

    def meta(F):
        return None if F is None else [context_json(E) for E in F]

    if type(s) is Eval:
        return {"state": "eval", "term": pretty(s.term), "context": context_json(s.context),
                "metacontext": meta(s.meta)}
    if type(s) is Continue:
        return {"state": "continue", "value": pretty(s.value),
                "context": context_json(s.context), "metacontext": meta(s.meta)}
    if type(s) is ContinueMeta:
        return {"state": "continue-meta", "value": pretty(s.value), "metacontext": meta(s.meta)}
    return {"state": "done", "value": pretty(s.value)}


def emit_machine_trace(p: Program, fuel: int = DEFAULT_MACHINE_FUEL) -> str:
    states: list = []
    result = machine_eval(p, fuel, states)
    records = [{"step": i, "engine": "machine", **state_json(s)} for i, s in enumerate(states)]
    records[-1]["outcome"] = result.outcome
    return json.dumps(records, indent=2, ensure_ascii=False) + "\n"
