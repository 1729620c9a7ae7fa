"""Typechecker for System F with callcc/throw (call-by-value and call-by-name).

Environments are dicts: ``G`` maps term variables to types and ``D`` maps
continuation variables to ``ContS`` types.  Later bindings shadow earlier
ones, which a dict update gives us for free.

Every construct is syntax-directed.  The two places where the rules allow an
arbitrary type are resolved by annotations: ``throw[T]`` records its result
type, and the empty context takes its hole type from the caller.
"""

from __future__ import annotations

from typing import Callable, Optional

from .errors import TypingError
from .syntax import (
    App, AppFrame, Arrow, CalcMode, Callcc, ContS, EvalContext, Forall,
    FunFrame, Hole, Lam, ModeError, Reset, Shift, ThrowFrame, ThrowReified,
    ThrowVar, TyApp, TyAppFrame, TyLam, Var, alpha_eq, check_mode, free_vars,
    fresh_name, ftv, is_plain, rename_tylam, subst_type,
)

ABORTIVE_CBV = CalcMode.of("abortive", "cbv")

# called as on_reified(E, hole_type, G, D) for every ``throw ^E t`` met
ReifiedHook = Callable[[EvalContext, object, dict, dict], None]


def _env_ftv(env: dict) -> frozenset:
    out = frozenset()
    for ty in env.values():
        out |= ftv(ty)
    return out


class _Checker:
    def __init__(self, on_reified: Optional[ReifiedHook] = None, rename_binders: bool = False):
        self.on_reified = on_reified
        self.rename_binders = rename_binders

    def term(self, G: dict, D: dict, t):
        cls = type(t)
        if cls is Var:
            ty = G.get(t.name)
            if ty is None:
                raise TypingError("unbound-var", f"unbound variable {t.name}", t)
            return ty
        if cls is Lam:
            G2 = dict(G)
            G2[t.var] = t.ann
            return Arrow(t.ann, self.term(G2, D, t.body))
        if cls is App:
            fty = self.term(G, D, t.fn)
            if type(fty) is not Arrow:
                raise TypingError("not-arrow", "applying a term whose type is not a function type",
                                  t, actual=fty)
            aty = self.term(G, D, t.arg)
            if not alpha_eq(fty.dom, aty):
                raise TypingError("mismatch", "argument type does not match the domain",
                                  t, expected=fty.dom, actual=aty)
            return fty.cod
        if cls is TyLam:
            env_ftv = _env_ftv(G) | _env_ftv(D)
            if self.rename_binders:
                t = rename_tylam(t, env_ftv)
            elif t.var in env_ftv:
                raise TypingError("ftv-escape",
                                  f"type variable {t.var} is free in the environment", t)
            return Forall(t.var, self.term(G, D, t.body))
        if cls is TyApp:
            fty = self.term(G, D, t.fn)
            if type(fty) is not Forall:
                raise TypingError("not-forall", "type application of a non-polymorphic term",
                                  t, actual=fty)
            return subst_type(fty.body, fty.var, t.ty)
        if cls is Callcc:
            D2 = dict(D)
            D2[t.k] = t.ann
            bty = self.term(G, D2, t.body)
            if not alpha_eq(bty, t.ann.hole):
                raise TypingError("mismatch", f"callcc body must have the hole type of {t.k}",
                                  t, expected=t.ann.hole, actual=bty)
            return bty
        if cls is ThrowVar:
            cty = D.get(t.k)
            if cty is None:
                raise TypingError("unbound-var", f"unbound continuation variable {t.k}", t)
            bty = self.term(G, D, t.body)
            if not alpha_eq(bty, cty.hole):
                raise TypingError("mismatch", f"thrown term must have the hole type of {t.k}",
                                  t, expected=cty.hole, actual=bty)
            return self._result(t)
        if cls is ThrowReified:
            bty = self.term(G, D, t.body)
            self.context(G, D, t.ctx, bty)
            if self.on_reified is not None:
                self.on_reified(t.ctx, bty, G, D)
            return self._result(t)
        if cls is Shift or cls is Reset:
            raise TypingError("mode-violation", "shift/reset in the abortive calculus", t)
        raise TypingError("mode-violation", f"not a term: {t!r}")

    @staticmethod
    def _result(t):
        if t.ann is None:
            raise TypingError("mode-violation", "abortive throw without a result annotation", t)
        return t.ann

    def context(self, G: dict, D: dict, E: EvalContext, hole):
        """Check ``E`` at hole type ``hole``; returns the type reaching the outer hole."""
        cur = hole
        while True:
            cls = type(E)
            if cls is Hole:
                return cur
            if cls is FunFrame:
                fty = self.term(G, D, E.fn)
                if not alpha_eq(fty.dom, cur):
                    raise TypingError("mismatch", "function frame expects another argument type",
                                      E, expected=fty.dom, actual=cur)
                cur = fty.cod
            elif cls is AppFrame:
                if type(cur) is not Arrow:
                    raise TypingError("not-arrow", "application frame needs a function in the hole",
                                      E, actual=cur)
                aty = self.term(G, D, E.arg)
                if not alpha_eq(cur.dom, aty):
                    raise TypingError("mismatch", "argument type does not match the domain",
                                      E, expected=cur.dom, actual=aty)
                cur = cur.cod
            elif cls is TyAppFrame:
                if type(cur) is not Forall:
                    raise TypingError("not-forall", "type application frame needs a polymorphic hole",
                                      E, actual=cur)
                cur = subst_type(cur.body, cur.var, E.ty)
            elif cls is ThrowFrame:
                self.context(G, D, E.ctx, cur)
                if self.on_reified is not None:
                    self.on_reified(E.ctx, cur, G, D)
                cur = E.ann if E.ann is not None else self.hole_of(G, D, E.outer, None)
            else:
                raise TypingError("mode-violation", f"not a context: {E!r}")
            E = E.outer

    def hole_of(self, G: dict, D: dict, E: EvalContext, answer):
        """The hole type demanded by the innermost frame of ``E``."""
        cls = type(E)
        if cls is Hole:
            if answer is None:
                raise TypingError("ambiguous", "the empty context accepts any type; none requested")
            return answer
        if cls is FunFrame:
            return self.term(G, D, E.fn).dom
        if cls is AppFrame:
            return Arrow(self.term(G, D, E.arg), self.hole_of(G, D, E.outer, answer))
        if cls is ThrowFrame:
            return self.hole_of(G, D, E.ctx, answer)
        raise TypingError("ambiguous",
                          "the hole type of a type-application frame cannot be inferred", E)


def _envs(G, D):
    return dict(G or ()), dict(D or ())


def infer_term(G, D, t, on_reified: Optional[ReifiedHook] = None,
               rename_binders: bool = False):
    """The type S with G;D |- t : S, or TypingError.

    With ``rename_binders`` a type abstraction whose variable clashes with the
    environment is checked as an alpha-variant instead of being rejected.
    Intermediate programs need this: a reified context substituted under a
    binder can reuse that binder's name for an unrelated variable.
    """
    G, D = _envs(G, D)
    return _Checker(on_reified, rename_binders).term(G, D, t)


def infer_context(G, D, E: EvalContext, hole=None, answer=None) -> ContS:
    """``S cont`` for ``E``.

    With ``hole`` given the context is checked at that type.  Otherwise the
    hole type is read off the innermost frame; the empty context (or a frame
    stack ending in one) falls back to the requested ``answer``.
    """
    G, D = _envs(G, D)
    chk = _Checker()
    if hole is None:
        hole = chk.hole_of(G, D, E, answer)
    out = chk.context(G, D, E, hole)
    if answer is not None and type(E) is not Hole and not alpha_eq(out, answer):
        raise TypingError("mismatch", "context does not produce the requested answer type",
                          E, expected=answer, actual=out)
    return ContS(hole)


def context_answer(E: EvalContext, hole, G=None, D=None, rename_binders: bool = False):
    """Type that reaches the outermost hole when ``E`` is filled with ``hole``."""
    G, D = _envs(G, D)
    return _Checker(rename_binders=rename_binders).context(G, D, E, hole)


def answer_type(E: EvalContext, hole, G=None, D=None, rename_binders: bool = False):
    """Type of ``E[x]`` for a fresh ``x : hole``."""
    from .reduction import plug

    G, D = _envs(G, D)
    x = fresh_name("x", set(G) | free_vars(E).terms)
    G[x] = hole
    return _Checker(rename_binders=rename_binders).term(G, D, plug(Var(x), E))


def check_program(p, mode: CalcMode = ABORTIVE_CBV):
    """Type of a closed plain abortive program."""
    try:
        check_mode(p, mode)
    except ModeError as exc:
        raise TypingError("mode-violation", str(exc), p)
    fv = free_vars(p)
    if fv.terms or fv.types or fv.conts:
        names = sorted(fv.terms | fv.types | fv.conts)
        kind = "unbound-var" if fv.terms or fv.conts else "not-closed"
        raise TypingError(kind, "program is not closed: free " + ", ".join(names), p)
    if not is_plain(p):
        raise TypingError("not-plain", "reified contexts are not allowed in source programs", p)
    return infer_term({}, {}, p)


class AnswerTypeViolation(Exception):
    pass


def check_refined(p, S, mode: CalcMode = ABORTIVE_CBV) -> None:
    """Intermediate-program discipline: ``p : S`` and every reified context
    inside ``p`` answers ``S``.

    The answer of each context is computed twice, by checking the context
    from its hole outward and by typing ``E[x]``; the two must agree.
    """
    try:
        check_mode(p, mode)
    except ModeError as exc:
        raise TypingError("mode-violation", str(exc), p)

    def hook(E, hole, G, D):
        direct = context_answer(E, hole, G, D, rename_binders=True)
        via_plug = answer_type(E, hole, G, D, rename_binders=True)
        if not alpha_eq(direct, via_plug):
            raise AnswerTypeViolation("answer type routes disagree: "
                                      f"{direct!r} vs {via_plug!r}")
        if not alpha_eq(direct, S):
            raise TypingError("mismatch", "reified context has a foreign answer type",
                              E, expected=S, actual=direct)

    got = infer_term({}, {}, p, on_reified=hook, rename_binders=True)
    if not alpha_eq(got, S):
        raise TypingError("mismatch", "program changed type", p, expected=S, actual=got)
