"""Typechecker for System F with shift/reset (call-by-value and call-by-name).

A judgment ``(S, T, U)`` reads ``G; D; T |- t : S ; U``: ``t`` has type ``S``
when plugged into a context of type ``(S, T) cont`` under a metacontext of
type ``not U``.  The rules leave some answer types unconstrained (pure terms
work under any answer type), so the checker introduces metavariables for
them and solves equations by first-order unification.

Metavariables remember which type binders (``tfun a``) were in scope when
they were created and may only be solved to types mentioning those binders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import TypingError
from .syntax import (
    App, AppFrame, ArrowD, CalcMode, Callcc, CompTriple, ContD, EvalContext,
    ForallD, FunFrame, Hole, Lam, Meta, ModeError, NegS, Reset, Shift,
    ThrowFrame, ThrowReified, ThrowVar, TyApp, TyAppFrame, TyLam, TyVar, Var,
    check_mode, free_vars, fresh_name, ftv, is_plain, rename_tylam, subst_type,
    subst_types,
)

DELIM_CBV = CalcMode.of("delimited", "cbv")


@dataclass
class Deriv:
    """One rule application, recorded for the derivation replayer."""

    rule: str
    subject: object
    G: dict
    D: dict
    concl: tuple
    premises: list = field(default_factory=list)


@dataclass
class DelimJudgment:
    ty: object
    ans: object
    meta: object
    derivation: Optional[Deriv] = None
    unifier: Optional["Unifier"] = None

    def as_tuple(self) -> tuple:
        return (self.ty, self.ans, self.meta)


def has_metas(ty) -> bool:
    cls = type(ty)
    if cls is Meta:
        return True
    if cls is TyVar or ty is None:
        return False
    if cls is ArrowD:
        return has_metas(ty.dom) or has_metas(ty.cod) or has_metas(ty.ans) or has_metas(ty.meta)
    if cls is ForallD:
        return has_metas(ty.body) or has_metas(ty.ans) or has_metas(ty.meta)
    if cls is CompTriple:
        return has_metas(ty.ty) or has_metas(ty.ans) or has_metas(ty.meta)
    if cls is ContD:
        return has_metas(ty.hole) or has_metas(ty.answer)
    if cls is NegS:
        return has_metas(ty.hole)
    return False


def metas_of(ty, out: Optional[set] = None) -> set:
    out = set() if out is None else out
    cls = type(ty)
    if cls is Meta:
        out.add(ty.id)
    elif cls is ArrowD:
        for part in (ty.dom, ty.cod, ty.ans, ty.meta):
            metas_of(part, out)
    elif cls is ForallD:
        for part in (ty.body, ty.ans, ty.meta):
            metas_of(part, out)
    elif cls is CompTriple:
        for part in (ty.ty, ty.ans, ty.meta):
            metas_of(part, out)
    elif cls is ContD:
        metas_of(ty.hole, out)
        metas_of(ty.answer, out)
    elif cls is NegS:
        metas_of(ty.hole, out)
    return out


def _meta_occurrences(ty, bound: frozenset):
    """(meta id, forall binders enclosing that occurrence) pairs."""
    cls = type(ty)
    if cls is Meta:
        yield ty.id, bound
    elif cls is ArrowD:
        for part in (ty.dom, ty.cod, ty.ans, ty.meta):
            yield from _meta_occurrences(part, bound)
    elif cls is ForallD:
        inner = bound | {ty.var}
        for part in (ty.body, ty.ans, ty.meta):
            yield from _meta_occurrences(part, inner)
    elif cls is CompTriple:
        for part in (ty.ty, ty.ans, ty.meta):
            yield from _meta_occurrences(part, bound)


class Unifier:
    """Metavariable store: solutions plus the binders each meta may mention."""

    def __init__(self, start: int = 1):
        self.next = start
        self.sol: dict[int, object] = {}
        self.scope: dict[int, frozenset] = {}
        self.rigid: set = set()

    def fresh(self, scope=frozenset()) -> Meta:
        m = Meta(self.next)
        self.next += 1
        self.scope[m.id] = frozenset(scope)
        return m

    def walk(self, ty):
        while type(ty) is Meta and ty.id in self.sol:
            ty = self.sol[ty.id]
        return ty

    def zonk(self, ty):
        cls = type(ty)
        if cls is Meta:
            s = self.sol.get(ty.id)
            if s is None:
                return ty
            s = self.zonk(s)
            self.sol[ty.id] = s
            return s
        if cls is TyVar or ty is None:
            return ty
        if cls is ArrowD:
            return ArrowD(self.zonk(ty.dom), self.zonk(ty.cod), self.zonk(ty.ans), self.zonk(ty.meta))
        if cls is ForallD:
            return ForallD(ty.var, self.zonk(ty.body), self.zonk(ty.ans), self.zonk(ty.meta))
        if cls is CompTriple:
            return CompTriple(self.zonk(ty.ty), self.zonk(ty.ans), self.zonk(ty.meta))
        if cls is ContD:
            return ContD(self.zonk(ty.hole), self.zonk(ty.answer))
        if cls is NegS:
            return NegS(self.zonk(ty.hole))
        return ty

    def _bind(self, m: Meta, ty, node):
        ty = self.zonk(ty)
        if m.id in metas_of(ty):
            raise TypingError("occurs-check", f"?{m.id} occurs in its own solution",
                              node, expected=m, actual=ty)
        allowed = self.scope.get(m.id, frozenset())
        bad = (ftv(ty) & self.rigid) - allowed
        if bad:
            raise TypingError("ftv-escape", "type variable "
                              + ", ".join(sorted(bad)) + " would escape its binder",
                              node, expected=m, actual=ty)
        for other, bound in _meta_occurrences(ty, frozenset()):
            self.scope[other] = self.scope.get(other, frozenset()) & (allowed | bound)
        self.sol[m.id] = ty

    def unify(self, a, b, node=None):
        a = self.walk(a)
        b = self.walk(b)
        if a is b:
            return
        ca, cb = type(a), type(b)
        if ca is Meta:
            if cb is Meta and a.id == b.id:
                return
            self._bind(a, b, node)
            return
        if cb is Meta:
            self._bind(b, a, node)
            return
        if ca is not cb:
            raise TypingError("mismatch", "types do not match", node,
                              expected=self.zonk(a), actual=self.zonk(b))
        if ca is TyVar:
            if a.name != b.name:
                raise TypingError("mismatch", "types do not match", node, expected=a, actual=b)
        elif ca is ArrowD:
            self.unify(a.dom, b.dom, node)
            self.unify(a.cod, b.cod, node)
            self.unify(a.ans, b.ans, node)
            self.unify(a.meta, b.meta, node)
        elif ca is CompTriple:
            self.unify(a.ty, b.ty, node)
            self.unify(a.ans, b.ans, node)
            self.unify(a.meta, b.meta, node)
        elif ca is ForallD:
            if a.var != b.var:
                a, b = self._align(self.zonk(a), self.zonk(b))
            self.unify(a.body, b.body, node)
            self.unify(a.ans, b.ans, node)
            self.unify(a.meta, b.meta, node)
        elif ca is ContD:
            self.unify(a.hole, b.hole, node)
            self.unify(a.answer, b.answer, node)
        else:
            raise TypingError("mismatch", "types do not match", node, expected=a, actual=b)

    @staticmethod
    def _align(a: ForallD, b: ForallD):
        """Rename binders so both foralls bind the same name.

        Metavariables under a binder may be solved to mention it, so the side
        carrying metas keeps its own name whenever that is possible.
        """
        def rebind(f: ForallD, name: str) -> ForallD:
            sub = {f.var: TyVar(name)}
            return ForallD(name, subst_types(f.body, sub), subst_types(f.ans, sub),
                           subst_types(f.meta, sub))

        if a.var not in ftv(b) and not has_metas(b):
            return a, rebind(b, a.var)
        if b.var not in ftv(a) and not has_metas(a):
            return rebind(a, b.var), b
        if a.var not in ftv(b):
            return a, rebind(b, a.var)
        name = fresh_name(a.var, ftv(a) | ftv(b) | {a.var, b.var})
        return rebind(a, name), rebind(b, name)

    def restrict(self, ty, var: str):
        """Forbid unsolved metas of ``ty`` from mentioning ``var`` from now on."""
        for mid in metas_of(self.zonk(ty)):
            self.scope[mid] = self.scope.get(mid, frozenset()) - {var}

    def freshen(self, ty):
        """Copy of ``ty`` whose metas are replaced by new ones from this store.

        Each new meta may mention the forall binders that enclose it.
        """
        mapping = {}

        def go(t, bound):
            cls = type(t)
            if cls is Meta:
                if t.id not in mapping:
                    mapping[t.id] = self.fresh(bound)
                return mapping[t.id]
            if cls is ArrowD:
                return ArrowD(go(t.dom, bound), go(t.cod, bound), go(t.ans, bound),
                              go(t.meta, bound))
            if cls is ForallD:
                inner = bound | {t.var}
                return ForallD(t.var, go(t.body, inner), go(t.ans, inner), go(t.meta, inner))
            if cls is CompTriple:
                return CompTriple(go(t.ty, bound), go(t.ans, bound), go(t.meta, bound))
            return t

        return go(ty, frozenset())


class _Checker:
    def __init__(self, cbn: bool, record: bool = False, unifier: Optional[Unifier] = None,
                 rename_binders: bool = False):
        self.cbn = cbn
        self.record = record
        self.rename_binders = rename_binders
        self.u = unifier or Unifier()

    def _node(self, rule, subject, G, D, concl, premises):
        if not self.record:
            return None
        return Deriv(rule, subject, G, D, concl, [p for p in premises if p is not None])

    def _arrow(self, ty, tvs, node) -> ArrowD:
        ty = self.u.walk(ty)
        if type(ty) is Meta:
            fresh = self.u.fresh
            dom = CompTriple(fresh(tvs), fresh(tvs), fresh(tvs)) if self.cbn else fresh(tvs)
            arr = ArrowD(dom, fresh(tvs), fresh(tvs), fresh(tvs))
            self.u.unify(ty, arr, node)
            return arr
        if type(ty) is not ArrowD:
            raise TypingError("not-arrow", "expected a function type", node, actual=self.u.zonk(ty))
        return ty

    def _forall(self, ty, node) -> ForallD:
        ty = self.u.zonk(ty)
        if type(ty) is Meta:
            raise TypingError("ambiguous", "cannot instantiate a type that is not yet known", node)
        if type(ty) is not ForallD:
            raise TypingError("not-forall", "expected a polymorphic type", node, actual=ty)
        return ty

    # -- terms: return (judgment triple, derivation)

    def term(self, G: dict, D: dict, t, tvs: frozenset):
        cls = type(t)
        u = self.u
        if cls is Var:
            ty = G.get(t.name)
            if ty is None:
                raise TypingError("unbound-var", f"unbound variable {t.name}", t)
            if self.cbn:
                concl = (ty.ty, ty.ans, ty.meta)
            else:
                m = u.fresh(tvs)
                concl = (ty, m, m)
            return concl, self._node("var", t, G, D, concl, ())
        if cls is Lam:
            G2 = dict(G)
            G2[t.var] = t.ann
            (b, ans, meta), d0 = self.term(G2, D, t.body, tvs)
            m = u.fresh(tvs)
            concl = (ArrowD(t.ann, b, ans, meta), m, m)
            return concl, self._node("lam", t, G, D, concl, (d0,))
        if cls is App:
            (fty, x0, v0), d0 = self.term(G, D, t.fn, tvs)
            arr = self._arrow(fty, tvs, t)
            (s1, w1, x1), d1 = self.term(G, D, t.arg, tvs)
            if self.cbn:
                dom = u.walk(arr.dom)
                u.unify(dom, CompTriple(s1, w1, x1), t)
                u.unify(x0, arr.meta, t)
                concl = (arr.cod, arr.ans, v0)
            else:
                u.unify(arr.dom, s1, t)
                u.unify(arr.meta, w1, t)
                u.unify(x0, x1, t)
                concl = (arr.cod, arr.ans, v0)
            return concl, self._node("app", t, G, D, concl, (d0, d1))
        if cls is TyLam:
            env_ftv = frozenset()
            for ty in G.values():
                env_ftv |= ftv(u.zonk(ty))
            for ty in D.values():
                env_ftv |= ftv(u.zonk(ty))
            if self.rename_binders:
                # also avoid variables in scope, so meta scopes stay unambiguous
                t = rename_tylam(t, env_ftv | tvs)
            elif t.var in env_ftv:
                raise TypingError("ftv-escape",
                                  f"type variable {t.var} is free in the environment", t)
            u.rigid.add(t.var)
            (b, ans, meta), d0 = self.term(G, D, t.body, tvs | {t.var})
            m = u.fresh(tvs)
            concl = (ForallD(t.var, b, ans, meta), m, m)
            return concl, self._node("tylam", t, G, D, concl, (d0,))
        if cls is TyApp:
            (fty, t0, w), d0 = self.term(G, D, t.fn, tvs)
            f = self._forall(fty, t)
            sub = {f.var: t.ty}
            u.unify(t0, subst_types(f.meta, sub), t)
            concl = (subst_types(f.body, sub), subst_types(f.ans, sub), w)
            u.restrict(f, f.var)
            return concl, self._node("tyapp", t, G, D, concl, (d0,))
        if cls is Reset:
            (b, ans, meta), d0 = self.term(G, D, t.body, tvs)
            u.unify(b, ans, t)
            m = u.fresh(tvs)
            concl = (meta, m, m)
            return concl, self._node("reset", t, G, D, concl, (d0,))
        if cls is Shift:
            D2 = dict(D)
            D2[t.k] = t.ann
            (b, ans, meta), d0 = self.term(G, D2, t.body, tvs)
            u.unify(b, ans, t)
            concl = (t.ann.hole, t.ann.answer, meta)
            return concl, self._node("shift", t, G, D, concl, (d0,))
        if cls is ThrowVar or cls is ThrowReified:
            if t.ann is not None:
                raise TypingError("mode-violation", "delimited throws carry no annotation", t)
            (b, ans, meta), d0 = self.term(G, D, t.body, tvs)
            if cls is ThrowVar:
                cty = D.get(t.k)
                if cty is None:
                    raise TypingError("unbound-var", f"unbound continuation variable {t.k}", t)
                u.unify(b, cty.hole, t)
                result, d1 = cty.answer, None
            else:
                result, d1 = self.context(G, D, t.ctx, b, tvs)
            if self.cbn:
                u.unify(ans, result, t)
                u.unify(meta, result, t)
                m = u.fresh(tvs)
                concl = (result, m, m)
            else:
                concl = (result, ans, meta)
            rule = "throw" if cls is ThrowVar else "throw-reified"
            return concl, self._node(rule, t, G, D, concl, (d0, d1))
        if cls is Callcc:
            raise TypingError("mode-violation", "callcc in the delimited calculus", t)
        raise TypingError("mode-violation", f"not a term: {t!r}")

    # -- contexts: check at a hole type, return (answer type, derivation)

    def context(self, G: dict, D: dict, E: EvalContext, hole, tvs: frozenset):
        u = self.u
        cls = type(E)
        if cls is Hole:
            return hole, self._node("ctx-hole", E, G, D, (hole, hole), ())
        if cls is AppFrame:
            arr = self._arrow(hole, tvs, E)
            (s1, v1, w1), d0 = self.term(G, D, E.arg, tvs)
            if self.cbn:
                u.unify(arr.dom, CompTriple(s1, v1, w1), E)
            else:
                u.unify(arr.dom, s1, E)
                u.unify(arr.meta, v1, E)
            outer, d1 = self.context(G, D, E.outer, arr.cod, tvs)
            u.unify(outer, arr.ans, E)
            answer = arr.meta if self.cbn else w1
            return answer, self._node("ctx-app", E, G, D, (hole, answer), (d0, d1))
        if cls is FunFrame:
            if self.cbn:
                raise TypingError("mode-violation", "function frame in a call-by-name context", E)
            (fty, _, _), d0 = self.term(G, D, E.fn, tvs)
            arr = self._arrow(fty, tvs, E)
            u.unify(hole, arr.dom, E)
            outer, d1 = self.context(G, D, E.outer, arr.cod, tvs)
            u.unify(outer, arr.ans, E)
            return arr.meta, self._node("ctx-fun", E, G, D, (hole, arr.meta), (d0, d1))
        if cls is TyAppFrame:
            f = self._forall(hole, E)
            sub = {f.var: E.ty}
            outer, d0 = self.context(G, D, E.outer, subst_types(f.body, sub), tvs)
            u.unify(outer, subst_types(f.ans, sub), E)
            answer = subst_types(f.meta, sub)
            u.restrict(f, f.var)
            return answer, self._node("ctx-tyapp", E, G, D, (hole, answer), (d0,))
        if cls is ThrowFrame:
            if self.cbn:
                raise TypingError("mode-violation", "throw frame in a call-by-name context", E)
            if E.ann is not None:
                raise TypingError("mode-violation", "delimited throws carry no annotation", E)
            mid, d0 = self.context(G, D, E.ctx, hole, tvs)
            answer, d1 = self.context(G, D, E.outer, mid, tvs)
            return answer, self._node("ctx-throw", E, G, D, (hole, answer), (d0, d1))
        raise TypingError("mode-violation", f"not a context: {E!r}")

    def metacontext(self, G: dict, D: dict, F, hole, tvs: frozenset):
        cur = hole
        derivs = []
        for E in F:
            cur, d = self.context(G, D, E, cur, tvs)
            derivs.append(d)
        return derivs


def _envs(G, D):
    return dict(G or ()), dict(D or ())


def _mode_of(mode) -> bool:
    if isinstance(mode, CalcMode):
        return mode.cbn
    return mode == "cbn"


def infer_term_delim(G, D, t, mode=DELIM_CBV, record: bool = False,
                     unifier: Optional[Unifier] = None,
                     rename_binders: bool = False) -> DelimJudgment:
    """Most general judgment ``(S, T, U)`` for ``t``; metas left unsolved are
    free to be instantiated by the caller.  ``rename_binders`` is as for the
    abortive ``infer_term``."""
    G, D = _envs(G, D)
    chk = _Checker(_mode_of(mode), record, unifier, rename_binders)
    (s, t_in, u_out), d = chk.term(G, D, t, frozenset())
    z = chk.u.zonk
    return DelimJudgment(z(s), z(t_in), z(u_out), d, chk.u)


def infer_context_delim(G, D, E: EvalContext, hole=None, mode=DELIM_CBV,
                        unifier: Optional[Unifier] = None) -> ContD:
    """``(S, T) cont`` for ``E``; an unknown hole type starts as a metavariable."""
    G, D = _envs(G, D)
    chk = _Checker(_mode_of(mode), False, unifier)
    if hole is None:
        hole = chk.u.fresh()
    answer, _ = chk.context(G, D, E, hole, frozenset())
    return ContD(chk.u.zonk(hole), chk.u.zonk(answer))


def infer_metacontext(G, D, F, hole=None, mode=DELIM_CBV,
                      unifier: Optional[Unifier] = None) -> NegS:
    """``not S`` for the metacontext ``F`` (a tuple of contexts, innermost first)."""
    G, D = _envs(G, D)
    chk = _Checker(_mode_of(mode), False, unifier)
    if hole is None:
        hole = chk.u.fresh()
    chk.metacontext(G, D, F, hole, frozenset())
    return NegS(chk.u.zonk(hole))


def check_program_delim(p, mode: CalcMode = DELIM_CBV, expected=None, plain: bool = True,
                        record: bool = False):
    """Type of a closed, reset-delimited program.

    ``plain=False`` admits reified contexts (intermediate programs of a
    trace) and checks type abstractions up to renaming of their variable.  With ``expected`` the program must also unify with that type;
    metas inside ``expected`` are treated as fresh unknowns.
    """
    try:
        check_mode(p, mode)
    except ModeError as exc:
        raise TypingError("mode-violation", str(exc), p)
    if type(p) is not Reset:
        raise TypingError("not-reset-wrapped", "delimited programs must be wrapped in reset", p)
    fv = free_vars(p)
    if fv.terms or fv.types or fv.conts:
        names = sorted(fv.terms | fv.types | fv.conts)
        kind = "unbound-var" if fv.terms or fv.conts else "not-closed"
        raise TypingError(kind, "program is not closed: free " + ", ".join(names), p)
    if plain and not is_plain(p):
        raise TypingError("not-plain", "reified contexts are not allowed in source programs", p)
    j = infer_term_delim({}, {}, p, mode, record, rename_binders=not plain)
    u = j.unifier
    u.unify(j.ans, j.meta, p)
    if expected is not None:
        u.unify(j.ty, u.freshen(expected), p)
    ty = u.zonk(j.ty)
    if record:
        return ty, j
    return ty
