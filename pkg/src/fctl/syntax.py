"""Abstract syntax shared by the four calculi.

Terms, types and evaluation contexts are immutable dataclasses.  Binders use
plain names; capture is avoided by renaming to a name that is fresh with
respect to the free variables in play, so every operation here is a pure
function of its arguments.

Evaluation contexts are represented inside-out: ``Hole`` is the empty
context and every frame holds the rest of the context in ``outer``, so the
head of the chain is the frame closest to the hole.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union


class Calculus(str, Enum):
    ABORTIVE = "abortive"
    DELIMITED = "delimited"


class Strategy(str, Enum):
    CBV = "cbv"
    CBN = "cbn"


@dataclass(frozen=True)
class CalcMode:
    calculus: Calculus
    strategy: Strategy

    @classmethod
    def of(cls, calculus: str, strategy: str) -> "CalcMode":
        return cls(Calculus(calculus), Strategy(strategy))

    @property
    def delimited(self) -> bool:
        return self.calculus is Calculus.DELIMITED

    @property
    def cbn(self) -> bool:
        return self.strategy is Strategy.CBN

    def __str__(self) -> str:
        return f"{self.calculus.value} {self.strategy.value}"


ALL_MODES = tuple(CalcMode(c, s) for c in Calculus for s in Strategy)


# --------------------------------------------------------------------------
# types


class Type:
    __slots__ = ()


@dataclass(frozen=True)
class TyVar(Type):
    name: str


@dataclass(frozen=True)
class Arrow(Type):
    dom: Type
    cod: Type


@dataclass(frozen=True)
class Forall(Type):
    var: str
    body: Type


@dataclass(frozen=True)
class ArrowD(Type):
    """``dom -> cod @ [ans, meta]``: callable in a context of type
    ``(cod, ans) cont`` under a metacontext of type ``not meta``."""

    dom: Union[Type, "CompTriple"]
    cod: Type
    ans: Type
    meta: Type


@dataclass(frozen=True)
class ForallD(Type):
    """``forall var. body @ [ans, meta]``; the quantifier scopes over all three."""

    var: str
    body: Type
    ans: Type
    meta: Type


@dataclass(frozen=True)
class Meta(Type):
    """Answer-type metavariable, only ever created by the delimited checker."""

    id: int


@dataclass(frozen=True)
class CompTriple:
    """``{ty, ans, meta}``: a suspended computation (call-by-name arguments)."""

    ty: Type
    ans: Type
    meta: Type


@dataclass(frozen=True)
class ContS:
    hole: Type


@dataclass(frozen=True)
class ContD:
    hole: Type
    answer: Type


@dataclass(frozen=True)
class NegS:
    hole: Type


ContextType = Union[ContS, ContD]


# --------------------------------------------------------------------------
# terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Lam(Term):
    var: str
    ann: Union[Type, CompTriple]
    body: Term


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class TyLam(Term):
    var: str
    body: Term


@dataclass(frozen=True)
class TyApp(Term):
    fn: Term
    ty: Type


@dataclass(frozen=True)
class Callcc(Term):
    k: str
    ann: ContS
    body: Term


@dataclass(frozen=True)
class Shift(Term):
    k: str
    ann: ContD
    body: Term


@dataclass(frozen=True)
class Reset(Term):
    body: Term


@dataclass(frozen=True)
class ThrowVar(Term):
    k: str
    ann: Optional[Type]
    body: Term


@dataclass(frozen=True)
class ThrowReified(Term):
    ctx: "EvalContext"
    body: Term
    ann: Optional[Type] = None


# --------------------------------------------------------------------------
# evaluation contexts


class EvalContext:
    __slots__ = ()

    def frames(self) -> list["EvalContext"]:
        """Frames innermost-first (each still carrying its ``outer`` link)."""
        out = []
        e = self
        while not isinstance(e, Hole):
            out.append(e)
            e = e.outer
        return out

    def depth(self) -> int:
        n = 0
        e = self
        while not isinstance(e, Hole):
            n += 1
            e = e.outer
        return n


@dataclass(frozen=True)
class Hole(EvalContext):
    pass


HOLE = Hole()


@dataclass(frozen=True)
class FunFrame(EvalContext):
    """``(fun (x:S) -> t) []`` under ``outer``."""

    fn: Lam
    outer: EvalContext = HOLE


@dataclass(frozen=True)
class AppFrame(EvalContext):
    """``[] arg`` under ``outer``."""

    arg: Term
    outer: EvalContext = HOLE


@dataclass(frozen=True)
class TyAppFrame(EvalContext):
    ty: Type
    outer: EvalContext = HOLE


@dataclass(frozen=True)
class ThrowFrame(EvalContext):
    ctx: EvalContext
    outer: EvalContext = HOLE
    ann: Optional[Type] = None


Metacontext = tuple  # tuple[EvalContext, ...], innermost (top of stack) first


def with_outer(frame: EvalContext, outer: EvalContext) -> EvalContext:
    if isinstance(frame, FunFrame):
        return FunFrame(frame.fn, outer)
    if isinstance(frame, AppFrame):
        return AppFrame(frame.arg, outer)
    if isinstance(frame, TyAppFrame):
        return TyAppFrame(frame.ty, outer)
    if isinstance(frame, ThrowFrame):
        return ThrowFrame(frame.ctx, outer, frame.ann)
    return outer


def from_frames(frames: Iterable[EvalContext]) -> EvalContext:
    """Rebuild a context from frames listed innermost-first."""
    out: EvalContext = HOLE
    for f in reversed(list(frames)):
        out = with_outer(f, out)
    return out


def extend_outside(e: EvalContext, frame: EvalContext) -> EvalContext:
    """``e`` with ``frame`` added as its new outermost frame."""
    return from_frames(e.frames() + [with_outer(frame, HOLE)])


# --------------------------------------------------------------------------
# free variables


class FreeVars:
    __slots__ = ("terms", "types", "conts")

    def __init__(self, terms=frozenset(), types=frozenset(), conts=frozenset()):
        self.terms = terms
        self.types = types
        self.conts = conts

    def __iter__(self):
        return iter((self.terms, self.types, self.conts))

    def __or__(self, other: "FreeVars") -> "FreeVars":
        return FreeVars(self.terms | other.terms, self.types | other.types,
                        self.conts | other.conts)

    def __eq__(self, other) -> bool:
        return tuple(self) == tuple(other)

    def __repr__(self) -> str:
        return f"FreeVars({set(self.terms)}, {set(self.types)}, {set(self.conts)})"


_EMPTY = frozenset()
NO_FREE = FreeVars()


def ftv(ty) -> frozenset:
    """Free type variables of a type, triple or context type."""
    cached = getattr(ty, "_ftv", None)
    if cached is not None:
        return cached
    if isinstance(ty, TyVar):
        out = frozenset((ty.name,))
    elif isinstance(ty, Meta) or ty is None:
        return _EMPTY
    elif isinstance(ty, Arrow):
        out = ftv(ty.dom) | ftv(ty.cod)
    elif isinstance(ty, Forall):
        out = ftv(ty.body) - {ty.var}
    elif isinstance(ty, ArrowD):
        out = ftv(ty.dom) | ftv(ty.cod) | ftv(ty.ans) | ftv(ty.meta)
    elif isinstance(ty, ForallD):
        out = (ftv(ty.body) | ftv(ty.ans) | ftv(ty.meta)) - {ty.var}
    elif isinstance(ty, CompTriple):
        out = ftv(ty.ty) | ftv(ty.ans) | ftv(ty.meta)
    elif isinstance(ty, ContS):
        out = ftv(ty.hole)
    elif isinstance(ty, ContD):
        out = ftv(ty.hole) | ftv(ty.answer)
    elif isinstance(ty, NegS):
        out = ftv(ty.hole)
    else:
        raise TypeError(f"not a type: {ty!r}")
    object.__setattr__(ty, "_ftv", out)
    return out


def free_vars(node) -> FreeVars:
    """Free term, type and continuation variables of a term or context."""
    cached = getattr(node, "_fv", None)
    if cached is not None:
        return cached
    t = type(node)
    if t is Var:
        out = FreeVars(frozenset((node.name,)))
    elif t is Lam:
        b = free_vars(node.body)
        out = FreeVars(b.terms - {node.var}, b.types | ftv(node.ann), b.conts)
    elif t is App:
        out = free_vars(node.fn) | free_vars(node.arg)
    elif t is TyLam:
        b = free_vars(node.body)
        out = FreeVars(b.terms, b.types - {node.var}, b.conts)
    elif t is TyApp:
        f = free_vars(node.fn)
        out = FreeVars(f.terms, f.types | ftv(node.ty), f.conts)
    elif t is Callcc or t is Shift:
        b = free_vars(node.body)
        out = FreeVars(b.terms, b.types | ftv(node.ann), b.conts - {node.k})
    elif t is Reset:
        out = free_vars(node.body)
    elif t is ThrowVar:
        b = free_vars(node.body)
        out = FreeVars(b.terms, b.types | ftv(node.ann), b.conts | {node.k})
    elif t is ThrowReified:
        out = free_vars(node.ctx) | free_vars(node.body)
        out = FreeVars(out.terms, out.types | ftv(node.ann), out.conts)
    elif t is Hole:
        return NO_FREE
    elif t is FunFrame:
        out = free_vars(node.fn) | free_vars(node.outer)
    elif t is AppFrame:
        out = free_vars(node.arg) | free_vars(node.outer)
    elif t is TyAppFrame:
        o = free_vars(node.outer)
        out = FreeVars(o.terms, o.types | ftv(node.ty), o.conts)
    elif t is ThrowFrame:
        out = free_vars(node.ctx) | free_vars(node.outer)
        out = FreeVars(out.terms, out.types | ftv(node.ann), out.conts)
    else:
        raise TypeError(f"not a term or context: {node!r}")
    object.__setattr__(node, "_fv", out)
    return out


def is_closed(node) -> bool:
    fv = free_vars(node)
    return not (fv.terms or fv.types or fv.conts)


# --------------------------------------------------------------------------
# fresh names

_SUFFIX = re.compile(r"\d+$")


def fresh_name(base: str, avoid) -> str:
    """Smallest ``base<n>`` not in ``avoid``; deterministic, no global state."""
    stem = _SUFFIX.sub("", base) or "v"
    i = 1
    while True:
        cand = f"{stem}{i}"
        if cand not in avoid:
            return cand
        i += 1


# --------------------------------------------------------------------------
# substitution


class _Sub:
    """A simultaneous substitution together with the free variables of its range."""

    __slots__ = ("terms", "types", "conts", "range_fv")

    def __init__(self, terms, types, conts):
        self.terms = terms
        self.types = types
        self.conts = conts
        tm, ty, ct = set(), set(), set()
        for s in terms.values():
            fv = free_vars(s)
            tm |= fv.terms
            ty |= fv.types
            ct |= fv.conts
        for s in types.values():
            ty |= ftv(s)
        for e in conts.values():
            fv = free_vars(e)
            tm |= fv.terms
            ty |= fv.types
            ct |= fv.conts
        self.range_fv = FreeVars(frozenset(tm), frozenset(ty), frozenset(ct))

    def touches(self, fv: FreeVars) -> bool:
        return bool((self.terms and not fv.terms.isdisjoint(self.terms))
                    or (self.types and not fv.types.isdisjoint(self.types))
                    or (self.conts and not fv.conts.isdisjoint(self.conts)))

    def _replace(self, terms=None, types=None, conts=None) -> "_Sub":
        new = object.__new__(_Sub)
        new.terms = self.terms if terms is None else terms
        new.types = self.types if types is None else types
        new.conts = self.conts if conts is None else conts
        new.range_fv = self.range_fv
        return new

    def under_term_binder(self, x: str, body_fv: FreeVars):
        """(new binder name, substitution for the body)."""
        terms = self.terms
        if x in terms:
            terms = {k: v for k, v in terms.items() if k != x}
        if x in self.range_fv.terms:
            y = fresh_name(x, self.range_fv.terms | body_fv.terms | set(terms))
            terms = dict(terms)
            terms[x] = Var(y)
            new = _Sub(terms, self.types, self.conts)
            return y, new
        return x, self._replace(terms=terms)

    def under_type_binder(self, a: str, body_ftv: frozenset):
        types = self.types
        if a in types:
            types = {k: v for k, v in types.items() if k != a}
        if a in self.range_fv.types:
            b = fresh_name(a, self.range_fv.types | body_ftv | set(types))
            types = dict(types)
            types[a] = TyVar(b)
            return b, _Sub(self.terms, types, self.conts)
        return a, self._replace(types=types)

    def under_cont_binder(self, k: str, body_fv: FreeVars):
        conts = self.conts
        if k in conts:
            conts = {c: v for c, v in conts.items() if c != k}
        if k in self.range_fv.conts:
            k2 = fresh_name(k, self.range_fv.conts | body_fv.conts | set(conts))
            # renaming a continuation variable: substitute a throw to the new name
            new = _Sub(self.terms, self.types, conts)
            return k2, new, True
        return k, self._replace(conts=conts), False


def _sub_type(ty, sub: _Sub):
    if ty is None or not sub.types:
        return ty
    fvs = ftv(ty)
    if fvs.isdisjoint(sub.types):
        return ty
    if isinstance(ty, TyVar):
        return sub.types.get(ty.name, ty)
    if isinstance(ty, Arrow):
        return Arrow(_sub_type(ty.dom, sub), _sub_type(ty.cod, sub))
    if isinstance(ty, ArrowD):
        return ArrowD(_sub_type(ty.dom, sub), _sub_type(ty.cod, sub),
                      _sub_type(ty.ans, sub), _sub_type(ty.meta, sub))
    if isinstance(ty, CompTriple):
        return CompTriple(_sub_type(ty.ty, sub), _sub_type(ty.ans, sub),
                          _sub_type(ty.meta, sub))
    if isinstance(ty, Forall):
        a, inner = sub.under_type_binder(ty.var, ftv(ty.body))
        return Forall(a, _sub_type(ty.body, inner))
    if isinstance(ty, ForallD):
        scope = ftv(ty.body) | ftv(ty.ans) | ftv(ty.meta)
        a, inner = sub.under_type_binder(ty.var, scope)
        return ForallD(a, _sub_type(ty.body, inner), _sub_type(ty.ans, inner),
                       _sub_type(ty.meta, inner))
    if isinstance(ty, ContS):
        return ContS(_sub_type(ty.hole, sub))
    if isinstance(ty, ContD):
        return ContD(_sub_type(ty.hole, sub), _sub_type(ty.answer, sub))
    if isinstance(ty, NegS):
        return NegS(_sub_type(ty.hole, sub))
    return ty


def _rename_cont(t: Term, k: str, k2: str) -> Term:
    return _sub(t, _Sub({}, {}, {k: _RenamedCont(k2)}))


class _RenamedCont(EvalContext):
    """Pseudo-context used only to rename a continuation variable."""

    __slots__ = ("name", "_fv")

    def __init__(self, name: str):
        self.name = name
        self._fv = FreeVars(conts=frozenset((name,)))


def _sub(t, sub: _Sub):
    if not sub.touches(free_vars(t)):
        return t
    cls = type(t)
    if cls is Var:
        return sub.terms.get(t.name, t)
    if cls is App:
        return App(_sub(t.fn, sub), _sub(t.arg, sub))
    if cls is Lam:
        x, inner = sub.under_term_binder(t.var, free_vars(t.body))
        return Lam(x, _sub_type(t.ann, sub), _sub(t.body, inner))
    if cls is TyLam:
        a, inner = sub.under_type_binder(t.var, free_vars(t.body).types)
        return TyLam(a, _sub(t.body, inner))
    if cls is TyApp:
        return TyApp(_sub(t.fn, sub), _sub_type(t.ty, sub))
    if cls is Callcc or cls is Shift:
        k, inner, renamed = sub.under_cont_binder(t.k, free_vars(t.body))
        body = _rename_cont(t.body, t.k, k) if renamed else t.body
        return cls(k, _sub_type(t.ann, sub), _sub(body, inner))
    if cls is Reset:
        return Reset(_sub(t.body, sub))
    if cls is ThrowVar:
        body = _sub(t.body, sub)
        ann = _sub_type(t.ann, sub)
        target = sub.conts.get(t.k)
        if target is None:
            return ThrowVar(t.k, ann, body)
        if isinstance(target, _RenamedCont):
            return ThrowVar(target.name, ann, body)
        return ThrowReified(target, body, ann)
    if cls is ThrowReified:
        return ThrowReified(_sub(t.ctx, sub), _sub(t.body, sub), _sub_type(t.ann, sub))
    if cls is FunFrame:
        return FunFrame(_sub(t.fn, sub), _sub(t.outer, sub))
    if cls is AppFrame:
        return AppFrame(_sub(t.arg, sub), _sub(t.outer, sub))
    if cls is TyAppFrame:
        return TyAppFrame(_sub_type(t.ty, sub), _sub(t.outer, sub))
    if cls is ThrowFrame:
        return ThrowFrame(_sub(t.ctx, sub), _sub(t.outer, sub), _sub_type(t.ann, sub))
    return t


def subst_term(t, x: str, s: Term):
    """Capture-avoiding ``t[s/x]`` (works on terms and contexts)."""
    return _sub(t, _Sub({x: s}, {}, {}))


def subst_type(host, a: str, ty: Type):
    """Capture-avoiding ``host[ty/a]`` where host is a term, context or type."""
    sub = _Sub({}, {a: ty}, {})
    if isinstance(host, (Term, EvalContext)):
        return _sub(host, sub)
    return _sub_type(host, sub)


def rename_tylam(t: "TyLam", avoid) -> "TyLam":
    """Alpha-variant of ``t`` whose bound type variable is not in ``avoid``."""
    if t.var not in avoid:
        return t
    new = fresh_name(t.var, set(avoid) | free_vars(t).types | {t.var})
    return TyLam(new, subst_type(t.body, t.var, TyVar(new)))


def subst_types(host, mapping: dict):
    """Simultaneous type substitution."""
    sub = _Sub({}, dict(mapping), {})
    if isinstance(host, (Term, EvalContext)):
        return _sub(host, sub)
    return _sub_type(host, sub)


def subst_cont(t, k: str, ctx: EvalContext):
    """Replace every free ``throw k s`` with ``throw ^ctx s``."""
    return _sub(t, _Sub({}, {}, {k: ctx}))


# --------------------------------------------------------------------------
# alpha-equivalence


def alpha_eq(a, b) -> bool:
    """Equality up to renaming of term, type and continuation binders."""
    return _aeq(a, b, {}, {}, 0)


def _bind(env: dict, ns: str, name: str, level: int) -> dict:
    env = dict(env)
    env[(ns, name)] = level
    return env


def _name_eq(ns: str, x: str, y: str, ex: dict, ey: dict) -> bool:
    lx = ex.get((ns, x))
    ly = ey.get((ns, y))
    if lx is None and ly is None:
        return x == y
    return lx == ly


def _aeq(a, b, ea: dict, eb: dict, n: int) -> bool:
    if a is b and not ea and not eb:
        return True
    ta = type(a)
    if ta is not type(b):
        return False
    if a is None or ta is Hole:
        return True
    if ta is TyVar:
        return _name_eq("ty", a.name, b.name, ea, eb)
    if ta is Meta:
        return a.id == b.id
    if ta is Var:
        return _name_eq("tm", a.name, b.name, ea, eb)
    if ta is Arrow:
        return _aeq(a.dom, b.dom, ea, eb, n) and _aeq(a.cod, b.cod, ea, eb, n)
    if ta is ArrowD:
        return (_aeq(a.dom, b.dom, ea, eb, n) and _aeq(a.cod, b.cod, ea, eb, n)
                and _aeq(a.ans, b.ans, ea, eb, n) and _aeq(a.meta, b.meta, ea, eb, n))
    if ta is CompTriple:
        return (_aeq(a.ty, b.ty, ea, eb, n) and _aeq(a.ans, b.ans, ea, eb, n)
                and _aeq(a.meta, b.meta, ea, eb, n))
    if ta is Forall:
        return _aeq(a.body, b.body, _bind(ea, "ty", a.var, n), _bind(eb, "ty", b.var, n), n + 1)
    if ta is ForallD:
        ea2, eb2 = _bind(ea, "ty", a.var, n), _bind(eb, "ty", b.var, n)
        return (_aeq(a.body, b.body, ea2, eb2, n + 1) and _aeq(a.ans, b.ans, ea2, eb2, n + 1)
                and _aeq(a.meta, b.meta, ea2, eb2, n + 1))
    if ta is ContS or ta is NegS:
        return _aeq(a.hole, b.hole, ea, eb, n)
    if ta is ContD:
        return _aeq(a.hole, b.hole, ea, eb, n) and _aeq(a.answer, b.answer, ea, eb, n)
    if ta is Lam:
        return (_aeq(a.ann, b.ann, ea, eb, n)
                and _aeq(a.body, b.body, _bind(ea, "tm", a.var, n), _bind(eb, "tm", b.var, n), n + 1))
    if ta is App:
        return _aeq(a.fn, b.fn, ea, eb, n) and _aeq(a.arg, b.arg, ea, eb, n)
    if ta is TyLam:
        return _aeq(a.body, b.body, _bind(ea, "ty", a.var, n), _bind(eb, "ty", b.var, n), n + 1)
    if ta is TyApp:
        return _aeq(a.fn, b.fn, ea, eb, n) and _aeq(a.ty, b.ty, ea, eb, n)
    if ta is Callcc or ta is Shift:
        return (_aeq(a.ann, b.ann, ea, eb, n)
                and _aeq(a.body, b.body, _bind(ea, "ct", a.k, n), _bind(eb, "ct", b.k, n), n + 1))
    if ta is Reset:
        return _aeq(a.body, b.body, ea, eb, n)
    if ta is ThrowVar:
        return (_name_eq("ct", a.k, b.k, ea, eb) and _aeq(a.ann, b.ann, ea, eb, n)
                and _aeq(a.body, b.body, ea, eb, n))
    if ta is ThrowReified:
        return (_aeq(a.ctx, b.ctx, ea, eb, n) and _aeq(a.ann, b.ann, ea, eb, n)
                and _aeq(a.body, b.body, ea, eb, n))
    if ta is FunFrame:
        return _aeq(a.fn, b.fn, ea, eb, n) and _aeq(a.outer, b.outer, ea, eb, n)
    if ta is AppFrame:
        return _aeq(a.arg, b.arg, ea, eb, n) and _aeq(a.outer, b.outer, ea, eb, n)
    if ta is TyAppFrame:
        return _aeq(a.ty, b.ty, ea, eb, n) and _aeq(a.outer, b.outer, ea, eb, n)
    if ta is ThrowFrame:
        return (_aeq(a.ctx, b.ctx, ea, eb, n) and _aeq(a.ann, b.ann, ea, eb, n)
                and _aeq(a.outer, b.outer, ea, eb, n))
    if ta is tuple:
        return len(a) == len(b) and all(_aeq(x, y, ea, eb, n) for x, y in zip(a, b))
    return a == b


# --------------------------------------------------------------------------
# structural predicates


def is_value(t: Term) -> bool:
    return type(t) is Lam or type(t) is TyLam


def is_plain(t) -> bool:
    """True iff no reified context (``throw ^E t``) occurs anywhere in ``t``."""
    cls = type(t)
    if cls is ThrowReified:
        return False
    if cls is Var:
        return True
    if cls is Lam or cls is TyLam or cls is Callcc or cls is Shift or cls is Reset:
        return is_plain(t.body)
    if cls is App:
        return is_plain(t.fn) and is_plain(t.arg)
    if cls is TyApp:
        return is_plain(t.fn)
    if cls is ThrowVar:
        return is_plain(t.body)
    raise TypeError(f"not a term: {t!r}")


def subterms(t: Term):
    """Pre-order walk over the term tree (does not enter reified contexts)."""
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        cls = type(u)
        if cls is App:
            stack.append(u.arg)
            stack.append(u.fn)
        elif cls is TyApp:
            stack.append(u.fn)
        elif cls is not Var:
            stack.append(u.body)


def term_size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def term_depth(t: Term) -> int:
    cls = type(t)
    if cls is Var:
        return 1
    if cls is App:
        return 1 + max(term_depth(t.fn), term_depth(t.arg))
    if cls is TyApp:
        return 1 + term_depth(t.fn)
    return 1 + term_depth(t.body)


class ModeError(Exception):
    """A construct that is illegal in the selected calculus or strategy."""


def _type_ok(ty, delimited: bool, cbn: bool, where: str) -> None:
    if ty is None:
        return
    if isinstance(ty, (TyVar, Meta)):
        return
    if getattr(ty, "_mode_ok", None) == (delimited, cbn):
        return
    _type_ok_walk(ty, delimited, cbn, where)
    object.__setattr__(ty, "_mode_ok", (delimited, cbn))


def _type_ok_walk(ty, delimited: bool, cbn: bool, where: str) -> None:
    if isinstance(ty, Arrow):
        if delimited:
            raise ModeError(f"{where}: plain arrow type in delimited calculus")
        _type_ok(ty.dom, delimited, cbn, where)
        _type_ok(ty.cod, delimited, cbn, where)
    elif isinstance(ty, Forall):
        if delimited:
            raise ModeError(f"{where}: plain forall type in delimited calculus")
        _type_ok(ty.body, delimited, cbn, where)
    elif isinstance(ty, ArrowD):
        if not delimited:
            raise ModeError(f"{where}: answer-annotated arrow in abortive calculus")
        if cbn != isinstance(ty.dom, CompTriple):
            raise ModeError(f"{where}: call-by-name arrows take {{S, T, U}} arguments, "
                            "call-by-value arrows take plain types")
        for part in (ty.dom, ty.cod, ty.ans, ty.meta):
            _type_ok(part, delimited, cbn, where)
    elif isinstance(ty, ForallD):
        if not delimited:
            raise ModeError(f"{where}: answer-annotated forall in abortive calculus")
        for part in (ty.body, ty.ans, ty.meta):
            _type_ok(part, delimited, cbn, where)
    elif isinstance(ty, CompTriple):
        for part in (ty.ty, ty.ans, ty.meta):
            _type_ok(part, delimited, cbn, where)
    elif isinstance(ty, ContS):
        if delimited:
            raise ModeError(f"{where}: 'S cont' needs an answer type in the delimited calculus")
        _type_ok(ty.hole, delimited, cbn, where)
    elif isinstance(ty, ContD):
        if not delimited:
            raise ModeError(f"{where}: '(S, T) cont' only exists in the delimited calculus")
        _type_ok(ty.hole, delimited, cbn, where)
        _type_ok(ty.answer, delimited, cbn, where)
    else:
        raise ModeError(f"{where}: unexpected type {ty!r}")


def check_mode(node, mode: CalcMode) -> None:
    """Raise ModeError unless every construct in ``node`` belongs to ``mode``."""
    d, n = mode.delimited, mode.cbn
    stack = [node]
    while stack:
        t = stack.pop()
        cls = type(t)
        if cls is Var or cls is Hole:
            continue
        if cls is Lam:
            if d and n and not isinstance(t.ann, CompTriple):
                raise ModeError(f"binder {t.var}: call-by-name delimited binders need {{S, T, U}}")
            if isinstance(t.ann, CompTriple) and not (d and n):
                raise ModeError(f"binder {t.var}: computation triples only in delimited cbn")
            _type_ok(t.ann, d, n, f"binder {t.var}")
            stack.append(t.body)
        elif cls is App:
            stack += [t.fn, t.arg]
        elif cls is TyLam or cls is Reset:
            if cls is Reset and not d:
                raise ModeError("reset is not part of the abortive calculus")
            stack.append(t.body)
        elif cls is TyApp:
            _type_ok(t.ty, d, n, "type application")
            stack.append(t.fn)
        elif cls is Callcc:
            if d:
                raise ModeError("callcc is not part of the delimited calculus")
            _type_ok(t.ann, d, n, f"callcc {t.k}")
            stack.append(t.body)
        elif cls is Shift:
            if not d:
                raise ModeError("shift is not part of the abortive calculus")
            _type_ok(t.ann, d, n, f"shift {t.k}")
            stack.append(t.body)
        elif cls is ThrowVar or cls is ThrowReified:
            if d and t.ann is not None:
                raise ModeError("delimited throws take no result annotation")
            if not d and t.ann is None:
                raise ModeError("abortive throws need a result annotation throw[T]")
            _type_ok(t.ann, d, n, "throw")
            stack.append(t.body)
            if cls is ThrowReified:
                stack.append(t.ctx)
        elif cls is FunFrame:
            if n:
                raise ModeError("call-by-name contexts have no function frames")
            stack += [t.fn, t.outer]
        elif cls is AppFrame:
            stack += [t.arg, t.outer]
        elif cls is TyAppFrame:
            _type_ok(t.ty, d, n, "type application frame")
            stack.append(t.outer)
        elif cls is ThrowFrame:
            if n:
                raise ModeError("call-by-name contexts have no throw frames")
            if d and t.ann is not None:
                raise ModeError("delimited throws take no result annotation")
            stack += [t.ctx, t.outer]
        else:
            raise ModeError(f"unexpected node {t!r}")
