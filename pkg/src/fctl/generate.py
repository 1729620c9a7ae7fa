"""Goal-directed generation of well-typed programs.

Generation runs the typing rules backwards: given a goal type (a judgment
triple in the delimited calculi) pick a rule whose conclusion matches, then
generate the premises.  Choices that dead-end are retried with another rule,
up to a fixed number of attempts per node.

The calculi have no base types, so goals are drawn from a small universe of
closed polymorphic types.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Optional

from .syntax import (
    App, Arrow, ArrowD, CalcMode, Callcc, CompTriple, ContD, ContS, Forall,
    ForallD, Lam, Reset, Shift, ThrowVar, TyApp, TyLam, TyVar, Var, alpha_eq,
    ftv, subst_type,
)
from .reduction import Program

VALUE_DEPTH = 8
ATTEMPTS_PER_NODE = 200
NODE_BUDGET = 20_000


_WEIGHTS = {"intro": 2.0, "app": 3.0, "tyapp": 1.0}


class GenerationExhausted(Exception):
    pass


class _Fail(Exception):
    pass


@dataclass(frozen=True)
class GenConfig:
    mode: CalcMode
    seed: int = 0
    max_depth: int = 8
    max_type_depth: int = 2
    control_prob: float = 0.3
    count: int = 100


# --------------------------------------------------------------------------
# type universes

_a = TyVar("a")


def _abortive_base():
    ident = Forall("a", Arrow(_a, _a))
    pick = Forall("a", Arrow(_a, Arrow(_a, _a)))
    return [ident, pick]


def _delimited_base(cbn: bool):
    def arr(dom, cod):
        if cbn:
            dom = CompTriple(dom, _a, _a)
        return ArrowD(dom, cod, _a, _a)

    ident = ForallD("a", arr(_a, _a), _a, _a)
    pick = ForallD("a", arr(_a, arr(_a, _a)), _a, _a)
    return [ident, pick]


def universe(mode: CalcMode, max_type_depth: int) -> list:
    """Closed goal types: the base polymorphic types and arrows between them."""
    if mode.delimited:
        base = _delimited_base(mode.cbn)
    else:
        base = _abortive_base()
    out = list(base)
    if max_type_depth >= 2:
        for s in base:
            for t in base:
                if mode.delimited:
                    dom = CompTriple(s, t, t) if mode.cbn else s
                    out.append(ArrowD(dom, t, s, s))
                    out.append(ArrowD(dom, s, t, t))
                else:
                    out.append(Arrow(s, t))
    return out


# --------------------------------------------------------------------------
# generator


class _Gen:
    def __init__(self, cfg: GenConfig, rng: random.Random):
        self.cfg = cfg
        self.rng = rng
        self.mode = cfg.mode
        self.universe = universe(cfg.mode, cfg.max_type_depth)
        self.poly = [t for t in self.universe if isinstance(t, (Forall, ForallD))]
        self.nodes = 0
        self.names = {"x": 0, "k": 0, "a": 0}
        # below the depth of the smallest closed program the depth bound
        # cannot be met; fall back to building a closed value of the goal type
        self.values_only = cfg.max_depth < self.MIN_DEPTH

    def fresh(self, base: str) -> str:
        self.names[base] += 1
        return f"{base}{self.names[base]}"

    def tick(self):
        self.nodes += 1
        if self.nodes > NODE_BUDGET:
            raise GenerationExhausted("node budget exceeded")

    def control_first(self) -> bool:
        return self.rng.random() < self.cfg.control_prob

    def run(self, options: list, d: int):
        """Try ``(kind, thunk)`` options in a weighted random order.

        With probability ``control_prob`` control constructs go first;
        otherwise they compete with the rest at a low weight.  Leaves are
        unlikely while plenty of depth remains, which keeps terms from
        collapsing to a single variable.
        """
        rng = self.rng
        control_first = self.control_first()
        if self.values_only:
            options = [o for o in options if o[0] in ("leaf", "intro")]
        elif self.cfg.control_prob <= 0:
            options = [o for o in options if o[0] not in ("control", "throw")]
        keyed = []
        for kind, thunk in options:
            if kind == "control":
                w = 1000.0 if control_first else 0.5
            elif kind == "throw":
                w = 3000.0 if control_first else 2.0
            elif kind == "leaf":
                w = 4.0 if d <= 2 else 0.4
            else:
                w = _WEIGHTS.get(kind, 1.0)
            keyed.append((rng.random() ** (1.0 / w), thunk))
        keyed.sort(key=lambda kv: -kv[0])
        for _, thunk in keyed[:ATTEMPTS_PER_NODE]:
            try:
                return thunk()
            except _Fail:
                continue
        raise _Fail()

    def some_type(self, G: dict, extra=()) -> object:
        pool = list(self.universe) + list(extra)
        if self.mode.delimited and self.mode.cbn:
            pool += [ty.ty for ty in G.values()]
        else:
            pool += list(G.values())
        return self.rng.choice(pool)

    def rename_forall(self, ty, env_ftv):
        """Instantiate a forall's binder with a name fresh for this program."""
        name = self.fresh("a")
        while name in env_ftv:
            name = self.fresh("a")
        return name, {ty.var: TyVar(name)}


class _AbortiveGen(_Gen):
    MIN_DEPTH = 3  # tfun a -> fun (x:a) -> x

    def program(self) -> Program:
        T = self.rng.choice(self.universe)
        depth = VALUE_DEPTH if self.values_only else self.cfg.max_depth
        return Program(self.mode, self.term({}, {}, T, depth))

    def term(self, G: dict, D: dict, T, d: int):
        self.tick()
        if d <= 0:
            raise _Fail()
        opts = []
        for x, ty in G.items():
            if alpha_eq(ty, T):
                opts.append(("leaf", lambda x=x: Var(x)))
        if d >= 2:
            if isinstance(T, Arrow):
                opts.append(("intro", lambda: self.lam(G, D, T, d)))
            if isinstance(T, Forall):
                opts.append(("intro", lambda: self.tylam(G, D, T, d)))
            opts.append(("app", lambda: self.app(G, D, T, d)))
            opts.append(("tyapp", lambda: self.tyapp_instance(G, D, T, d)))
            opts.append(("control", lambda: self.callcc(G, D, T, d)))
            for k, c in D.items():
                opts.append(("throw", lambda k=k, c=c: ThrowVar(k, T, self.term(G, D, c.hole, d - 1))))
        if d >= 3:
            opts.append(("tyapp", lambda: self.tyapp_vacuous(G, D, T, d)))
        return self.run(opts, d)

    def lam(self, G, D, T, d):
        x = self.fresh("x")
        G2 = dict(G)
        G2[x] = T.dom
        return Lam(x, T.dom, self.term(G2, D, T.cod, d - 1))

    def tylam(self, G, D, T, d):
        env = _env_ftv(G, D)
        name, sub = self.rename_forall(T, env)
        return TyLam(name, self.term(G, D, subst_type(T.body, T.var, sub[T.var]), d - 1))

    def app(self, G, D, T, d):
        S = self.some_type(G)
        fn = self.term(G, D, Arrow(S, T), d - 1)
        return App(fn, self.term(G, D, S, d - 1))

    def tyapp_instance(self, G, D, T, d):
        for P in self.rng.sample(self.poly, len(self.poly)):
            V = _instance_arg(P.body, P.var, T)
            if V is not None and alpha_eq(subst_type(P.body, P.var, V), T):
                return TyApp(self.term(G, D, P, d - 1), V)
        raise _Fail()

    def tyapp_vacuous(self, G, D, T, d):
        env = _env_ftv(G, D) | ftv(T)
        b = self.fresh("a")
        while b in env:
            b = self.fresh("a")
        V = self.some_type(G)
        return TyApp(TyLam(b, self.term(G, D, T, d - 2)), V)

    def callcc(self, G, D, T, d):
        k = self.fresh("k")
        D2 = dict(D)
        D2[k] = ContS(T)
        return Callcc(k, ContS(T), self.term(G, D2, T, d - 1))


class _DelimitedGen(_Gen):
    MIN_DEPTH = 4  # reset (tfun a -> fun (x:a) -> x)

    def program(self) -> Program:
        S = self.rng.choice(self.universe)
        if self.values_only:
            V, depth = S, VALUE_DEPTH
        elif self.cfg.control_prob <= 0:
            # without control effects the body is pure, so its answer types agree
            V, depth = S, self.cfg.max_depth - 1
        else:
            V, depth = self.rng.choice(self.universe + [S]), self.cfg.max_depth - 1
        body = self.term({}, {}, (V, V, S), depth)
        return Program(self.mode, Reset(body))

    def answer_type(self, G, goal):
        return self.some_type(G, extra=goal * 2)

    def term(self, G: dict, D: dict, goal: tuple, d: int):
        self.tick()
        if d <= 0:
            raise _Fail()
        S, T, U = goal
        pure = alpha_eq(T, U)
        cbn = self.mode.cbn
        opts = []
        for x, ty in G.items():
            if cbn:
                if alpha_eq(ty, CompTriple(S, T, U)):
                    opts.append(("leaf", lambda x=x: Var(x)))
            elif pure and alpha_eq(ty, S):
                opts.append(("leaf", lambda x=x: Var(x)))
        if d >= 2:
            if pure and isinstance(S, ArrowD):
                opts.append(("intro", lambda: self.lam(G, D, S, d)))
            if pure and isinstance(S, ForallD):
                opts.append(("intro", lambda: self.tylam(G, D, S, d)))
            if pure:
                opts.append(("control", lambda: self.reset(G, D, S, d)))
            opts.append(("app", lambda: self.app(G, D, goal, d)))
            opts.append(("tyapp", lambda: self.tyapp_instance(G, D, goal, d)))
            opts.append(("control", lambda: self.shift(G, D, goal, d)))
            for k, c in D.items():
                if not alpha_eq(c.answer, S):
                    continue
                if cbn:
                    if pure:
                        opts.append(("throw", lambda k=k, c=c: ThrowVar(
                            k, None, self.term(G, D, (c.hole, c.answer, c.answer), d - 1))))
                else:
                    opts.append(("throw", lambda k=k, c=c: ThrowVar(
                        k, None, self.term(G, D, (c.hole, T, U), d - 1))))
        if d >= 3:
            opts.append(("tyapp", lambda: self.tyapp_vacuous(G, D, goal, d)))
        return self.run(opts, d)

    def lam(self, G, D, S, d):
        x = self.fresh("x")
        G2 = dict(G)
        G2[x] = S.dom
        return Lam(x, S.dom, self.term(G2, D, (S.cod, S.ans, S.meta), d - 1))

    def tylam(self, G, D, S, d):
        name, sub = self.rename_forall(S, _env_ftv(G, D))
        inner = tuple(subst_type(part, S.var, sub[S.var]) for part in (S.body, S.ans, S.meta))
        return TyLam(name, self.term(G, D, inner, d - 1))

    def reset(self, G, D, S, d):
        V = self.answer_type(G, (S,))
        return Reset(self.term(G, D, (V, V, S), d - 1))

    def shift(self, G, D, goal, d):
        S, T, U = goal
        k = self.fresh("k")
        # answering with T makes ``throw k`` usable directly inside the body
        V = T if self.rng.random() < 0.5 else self.answer_type(G, goal)
        D2 = dict(D)
        D2[k] = ContD(S, T)
        return Shift(k, ContD(S, T), self.term(G, D2, (V, V, U), d - 1))

    def app(self, G, D, goal, d):
        S, T, U = goal
        rng = self.rng
        A = self.some_type(G)
        if self.mode.cbn:
            # fn : (A' -> S @ [T, X]) with Tin X, meta U; arg : (A, B, C)
            X = U if rng.random() < 0.8 else self.answer_type(G, goal)
            B = self.answer_type(G, goal)
            C = B if rng.random() < 0.8 else self.answer_type(G, goal)
            dom = CompTriple(A, B, C)
            fn = self.term(G, D, (ArrowD(dom, S, T, X), X, U), d - 1)
            return App(fn, self.term(G, D, (A, B, C), d - 1))
        X = U if rng.random() < 0.8 else self.answer_type(G, goal)
        W = X if rng.random() < 0.8 else self.answer_type(G, goal)
        fn = self.term(G, D, (ArrowD(A, S, T, W), X, U), d - 1)
        return App(fn, self.term(G, D, (A, W, X), d - 1))

    def tyapp_instance(self, G, D, goal, d):
        S, T, W = goal
        for P in self.rng.sample(self.poly, len(self.poly)):
            V = _instance_arg(P.body, P.var, S)
            if V is None:
                continue
            sub = lambda ty: subst_type(ty, P.var, V)  # noqa: E731
            if alpha_eq(sub(P.body), S) and alpha_eq(sub(P.ans), T):
                return TyApp(self.term(G, D, (P, sub(P.meta), W), d - 1), V)
        raise _Fail()

    def tyapp_vacuous(self, G, D, goal, d):
        S, T, U = goal
        env = _env_ftv(G, D) | ftv(S) | ftv(T) | ftv(U)
        b = self.fresh("a")
        while b in env:
            b = self.fresh("a")
        V = self.some_type(G)
        return TyApp(TyLam(b, self.term(G, D, goal, d - 2)), V)


def _env_ftv(G: dict, D: dict) -> frozenset:
    out = frozenset()
    for ty in G.values():
        out |= ftv(ty)
    for ty in D.values():
        out |= ftv(ty)
    return out


def _instance_arg(body, var: str, target):
    """A type V with body[V/var] possibly equal to target, found by matching
    the first occurrence of ``var`` in the argument position."""
    b, t = body, target
    while True:
        if isinstance(b, TyVar):
            return t if b.name == var else None
        if isinstance(b, (Arrow, ArrowD)) and type(t) is type(b):
            bd, td = b.dom, t.dom
            if isinstance(bd, CompTriple) and isinstance(td, CompTriple):
                bd, td = bd.ty, td.ty
            if isinstance(bd, TyVar) and bd.name == var:
                return td
            b, t = b.cod, t.cod
            continue
        return None


def _make(cfg: GenConfig, rng: random.Random) -> _Gen:
    if cfg.mode.delimited:
        return _DelimitedGen(cfg, rng)
    return _AbortiveGen(cfg, rng)


def gen_typed_program(cfg: GenConfig, index: int = 0, max_retries: int = 50) -> Program:
    """Program number ``index`` of the stream determined by ``cfg``.

    Each attempt uses a seed derived from ``(cfg.seed, index, attempt)``, so
    the stream is reproducible and independent of how many programs are
    drawn before it.
    """
    for attempt in range(max_retries):
        rng = random.Random(f"{cfg.seed}:{index}:{attempt}")
        gen = _make(cfg, rng)
        try:
            return gen.program()
        except (_Fail, GenerationExhausted):
            continue
    raise GenerationExhausted(f"no program after {max_retries} attempts (index {index})")


def gen_programs(cfg: GenConfig):
    for i in range(cfg.count):
        yield gen_typed_program(cfg, i)


def with_mode(cfg: GenConfig, mode: CalcMode) -> GenConfig:
    return replace(cfg, mode=mode)
