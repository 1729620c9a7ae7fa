"""Concrete syntax for ``.fctl`` files: lexer, parser, pretty-printer and JSON.

Grammar summary (``t`` terms, ``T`` types)::

    t ::= x | fun (x:T) -> t | t t | tfun a -> t | t [T] | reset t
        | callcc (k : T cont) -> t          | throw[T] k t        (abortive)
        | shift (k : (S, T) cont) -> t      | throw k t           (delimited)
        | throw[T] ^E t | throw ^E t        (reified contexts, trace files only)
    T ::= a | T -> T | forall a. T                       (abortive)
        | T -> T @ [T, T] | forall a. T @ [T, T] | {T, T, T}   (delimited)
    E ::= [] | [frame; ...]      frame ::= [] t | [] [T] | (fun ...) [] | throw ^E []

A source file starts with a header line such as ``#mode delimited cbv``.
"""

from __future__ import annotations

import json
import re
from typing import NamedTuple, Optional

from .syntax import (
    App, AppFrame, Arrow, ArrowD, CalcMode, Callcc, CompTriple, ContD, ContS,
    EvalContext, Forall, ForallD, FunFrame, HOLE, Hole, Lam, Meta, NegS, Reset,
    Shift, Term, ThrowFrame, ThrowReified, ThrowVar, TyApp, TyAppFrame, TyLam,
    TyVar, Var, check_mode,
)

KEYWORDS = frozenset({"fun", "tfun", "forall", "callcc", "shift", "reset",
                      "throw", "cont", "not"})

_TOKEN = re.compile(r"""
    [ \t\r\n]*
    (?:
        (?P<comment>\#[^\n]*)
      | (?P<arrow>->)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
      | (?P<meta>\?\d+)
      | (?P<sym>[()\[\]{}:.,@;^])
      | (?P<eof>$)
    )
""", re.VERBOSE)


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg = msg
        self.line = line
        self.col = col


class Token(NamedTuple):
    kind: str
    text: str
    pos: int


def line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    return line, pos - (text.rfind("\n", 0, pos) + 1) + 1


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    match = _TOKEN.match
    append = out.append
    while True:
        m = match(text, pos)
        if m is None:
            start = len(text) - len(text[pos:].lstrip())
            line, col = line_col(text, start)
            raise ParseError(f"unexpected character {text[start]!r}", line, col)
        kind = m.lastgroup
        s = m.group(kind)
        if kind == "eof":
            append(Token("eof", "", m.start(kind)))
            return out
        if kind != "comment":
            start = m.start(kind)
            if kind == "ident" and s in KEYWORDS:
                kind = "kw"
            append(Token(kind, s, start))
        pos = m.end()


class _Parser:
    def __init__(self, text: str, mode: CalcMode, allow_reified: bool):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.mode = mode
        self.allow_reified = allow_reified

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("sym", "kw", "arrow")

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        line, col = line_col(self.text, tok.pos)
        raise ParseError(f"{msg} (found {found!r})", line, col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self, what: str) -> str:
        t = self.tok
        if t.kind != "ident":
            self.error(f"expected {what}")
        self.i += 1
        return t.text

    def done(self):
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")

    # -- types

    def type_(self):
        t = self.tok
        if self.at("forall"):
            self.i += 1
            a = self.ident("type variable")
            self.expect(".")
            body = self.type_()
            if self.mode.delimited:
                ans, meta = self.suffix()
                return ForallD(a, body, ans, meta)
            return Forall(a, body)
        dom = self.type_atom()
        if self.at("->"):
            self.i += 1
            cod = self.type_()
            if self.mode.delimited:
                ans, meta = self.suffix()
                return ArrowD(dom, cod, ans, meta)
            if isinstance(dom, CompTriple):
                self.error("computation triples only appear in delimited cbn", t)
            return Arrow(dom, cod)
        if isinstance(dom, CompTriple):
            self.error("a computation triple is not a term type", t)
        return dom

    def suffix(self):
        if not self.at("@"):
            self.error("delimited arrow and forall types need '@ [T, U]'")
        self.i += 1
        self.expect("[")
        ans = self.type_()
        self.expect(",")
        meta = self.type_()
        self.expect("]")
        return ans, meta

    def type_atom(self):
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            return TyVar(t.text)
        if t.kind == "meta":
            self.i += 1
            return Meta(int(t.text[1:]))
        if self.at("("):
            self.i += 1
            ty = self.type_()
            self.expect(")")
            return ty
        if self.at("{"):
            self.i += 1
            a = self.type_()
            self.expect(",")
            b = self.type_()
            self.expect(",")
            c = self.type_()
            self.expect("}")
            return CompTriple(a, b, c)
        self.error("expected a type")

    def binder_type(self):
        """Lambda binder annotation: a type, or a triple in delimited cbn."""
        if self.at("{"):
            save = self.i
            trip = self.type_atom()
            if not self.at("->"):
                return trip
            self.i = save
        return self.type_()

    def cont_type(self):
        start = self.tok
        if self.mode.delimited and self.at("("):
            save = self.i
            self.i += 1
            first = self.type_()
            if self.at(","):
                self.i += 1
                second = self.type_()
                self.expect(")")
                self.expect("cont")
                return ContD(first, second)
            self.i = save
        hole = self.type_()
        self.expect("cont")
        if self.mode.delimited:
            if self.at(")"):
                self.error("delimited continuation types are written '(S, T) cont'", start)
            return ContD(hole, self.type_())
        return ContS(hole)

    def meta_type(self):
        self.expect("not")
        return NegS(self.type_())

    # -- terms

    def term(self) -> Term:
        t = self.tok
        if self.at("fun"):
            self.i += 1
            self.expect("(")
            x = self.ident("term variable")
            self.expect(":")
            ann = self.binder_type()
            self.expect(")")
            self.expect("->")
            return Lam(x, ann, self.term())
        if self.at("tfun"):
            self.i += 1
            a = self.ident("type variable")
            self.expect("->")
            return TyLam(a, self.term())
        if self.at("callcc") or self.at("shift"):
            self.i += 1
            self.expect("(")
            k = self.ident("continuation variable")
            self.expect(":")
            ann = self.cont_type()
            self.expect(")")
            self.expect("->")
            body = self.term()
            return Callcc(k, ann, body) if t.text == "callcc" else Shift(k, ann, body)
        if self.at("reset"):
            self.i += 1
            return Reset(self.term())
        if self.at("throw"):
            self.i += 1
            ann = None
            if self.at("["):
                self.i += 1
                ann = self.type_()
                self.expect("]")
            if self.at("^"):
                if not self.allow_reified:
                    self.error("reified contexts are not allowed in source programs")
                self.i += 1
                ctx = self.context()
                return ThrowReified(ctx, self.term(), ann)
            k = self.ident("continuation variable")
            return ThrowVar(k, ann, self.term())
        return self.application()

    def application(self) -> Term:
        head = self.atom()
        while True:
            if self.at("["):
                if self.peek().text == "]":
                    break  # a hole: we are inside a frame
                self.i += 1
                ty = self.type_()
                self.expect("]")
                head = TyApp(head, ty)
            elif self.tok.kind == "ident" or self.at("("):
                head = App(head, self.atom())
            else:
                break
        return head

    def atom(self) -> Term:
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            return Var(t.text)
        if self.at("("):
            self.i += 1
            body = self.term()
            self.expect(")")
            return body
        self.error("expected a term")

    # -- contexts

    def context(self) -> EvalContext:
        self.expect("[")
        if self.at("]"):
            self.i += 1
            return HOLE
        frames = [self.frame()]
        while self.at(";"):
            self.i += 1
            frames.append(self.frame())
        self.expect("]")
        out: EvalContext = HOLE
        for f in reversed(frames):
            out = f(out)
        return out

    def hole(self):
        self.expect("[")
        self.expect("]")

    def frame(self):
        if self.at("["):
            self.hole()
            if self.at("["):
                self.i += 1
                ty = self.type_()
                self.expect("]")
                return lambda outer: TyAppFrame(ty, outer)
            arg = self.atom()
            return lambda outer: AppFrame(arg, outer)
        if self.at("throw"):
            self.i += 1
            ann = None
            if self.at("["):
                self.i += 1
                ann = self.type_()
                self.expect("]")
            self.expect("^")
            ctx = self.context()
            self.hole()
            return lambda outer: ThrowFrame(ctx, outer, ann)
        start = self.tok
        fn = self.atom()
        if not isinstance(fn, Lam):
            self.error("a function frame needs a lambda", start)
        self.hole()
        return lambda outer: FunFrame(fn, outer)


def parse(text: str, mode: CalcMode, allow_reified: bool = False) -> Term:
    """Parse a term and validate it against ``mode``."""
    p = _Parser(text, mode, allow_reified)
    t = p.term()
    p.done()
    check_mode(t, mode)
    return t


def parse_type(text: str, mode: CalcMode):
    p = _Parser(text, mode, False)
    ty = p.type_()
    p.done()
    return ty


def parse_cont_type(text: str, mode: CalcMode):
    p = _Parser(text, mode, False)
    ty = p.cont_type()
    p.done()
    return ty


def parse_context(text: str, mode: CalcMode) -> EvalContext:
    p = _Parser(text, mode, True)
    e = p.context()
    p.done()
    check_mode(e, mode)
    return e


_HEADER = re.compile(r"^\s*#mode\s+(\w+)\s+(\w+)\s*$")


def read_header(text: str) -> Optional[CalcMode]:
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _HEADER.match(line)
        if m is None:
            return None
        try:
            return CalcMode.of(m.group(1), m.group(2))
        except ValueError:
            raise ParseError(f"unknown mode {m.group(1)} {m.group(2)}", 1, 1)
    return None


def parse_source(text: str, mode: Optional[CalcMode] = None,
                 allow_reified: bool = False) -> tuple[CalcMode, Term]:
    """Parse a ``.fctl`` file; ``mode`` overrides the header when given."""
    header = read_header(text)
    mode = mode or header
    if mode is None:
        raise ParseError("missing '#mode <abortive|delimited> <cbv|cbn>' header", 1, 1)
    return mode, parse(text, mode, allow_reified)


# --------------------------------------------------------------------------
# pretty-printing


def pretty_type(ty) -> str:
    if isinstance(ty, TyVar):
        return ty.name
    if isinstance(ty, Meta):
        return f"?{ty.id}"
    if isinstance(ty, Arrow):
        return f"{_type_dom(ty.dom)} -> {pretty_type(ty.cod)}"
    if isinstance(ty, Forall):
        return f"forall {ty.var}. {pretty_type(ty.body)}"
    if isinstance(ty, ArrowD):
        return (f"{_type_dom(ty.dom)} -> {pretty_type(ty.cod)} "
                f"@ [{pretty_type(ty.ans)}, {pretty_type(ty.meta)}]")
    if isinstance(ty, ForallD):
        return (f"forall {ty.var}. {pretty_type(ty.body)} "
                f"@ [{pretty_type(ty.ans)}, {pretty_type(ty.meta)}]")
    if isinstance(ty, CompTriple):
        return f"{{{pretty_type(ty.ty)}, {pretty_type(ty.ans)}, {pretty_type(ty.meta)}}}"
    if isinstance(ty, ContS):
        return f"{_type_dom(ty.hole)} cont"
    if isinstance(ty, ContD):
        return f"({pretty_type(ty.hole)}, {pretty_type(ty.answer)}) cont"
    if isinstance(ty, NegS):
        return f"not {_type_dom(ty.hole)}"
    raise TypeError(f"not a type: {ty!r}")


def _type_dom(ty) -> str:
    s = pretty_type(ty)
    if isinstance(ty, (Arrow, Forall, ArrowD, ForallD)):
        return f"({s})"
    return s


def _ann(ann) -> str:
    return "" if ann is None else f"[{pretty_type(ann)}]"


def _pretty(t: Term, prec: int) -> str:
    # prec 0: anywhere; 1: function position; 2: argument position
    cls = type(t)
    if cls is Var:
        return t.name
    if cls is App:
        s = f"{_pretty(t.fn, 1)} {_pretty(t.arg, 2)}"
        return f"({s})" if prec > 1 else s
    if cls is TyApp:
        s = f"{_pretty(t.fn, 1)} [{pretty_type(t.ty)}]"
        return f"({s})" if prec > 1 else s
    if cls is Lam:
        s = f"fun ({t.var}:{pretty_type(t.ann)}) -> {_pretty(t.body, 0)}"
    elif cls is TyLam:
        s = f"tfun {t.var} -> {_pretty(t.body, 0)}"
    elif cls is Callcc:
        s = f"callcc ({t.k} : {pretty_type(t.ann)}) -> {_pretty(t.body, 0)}"
    elif cls is Shift:
        s = f"shift ({t.k} : {pretty_type(t.ann)}) -> {_pretty(t.body, 0)}"
    elif cls is Reset:
        s = f"reset {_pretty(t.body, 0)}"
    elif cls is ThrowVar:
        s = f"throw{_ann(t.ann)} {t.k} {_pretty(t.body, 0)}"
    elif cls is ThrowReified:
        s = f"throw{_ann(t.ann)} ^{pretty_context(t.ctx)} {_pretty(t.body, 0)}"
    else:
        raise TypeError(f"not a term: {t!r}")
    return f"({s})" if prec > 0 else s


def pretty_frame(f: EvalContext) -> str:
    if isinstance(f, AppFrame):
        return f"[] {_pretty(f.arg, 2)}"
    if isinstance(f, TyAppFrame):
        return f"[] [{pretty_type(f.ty)}]"
    if isinstance(f, FunFrame):
        return f"{_pretty(f.fn, 2)} []"
    if isinstance(f, ThrowFrame):
        return f"throw{_ann(f.ann)} ^{pretty_context(f.ctx)} []"
    raise TypeError(f"not a frame: {f!r}")


def pretty_context(e: EvalContext) -> str:
    return "[" + "; ".join(pretty_frame(f) for f in e.frames()) + "]"


def pretty_metacontext(F) -> str:
    if not F:
        return "*"
    return " . ".join(pretty_context(e) for e in F) + " . *"


def pretty(x) -> str:
    """Render a term, type, context or metacontext."""
    if isinstance(x, Term):
        return _pretty(x, 0)
    if isinstance(x, EvalContext):
        return pretty_context(x)
    if isinstance(x, tuple):
        return pretty_metacontext(x)
    return pretty_type(x)


def format_source(t: Term, mode: CalcMode) -> str:
    return f"#mode {mode.calculus.value} {mode.strategy.value}\n{pretty(t)}\n"


# --------------------------------------------------------------------------
# JSON


def frame_json(f: EvalContext) -> dict:
    if isinstance(f, AppFrame):
        return {"frame": "app", "arg": pretty(f.arg)}
    if isinstance(f, TyAppFrame):
        return {"frame": "tyapp", "type": pretty(f.ty)}
    if isinstance(f, FunFrame):
        return {"frame": "fun", "fn": pretty(f.fn)}
    if isinstance(f, ThrowFrame):
        out = {"frame": "throw", "context": context_json(f.ctx)}
        if f.ann is not None:
            out["type"] = pretty(f.ann)
        return out
    raise TypeError(f"not a frame: {f!r}")


def context_json(e: EvalContext) -> list:
    """A context as a list of frame objects, innermost first."""
    return [frame_json(f) for f in e.frames()]


def decomposition_json(d) -> dict:
    out = {
        "kind": d.kind,
        "term": pretty(d.term),
        "rule": d.rule,
        "context": context_json(d.context),
    }
    if d.meta is not None:
        out["metacontext"] = [context_json(e) for e in d.meta]
    return out


def trace_records(trace) -> list[dict]:
    """One record per program in the trace; the last one carries the outcome."""
    records = []
    for i, st in enumerate(trace.steps):
        records.append({
            "step": i,
            "rule": st.rule,
            "program": pretty(st.before),
            "decomposition": decomposition_json(st.decomposition),
            "outcome": None,
        })
    final = {
        "step": len(trace.steps),
        "rule": None,
        "program": pretty(trace.final),
        "decomposition": (decomposition_json(trace.final_decomposition)
                          if trace.final_decomposition is not None else None),
        "outcome": trace.outcome,
    }
    if trace.stuck_reason:
        final["reason"] = trace.stuck_reason
    records.append(final)
    return records


def emit_trace(trace) -> str:
    return json.dumps(trace_records(trace), indent=2, ensure_ascii=False) + "\n"
