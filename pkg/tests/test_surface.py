import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ABORTIVE_CBN, ABORTIVE_CBV, DELIM_CBN, DELIM_CBV, GOLDEN, U, a, idU, terms
from fctl.generate import GenConfig, gen_typed_program
from fctl.reduction import Program, trace
from fctl.surface import (
    ParseError, emit_trace, format_source, parse, parse_context, parse_source,
    parse_type, pretty, read_header, tokenize,
)
from fctl.syntax import (
    ALL_MODES, AppFrame, Arrow, ArrowD, Callcc, CompTriple, ContD, ContS,
    ForallD, FunFrame, HOLE, Lam, ModeError, Reset, Shift, ThrowFrame,
    ThrowReified, ThrowVar, TyAppFrame, TyLam, TyVar, Var, alpha_eq,
)

x = Var("x")


def test_parse_identity():
    assert parse("tfun a -> fun (x:a) -> x", ABORTIVE_CBV) == TyLam("a", Lam("x", a, x))


def test_parse_callcc():
    t = parse("callcc (k : (forall a. a -> a) cont) -> throw[forall a. a -> a] k "
              "(tfun a -> fun (x:a) -> x)", ABORTIVE_CBV)
    assert t == Callcc("k", ContS(U), ThrowVar("k", U, idU))


def test_parse_shift_both_cont_spellings():
    Ud = "(forall a. a -> a @ [a, a] @ [a, a])"
    t1 = parse(f"reset (shift (k : {Ud} cont {Ud}) -> tfun a -> fun (x:a) -> x)", DELIM_CBV)
    t2 = parse(f"reset (shift (k : ({Ud}, {Ud}) cont) -> tfun a -> fun (x:a) -> x)", DELIM_CBV)
    assert t1 == t2
    assert type(t1) is Reset and type(t1.body) is Shift
    assert type(t1.body.ann) is ContD


def test_parse_delimited_types():
    assert parse_type("a -> a @ [a, a]", DELIM_CBV) == ArrowD(a, a, a, a)
    assert parse_type("forall a. a @ [a, a]", DELIM_CBV) == ForallD("a", a, a, a)
    cbn = parse_type("{a, a, a} -> a @ [a, a]", DELIM_CBN)
    assert cbn == ArrowD(CompTriple(a, a, a), a, a, a)


def test_arrow_is_right_associative():
    b = TyVar("b")
    assert parse_type("a -> b -> a", ABORTIVE_CBV) == Arrow(a, Arrow(b, a))


def test_application_is_left_associative():
    t = parse("fun (x:a) -> x x x", ABORTIVE_CBV)
    assert pretty(t) == "fun (x:a) -> x x x"
    assert t.body.fn.fn == x


def test_pretty_examples():
    assert pretty(TyLam("a", Lam("x", a, x))) == "tfun a -> fun (x:a) -> x"
    assert pretty(Arrow(U, U)) == "(forall a. a -> a) -> forall a. a -> a"
    assert pretty(HOLE) == "[]"


def test_contexts_roundtrip():
    E = AppFrame(idU, TyAppFrame(U, FunFrame(Lam("x", U, x), ThrowFrame(HOLE, HOLE, U))))
    assert parse_context(pretty(E), ABORTIVE_CBV) == E


def test_reified_contexts_only_when_allowed():
    text = "throw[forall a. a -> a] ^[] tfun a -> fun (x:a) -> x"
    assert parse(text, ABORTIVE_CBV, allow_reified=True) == ThrowReified(HOLE, idU, U)
    with pytest.raises(ParseError):
        parse(text, ABORTIVE_CBV)


@pytest.mark.parametrize("text, line, col", [
    ("fun (x:a) ->", 1, 13),
    ("fun (x:a)\n  -> x $", 2, 8),
    ("tfun a -> (x", 1, 13),
])
def test_parse_errors_carry_positions(text, line, col):
    with pytest.raises(ParseError) as exc:
        parse(text, ABORTIVE_CBV)
    assert (exc.value.line, exc.value.col) == (line, col)


def test_mode_errors():
    with pytest.raises(ModeError):
        parse("callcc (k : (a, a) cont) -> x", DELIM_CBV)
    with pytest.raises(ModeError):
        parse("throw k x", ABORTIVE_CBV)
    with pytest.raises((ModeError, ParseError)):
        parse("reset x", ABORTIVE_CBV)


def test_comments_are_skipped():
    kinds = [t.kind for t in tokenize("# hello\nx # trailing\n")]
    assert kinds == ["ident", "eof"]


def test_header():
    assert read_header("#mode delimited cbn\nx") == DELIM_CBN
    assert read_header("x") is None
    with pytest.raises(ParseError):
        parse_source("tfun a -> fun (x:a) -> x")
    mode, t = parse_source("#mode abortive cbn\ntfun a -> fun (x:a) -> x")
    assert mode == ABORTIVE_CBN and t == idU
    mode, _ = parse_source("#mode abortive cbn\ntfun a -> fun (x:a) -> x", ABORTIVE_CBV)
    assert mode == ABORTIVE_CBV


def test_format_source_has_header():
    src = format_source(idU, ABORTIVE_CBV)
    assert src.splitlines()[0] == "#mode abortive cbv"
    assert parse_source(src) == (ABORTIVE_CBV, idU)


def test_trace_of_value_has_single_record():
    recs = json.loads(emit_trace(trace(Program(ABORTIVE_CBV, idU))))
    assert len(recs) == 1
    assert recs[0]["step"] == 0 and recs[0]["rule"] is None and recs[0]["outcome"] == "value"


@pytest.mark.parametrize("name, rules", [
    ("callcc", ["callcc", "throw_v"]),
    ("shift_discard", ["shift"]),
    ("shift_throw", ["shift", "throw_v", "reset"]),
])
def test_golden_traces(name, rules):
    mode, t = parse_source((GOLDEN / f"{name}.fctl").read_text())
    out = emit_trace(trace(Program(mode, t)))
    assert out == (GOLDEN / f"{name}.trace.json").read_text()
    recs = json.loads(out)
    assert [r["rule"] for r in recs[:-1]] == rules
    assert len(recs) == len(rules) + 1


@given(terms)
def test_pretty_parse_roundtrip_raw_terms(t):
    assert alpha_eq(parse(pretty(t), ABORTIVE_CBV), t)


@given(st.sampled_from(ALL_MODES), st.integers(0, 10_000))
def test_roundtrip_generated_programs_and_trace_programs(mode, index):
    p = gen_typed_program(GenConfig(mode, seed=11), index)
    assert alpha_eq(parse(pretty(p.term), mode), p.term)
    for st_ in trace(p).steps[:5]:
        back = parse(pretty(st_.after), mode, allow_reified=True)
        assert alpha_eq(back, st_.after)
