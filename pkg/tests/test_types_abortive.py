import dataclasses

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import ABORTIVE_CBN, ABORTIVE_CBV, U, a, idU
from oracles import alpha_equal, naive_subst_type
from fctl.errors import KINDS, TypingError
from fctl.generate import GenConfig, gen_typed_program, universe
from fctl.reduction import Program, evaluate, trace
from fctl.syntax import (
    App, AppFrame, Arrow, Callcc, ContS, Forall, FunFrame, HOLE, Lam, TyApp,
    TyAppFrame, TyLam, ThrowFrame, ThrowReified, ThrowVar, Var,
    alpha_eq, free_vars, is_value, rename_tylam, subst_term, subst_type, subterms,
)
from fctl.surface import parse
from fctl.types_abortive import (
    answer_type, check_program, check_refined, context_answer, infer_context,
    infer_term,
)

x = Var("x")
callcc_ex = Callcc("k", ContS(U), ThrowVar("k", U, idU))
ABORTIVE = [ABORTIVE_CBV, ABORTIVE_CBN]


def kind_of(fn, *args):
    with pytest.raises(TypingError) as exc:
        fn(*args)
    assert exc.value.kind in KINDS
    return exc.value.kind


def test_identity():
    assert infer_term({}, {}, idU) == U


def test_callcc_throw():
    assert alpha_eq(infer_term({}, {}, callcc_ex), U)


def test_applying_a_forall_is_not_arrow():
    assert kind_of(infer_term, {}, {}, App(idU, idU)) == "not-arrow"


def test_other_rejections():
    assert kind_of(infer_term, {}, {}, x) == "unbound-var"
    assert kind_of(infer_term, {}, {}, TyApp(Lam("x", U, x), U)) == "not-forall"
    assert kind_of(infer_term, {}, {}, App(Lam("x", U, x), Lam("y", a, Var("y")))) == "mismatch"
    assert kind_of(infer_term, {"x": a}, {}, TyLam("a", x)) == "ftv-escape"
    assert kind_of(infer_term, {}, {}, ThrowVar("k", U, idU)) == "unbound-var"


def test_throw_result_is_the_annotation():
    T = Arrow(U, U)
    assert infer_term({}, {"k": ContS(U)}, ThrowVar("k", T, idU)) == T


def test_type_application():
    assert infer_term({}, {}, TyApp(idU, U)) == Arrow(U, U)


def test_infer_context_examples():
    assert infer_context({}, {}, HOLE, hole=U) == ContS(U)
    assert infer_context({}, {}, AppFrame(idU), answer=U) == ContS(Arrow(U, U))
    assert infer_context({}, {}, FunFrame(Lam("x", U, x))) == ContS(U)
    with pytest.raises(TypingError):
        infer_context({}, {}, TyAppFrame(U))  # the hole could be any forall


def test_answer_type_examples():
    assert answer_type(HOLE, U) == U
    assert answer_type(FunFrame(Lam("x", U, x)), U) == U
    assert alpha_eq(answer_type(TyAppFrame(U), U), Arrow(U, U))


def test_context_answer_agrees_with_plug_route():
    E = FunFrame(Lam("x", U, x), TyAppFrame(U, AppFrame(idU)))
    assert alpha_eq(context_answer(E, U), answer_type(E, U))
    assert alpha_eq(context_answer(E, U), U)


def test_throw_frame_composes():
    E = ThrowFrame(FunFrame(Lam("x", U, x)), HOLE, U)
    assert context_answer(E, U) == U


def test_check_program_examples():
    assert check_program(idU) == U
    assert kind_of(check_program, x) == "unbound-var"
    assert kind_of(check_program, ThrowReified(HOLE, idU, U)) == "not-plain"
    assert kind_of(check_program, Lam("x", a, x)) == "not-closed"


def test_refined_discipline_on_callcc_trace():
    tr = trace(Program(ABORTIVE_CBV, callcc_ex))
    for st_ in tr.steps:
        check_refined(st_.after, U)


def test_refined_discipline_rejects_foreign_answer():
    # the reified context answers U -> U, while the program has type U
    bad = ThrowReified(TyAppFrame(U), idU, U)
    with pytest.raises(TypingError):
        check_refined(bad, U)
    assert infer_term({}, {}, bad) == U  # the plain typing rules accept it


def test_clashing_type_binder_is_checked_up_to_renaming():
    t = TyLam("a", x)
    assert kind_of(infer_term, {"x": a}, {}, t) == "ftv-escape"
    got = infer_term({"x": a}, {}, t, rename_binders=True)
    assert type(got) is Forall and got.body == a and got.var != "a"
    renamed = rename_tylam(TyLam("a", Lam("y", a, Var("y"))), {"a"})
    assert renamed.var != "a" and alpha_equal(renamed, TyLam("a", Lam("y", a, Var("y"))))


# A captured context containing "tfun aN" is substituted under another binder
# named aN; the intermediate program is well typed only up to renaming.
CAPTURE_UNDER_SAME_NAME = [
    "(tfun a1 -> fun (x15:forall a. a -> a) -> tfun a9 -> fun (x21:a9) -> x15 [a9])"
    " [(forall a. a -> a) -> forall a. a -> a -> a]"
    " (callcc (k24 : (forall a. a -> a) cont) -> tfun a10 ->"
    " throw[a10 -> a10] k24 tfun a14 -> fun (x23:a14) -> x23)",
    "(fun (x48:forall a. a -> a) -> tfun a22 -> fun (x52:a22) -> x48 [a22])"
    " (callcc (k61 : (forall a. a -> a) cont) -> tfun a23 ->"
    " (throw[(forall a. a -> a) -> a23 -> a23] k61 tfun a26 -> fun (x53:a26) -> x53)"
    " (tfun a28 -> fun (x54:a28) -> x54))",
]


@pytest.mark.parametrize("src", CAPTURE_UNDER_SAME_NAME)
def test_preservation_when_a_context_lands_under_a_same_named_binder(src):
    p = Program(ABORTIVE_CBV, parse(src, ABORTIVE_CBV))
    S = check_program(p.term)
    tr = trace(p)
    assert tr.outcome == "value"
    for st_ in tr.steps:
        check_refined(st_.after, S)


# -- properties over generated programs ---------------------------------------

progs = st.builds(lambda m, i: gen_typed_program(GenConfig(m, seed=5), i),
                  st.sampled_from(ABORTIVE), st.integers(0, 100_000))


@given(progs, st.sampled_from(["z", "w"]), st.sampled_from(universe(ABORTIVE_CBV, 2)))
def test_weakening(p, name, S):
    T = check_program(p.term, p.mode)
    assert alpha_eq(infer_term({name: S}, {"kk": ContS(S)}, p.term), T)


def _closed_values(t):
    return [s for s in subterms(t) if is_value(s) and not any(free_vars(s))]


def _abstract(t, target, name):
    """``t`` with the first occurrence (by identity) of ``target`` replaced by a variable."""
    if t is target:
        return Var(name), True
    for field in ("fn", "arg", "body"):
        child = getattr(t, field, None)
        if child is not None:
            new, hit = _abstract(child, target, name)
            if hit:
                return dataclasses.replace(t, **{field: new}), True
    return t, False


@given(progs, st.data())
def test_substitution_closure(p, data):
    T = check_program(p.term, p.mode)
    vals = _closed_values(p.term)
    assume(vals)
    v = data.draw(st.sampled_from(vals))
    S = infer_term({}, {}, v)
    t, hit = _abstract(p.term, v, "zz")
    assert hit
    assert alpha_eq(infer_term({"zz": S}, {}, t), T)
    back = subst_term(t, "zz", v)
    assert alpha_eq(back, p.term)
    assert alpha_eq(infer_term({}, {}, back), T)


@given(progs, st.sampled_from(universe(ABORTIVE_CBV, 2)))
def test_type_substitution_commutes(p, V):
    for s in subterms(p.term):
        if type(s) is TyLam and not free_vars(s).terms and not free_vars(s).conts:
            B = infer_term({}, {}, s.body)
            got = infer_term({}, {}, subst_type(s.body, s.var, V))
            assert alpha_equal(got, naive_subst_type(B, s.var, V))


@given(progs)
def test_refined_preservation_along_traces(p):
    S = check_program(p.term, p.mode)
    for st_ in trace(p).steps:
        check_refined(st_.after, S, p.mode)


# -- negative controls: every stuck shape is ill typed ------------------------

STUCK_WITNESSES = [
    App(idU, idU),                               # type abstraction applied to a term
    TyApp(Lam("x", U, x), U),                    # term abstraction applied to a type
    x,                                           # free variable
    ThrowVar("k", U, idU),                       # throw to a free continuation
    App(App(Lam("x", U, x), idU), idU),          # result of beta is not a function
]


@pytest.mark.parametrize("t", STUCK_WITNESSES)
@pytest.mark.parametrize("mode", ABORTIVE)
def test_stuck_witnesses_are_rejected(t, mode):
    assert evaluate(Program(mode, t)).outcome == "stuck"
    with pytest.raises(TypingError):
        check_program(t, mode)
