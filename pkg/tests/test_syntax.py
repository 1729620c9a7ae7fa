import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import ABORTIVE_CBV, DELIM_CBV, U, a, idU, terms, types
from oracles import _Renamer, alpha_equal, naive_subst, naive_subst_type
from fctl.syntax import (
    App, AppFrame, Arrow, Callcc, ContD, ContS, Forall, FunFrame, HOLE, Lam,
    ModeError, Reset, Shift, ThrowReified, ThrowVar, TyApp, TyAppFrame, TyLam,
    TyVar, Var, alpha_eq, check_mode, extend_outside, free_vars, fresh_name,
    from_frames, ftv, is_closed, is_plain, is_value, subst_cont, subst_term,
    subst_type, term_size,
)

x, y = Var("x"), Var("y")


# -- examples -----------------------------------------------------------------


def test_subst_identity_case():
    assert subst_term(x, "x", idU) == idU


def test_subst_shadowed_binder():
    t = Lam("x", U, x)
    assert subst_term(t, "x", idU) == t


def test_subst_avoids_capture():
    out = subst_term(Lam("y", U, x), "x", y)
    assert type(out) is Lam and out.var != "y"
    assert out.body == y
    assert alpha_equal(out, Lam("w", U, y))
    assert not alpha_equal(out, Lam("y", U, Var("y")))


def test_subst_type_examples():
    assert subst_type(Arrow(a, a), "a", U) == Arrow(U, U)
    assert subst_type(Forall("a", a), "a", U) == Forall("a", a)
    out = subst_type(Forall("b", a), "a", TyVar("b"))
    assert type(out) is Forall and out.var != "b" and out.body == TyVar("b")


def test_subst_cont_examples():
    assert subst_cont(ThrowVar("k", U, x), "k", HOLE) == ThrowReified(HOLE, x, U)
    shadow = Callcc("k", ContS(U), ThrowVar("k", U, x))
    E = AppFrame(idU)
    assert alpha_eq(subst_cont(shadow, "k", E), shadow)
    t = App(ThrowVar("k", U, idU), y)
    assert subst_cont(t, "k", E) == App(ThrowReified(E, idU, U), y)


def test_subst_cont_renames_binders_capturing_context_variables():
    # the context mentions x free; substituting under a binder for x renames it
    E = AppFrame(x)
    t = Lam("x", U, ThrowVar("k", U, Var("x")))
    out = subst_cont(t, "k", E)
    assert out.var != "x"
    assert out.body == ThrowReified(E, Var(out.var), U)


def test_alpha_eq_examples():
    assert alpha_eq(Lam("x", U, x), Lam("y", U, y))
    assert not alpha_eq(Lam("x", U, x), Lam("x", Arrow(U, U), x))
    assert alpha_eq(TyLam("a", Lam("x", a, x)), TyLam("b", Lam("x", TyVar("b"), x)))
    assert not alpha_eq(Lam("x", U, x), Lam("y", U, x))


def test_free_vars_examples():
    assert tuple(free_vars(idU)) == (frozenset(), frozenset(), frozenset())
    assert tuple(free_vars(ThrowVar("k", U, x))) == ({"x"}, frozenset(), {"k"})
    assert tuple(free_vars(Lam("x", a, x))) == (frozenset(), {"a"}, frozenset())


def test_is_plain_examples():
    assert is_plain(idU)
    assert not is_plain(ThrowReified(HOLE, idU, U))
    assert is_plain(Callcc("k", ContS(U), ThrowVar("k", U, idU)))


def test_is_value_examples():
    assert is_value(idU)
    assert not is_value(App(TyApp(idU, U), idU))
    assert not is_value(Reset(idU))


def test_fresh_name_avoids():
    assert fresh_name("x", {"x", "x1"}) not in {"x", "x1"}
    assert fresh_name("x1", {"x1", "x2"}) not in {"x1", "x2"}


def test_contexts_build_inside_out():
    E = from_frames([AppFrame(idU), TyAppFrame(U), FunFrame(Lam("x", U, x))])
    assert E.depth() == 3
    assert type(E) is AppFrame and type(E.outer) is TyAppFrame
    E2 = extend_outside(AppFrame(idU), TyAppFrame(U))
    assert E2 == AppFrame(idU, TyAppFrame(U))


def test_check_mode_rejects_foreign_constructs():
    check_mode(idU, ABORTIVE_CBV)
    with pytest.raises(ModeError):
        check_mode(Reset(idU), ABORTIVE_CBV)
    with pytest.raises(ModeError):
        check_mode(Callcc("k", ContS(U), idU), DELIM_CBV)
    with pytest.raises(ModeError):
        check_mode(ThrowVar("k", None, idU), ABORTIVE_CBV)
    with pytest.raises(ModeError):
        check_mode(Shift("k", ContD(U, U), idU), DELIM_CBV)  # plain forall


# -- properties ---------------------------------------------------------------

names = st.sampled_from(["x", "y", "z"])


@given(terms, names, terms)
def test_subst_agrees_with_renaming_oracle(t, v, s):
    assert alpha_equal(subst_term(t, v, s), naive_subst(t, v, s))


@given(terms, st.sampled_from(["a", "b", "c"]), types)
def test_subst_type_agrees_with_renaming_oracle(t, v, s):
    assert alpha_equal(subst_type(t, v, s), naive_subst_type(t, v, s))


@given(types, st.sampled_from(["a", "b", "c"]), types)
def test_subst_type_on_types_agrees_with_oracle(t, v, s):
    assert alpha_equal(subst_type(t, v, s), naive_subst_type(t, v, s))


@given(terms, terms)
def test_alpha_eq_agrees_with_de_bruijn(t1, t2):
    assert alpha_eq(t1, t2) == alpha_equal(t1, t2)


@given(terms)
def test_alpha_eq_is_reflexive_and_sees_through_renaming(t):
    r = _Renamer().term(t, {}, {}, {})
    assert alpha_eq(t, t)
    assert alpha_eq(t, r) and alpha_eq(r, t)
    r2 = _Renamer().term(r, {}, {}, {})
    assert alpha_eq(r, r2) and alpha_eq(t, r2)


@given(terms, terms, terms)
def test_alpha_eq_symmetric_and_transitive(t1, t2, t3):
    assert alpha_eq(t1, t2) == alpha_eq(t2, t1)
    if alpha_eq(t1, t2) and alpha_eq(t2, t3):
        assert alpha_eq(t1, t3)


@given(terms, names, terms)
def test_subst_respects_alpha(t, v, s):
    t2 = _Renamer().term(t, {}, {}, {})
    s2 = _Renamer().term(s, {}, {}, {})
    assert alpha_eq(subst_term(t, v, s), subst_term(t2, v, s2))


@given(terms, terms, terms)
def test_substitution_composition(t, s1, s2):
    assume("x" not in free_vars(s2).terms)
    left = subst_term(subst_term(t, "x", s1), "y", s2)
    right = subst_term(subst_term(t, "y", s2), "x", subst_term(s1, "y", s2))
    assert alpha_eq(left, right)


@given(terms, names)
def test_free_vars_after_closed_substitution(t, v):
    out = subst_term(t, v, idU)
    fv = free_vars(t)
    assert free_vars(out).terms == fv.terms - {v}
    assert free_vars(out).types == fv.types
    assert free_vars(out).conts == fv.conts


@given(terms, names, terms)
def test_free_vars_after_substitution(t, v, s):
    fv = free_vars(t)
    expect = fv.terms - {v}
    if v in fv.terms:
        expect |= free_vars(s).terms
    assert free_vars(subst_term(t, v, s)).terms == expect


@given(types)
def test_ftv_of_closed_forall(ty):
    assert ftv(Forall("a", Forall("b", Forall("c", ty)))) == frozenset()
    assert is_closed(TyLam("q", Lam("x", Forall("a", Forall("b", Forall("c", ty))), x)))


@given(terms)
def test_is_plain_survives_term_substitution(t):
    assert is_plain(subst_term(t, "x", idU)) == is_plain(t)
    assert term_size(t) >= 1
