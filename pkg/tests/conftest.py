import sys
from pathlib import Path

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from fctl.syntax import (  # noqa: E402
    App, Arrow, ArrowD, Callcc, ContS, Forall, ForallD, Lam, ThrowVar, TyApp,
    TyLam, TyVar, Var, CalcMode,
)

settings.register_profile("default", max_examples=150, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GOLDEN = Path(__file__).parent / "golden"

ABORTIVE_CBV = CalcMode.of("abortive", "cbv")
ABORTIVE_CBN = CalcMode.of("abortive", "cbn")
DELIM_CBV = CalcMode.of("delimited", "cbv")
DELIM_CBN = CalcMode.of("delimited", "cbn")

a = TyVar("a")
U = Forall("a", Arrow(a, a))
idU = TyLam("a", Lam("x", a, Var("x")))
U_d = ForallD("a", ArrowD(a, a, a, a), a, a)
idU_d = idU

# -- random raw syntax (abortive shapes, possibly open) -----------------------

TERM_NAMES = ["x", "y", "z"]
TYPE_NAMES = ["a", "b", "c"]
CONT_NAMES = ["k", "j"]

types = st.recursive(
    st.sampled_from(TYPE_NAMES).map(TyVar),
    lambda inner: st.one_of(
        st.builds(Arrow, inner, inner),
        st.builds(Forall, st.sampled_from(TYPE_NAMES), inner),
    ),
    max_leaves=6,
)


def _compound(inner):
    return st.one_of(
        st.builds(Lam, st.sampled_from(TERM_NAMES), types, inner),
        st.builds(App, inner, inner),
        st.builds(TyLam, st.sampled_from(TYPE_NAMES), inner),
        st.builds(TyApp, inner, types),
        st.builds(Callcc, st.sampled_from(CONT_NAMES), types.map(ContS), inner),
        st.builds(ThrowVar, st.sampled_from(CONT_NAMES), types, inner),
    )


terms = st.recursive(st.sampled_from(TERM_NAMES).map(Var), _compound, max_leaves=12)
