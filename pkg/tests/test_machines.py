import json

from hypothesis import given
from hypothesis import strategies as st

from conftest import ABORTIVE_CBV, DELIM_CBV, U, U_d, idU, idU_d
from fctl.generate import GenConfig, gen_typed_program
from fctl.machines import (
    Continue, Done, Eval, emit_machine_trace, machine_eval, transition,
)
from fctl.reduction import Program, evaluate, trace
from fctl.syntax import (
    ALL_MODES, App, Callcc, ContD, ContS, HOLE, Reset, Shift, ThrowVar, Var,
    alpha_eq,
)


def test_value_normalizes():
    out = machine_eval(Program(ABORTIVE_CBV, idU))
    assert out.outcome == "normalized" and out.value == idU


def test_callcc_agrees_with_reduction():
    p = Program(ABORTIVE_CBV, Callcc("k", ContS(U), ThrowVar("k", U, idU)))
    m, r = machine_eval(p), evaluate(p)
    assert m.outcome == r.outcome == "normalized"
    assert alpha_eq(m.value, r.value) and m.value == idU


def test_shift_throw():
    p = Program(DELIM_CBV, Reset(Shift("k", ContD(U_d, U_d), ThrowVar("k", None, idU_d))))
    out = machine_eval(p)
    assert out.outcome == "normalized" and out.value == idU_d
    assert trace(p).rules == ["shift", "throw_v", "reset"]


def test_stuck_and_fuel():
    assert machine_eval(Program(ABORTIVE_CBV, App(idU, idU))).outcome == "stuck"
    assert machine_eval(Program(ABORTIVE_CBV, Var("x"))).outcome == "stuck"
    assert machine_eval(Program(DELIM_CBV, idU_d)).outcome == "stuck"
    p = Program(ABORTIVE_CBV, App(App(idU, idU), idU))
    assert machine_eval(p, fuel=1).outcome in ("fuel-exhausted", "stuck")


def test_transitions():
    s = transition(Eval(idU, HOLE, None), False, False)
    assert s == Continue(HOLE, idU, None)
    assert transition(s, False, False) == Done(idU)


def test_machine_trace_json():
    p = Program(ABORTIVE_CBV, Callcc("k", ContS(U), ThrowVar("k", U, idU)))
    recs = json.loads(emit_machine_trace(p))
    assert recs[0]["state"] == "eval" and recs[-1]["state"] == "done"
    assert recs[-1]["outcome"] == "normalized"
    assert all(r["engine"] == "machine" for r in recs)


progs = st.builds(lambda m, i: gen_typed_program(GenConfig(m, seed=17), i),
                  st.sampled_from(ALL_MODES), st.integers(0, 100_000))


@given(progs)
def test_oracle_agreement(p):
    m, r = machine_eval(p), evaluate(p)
    assert m.outcome == r.outcome == "normalized"
    assert alpha_eq(m.value, r.value)


def _depth(d):
    return d.context.depth() + sum(E.depth() for E in (d.meta or ())) + 1


@given(progs)
def test_transition_count_is_linear(p):
    # no re-decomposition: each contraction costs O(context depth) transitions
    tr = trace(p)
    m = machine_eval(p)
    depth = max([_depth(s.decomposition) for s in tr.steps] + [_depth(tr.final_decomposition)])
    assert m.steps <= 6 * (len(tr.steps) + 1) * depth
