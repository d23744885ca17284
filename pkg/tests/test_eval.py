"""Frame machine: rule coverage, apartness, reification, corpus differential."""

import pathlib

import pytest

from greff import core, eval as ev, reference
from greff.core import (
    App,
    BoolLit,
    CaseQueue,
    Clause,
    Concat,
    EmptyQueue,
    Enqueue,
    Err,
    Fix,
    Handle,
    If,
    Lam,
    Let,
    Raise,
    StrLit,
    UnitLit,
    ValDowncast,
    ValUpcast,
    EffDowncast,
    EffUpcast,
    Var,
)
from greff.elaborate import elab_source
from greff.eval import (
    EffDownFrame,
    EffUpFrame,
    Error,
    FuelExhausted,
    HandleFrame,
    LetBody,
    Machine,
    StuckState,
    Terminal,
    UncaughtRaise,
    Value,
    apart,
    evaluate,
    reify,
    run,
)
from greff.typesys import (
    DYN,
    EMPTY,
    Arrow,
    Bool,
    Concrete,
    OpSig,
    QueueOf,
    Signature,
    Str,
    Unit,
)

CORPUS = pathlib.Path(__file__).parent.parent / "corpus"

BOOL, UNIT_T, STR = Bool(), Unit(), Str()
SIG0 = Signature({})
PING = Signature({"ping": OpSig(UNIT_T, UNIT_T)})
ASK = Signature({"ask": OpSig(UNIT_T, STR)})
PING_ROW = Concrete({"ping": OpSig(UNIT_T, UNIT_T)})


def steps_of(term, sig=SIG0, fuel=10_000):
    return run(sig, term, fuel)


# ---------------------------------------------------------------------------
# Single rules


def test_beta_in_one_application():
    res = steps_of(App(Lam("x", BOOL, Var("x")), BoolLit(True)))
    assert res.outcome == Value(BoolLit(True))


def test_if_picks_branches():
    assert evaluate(SIG0, If(BoolLit(True), BoolLit(False), Err())) == Value(BoolLit(False))
    assert evaluate(SIG0, If(BoolLit(False), Err(), BoolLit(True))) == Value(BoolLit(True))


def test_err_discards_everything():
    t = Let(Concat(StrLit("a"), Err()), "x", BoolLit(True))
    assert evaluate(SIG0, t) == Error()


def test_handle_value_runs_return_clause():
    h = Handle(StrLit("v"), "x", Concat(Var("x"), StrLit("!")), (), EMPTY, STR)
    assert evaluate(SIG0, h) == Value(StrLit("v!"))


def test_effect_casts_dissolve_on_values():
    t = EffDowncast(EMPTY, DYN, EffUpcast(EMPTY, DYN, StrLit("v")))
    assert evaluate(SIG0, t) == Value(StrLit("v"))


def test_bad_downcast_steps_to_error():
    raisin = EffUpcast(PING_ROW, DYN, Raise("ping", UNIT_T, UNIT_T, UnitLit()))
    sig = Signature({"ping": OpSig(UNIT_T, UNIT_T), "ask": OpSig(UNIT_T, STR)})
    t = EffDowncast(Concrete({"ask": OpSig(UNIT_T, STR)}), DYN, raisin)
    assert evaluate(sig, t) == Error()


def test_uncaught_raise_outcome():
    assert evaluate(PING, Raise("ping", UNIT_T, UNIT_T, UnitLit())) == UncaughtRaise("ping")


def test_fuel_exhausted_reports_steps():
    loop = Fix("f", Arrow(UNIT_T, EMPTY, UNIT_T), Lam("u", UNIT_T, App(Var("f"), Var("u"))))
    out = evaluate(SIG0, App(loop, UnitLit()), fuel=100)
    assert out == FuelExhausted(100)


def test_open_term_is_stuck():
    with pytest.raises(StuckState):
        evaluate(SIG0, Var("ghost"))


# ---------------------------------------------------------------------------
# Handler dispatch through the stack


def _ask_twice():
    return Concat(Raise("ask", UNIT_T, STR, UnitLit()), Raise("ask", UNIT_T, STR, UnitLit()))


def _ask_handler(body, deep):
    return Handle(
        body,
        "x",
        Var("x"),
        (Clause("ask", "p", "k", App(Var("k"), StrLit("a")), UNIT_T, STR),),
        EMPTY,
        STR,
        deep,
    )


def test_deep_handler_recatches():
    assert evaluate(ASK, _ask_handler(_ask_twice(), deep=True)) == Value(StrLit("aa"))


def test_shallow_handler_does_not_recatch():
    assert evaluate(ASK, _ask_handler(_ask_twice(), deep=False)) == UncaughtRaise("ask")


def test_forwarded_op_keeps_inner_handler_installed():
    sig = Signature({"ask": OpSig(UNIT_T, STR), "ping": OpSig(UNIT_T, BOOL)})
    inner_body = Let(
        Raise("ask", UNIT_T, STR, UnitLit()),
        "s",
        Concat(Var("s"), If(Raise("ping", UNIT_T, UNIT_T, UnitLit()), StrLit("?"), StrLit("!"))),
    )
    inner = Handle(
        inner_body,
        "x",
        Var("x"),
        (Clause("ping", "p", "k", App(Var("k"), BoolLit(False)), UNIT_T, BOOL),),
        Concrete({"ask": OpSig(UNIT_T, STR)}),
        STR,
        deep=True,
    )
    outer = Handle(
        inner,
        "x",
        Var("x"),
        (Clause("ask", "p", "k", App(Var("k"), StrLit("a")), UNIT_T, STR),),
        EMPTY,
        STR,
        deep=True,
    )
    assert evaluate(sig, outer) == Value(StrLit("a!"))


def test_raise_crossing_upcast_then_downcast_is_caught():
    inner = EffDowncast(
        PING_ROW, DYN, EffUpcast(PING_ROW, DYN, Raise("ping", UNIT_T, UNIT_T, UnitLit()))
    )
    h = Handle(
        inner,
        "x",
        BoolLit(False),
        (Clause("ping", "p", "k", BoolLit(True), UNIT_T, UNIT_T),),
        EMPTY,
        BOOL,
        deep=True,
    )
    assert evaluate(PING, h) == Value(BoolLit(True))


def test_fun_proxies_fire_at_application():
    ident = Lam("s", STR, Var("s"))
    lo = Arrow(STR, EMPTY, STR)
    hi = Arrow(STR, DYN, STR)
    up_then_down = ValDowncast(lo, hi, ValUpcast(lo, hi, ident))
    assert evaluate(SIG0, App(up_then_down, StrLit("ok"))) == Value(StrLit("ok"))


def test_queue_casts_distribute():
    q = Enqueue(EmptyQueue(Arrow(STR, EMPTY, STR)), Lam("s", STR, Var("s")))
    lo = QueueOf(Arrow(STR, EMPTY, STR))
    hi = QueueOf(Arrow(STR, DYN, STR))
    t = CaseQueue(
        ValDowncast(lo, hi, ValUpcast(lo, hi, q)),
        StrLit("empty"),
        "f",
        "r",
        App(Var("f"), StrLit("q")),
    )
    assert evaluate(SIG0, t) == Value(StrLit("q"))


# ---------------------------------------------------------------------------
# apart


def test_apart_on_empty_sequence():
    assert apart(PING, (), "ping")


def test_apart_blocked_by_handler_clause():
    h = Handle(
        UnitLit(), "x", Var("x"),
        (Clause("ping", "p", "k", UnitLit(), UNIT_T, UNIT_T),),
        EMPTY, UNIT_T,
    )
    assert not apart(PING, (HandleFrame(h),), "ping")
    assert apart(PING, (HandleFrame(h),), "ask")


def test_apart_blocked_by_effect_casts():
    assert not apart(PING, (EffUpFrame(PING_ROW, DYN),), "ping")
    assert not apart(PING, (EffDownFrame(PING_ROW, DYN),), "ping")
    assert not apart(PING, (EffDownFrame(EMPTY, DYN),), "ping")
    assert apart(PING, (EffDownFrame(EMPTY, PING_ROW),), "ask")
    assert apart(PING, (LetBody("x", Var("x")),), "ping")


def test_raising_captured_frames_stay_apart():
    # walk a raise through a let and an unrelated handler; every captured
    # frame must satisfy its apartness rule
    sig = Signature({"ask": OpSig(UNIT_T, STR), "ping": OpSig(UNIT_T, BOOL)})
    inner = Handle(
        Let(Raise("ask", UNIT_T, STR, UnitLit()), "s", Var("s")),
        "x",
        Var("x"),
        (Clause("ping", "p", "k", App(Var("k"), BoolLit(True)), UNIT_T, BOOL),),
        Concrete({"ask": OpSig(UNIT_T, STR)}),
        STR,
    )
    outer = _ask_handler(inner, deep=True)
    machine = Machine(sig)
    state = machine.initial(outer)
    seen = []
    while not isinstance(state, Terminal):
        if isinstance(state.control, ev.Raising):
            assert apart(sig, state.control.captured, state.control.op)
            seen.append(state.control.op)
        state = machine.step(state)
    assert state.outcome == Value(StrLit("a"))
    assert "ask" in seen


# ---------------------------------------------------------------------------
# Reification


def test_reify_roundtrips_initial_state():
    t = Let(StrLit("a"), "x", Concat(Var("x"), StrLit("b")))
    assert reify(Machine(SIG0).initial(t)) == t


def test_intermediate_states_retypecheck():
    from greff.typesys import subtype

    src = (CORPUS / "threads_precise.greff").read_text()
    res = elab_source(src)
    eff0, val0 = core.typecheck(res.sig, {}, res.term)
    checked = []

    def sample(state):
        term = reify(state)
        eff, val = core.typecheck(res.sig, {}, term)
        assert eff == eff0 or subtype(eff, eff0)
        assert val == val0 or subtype(val, val0)
        checked.append((eff, val))

    out = run(res.sig, res.term, fuel=100_000, sample=sample, sample_every=50)
    assert out.outcome == Value(StrLit("1a2b"))
    assert checked, "sampling never fired"


# ---------------------------------------------------------------------------
# Corpus differential against the direct-style evaluator


@pytest.mark.parametrize("name", ["threads_imprecise", "threads_precise"])
def test_scheduler_runs_to_1a2b_in_budget(name):
    res = elab_source((CORPUS / f"{name}.greff").read_text())
    got = run(res.sig, res.term, fuel=10_000)
    assert got.outcome == Value(StrLit("1a2b"))
    assert got.steps < 10_000
    assert reference.evaluate(res.sig, res.term, fuel=1_000_000) == got.outcome


@pytest.mark.parametrize("name", ["threads_imprecise", "threads_precise"])
def test_determinism_same_trace(name):
    res = elab_source((CORPUS / f"{name}.greff").read_text())
    traces = []
    for _ in range(2):
        log = []
        run(res.sig, res.term, fuel=10_000, trace=lambda rule, d: log.append((rule, d)))
        traces.append(log)
    assert traces[0] == traces[1]


def test_bad_downcast_corpus_errors():
    res = elab_source((CORPUS / "bad_downcast.greff").read_text())
    assert evaluate(res.sig, res.term) == Error()
    assert reference.evaluate(res.sig, res.term) == Error()
