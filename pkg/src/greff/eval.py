"""Frame-stack interpreter for core terms.

Evaluation is small-step over a machine state: a control (the term
being evaluated, a value being returned, or an operation being raised)
plus a stack of frames, one per evaluation-context layer.  A raised
operation walks the stack one frame per step; frames that neither
handle nor intercept the operation are captured, and when a handler
with a matching clause is found the captured frames are read back as
an ordinary lambda bound to the clause's resumption variable.  Deep
handlers rewrap themselves inside that lambda, shallow ones do not.

Effect casts are transparent to returning values.  A raise crossing an
upcast is re-raised with its payload and response rewrapped between the
two rows' typings; crossing a downcast does the same when the target
row mentions the operation and stops the program with a cast error
when the source row is dynamic and the target omits it.  Casts between
arrow types are inert proxy values that fire at application, casting
the argument one way and the effects and result the other.

All binding is by substitution of closed values, so any intermediate
state reads back (reify) as a closed term that typechecks; the suite
samples exactly that.  The direct-style evaluator in reference.py
implements the same semantics with none of this machinery and serves
as the cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

from . import core
from .typesys import (
    Arrow,
    Concrete,
    Dyn,
    EffectType,
    OpSig,
    QueueOf,
    Signature,
    ValueType,
    ops_of,
)

DEFAULT_FUEL = 1_000_000


class StuckState(Exception):
    """No rule applies: an interpreter bug, unreachable on typechecked input."""


# ---------------------------------------------------------------------------
# Outcomes


@dataclass(frozen=True)
class Value:
    value: object


@dataclass(frozen=True)
class Error:
    """The program stopped with a cast error."""


@dataclass(frozen=True)
class UncaughtRaise:
    op: str


@dataclass(frozen=True)
class FuelExhausted:
    steps: int


Outcome = Union[Value, Error, UncaughtRaise, FuelExhausted]


# ---------------------------------------------------------------------------
# Frames: one per evaluation-context layer


@dataclass(frozen=True)
class AppFun:
    arg: core.Term


@dataclass(frozen=True)
class AppArg:
    fn: core.Term  # a value


@dataclass(frozen=True)
class LetBody:
    var: str
    body: core.Term


@dataclass(frozen=True)
class IfBranches:
    then: core.Term
    els: core.Term


@dataclass(frozen=True)
class ConcatLeft:
    right: core.Term


@dataclass(frozen=True)
class ConcatRight:
    left: core.Term  # a value


@dataclass(frozen=True)
class EnqueueQueue:
    elem: core.Term


@dataclass(frozen=True)
class EnqueueElem:
    queue: core.Term  # a value


@dataclass(frozen=True)
class CaseFrame:
    empty_body: core.Term
    head_var: str
    rest_var: str
    cons_body: core.Term


@dataclass(frozen=True)
class RaisePayload:
    op: str
    req: ValueType
    resp: ValueType


@dataclass(frozen=True)
class HandleFrame:
    handle: core.Handle


@dataclass(frozen=True)
class ValUpFrame:
    lo: ValueType
    hi: ValueType


@dataclass(frozen=True)
class ValDownFrame:
    lo: ValueType
    hi: ValueType


@dataclass(frozen=True)
class EffUpFrame:
    lo: EffectType
    hi: EffectType


@dataclass(frozen=True)
class EffDownFrame:
    lo: EffectType
    hi: EffectType


Frame = Union[
    AppFun, AppArg, LetBody, IfBranches, ConcatLeft, ConcatRight,
    EnqueueQueue, EnqueueElem, CaseFrame, RaisePayload, HandleFrame,
    ValUpFrame, ValDownFrame, EffUpFrame, EffDownFrame,
]


# ---------------------------------------------------------------------------
# Machine states


@dataclass(frozen=True)
class Evaluating:
    term: core.Term


@dataclass(frozen=True)
class Returning:
    value: core.Term


@dataclass(frozen=True)
class Raising:
    """An operation searching outward for its handler.

    req and resp are the payload's current typings; effect casts crossed
    on the way out rewrite them along with the payload.  captured holds
    the frames walked so far, innermost first, all apart from op.
    """

    op: str
    req: ValueType
    resp: ValueType
    payload: core.Term
    captured: tuple[Frame, ...]


Control = Union[Evaluating, Returning, Raising]


@dataclass(frozen=True)
class MachineState:
    frames: tuple[Frame, ...]  # outermost first
    control: Control


@dataclass(frozen=True)
class Terminal:
    outcome: Outcome


# ---------------------------------------------------------------------------
# Helpers


def _mentions(eff: EffectType, op: str, sig: Signature) -> bool:
    # the dynamic row mentions every operation the signature declares
    return op in sig if isinstance(eff, Dyn) else op in eff


def _typing(eff: EffectType, op: str, sig: Signature) -> OpSig:
    got = ops_of(eff, sig).get(op)
    if got is None:
        raise StuckState(f"no typing for {op} in {eff}")
    return got


def cast_value(v: core.Term, up: bool, lo: ValueType, hi: ValueType) -> core.Term:
    """Apply a value cast to a value; takes lo to hi when up, hi to lo otherwise.

    Ground casts dissolve, queue casts distribute over the elements, and
    arrow casts wrap the value into a proxy that fires at application.
    """
    if lo == hi:
        return v
    if isinstance(lo, QueueOf) and isinstance(hi, QueueOf):
        if isinstance(v, core.EmptyQueue):
            return core.EmptyQueue(hi.elem if up else lo.elem)
        if isinstance(v, core.Enqueue):
            return core.Enqueue(
                cast_value(v.queue, up, lo, hi),
                cast_value(v.elem, up, lo.elem, hi.elem),
            )
        raise StuckState(f"queue cast over a non-queue: {v!r}")
    if isinstance(lo, Arrow) and isinstance(hi, Arrow):
        return core.ValUpcast(lo, hi, v) if up else core.ValDowncast(lo, hi, v)
    # base types are only precision-related to themselves
    return v


def _uncons(q: core.Term) -> Optional[tuple[core.Term, core.Term]]:
    """Oldest element and the rest, or None when empty."""
    if isinstance(q, core.EmptyQueue):
        return None
    if isinstance(q, core.Enqueue):
        got = _uncons(q.queue)
        if got is None:
            return q.elem, q.queue
        head, rest = got
        return head, core.Enqueue(rest, q.elem)
    raise StuckState(f"not a queue value: {q!r}")


def _wrap(f: Frame, hole: core.Term) -> core.Term:
    """Rebuild the term layer a frame stands for, with hole plugged in."""
    if isinstance(f, AppFun):
        return core.App(hole, f.arg)
    if isinstance(f, AppArg):
        return core.App(f.fn, hole)
    if isinstance(f, LetBody):
        return core.Let(hole, f.var, f.body)
    if isinstance(f, IfBranches):
        return core.If(hole, f.then, f.els)
    if isinstance(f, ConcatLeft):
        return core.Concat(hole, f.right)
    if isinstance(f, ConcatRight):
        return core.Concat(f.left, hole)
    if isinstance(f, EnqueueQueue):
        return core.Enqueue(hole, f.elem)
    if isinstance(f, EnqueueElem):
        return core.Enqueue(f.queue, hole)
    if isinstance(f, CaseFrame):
        return core.CaseQueue(hole, f.empty_body, f.head_var, f.rest_var, f.cons_body)
    if isinstance(f, RaisePayload):
        return core.Raise(f.op, f.req, f.resp, hole)
    if isinstance(f, HandleFrame):
        h = f.handle
        return core.Handle(
            hole, h.ret_var, h.ret_body, h.clauses, h.result_eff, h.result_type, h.deep
        )
    if isinstance(f, ValUpFrame):
        return core.ValUpcast(f.lo, f.hi, hole)
    if isinstance(f, ValDownFrame):
        return core.ValDowncast(f.lo, f.hi, hole)
    if isinstance(f, EffUpFrame):
        return core.EffUpcast(f.lo, f.hi, hole)
    if isinstance(f, EffDownFrame):
        return core.EffDowncast(f.lo, f.hi, hole)
    raise StuckState(f"not a frame: {f!r}")


def reify_frames(frames: tuple[Frame, ...], hole: core.Term) -> core.Term:
    """Plug hole into a sequence of frames given innermost first."""
    for f in frames:
        hole = _wrap(f, hole)
    return hole


def reify(state: MachineState) -> core.Term:
    """Read the whole state back as the closed term it denotes."""
    c = state.control
    if isinstance(c, Evaluating):
        inner = c.term
    elif isinstance(c, Returning):
        inner = c.value
    else:
        raise_node = core.Raise(c.op, c.req, c.resp, c.payload)
        inner = reify_frames(c.captured, raise_node)
    return reify_frames(tuple(reversed(state.frames)), inner)


def apart(sig: Signature, frames: tuple[Frame, ...], op: str) -> bool:
    """True when no frame handles or cast-intercepts op."""
    for f in frames:
        if isinstance(f, HandleFrame) and f.handle.clause(op) is not None:
            return False
        if isinstance(f, EffUpFrame) and (
            _mentions(f.lo, op, sig) or _mentions(f.hi, op, sig)
        ):
            return False
        if isinstance(f, EffDownFrame) and _mentions(f.hi, op, sig):
            return False
    return True


# ---------------------------------------------------------------------------
# The step function


class Machine:
    def __init__(self, sig: Signature, trace: Optional[Callable[[str, str], None]] = None):
        self.sig = sig
        self.trace = trace
        self._fresh = 0

    def fresh_resume(self) -> str:
        self._fresh += 1
        return f"%r{self._fresh}"

    def initial(self, term: core.Term) -> MachineState:
        return MachineState((), Evaluating(term))

    def _fire(self, rule: str, detail: str = "") -> None:
        if self.trace is not None:
            self.trace(rule, detail)

    def step(self, s: MachineState) -> Union[MachineState, Terminal]:
        c = s.control
        if isinstance(c, Evaluating):
            return self._step_eval(s.frames, c.term)
        if isinstance(c, Returning):
            return self._step_return(s.frames, c.value)
        return self._step_raise(s.frames, c)

    def _step_eval(self, frames, t) -> Union[MachineState, Terminal]:
        if core.is_value(t):
            self._fire("value", core._brief(t))
            return MachineState(frames, Returning(t))
        if isinstance(t, core.Fix):
            self._fire("fix", t.var)
            return MachineState(frames, Evaluating(core.subst(t.body, t.var, t)))
        if isinstance(t, core.App):
            return MachineState(frames + (AppFun(t.arg),), Evaluating(t.fn))
        if isinstance(t, core.Let):
            return MachineState(frames + (LetBody(t.var, t.body),), Evaluating(t.bound))
        if isinstance(t, core.If):
            return MachineState(frames + (IfBranches(t.then, t.els),), Evaluating(t.cond))
        if isinstance(t, core.Concat):
            return MachineState(frames + (ConcatLeft(t.right),), Evaluating(t.left))
        if isinstance(t, core.Enqueue):
            return MachineState(frames + (EnqueueQueue(t.elem),), Evaluating(t.queue))
        if isinstance(t, core.CaseQueue):
            f = CaseFrame(t.empty_body, t.head_var, t.rest_var, t.cons_body)
            return MachineState(frames + (f,), Evaluating(t.scrutinee))
        if isinstance(t, core.Raise):
            return MachineState(
                frames + (RaisePayload(t.op, t.req, t.resp),), Evaluating(t.payload)
            )
        if isinstance(t, core.Handle):
            return MachineState(frames + (HandleFrame(t),), Evaluating(t.scrutinee))
        if isinstance(t, core.Err):
            self._fire("err")
            return Terminal(Error())
        if isinstance(t, core.ValUpcast):
            return MachineState(frames + (ValUpFrame(t.lo, t.hi),), Evaluating(t.body))
        if isinstance(t, core.ValDowncast):
            return MachineState(frames + (ValDownFrame(t.lo, t.hi),), Evaluating(t.body))
        if isinstance(t, core.EffUpcast):
            return MachineState(frames + (EffUpFrame(t.lo, t.hi),), Evaluating(t.body))
        if isinstance(t, core.EffDowncast):
            return MachineState(frames + (EffDownFrame(t.lo, t.hi),), Evaluating(t.body))
        raise StuckState(f"cannot evaluate {core._brief(t)}")

    def _apply(self, frames, fn, arg) -> Union[MachineState, Terminal]:
        if isinstance(fn, core.Lam):
            self._fire("beta", fn.var)
            return MachineState(frames, Evaluating(core.subst(fn.body, fn.var, arg)))
        if isinstance(fn, core.ValUpcast):
            lo, hi = fn.lo, fn.hi
            self._fire("fun-upcast")
            arg_cast = cast_value(arg, False, lo.dom, hi.dom)
            frames = frames + (ValUpFrame(lo.cod, hi.cod), EffUpFrame(lo.eff, hi.eff))
            return MachineState(frames, Evaluating(core.App(fn.body, arg_cast)))
        if isinstance(fn, core.ValDowncast):
            lo, hi = fn.lo, fn.hi
            self._fire("fun-downcast")
            arg_cast = cast_value(arg, True, lo.dom, hi.dom)
            frames = frames + (ValDownFrame(lo.cod, hi.cod), EffDownFrame(lo.eff, hi.eff))
            return MachineState(frames, Evaluating(core.App(fn.body, arg_cast)))
        raise StuckState(f"applied a non-function: {core._brief(fn)}")

    def _step_return(self, frames, v) -> Union[MachineState, Terminal]:
        if not frames:
            return Terminal(Value(v))
        f, frames = frames[-1], frames[:-1]
        if isinstance(f, AppFun):
            return MachineState(frames + (AppArg(v),), Evaluating(f.arg))
        if isinstance(f, AppArg):
            return self._apply(frames, f.fn, v)
        if isinstance(f, LetBody):
            self._fire("let", f.var)
            return MachineState(frames, Evaluating(core.subst(f.body, f.var, v)))
        if isinstance(f, IfBranches):
            if not isinstance(v, core.BoolLit):
                raise StuckState(f"if on a non-boolean: {core._brief(v)}")
            self._fire("if-true" if v.value else "if-false")
            return MachineState(frames, Evaluating(f.then if v.value else f.els))
        if isinstance(f, ConcatLeft):
            return MachineState(frames + (ConcatRight(v),), Evaluating(f.right))
        if isinstance(f, ConcatRight):
            if not isinstance(f.left, core.StrLit) or not isinstance(v, core.StrLit):
                raise StuckState("concat on non-strings")
            self._fire("concat")
            return MachineState(frames, Returning(core.StrLit(f.left.value + v.value)))
        if isinstance(f, EnqueueQueue):
            return MachineState(frames + (EnqueueElem(v),), Evaluating(f.elem))
        if isinstance(f, EnqueueElem):
            self._fire("enqueue")
            return MachineState(frames, Returning(core.Enqueue(f.queue, v)))
        if isinstance(f, CaseFrame):
            got = _uncons(v)
            if got is None:
                self._fire("case-empty")
                return MachineState(frames, Evaluating(f.empty_body))
            head, rest = got
            self._fire("case-dequeue")
            body = core.subst(f.cons_body, f.head_var, head)
            body = core.subst(body, f.rest_var, rest)
            return MachineState(frames, Evaluating(body))
        if isinstance(f, RaisePayload):
            self._fire("raise", f.op)
            return MachineState(frames, Raising(f.op, f.req, f.resp, v, ()))
        if isinstance(f, HandleFrame):
            h = f.handle
            self._fire("handle-value")
            return MachineState(frames, Evaluating(core.subst(h.ret_body, h.ret_var, v)))
        if isinstance(f, ValUpFrame):
            self._fire("val-upcast")
            return MachineState(frames, Returning(cast_value(v, True, f.lo, f.hi)))
        if isinstance(f, ValDownFrame):
            self._fire("val-downcast")
            return MachineState(frames, Returning(cast_value(v, False, f.lo, f.hi)))
        if isinstance(f, EffUpFrame):
            self._fire("eff-upcast-value")
            return MachineState(frames, Returning(v))
        if isinstance(f, EffDownFrame):
            self._fire("eff-downcast-value")
            return MachineState(frames, Returning(v))
        raise StuckState(f"not a frame: {f!r}")

    def _step_raise(self, frames, r: Raising) -> Union[MachineState, Terminal]:
        if not frames:
            self._fire("uncaught", r.op)
            return Terminal(UncaughtRaise(r.op))
        f, frames = frames[-1], frames[:-1]
        if isinstance(f, HandleFrame):
            h = f.handle
            clause = h.clause(r.op)
            if clause is not None:
                return self._handler_beta(frames, f, clause, r)
        elif isinstance(f, EffUpFrame):
            if _mentions(f.hi, r.op, self.sig):
                self._fire("eff-upcast-raise", r.op)
                inner = _typing(f.lo, r.op, self.sig)
                outer = _typing(f.hi, r.op, self.sig)
                payload = cast_value(r.payload, True, inner.req, outer.req)
                captured = (ValDownFrame(inner.resp, outer.resp),) + r.captured + (f,)
                return MachineState(
                    frames, Raising(r.op, outer.req, outer.resp, payload, captured)
                )
        elif isinstance(f, EffDownFrame):
            if _mentions(f.lo, r.op, self.sig):
                self._fire("eff-downcast-raise", r.op)
                inner = _typing(f.lo, r.op, self.sig)
                outer = _typing(f.hi, r.op, self.sig)
                payload = cast_value(r.payload, False, inner.req, outer.req)
                captured = (ValUpFrame(inner.resp, outer.resp),) + r.captured + (f,)
                return MachineState(
                    frames, Raising(r.op, inner.req, inner.resp, payload, captured)
                )
            if isinstance(f.hi, Dyn):
                # the dynamic row let the operation out; the target traps it
                self._fire("bad-downcast", r.op)
                return MachineState(frames, Evaluating(core.Err()))
        self._fire("capture", r.op)
        return MachineState(
            frames, Raising(r.op, r.req, r.resp, r.payload, r.captured + (f,))
        )

    def _handler_beta(self, frames, f: HandleFrame, clause, r: Raising):
        h = f.handle
        self._fire("handler-beta", f"{r.op}{' deep' if h.deep else ''}")
        y = self.fresh_resume()
        body = reify_frames(r.captured, core.Var(y))
        if h.deep:
            body = core.Handle(
                body, h.ret_var, h.ret_body, h.clauses, h.result_eff, h.result_type, True
            )
        resume = core.Lam(y, clause.resp, body)
        t = core.subst(clause.body, clause.payload_var, r.payload)
        t = core.subst(t, clause.resume_var, resume)
        return MachineState(frames, Evaluating(t))


# ---------------------------------------------------------------------------
# Driving


@dataclass(frozen=True)
class RunResult:
    outcome: Outcome
    steps: int


def run(
    sig: Signature,
    term: core.Term,
    fuel: int = DEFAULT_FUEL,
    trace: Optional[Callable[[str, str], None]] = None,
    sample: Optional[Callable[[MachineState], None]] = None,
    sample_every: int = 97,
) -> RunResult:
    """Iterate step up to fuel times, reporting the outcome and steps used.

    sample, when given, sees the machine state every sample_every steps;
    the soundness suite uses it to retypecheck intermediate states.
    """
    machine = Machine(sig, trace)
    state = machine.initial(term)
    for n in range(fuel):
        nxt = machine.step(state)
        if isinstance(nxt, Terminal):
            return RunResult(nxt.outcome, n + 1)
        state = nxt
        if sample is not None and (n + 1) % sample_every == 0:
            sample(state)
    return RunResult(FuelExhausted(fuel), fuel)


def evaluate(sig: Signature, term: core.Term, fuel: int = DEFAULT_FUEL) -> Outcome:
    return run(sig, term, fuel).outcome
