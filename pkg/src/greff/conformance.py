"""Executable checks that the calculus behaves the way its laws promise.

Four families of checks, all driven by seeded generators and decided by
running both sides of an equation to an outcome:

  - cast/handler agreement: a primitive effect cast runs exactly like
    the deep handler that re-raises each operation across value casts,
    and a function cast runs exactly like its eta-expansion;
  - cast laws: retraction (up then down is identity), decomposition of
    a cast through an intermediate type, commutation of value casts
    with effect casts, and explicit forwarding clauses;
  - factorization: a cast between gradual-subtype-related types splits
    into an upcast followed by a downcast in four equivalent ways;
  - graduality: making a program's annotations less precise never
    changes a successful outcome, checked on generated program pairs.

Semantic comparison is observational and therefore an approximation:
two terms count as equal when closing harnesses drive them to the same
ground outcome within the fuel budget.  Verdicts say so: a fuel-starved
side yields Inconclusive, never Violated.
"""

from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from . import core
from . import elaborate
from . import eval as ev
from . import gen
from . import surface as s
from .typesys import (
    DYN,
    EMPTY,
    Arrow,
    Bool,
    Concrete,
    Dyn,
    OpSig,
    QueueOf,
    Signature,
    Str,
    Unit,
    ValueType,
    erase,
    gradual_subtype,
    ops_of,
)


class DecompositionFailed(Exception):
    """Raised when cast factorization is asked for unrelated types."""


# ---------------------------------------------------------------------------
# Outcome order


@dataclass(frozen=True)
class Holds:
    def __str__(self) -> str:
        return "holds"


@dataclass(frozen=True)
class Violated:
    left: str
    right: str

    def __str__(self) -> str:
        return f"violated ({self.left} vs {self.right})"


@dataclass(frozen=True)
class Inconclusive:
    reason: str

    def __str__(self) -> str:
        return f"inconclusive ({self.reason})"


OrderVerdict = Union[Holds, Violated, Inconclusive]


def describe_outcome(o: ev.Outcome) -> str:
    if isinstance(o, ev.Value):
        return f"value {core.pretty(o.value)}"
    if isinstance(o, ev.Error):
        return "error"
    if isinstance(o, ev.UncaughtRaise):
        return f"uncaught {o.op}"
    return f"fuel ({o.steps})"


def order_outcomes(left: ev.Outcome, right: ev.Outcome) -> OrderVerdict:
    """Does `right` refine `left` observationally?

    The more-precise side may fail where the less-precise side succeeds,
    never the other way around; agreeing terminal outcomes always relate.
    """
    if isinstance(left, ev.Error):
        return Holds()
    lf, rf = isinstance(left, ev.FuelExhausted), isinstance(right, ev.FuelExhausted)
    if lf and rf:
        return Holds()
    if lf:
        return Inconclusive("fuel-left")
    if rf:
        return Inconclusive("fuel-right")
    if left == right:
        return Holds()
    return Violated(describe_outcome(left), describe_outcome(right))


def semantic_order(
    sig: Signature, left: core.Term, right: core.Term, fuel: int = ev.DEFAULT_FUEL
) -> tuple[OrderVerdict, ev.Outcome, ev.Outcome]:
    """Run both closed ground-typed terms and order their outcomes."""
    lo = ev.run(sig, left, fuel=fuel).outcome
    ro = ev.run(sig, right, fuel=fuel).outcome
    return order_outcomes(lo, ro), lo, ro


def outcomes_equal(left: ev.Outcome, right: ev.Outcome) -> bool:
    if isinstance(left, ev.FuelExhausted) and isinstance(right, ev.FuelExhausted):
        return True
    return left == right


# ---------------------------------------------------------------------------
# Effect casts are handlers


def _re_raise(
    op: str,
    payload_var: str,
    send: OpSig,
    recv: OpSig,
    up: bool,
    result_eff,
) -> core.Term:
    """The clause body re-raising op across value casts, feeding the resume.

    `send` is the typing the clause receives the payload at, `recv` the
    typing of the re-raise.  Going up, payloads are upcast and responses
    come back down; going down the duals.
    """
    if up:
        pay: core.Term = core.ValUpcast(send.req, recv.req, core.Var(payload_var))
        raised: core.Term = core.Raise(op, recv.req, recv.resp, pay)
        out: core.Term = core.ValDowncast(send.resp, recv.resp, raised)
    else:
        pay = core.ValDowncast(recv.req, send.req, core.Var(payload_var))
        raised = core.Raise(op, recv.req, recv.resp, pay)
        out = core.ValUpcast(recv.resp, send.resp, raised)
    if isinstance(result_eff, Dyn):
        # a bare raise has a concrete one-operation row, which no typing
        # rule lets sit directly under a dynamic ambient; the identity
        # upcast stays primitive and dissolves into identity value casts
        out = core.EffUpcast(Concrete({op: OpSig(recv.req, recv.resp)}), DYN, out)
    return out


def expand_effect_cast(
    sig: Signature,
    cast: Union[core.EffUpcast, core.EffDowncast],
    result_type: ValueType,
    fresh: Callable[[str], str],
) -> core.Handle:
    """The deep handler a primitive effect cast is equivalent to.

    An upcast handles every operation of its lower row and re-raises at
    the higher row's typing; a downcast handles every operation the
    higher row can raise, re-raising the ones the lower row admits and
    erroring on the rest.
    """
    up = isinstance(cast, core.EffUpcast)
    lo_ops = ops_of(cast.lo, sig)
    hi_ops = ops_of(cast.hi, sig)
    result_eff = cast.hi if up else cast.lo
    clauses = []
    if up:
        for op, lo_sig in lo_ops.items():
            x, k = fresh("x"), fresh("k")
            hi_sig = hi_ops[op]
            body = core.App(
                core.Var(k), _re_raise(op, x, lo_sig, hi_sig, True, result_eff)
            )
            clauses.append(core.Clause(op, x, k, body, lo_sig.req, lo_sig.resp))
    else:
        for op, hi_sig in hi_ops.items():
            x, k = fresh("x"), fresh("k")
            lo_sig = lo_ops.get(op)
            if lo_sig is None:
                body: core.Term = core.Err()
            else:
                body = core.App(
                    core.Var(k), _re_raise(op, x, hi_sig, lo_sig, False, result_eff)
                )
            clauses.append(core.Clause(op, x, k, body, hi_sig.req, hi_sig.resp))
    rv = fresh("x")
    return core.Handle(
        cast.body,
        rv,
        core.Var(rv),
        tuple(clauses),
        result_eff,
        result_type,
        deep=True,
    )


def expand_fun_cast(
    cast: Union[core.ValUpcast, core.ValDowncast], fresh: Callable[[str], str]
) -> core.Term:
    """The eta-expansion a function cast is equivalent to.

    The argument crosses the cast against the direction of the result;
    the latent effect row is cast on the way out.
    """
    lo, hi = cast.lo, cast.hi
    assert isinstance(lo, Arrow) and isinstance(hi, Arrow)
    g, x = fresh("g"), fresh("x")
    if isinstance(cast, core.ValUpcast):
        inner = core.App(core.Var(g), core.ValDowncast(lo.dom, hi.dom, core.Var(x)))
        body = core.ValUpcast(
            lo.cod, hi.cod, core.EffUpcast(lo.eff, hi.eff, inner)
        )
        wrapper: core.Term = core.Lam(x, hi.dom, body)
    else:
        inner = core.App(core.Var(g), core.ValUpcast(lo.dom, hi.dom, core.Var(x)))
        body = core.ValDowncast(
            lo.cod, hi.cod, core.EffDowncast(lo.eff, hi.eff, inner)
        )
        wrapper = core.Lam(x, lo.dom, body)
    return core.Let(cast.body, g, wrapper)


def _fresh_counter(prefix: str = "%c") -> Callable[[str], str]:
    n = [0]

    def fresh(base: str) -> str:
        n[0] += 1
        return f"{prefix}{base}{n[0]}"

    return fresh


def expand_casts(
    sig: Signature,
    term: core.Term,
    gamma: Optional[dict[str, ValueType]] = None,
    effect: bool = True,
    function: bool = False,
) -> core.Term:
    """Replace primitive casts by their handler/eta expansions, bottom-up.

    With `effect`, every effect cast becomes the equivalent deep handler;
    with `function`, every value cast between arrow types becomes the
    equivalent wrapper lambda.  Typing environments are tracked so the
    handler's result type (the value type of the cast body) is known.
    """
    fresh = _fresh_counter()
    return _expand(sig, dict(gamma or {}), term, effect, function, fresh)


def _expand(sig, gamma, t, effect, function, fresh) -> core.Term:
    def rec(g, sub):
        return _expand(sig, g, sub, effect, function, fresh)

    if isinstance(
        t, (core.Var, core.BoolLit, core.UnitLit, core.StrLit, core.Err, core.EmptyQueue)
    ):
        return t
    if isinstance(t, core.Lam):
        return core.Lam(t.var, t.ann, rec(gamma | {t.var: t.ann}, t.body))
    if isinstance(t, core.Fix):
        body = rec(gamma | {t.var: t.ann}, t.body)
        assert isinstance(body, core.Lam)
        return core.Fix(t.var, t.ann, body)
    if isinstance(t, core.App):
        return core.App(rec(gamma, t.fn), rec(gamma, t.arg))
    if isinstance(t, core.Let):
        bound = rec(gamma, t.bound)
        _, bty = core.typecheck(sig, gamma, bound)
        return core.Let(bound, t.var, rec(gamma | {t.var: bty}, t.body))
    if isinstance(t, core.If):
        return core.If(rec(gamma, t.cond), rec(gamma, t.then), rec(gamma, t.els))
    if isinstance(t, core.Concat):
        return core.Concat(rec(gamma, t.left), rec(gamma, t.right))
    if isinstance(t, core.Enqueue):
        return core.Enqueue(rec(gamma, t.queue), rec(gamma, t.elem))
    if isinstance(t, core.CaseQueue):
        scr = rec(gamma, t.scrutinee)
        _, sty = core.typecheck(sig, gamma, scr)
        assert isinstance(sty, QueueOf)
        inner = gamma | {t.head_var: sty.elem, t.rest_var: sty}
        return core.CaseQueue(
            scr,
            rec(gamma, t.empty_body),
            t.head_var,
            t.rest_var,
            rec(inner, t.cons_body),
        )
    if isinstance(t, core.Raise):
        return core.Raise(t.op, t.req, t.resp, rec(gamma, t.payload))
    if isinstance(t, core.Handle):
        scr = rec(gamma, t.scrutinee)
        scr_eff, scr_val = core.typecheck(sig, gamma, scr)
        ret = rec(gamma | {t.ret_var: scr_val}, t.ret_body)
        clauses = []
        for c in t.clauses:
            if t.deep:
                k_ty = Arrow(c.resp, t.result_eff, t.result_type)
            else:
                k_ty = Arrow(c.resp, scr_eff, scr_val)
            inner = gamma | {c.payload_var: c.req, c.resume_var: k_ty}
            clauses.append(
                core.Clause(c.op, c.payload_var, c.resume_var, rec(inner, c.body), c.req, c.resp)
            )
        return core.Handle(
            scr, t.ret_var, ret, tuple(clauses), t.result_eff, t.result_type, t.deep
        )
    if isinstance(t, (core.ValUpcast, core.ValDowncast)):
        body = rec(gamma, t.body)
        out = type(t)(t.lo, t.hi, body)
        if function and isinstance(t.lo, Arrow) and isinstance(t.hi, Arrow):
            return expand_fun_cast(out, fresh)
        return out
    if isinstance(t, (core.EffUpcast, core.EffDowncast)):
        body = rec(gamma, t.body)
        out = type(t)(t.lo, t.hi, body)
        if effect:
            _, vty = core.typecheck(sig, gamma, body)
            return expand_effect_cast(sig, out, vty, fresh)
        return out
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Cast factorization


@dataclass(frozen=True)
class Factorization:
    """The corners of the square a cast from a to b factors through.

    a goes up to either upper type and back down to either of b's side:
    up_lo and down_lo sit at the source's precision, up_hi and down_hi
    at the target's, with up_* above both in precision.
    """

    up_hi: object  # A_h: the source widened, target-shaped
    mid_hi: object  # D_h: the upper, less precise middle
    mid_lo: object  # D_l: the lower, more precise middle
    down_lo: object  # B_l: the target narrowed, source-shaped


def factor(a, b) -> Factorization:
    """Split evidence for a <~ b into subtyping and precision parts.

    Yields types with a <= up_hi |_ mid_hi, a |_ mid_lo <= mid_hi and
    down_lo <= b with down_lo |_ mid_lo, b |_ mid_hi: the four ways of
    writing the cast as up-then-down all agree.
    """
    if not gradual_subtype(a, b):
        raise DecompositionFailed(f"{a} is not a gradual subtype of {b}")
    return _factor(a, b)


def _factor(a, b) -> Factorization:
    if isinstance(a, (Bool, Unit, Str)) and a == b:
        return Factorization(a, a, a, a)
    if isinstance(a, QueueOf) and isinstance(b, QueueOf):
        e = _factor(a.elem, b.elem)
        return Factorization(
            QueueOf(e.up_hi), QueueOf(e.mid_hi), QueueOf(e.mid_lo), QueueOf(e.down_lo)
        )
    if isinstance(a, Arrow) and isinstance(b, Arrow):
        d = _factor(b.dom, a.dom)  # contravariant: evidence runs backwards
        f = _factor(a.eff, b.eff)
        c = _factor(a.cod, b.cod)
        return Factorization(
            Arrow(d.down_lo, f.up_hi, c.up_hi),
            Arrow(d.mid_lo, f.mid_hi, c.mid_hi),
            Arrow(d.mid_hi, f.mid_lo, c.mid_lo),
            Arrow(d.up_hi, f.down_lo, c.down_lo),
        )
    if isinstance(a, Dyn) or isinstance(b, Dyn):
        if isinstance(a, Dyn) and isinstance(b, Dyn):
            return Factorization(DYN, DYN, DYN, DYN)
        if isinstance(a, Dyn):
            return Factorization(DYN, DYN, DYN, b)
        return Factorization(a, DYN, DYN, DYN)
    if isinstance(a, Concrete) and isinstance(b, Concrete):
        up_hi, mid_hi = {}, {}
        mid_lo, down_lo = {}, {}
        for op, bs in b.ops:
            asig = a.get(op)
            if asig is None:
                up_hi[op] = bs
                mid_hi[op] = bs
                continue
            rq = _factor(asig.req, bs.req)
            rs = _factor(bs.resp, asig.resp)  # contravariant again
            up_hi[op] = OpSig(rq.up_hi, rs.down_lo)
            mid_hi[op] = OpSig(rq.mid_hi, rs.mid_lo)
            mid_lo[op] = OpSig(rq.mid_lo, rs.mid_hi)
            down_lo[op] = OpSig(rq.down_lo, rs.up_hi)
        return Factorization(
            Concrete(up_hi), Concrete(mid_hi), Concrete(mid_lo), Concrete(down_lo)
        )
    raise DecompositionFailed(f"no factorization of {a} against {b}")


def cast_factorizations(
    a: ValueType, b: ValueType, m: core.Term
) -> tuple[core.Term, ...]:
    """Four equivalent up-then-down spellings of the cast from a to b."""
    f = factor(a, b)
    shared = erase(a)
    if erase(b) != shared:
        raise DecompositionFailed(f"{a} and {b} have different erasures")
    return (
        core.ValDowncast(b, f.mid_hi, core.ValUpcast(f.up_hi, f.mid_hi, m)),
        core.ValDowncast(b, f.mid_hi, core.ValUpcast(a, f.mid_lo, m)),
        core.ValDowncast(f.down_lo, f.mid_lo, core.ValUpcast(a, f.mid_lo, m)),
        core.ValDowncast(b, shared, core.ValUpcast(a, shared, m)),
    )


# ---------------------------------------------------------------------------
# Surface precision: sites, the imprecisifier, syntactic precision


def _is_node(x) -> bool:
    return dataclasses.is_dataclass(x) and not isinstance(x, type)


def _rewrite_names(node, counter: list[int], chosen: Optional[set[int]]):
    """Walk the tree counting concrete row annotations, replacing chosen ones.

    Declarations and imports are left alone: their typings are interface
    facts, not annotations of the program under them.
    """
    if isinstance(node, s.SNames):
        idx = counter[0]
        counter[0] += 1
        if chosen is not None and idx in chosen:
            return s.SDynEff()
        return node
    if not _is_node(node) or isinstance(
        node, (s.SEffectDecl, s.SImportEffect, s.SImportValue)
    ):
        return node
    kwargs = {}
    for f in dataclasses.fields(node):
        v = getattr(node, f.name)
        if isinstance(v, tuple):
            kwargs[f.name] = tuple(
                _rewrite_names(x, counter, chosen) if _is_node(x) else x for x in v
            )
        elif _is_node(v):
            kwargs[f.name] = _rewrite_names(v, counter, chosen)
        else:
            kwargs[f.name] = v
    return type(node)(**kwargs)


def count_effect_sites(p: s.SProgram) -> int:
    counter = [0]
    _rewrite_names(p, counter, None)
    return counter[0]


@dataclass(frozen=True)
class PrecisionPair:
    precise: s.SProgram
    imprecise: s.SProgram
    sites: tuple[int, ...]  # indices of the annotations turned dynamic


def imprecisify(p: s.SProgram, rng: random.Random) -> Optional[PrecisionPair]:
    """Turn a random nonempty set of row annotations into ?; None if none."""
    n = count_effect_sites(p)
    if n == 0:
        return None
    chosen = set(rng.sample(range(n), rng.randint(1, n)))
    out = _rewrite_names(p, [0], chosen)
    return PrecisionPair(p, out, tuple(sorted(chosen)))


def syntactic_precision(a, b) -> bool:
    """Structural equality except annotations may be ? on the right."""
    if isinstance(b, s.SDynEff):
        return isinstance(a, (s.SNames, s.SDynEff))
    if type(a) is not type(b):
        return False
    if not _is_node(a):
        return a == b
    for f in dataclasses.fields(a):
        va, vb = getattr(a, f.name), getattr(b, f.name)
        if isinstance(va, tuple) and isinstance(vb, tuple):
            if len(va) != len(vb):
                return False
            if not all(syntactic_precision(x, y) for x, y in zip(va, vb)):
                return False
        elif _is_node(va) or _is_node(vb):
            if not syntactic_precision(va, vb):
                return False
        elif va != vb:
            if f.name != "pos":
                return False
    return True


# ---------------------------------------------------------------------------
# Graduality on program pairs


@dataclass(frozen=True)
class GradualityResult:
    verdict: OrderVerdict
    left: Optional[ev.Outcome]  # precise
    right: Optional[ev.Outcome]  # imprecise
    static_only: bool = False


def check_graduality_pair(
    pair: PrecisionPair, fuel: int = 200_000
) -> GradualityResult:
    """Elaborate and run both sides; the imprecise one must do no worse.

    If the precise program elaborates, the imprecise one must too; at
    runtime the imprecise outcome must refine the precise one.
    """
    try:
        pres = elaborate.elab_program(pair.precise)
    except elaborate.ElabError:
        return GradualityResult(Holds(), None, None, static_only=True)
    try:
        impr = elaborate.elab_program(pair.imprecise)
    except elaborate.ElabError as exc:
        return GradualityResult(
            Violated("elaborates", f"static error: {exc}"), None, None, True
        )
    verdict, lo, ro = semantic_order(pres.sig, pres.term, impr.term, fuel)
    return GradualityResult(verdict, lo, ro)


# ---------------------------------------------------------------------------
# Law cases: each builds (sig, left, right) closed ground terms


def _handler_clauses(g: gen._CoreGen) -> tuple[core.Clause, ...]:
    """One resuming clause per declared operation, with canned responses."""
    clauses = []
    for op in sorted(g.sig.names()):
        decl = g.sig.get(op)
        assert decl is not None
        p, k = g.name("p"), g.name("k")
        resp = g.value(decl.resp, frozenset(), {}, 1)
        clauses.append(
            core.Clause(op, p, k, core.App(core.Var(k), resp), decl.req, decl.resp)
        )
    return tuple(clauses)


def _observe(g: gen._CoreGen, ty: ValueType, t: core.Term) -> core.Term:
    """A str-typed observation of a value of any type.

    Functions are applied to canonical arguments (through a row-erased
    view so nested latent rows never mix), queues are peeked, grounds
    are printed.
    """
    if isinstance(ty, Str):
        return t
    if isinstance(ty, Bool):
        return core.If(t, core.StrLit("t"), core.StrLit("f"))
    if isinstance(ty, Unit):
        return core.Let(t, g.name("u"), core.StrLit("u"))
    if isinstance(ty, QueueOf):
        h, r = g.name("h"), g.name("r")
        return core.CaseQueue(
            t, core.StrLit("mt"), h, r, _observe(g, ty.elem, core.Var(h))
        )
    if isinstance(ty, Arrow):
        loose = Arrow(ty.dom, DYN, ty.cod)
        fn = core.ValUpcast(ty, loose, t) if ty != loose else t
        arg = g.value(ty.dom, frozenset(g.sig.names()), {}, 1)
        return _observe(g, ty.cod, core.App(fn, arg))
    raise TypeError(f"not a value type: {ty}")


def _ground_harness_ctx(
    g: gen._CoreGen, ty: ValueType
) -> Callable[[core.Term], core.Term]:
    """A reusable str-typed observation context for terms of type ty.

    Canonical arguments and handler responses are drawn once, so the
    terms a law compares are observed under the exact same context.
    """
    x = g.name("v")
    obs = _observe(g, ty, core.Var(x))
    clauses = _handler_clauses(g)
    rv = g.name("r")

    def wrap(t: core.Term) -> core.Term:
        return core.Handle(
            core.Let(t, x, obs), rv, core.Var(rv), clauses, EMPTY, Str(), True
        )

    return wrap


def _ground_harness(g: gen._CoreGen, ty: ValueType, t: core.Term) -> core.Term:
    return _ground_harness_ctx(g, ty)(t)


@dataclass(frozen=True)
class LawCase:
    sig: Signature
    left: core.Term
    right: core.Term


def _gen_ctx(seed: int, higher_order: bool = False) -> tuple[random.Random, gen._CoreGen]:
    rng = random.Random(seed)
    sig = gen.gen_signature(rng, higher_order=higher_order)
    return rng, gen._CoreGen(rng, sig, gen.GenConfig(depth=3))


def case_effect_cast_vs_handler(seed: int) -> LawCase:
    """A primitive up/down effect cast against its handler expansion."""
    rng, g = _gen_ctx(seed)
    names = sorted(g.sig.names())
    lo = g.sig.at(rng.sample(names, rng.randint(0, len(names))))
    body = g.term(gen.STR, frozenset(lo.names()), {}, 3)
    up = core.EffUpcast(lo, DYN, body)
    if rng.random() < 0.5:
        # a matching downcast on top: raises cross both, or trap when the
        # lower row loses operations
        back = g.sig.at(rng.sample(names, rng.randint(0, len(names))))
        cast: core.Term = core.EffDowncast(back, DYN, up)
    else:
        cast = up
    primitive = _ground_harness(g, gen.STR, cast)
    expanded = expand_casts(g.sig, primitive, effect=True)
    return LawCase(g.sig, primitive, expanded)


def case_fun_cast_vs_wrapper(seed: int) -> LawCase:
    """A function-type value cast against its eta-expansion."""
    rng, g = _gen_ctx(seed)
    row = gen.gen_row(rng, g.sig)
    ty = Arrow(rng.choice(gen.GROUND), row, rng.choice(gen.GROUND))
    hi = gen.loosen(rng, ty, p=0.7)
    fn = g.value(ty, frozenset(row.names()), {}, 2)
    cast: core.Term = core.ValUpcast(ty, hi, fn)
    roll = rng.random()
    if roll < 0.35:
        cast = core.ValDowncast(ty, hi, cast)
        out_ty: ValueType = ty
    elif roll < 0.6 and isinstance(hi.eff, Dyn):
        # down to a different row: applying the result can trap, and the
        # proxy and its expansion must trap alike
        out_ty = Arrow(ty.dom, gen.gen_row(rng, g.sig), ty.cod)
        cast = core.ValDowncast(out_ty, hi, cast)
    else:
        out_ty = hi
    primitive = _ground_harness(g, out_ty, cast)
    expanded = expand_casts(g.sig, primitive, effect=False, function=True)
    return LawCase(g.sig, primitive, expanded)


def case_retraction(seed: int) -> LawCase:
    """Casting up and straight back down is the identity."""
    rng, g = _gen_ctx(seed)
    if rng.random() < 0.5:
        row = gen.gen_row(rng, g.sig)
        m = g.term(gen.STR, frozenset(row.names()), {}, 3)
        wrapped: core.Term = core.EffDowncast(row, DYN, core.EffUpcast(row, DYN, m))
        ty: ValueType = gen.STR
    else:
        row = gen.gen_row(rng, g.sig)
        ty = Arrow(rng.choice(gen.GROUND), row, rng.choice(gen.GROUND))
        hi = gen.loosen(rng, ty, p=0.7)
        m = g.value(ty, frozenset(row.names()), {}, 2)
        wrapped = core.ValDowncast(ty, hi, core.ValUpcast(ty, hi, m))
    ctx = _ground_harness_ctx(g, ty)
    return LawCase(g.sig, ctx(m), ctx(wrapped))


def case_decomposition(seed: int) -> LawCase:
    """An upcast equals going up through an intermediate precision."""
    rng, g = _gen_ctx(seed)
    row = gen.gen_row(rng, g.sig)
    ty = Arrow(rng.choice(gen.GROUND), row, rng.choice(gen.GROUND))
    mid = gen.loosen(rng, ty, p=0.5)
    top = gen.loosen(rng, mid, p=0.8)
    m = g.value(ty, frozenset(row.names()), {}, 2)
    one_step = core.ValUpcast(ty, top, m)
    two_step = core.ValUpcast(mid, top, core.ValUpcast(ty, mid, m))
    if rng.random() < 0.5:
        # and back down, in one step against two
        left: core.Term = core.ValDowncast(ty, top, one_step)
        right: core.Term = core.ValDowncast(
            ty, mid, core.ValDowncast(mid, top, two_step)
        )
        out_ty: ValueType = ty
    else:
        left, right, out_ty = one_step, two_step, top
    ctx = _ground_harness_ctx(g, out_ty)
    return LawCase(g.sig, ctx(left), ctx(right))


def case_commutation(seed: int) -> LawCase:
    """Value casts and effect casts slide past each other."""
    rng, g = _gen_ctx(seed)
    row = gen.gen_row(rng, g.sig)
    ty = Arrow(rng.choice(gen.GROUND), gen.gen_row(rng, g.sig), rng.choice(gen.GROUND))
    hi = gen.loosen(rng, ty, p=0.7)
    m = g.term(ty, frozenset(row.names()), {}, 2)
    left = core.ValUpcast(ty, hi, core.EffUpcast(row, DYN, m))
    right = core.EffUpcast(row, DYN, core.ValUpcast(ty, hi, m))
    ctx = _ground_harness_ctx(g, hi)
    return LawCase(g.sig, ctx(left), ctx(right))


def case_forwarding(seed: int) -> LawCase:
    """Forwarding an operation explicitly equals not handling it at all."""
    rng, g = _gen_ctx(seed)
    names = sorted(g.sig.names())
    if len(names) < 2:
        fwd = names[0]
        handled: list[str] = []
    else:
        fwd = rng.choice(names)
        rest = [n for n in names if n != fwd]
        handled = rng.sample(rest, rng.randint(0, len(rest)))
    scope = frozenset(names)
    m = g.term(gen.STR, scope, {}, 3)
    decl_f = g.sig.get(fwd)
    assert decl_f is not None
    # force at least one raise of the forwarded operation
    m = core.Let(
        core.Raise(fwd, decl_f.req, decl_f.resp, g.value(decl_f.req, scope, {}, 1)),
        g.name(),
        m,
    )
    result_eff = g.sig.at(sorted(scope))
    base = []
    for op in handled:
        decl = g.sig.get(op)
        assert decl is not None
        p, k = g.name("p"), g.name("k")
        base.append(
            core.Clause(
                op,
                p,
                k,
                core.App(core.Var(k), g.value(decl.resp, frozenset(), {}, 1)),
                decl.req,
                decl.resp,
            )
        )
    p, k = g.name("p"), g.name("k")
    fwd_clause = core.Clause(
        fwd,
        p,
        k,
        core.App(core.Var(k), core.Raise(fwd, decl_f.req, decl_f.resp, core.Var(p))),
        decl_f.req,
        decl_f.resp,
    )
    rv = g.name("r")

    def inner(with_clause: bool) -> core.Term:
        clauses = tuple(base) + ((fwd_clause,) if with_clause else ())
        return core.Handle(m, rv, core.Var(rv), clauses, result_eff, gen.STR, True)

    ctx = _ground_harness_ctx(g, gen.STR)
    return LawCase(g.sig, ctx(inner(False)), ctx(inner(True)))


def case_factorization(seed: int) -> Optional[tuple[Signature, tuple[core.Term, ...]]]:
    """Four spellings of one factored cast, each in the same harness."""
    rng, g = _gen_ctx(seed)
    row = gen.gen_row(rng, g.sig)
    a: ValueType = Arrow(
        rng.choice(gen.GROUND), row, rng.choice((gen.STR, gen.BOOL, QueueOf(gen.STR)))
    )
    # widen rows (subtyping), then loosen sites (precision): a <~ b
    b = gen.loosen(rng, _widen(rng, g.sig, a), p=0.5)
    if not gradual_subtype(a, b):
        return None
    m = g.value(a, frozenset(row.names()), {}, 2)
    variants = cast_factorizations(a, b, m)
    ctx = _ground_harness_ctx(g, b)
    return g.sig, tuple(ctx(v) for v in variants)


def _widen(rng: random.Random, sig: Signature, t: ValueType) -> ValueType:
    """A supertype of t: rows may gain operations, structure is kept."""
    if isinstance(t, (Bool, Unit, Str)):
        return t
    if isinstance(t, QueueOf):
        return QueueOf(_widen(rng, sig, t.elem))
    if isinstance(t, Arrow):
        eff = t.eff
        if isinstance(eff, Concrete):
            extra = [n for n in sig.names() if n not in eff and rng.random() < 0.5]
            eff = Concrete(dict(eff.ops) | {n: sig.get(n) for n in extra})
        return Arrow(t.dom, eff, _widen(rng, sig, t.cod))
    return t


# ---------------------------------------------------------------------------
# Batches and the report


LAWS: dict[str, Callable[[int], LawCase]] = {
    "effect-cast-handler": case_effect_cast_vs_handler,
    "fun-cast-wrapper": case_fun_cast_vs_wrapper,
    "retraction": case_retraction,
    "decomposition": case_decomposition,
    "commutation": case_commutation,
    "forwarding": case_forwarding,
}


@dataclass(frozen=True)
class CaseRecord:
    check: str
    seed: int
    verdict: str
    left: str
    right: str
    steps_left: int
    steps_right: int

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)


def run_law_case(law: str, seed: int, fuel: int = 200_000) -> CaseRecord:
    case = LAWS[law](seed)
    lr = ev.run(case.sig, case.left, fuel=fuel)
    rr = ev.run(case.sig, case.right, fuel=fuel)
    equal = outcomes_equal(lr.outcome, rr.outcome)
    return CaseRecord(
        law,
        seed,
        "holds" if equal else "violated",
        describe_outcome(lr.outcome),
        describe_outcome(rr.outcome),
        lr.steps,
        rr.steps,
    )


def run_factorization_case(seed: int, fuel: int = 200_000) -> Optional[CaseRecord]:
    got = case_factorization(seed)
    if got is None:
        return None
    sig, variants = got
    runs = [ev.run(sig, v, fuel=fuel) for v in variants]
    outs = [r.outcome for r in runs]
    equal = all(outcomes_equal(outs[0], o) for o in outs[1:])
    return CaseRecord(
        "factorization",
        seed,
        "holds" if equal else "violated",
        describe_outcome(outs[0]),
        "; ".join(describe_outcome(o) for o in outs[1:]),
        runs[0].steps,
        max(r.steps for r in runs[1:]),
    )


def run_graduality_case(seed: int, fuel: int = 200_000) -> Optional[CaseRecord]:
    rng = random.Random(seed)
    program = gen.gen_surface_program(seed)
    pair = imprecisify(program, rng)
    if pair is None:
        return None
    res = check_graduality_pair(pair, fuel=fuel)
    return CaseRecord(
        "graduality",
        seed,
        str(res.verdict).split(" ")[0],
        describe_outcome(res.left) if res.left is not None else "static",
        describe_outcome(res.right) if res.right is not None else "static",
        0,
        0,
    )


@dataclass
class ConformanceReport:
    records: list[CaseRecord] = field(default_factory=list)

    @property
    def violations(self) -> list[CaseRecord]:
        return [r for r in self.records if r.verdict == "violated"]

    def lines(self) -> str:
        return "\n".join(r.to_json() for r in self.records)


def run_conformance(
    seed: int = 0,
    cases_per_law: int = 25,
    fuel: int = 200_000,
    emit: Optional[Callable[[str], None]] = None,
) -> ConformanceReport:
    """Run every law batch from one master seed; verdicts never lie.

    Each case derives its seed from the master seed, so the whole report
    is reproducible from a single number.
    """
    report = ConformanceReport()

    def record(r: Optional[CaseRecord]):
        if r is None:
            return
        report.records.append(r)
        if emit is not None:
            emit(r.to_json())

    for law in LAWS:
        for i in range(cases_per_law):
            record(run_law_case(law, seed * 100_003 + i, fuel=fuel))
    extra = 0
    found = 0
    while found < cases_per_law and extra < cases_per_law * 4:
        r = run_factorization_case(seed * 100_003 + extra, fuel=fuel)
        extra += 1
        if r is not None:
            found += 1
            record(r)
    drawn = 0
    kept = 0
    while kept < cases_per_law and drawn < cases_per_law * 4:
        r = run_graduality_case(seed * 100_003 + drawn, fuel=fuel)
        drawn += 1
        if r is not None:
            kept += 1
            record(r)
    return report
