"""Elaboration from the surface language into the cast calculus.

Elaboration typechecks a surface program and inserts casts at every point
where typing information of different precision meets.  Each module is
processed against its own local typing of effect names (declared or
imported); modules turn into a chain of let-bindings over mangled names
(`x#3`), so definitions with the same surface name in different modules
cannot collide.  The final term of the main block closes the chain.

Inserted casts are oblique: a value cast routes through the erasure of its
endpoints (`up to erased source, down from erased target`) and an effect
cast routes through the dynamic effect type.  Identity components are
elided, so a cast between equal types disappears entirely.

Where several subterm effect rows meet (let, if, application, handlers) the
combined row is their gradual join, in which the dynamic row absorbs:
as soon as one operand is dynamic the whole position is dynamic, and the
concrete operands are upcast into it.  Checks are deferred to the places
that demand a concrete row (handler boundaries, annotations, imports)
rather than planted around every dynamic subterm, so mixing precision
never introduces failure points that the fully dynamic program lacks.

Handlers cast their scrutinee so that every effect it may raise is either
caught by a clause or present in the result row.  With a concrete scrutinee
row and a dynamic result row, uncaught operations are upcast to their
erased typings; with a dynamic scrutinee row and a concrete result, the
scrutinee is downcast to caught-plus-result; when both are concrete the
uncaught operations must already sit in the result row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import core, surface as s
from .typesys import (
    Arrow, Bool, Concrete, DYN, Dyn, EMPTY, EffectType, JoinUndefined, OpSig,
    QueueOf, Signature, Str, Unit, ValueType, compatible, erase, gradual_join,
    gradual_subtype, subtype,
)


class ElabError(Exception):
    def __init__(self, message: str, pos: Optional[tuple] = None):
        if pos is not None:
            message = f"{pos[0]}:{pos[1]}: {message}"
        super().__init__(message)
        self.pos = pos


@dataclass(frozen=True)
class ModuleExports:
    """What one module makes visible: effect typings and value bindings
    (surface name to mangled core name and local type)."""

    effects: dict[str, tuple[ValueType, ValueType]]
    values: dict[str, tuple[str, ValueType]]


@dataclass(frozen=True)
class ElabResult:
    sig: Signature
    term: "core.Term"
    eff: EffectType
    val: ValueType


# ---------------------------------------------------------------------------
# surface free variables (to detect self-referential definitions)


def surface_free_vars(t: s.STerm) -> frozenset[str]:
    if isinstance(t, s.SVar):
        return frozenset({t.name})
    if isinstance(t, (s.SBoolLit, s.SUnitLit, s.SStrLit, s.SEmptyQueue)):
        return frozenset()
    if isinstance(t, s.SLam):
        return surface_free_vars(t.body) - {t.var}
    if isinstance(t, s.SApp):
        return surface_free_vars(t.fn) | surface_free_vars(t.arg)
    if isinstance(t, s.SLet):
        return surface_free_vars(t.bound) | (surface_free_vars(t.body) - {t.var})
    if isinstance(t, s.SIf):
        return (
            surface_free_vars(t.cond)
            | surface_free_vars(t.then)
            | surface_free_vars(t.els)
        )
    if isinstance(t, s.SConcat):
        return surface_free_vars(t.left) | surface_free_vars(t.right)
    if isinstance(t, s.SEnqueue):
        return surface_free_vars(t.queue) | surface_free_vars(t.elem)
    if isinstance(t, s.SMatch):
        return (
            surface_free_vars(t.scrutinee)
            | surface_free_vars(t.empty_body)
            | (surface_free_vars(t.cons_body) - {t.head_var, t.rest_var})
        )
    if isinstance(t, s.SRaise):
        return surface_free_vars(t.payload)
    if isinstance(t, s.SHandle):
        out = surface_free_vars(t.scrutinee)
        out |= surface_free_vars(t.ret_body) - {t.ret_var}
        for c in t.clauses:
            out |= surface_free_vars(c.body) - {c.payload_var, c.resume_var}
        return out
    if isinstance(t, (s.SAscribeType, s.SAscribeEff)):
        return surface_free_vars(t.term)
    raise TypeError(f"not a surface term: {t!r}")


# ---------------------------------------------------------------------------
# the elaborator


class _Elab:
    def __init__(self):
        self.sig = Signature({})
        self.delta: dict[str, ModuleExports] = {}
        self.bindings: list[tuple[str, core.Term, EffectType]] = []
        self._fresh = 0

    def fresh(self) -> str:
        name = f"%{self._fresh}"
        self._fresh += 1
        return name

    def mangle(self, name: str) -> str:
        return f"{name}#{len(self.bindings)}"

    # -- types

    def elab_eff(self, eff: s.SEffect, gamma_eff) -> EffectType:
        if isinstance(eff, s.SDynEff):
            return DYN
        ops = {}
        for name in eff.names:
            if name not in gamma_eff:
                raise ElabError(f"unknown effect {name}", eff.pos)
            req, resp = gamma_eff[name]
            ops[name] = OpSig(req, resp)
        return Concrete(ops)

    def elab_type(self, ty: s.SType, gamma_eff) -> ValueType:
        if isinstance(ty, s.SBool):
            return Bool()
        if isinstance(ty, s.SUnit):
            return Unit()
        if isinstance(ty, s.SStr):
            return Str()
        if isinstance(ty, s.SQueue):
            return QueueOf(self.elab_type(ty.elem, gamma_eff))
        if isinstance(ty, s.SArrow):
            return Arrow(
                self.elab_type(ty.dom, gamma_eff),
                self.elab_eff(ty.eff, gamma_eff),
                self.elab_type(ty.cod, gamma_eff),
            )
        raise TypeError(f"not a surface type: {ty!r}")

    # -- oblique casts.  A cast is emitted only when the endpoints differ in
    # precision; endpoints related by plain subtyping need no cast because
    # the core checker subsumes along <= wherever elaboration widens.

    def cast_value(self, target: ValueType, source: ValueType, term, pos) -> core.Term:
        if target == source or subtype(source, target):
            return term
        if not gradual_subtype(source, target):
            raise ElabError(f"{source} is not coercible to {target}", pos)
        if source != erase(source):
            term = core.ValUpcast(source, erase(source), term)
        if target != erase(target):
            term = core.ValDowncast(target, erase(target), term)
        return term

    def cast_eff(self, target: EffectType, source: EffectType, term, pos) -> core.Term:
        if target == source or subtype(source, target):
            return term
        if not gradual_subtype(source, target):
            raise ElabError(f"effects {source} are not coercible to {target}", pos)
        if source != DYN:
            term = core.EffUpcast(source, DYN, term)
        if target != DYN:
            term = core.EffDowncast(target, DYN, term)
        return term

    def join(self, pos, *effs: EffectType) -> EffectType:
        out = effs[0]
        for e in effs[1:]:
            try:
                out = gradual_join(out, e)
            except JoinUndefined as exc:
                raise ElabError(f"cannot combine effect rows: {exc}", pos) from exc
        return out

    # -- terms

    def elab_term(self, t: s.STerm, gamma_eff, gamma_val, hint=None):
        """Returns (core term, effect type, value type).  The hint is a
        checking-mode value type used to annotate bare lambdas and empty
        queues; it never replaces the synthesized type."""
        if isinstance(t, s.SVar):
            if t.name not in gamma_val:
                if t.name in gamma_eff:
                    raise ElabError(f"effect {t.name} used as a value", t.pos)
                raise ElabError(f"unbound variable {t.name}", t.pos)
            name, ty = gamma_val[t.name]
            return core.Var(name), EMPTY, ty
        if isinstance(t, s.SBoolLit):
            return core.BoolLit(t.value), EMPTY, Bool()
        if isinstance(t, s.SUnitLit):
            return core.UnitLit(), EMPTY, Unit()
        if isinstance(t, s.SStrLit):
            return core.StrLit(t.value), EMPTY, Str()
        if isinstance(t, s.SEmptyQueue):
            if not isinstance(hint, QueueOf):
                raise ElabError(
                    "cannot determine the element type of empty here; ascribe it",
                    t.pos,
                )
            return core.EmptyQueue(hint.elem), EMPTY, QueueOf(hint.elem)
        if isinstance(t, s.SLam):
            if t.ann is not None:
                dom = self.elab_type(t.ann, gamma_eff)
            elif isinstance(hint, Arrow):
                dom = hint.dom
            else:
                raise ElabError(
                    f"parameter {t.var} needs a type annotation", t.pos
                )
            body_hint = hint.cod if isinstance(hint, Arrow) else None
            inner = dict(gamma_val)
            inner[t.var] = (t.var, dom)
            body, beff, bval = self.elab_term(t.body, gamma_eff, inner, body_hint)
            return core.Lam(t.var, dom, body), EMPTY, Arrow(dom, beff, bval)
        if isinstance(t, s.SApp):
            return self._elab_app(t, gamma_eff, gamma_val)
        if isinstance(t, s.SLet):
            bound, beff, bval = self.elab_term(t.bound, gamma_eff, gamma_val)
            inner = dict(gamma_val)
            inner[t.var] = (t.var, bval)
            body, neff, nval = self.elab_term(t.body, gamma_eff, inner, hint)
            sigma = self.join(t.pos, beff, neff)
            return (
                core.Let(
                    self.cast_eff(sigma, beff, bound, t.pos),
                    t.var,
                    self.cast_eff(sigma, neff, body, t.pos),
                ),
                sigma,
                nval,
            )
        if isinstance(t, s.SIf):
            cond, ceff, cval = self.elab_term(t.cond, gamma_eff, gamma_val)
            if cval != Bool():
                raise ElabError(f"condition has type {cval}, not bool", t.pos)
            then, teff, tval = self.elab_term(t.then, gamma_eff, gamma_val, hint)
            els, eeff, eval_ = self.elab_term(t.els, gamma_eff, gamma_val, hint)
            try:
                out_val = gradual_join(tval, eval_)
            except JoinUndefined as exc:
                raise ElabError(f"branches do not agree: {exc}", t.pos) from exc
            sigma = self.join(t.pos, ceff, teff, eeff)
            return (
                core.If(
                    self.cast_eff(sigma, ceff, cond, t.pos),
                    self.cast_eff(
                        sigma, teff, self.cast_value(out_val, tval, then, t.pos), t.pos
                    ),
                    self.cast_eff(
                        sigma, eeff, self.cast_value(out_val, eval_, els, t.pos), t.pos
                    ),
                ),
                sigma,
                out_val,
            )
        if isinstance(t, s.SConcat):
            left, leff, lval = self.elab_term(t.left, gamma_eff, gamma_val)
            right, reff, rval = self.elab_term(t.right, gamma_eff, gamma_val)
            if lval != Str() or rval != Str():
                raise ElabError(f"++ needs str operands, got {lval} and {rval}", t.pos)
            sigma = self.join(t.pos, leff, reff)
            return (
                core.Concat(
                    self.cast_eff(sigma, leff, left, t.pos),
                    self.cast_eff(sigma, reff, right, t.pos),
                ),
                sigma,
                Str(),
            )
        if isinstance(t, s.SEnqueue):
            q_hint = hint if isinstance(hint, QueueOf) else None
            q, qeff, qval = self.elab_term(t.queue, gamma_eff, gamma_val, q_hint)
            if not isinstance(qval, QueueOf):
                raise ElabError(f"enqueue needs a queue, got {qval}", t.pos)
            v, veff, vval = self.elab_term(t.elem, gamma_eff, gamma_val, qval.elem)
            sigma = self.join(t.pos, qeff, veff)
            return (
                core.Enqueue(
                    self.cast_eff(sigma, qeff, q, t.pos),
                    self.cast_value(
                        qval.elem, vval, self.cast_eff(sigma, veff, v, t.pos), t.pos
                    ),
                ),
                sigma,
                qval,
            )
        if isinstance(t, s.SMatch):
            scr, seff, sval = self.elab_term(t.scrutinee, gamma_eff, gamma_val)
            if not isinstance(sval, QueueOf):
                raise ElabError(f"match needs a queue, got {sval}", t.pos)
            empty, eeff, eval_ = self.elab_term(t.empty_body, gamma_eff, gamma_val, hint)
            inner = dict(gamma_val)
            inner[t.head_var] = (t.head_var, sval.elem)
            inner[t.rest_var] = (t.rest_var, sval)
            cons, ceff, cval = self.elab_term(t.cons_body, gamma_eff, inner, hint)
            try:
                out_val = gradual_join(eval_, cval)
            except JoinUndefined as exc:
                raise ElabError(f"branches do not agree: {exc}", t.pos) from exc
            sigma = self.join(t.pos, seff, eeff, ceff)
            return (
                core.CaseQueue(
                    self.cast_eff(sigma, seff, scr, t.pos),
                    self.cast_eff(
                        sigma, eeff, self.cast_value(out_val, eval_, empty, t.pos), t.pos
                    ),
                    t.head_var,
                    t.rest_var,
                    self.cast_eff(
                        sigma, ceff, self.cast_value(out_val, cval, cons, t.pos), t.pos
                    ),
                ),
                sigma,
                out_val,
            )
        if isinstance(t, s.SRaise):
            if t.op not in gamma_eff:
                raise ElabError(f"unknown effect {t.op}", t.pos)
            req, resp = gamma_eff[t.op]
            payload, peff, pval = self.elab_term(t.payload, gamma_eff, gamma_val, req)
            if not gradual_subtype(pval, req):
                raise ElabError(
                    f"{t.op} expects a request of type {req}, got {pval}", t.pos
                )
            one = Concrete({t.op: OpSig(req, resp)})
            sigma = self.join(t.pos, peff, one)
            x = self.fresh()
            raised = core.Raise(t.op, req, resp, self.cast_value(req, pval, core.Var(x), t.pos))
            return (
                core.Let(
                    self.cast_eff(sigma, peff, payload, t.pos),
                    x,
                    self.cast_eff(sigma, one, raised, t.pos),
                ),
                sigma,
                resp,
            )
        if isinstance(t, s.SHandle):
            return self._elab_handle(t, gamma_eff, gamma_val)
        if isinstance(t, s.SAscribeType):
            ann = self.elab_type(t.ann, gamma_eff)
            inner, eff, val = self.elab_term(t.term, gamma_eff, gamma_val, ann)
            if not gradual_subtype(val, ann):
                raise ElabError(f"term has type {val}, which is not coercible to {ann}", t.pos)
            return self.cast_value(ann, val, inner, t.pos), eff, ann
        if isinstance(t, s.SAscribeEff):
            ann = self.elab_eff(t.ann, gamma_eff)
            inner, eff, val = self.elab_term(t.term, gamma_eff, gamma_val, hint)
            if not gradual_subtype(eff, ann):
                raise ElabError(f"term has effects {eff}, not coercible to {ann}", t.pos)
            return self.cast_eff(ann, eff, inner, t.pos), ann, val
        raise TypeError(f"not a surface term: {t!r}")

    def _elab_app(self, t: s.SApp, gamma_eff, gamma_val):
        fn, feff, fval = self.elab_term(t.fn, gamma_eff, gamma_val)
        if not isinstance(fval, Arrow):
            raise ElabError(f"cannot apply a term of type {fval}", t.pos)
        arg, aeff, aval = self.elab_term(t.arg, gamma_eff, gamma_val, fval.dom)
        if not gradual_subtype(aval, fval.dom):
            raise ElabError(
                f"argument has type {aval}, not coercible to {fval.dom}", t.pos
            )
        sigma = self.join(t.pos, feff, aeff, fval.eff)
        fn_cast = self.cast_eff(sigma, feff, fn, t.pos)
        # widen the latent row to the combined row so the call itself is
        # typeable at sigma; the join absorbs ?, so this is always an upcast
        fn_cast = self.cast_value(
            Arrow(fval.dom, sigma, fval.cod), fval, fn_cast, t.pos
        )
        arg_cast = self.cast_value(
            fval.dom, aval, self.cast_eff(sigma, aeff, arg, t.pos), t.pos
        )
        return core.App(fn_cast, arg_cast), sigma, fval.cod

    def _scrutinee_row(self, seff, sigma, caught: tuple[str, ...], gamma_eff, pos):
        """The row the handler scrutinee is cast to, so that everything it
        may raise is either caught or present in the result row."""
        gamma_part = {e: OpSig(*gamma_eff[e]) for e in caught}
        if isinstance(seff, Concrete) and isinstance(sigma, Concrete):
            leftover = set(seff.names()) - set(sigma.names()) - set(caught)
            if leftover:
                raise ElabError(
                    f"operations {sorted(leftover)} escape the handler but are "
                    f"not in the result row",
                    pos,
                )
            return Concrete({**dict(sigma.ops), **gamma_part})
        if isinstance(seff, Dyn) and isinstance(sigma, Concrete):
            return Concrete({**dict(sigma.ops), **gamma_part})
        if isinstance(seff, Concrete) and isinstance(sigma, Dyn):
            out = {}
            for name, op in seff.ops:
                if name in caught:
                    out[name] = op
                else:
                    req, resp = gamma_eff[name]
                    out[name] = OpSig(erase(req), erase(resp))
            return Concrete(out)
        return DYN

    def _elab_handle(self, t: s.SHandle, gamma_eff, gamma_val):
        sigma = self.elab_eff(t.eff_ann, gamma_eff)
        out_val = self.elab_type(t.type_ann, gamma_eff)
        scr, seff, sval = self.elab_term(t.scrutinee, gamma_eff, gamma_val)
        ops = [c.op for c in t.clauses]
        if len(set(ops)) != len(ops):
            raise ElabError("duplicate handler clauses", t.pos)
        for c in t.clauses:
            if c.op not in gamma_eff:
                raise ElabError(f"unknown effect {c.op}", c.pos)
        caught = tuple(ops)
        scr_row = self._scrutinee_row(seff, sigma, caught, gamma_eff, t.pos)
        scr_cast = self.cast_eff(scr_row, seff, scr, t.pos)

        inner = dict(gamma_val)
        inner[t.ret_var] = (t.ret_var, sval)
        ret, reff, rval = self.elab_term(t.ret_body, gamma_eff, inner, out_val)
        if not gradual_subtype(rval, out_val):
            raise ElabError(
                f"return clause has type {rval}, not coercible to {out_val}", t.pos
            )
        if not gradual_subtype(reff, sigma):
            raise ElabError(
                f"return clause has effects {reff}, not coercible to {sigma}", t.pos
            )
        ret_cast = self.cast_eff(
            sigma, reff, self.cast_value(out_val, rval, ret, t.pos), t.pos
        )

        clauses = []
        for c in t.clauses:
            req, resp = gamma_eff[c.op]
            if t.deep:
                k_type = Arrow(resp, sigma, out_val)
            else:
                k_type = Arrow(resp, scr_row, sval)
            cinner = dict(gamma_val)
            cinner[c.payload_var] = (c.payload_var, req)
            cinner[c.resume_var] = (c.resume_var, k_type)
            body, ceff, cval = self.elab_term(c.body, gamma_eff, cinner, out_val)
            if not gradual_subtype(cval, out_val):
                raise ElabError(
                    f"clause {c.op} has type {cval}, not coercible to {out_val}", c.pos
                )
            if not gradual_subtype(ceff, sigma):
                raise ElabError(
                    f"clause {c.op} has effects {ceff}, not coercible to {sigma}", c.pos
                )
            body_cast = self.cast_eff(
                sigma, ceff, self.cast_value(out_val, cval, body, c.pos), c.pos
            )
            clauses.append(
                core.Clause(c.op, c.payload_var, c.resume_var, body_cast, req, resp)
            )
        return (
            core.Handle(
                scr_cast, t.ret_var, ret_cast, tuple(clauses), sigma, out_val,
                deep=t.deep,
            ),
            sigma,
            out_val,
        )

    # -- declarations

    def elab_decl(self, d: s.SDecl, gamma_eff, gamma_val):
        if isinstance(d, s.SEffectDecl):
            if d.name in self.sig:
                raise ElabError(f"effect {d.name} is already declared", d.pos)
            req = self.elab_type(d.req, gamma_eff)
            resp = self.elab_type(d.resp, gamma_eff)
            self.sig = self.sig.extend(d.name, OpSig(erase(req), erase(resp)))
            gamma_eff[d.name] = (req, resp)
            return
        if isinstance(d, s.SImportEffect):
            exports = self.delta.get(d.module)
            if exports is None:
                raise ElabError(f"unknown module {d.module}", d.pos)
            if d.name not in exports.effects:
                raise ElabError(f"module {d.module} has no effect {d.name}", d.pos)
            if d.name in gamma_eff:
                raise ElabError(f"effect {d.name} is already in scope", d.pos)
            dreq, dresp = exports.effects[d.name]
            req = self.elab_type(d.req, gamma_eff)
            resp = self.elab_type(d.resp, gamma_eff)
            if not (compatible(req, dreq) and compatible(resp, dresp)):
                raise ElabError(
                    f"import of {d.name} at {req} ~> {resp} is incompatible with "
                    f"its declaration at {dreq} ~> {dresp}",
                    d.pos,
                )
            gamma_eff[d.name] = (req, resp)
            return
        if isinstance(d, s.SImportValue):
            exports = self.delta.get(d.module)
            if exports is None:
                raise ElabError(f"unknown module {d.module}", d.pos)
            if d.name not in exports.values:
                raise ElabError(f"module {d.module} has no value {d.name}", d.pos)
            source_name, source_ty = exports.values[d.name]
            ann = self.elab_type(d.ann, gamma_eff)
            if not gradual_subtype(source_ty, ann):
                raise ElabError(
                    f"{d.module}.{d.name} has type {source_ty}, not coercible to {ann}",
                    d.pos,
                )
            mangled = self.mangle(d.alias)
            bound = self.cast_value(ann, source_ty, core.Var(source_name), d.pos)
            self.bindings.append((mangled, bound, EMPTY))
            gamma_val[d.alias] = (mangled, ann)
            return
        if isinstance(d, s.SDefine):
            ann = self.elab_type(d.ann, gamma_eff)
            mangled = self.mangle(d.name)
            if d.name in surface_free_vars(d.body):
                bound, eff = self._elab_recursive(d, ann, mangled, gamma_eff, gamma_val)
            else:
                body, eff, val = self.elab_term(d.body, gamma_eff, gamma_val, ann)
                if not gradual_subtype(val, ann):
                    raise ElabError(
                        f"{d.name} has type {val}, not coercible to {ann}", d.pos
                    )
                bound = self.cast_value(ann, val, body, d.pos)
            self.bindings.append((mangled, bound, eff))
            gamma_val[d.name] = (mangled, ann)
            return
        raise TypeError(f"not a declaration: {d!r}")

    def _elab_recursive(self, d: s.SDefine, ann, mangled, gamma_eff, gamma_val):
        """A self-referential define becomes a fix whose body is a lambda; the
        body is cast so the lambda carries exactly the annotated arrow type."""
        if not isinstance(ann, Arrow):
            raise ElabError(
                f"recursive definition {d.name} needs an arrow annotation", d.pos
            )
        if not isinstance(d.body, s.SLam):
            raise ElabError(
                f"recursive definition {d.name} must be a function", d.pos
            )
        lam = d.body
        if lam.ann is not None:
            dom = self.elab_type(lam.ann, gamma_eff)
            if not subtype(ann.dom, dom):
                raise ElabError(
                    f"parameter annotation {dom} does not cover the declared "
                    f"domain {ann.dom}",
                    lam.pos,
                )
        else:
            dom = ann.dom
        inner = dict(gamma_val)
        inner[d.name] = (mangled, ann)
        inner[lam.var] = (lam.var, dom)
        body, beff, bval = self.elab_term(lam.body, gamma_eff, inner, ann.cod)
        if not gradual_subtype(bval, ann.cod):
            raise ElabError(
                f"{d.name} returns {bval}, not coercible to {ann.cod}", d.pos
            )
        if not gradual_subtype(beff, ann.eff):
            raise ElabError(
                f"{d.name} has latent effects {beff}, not coercible to {ann.eff}",
                d.pos,
            )
        body_cast = self.cast_eff(
            ann.eff, beff, self.cast_value(ann.cod, bval, body, d.pos), d.pos
        )
        return core.Fix(mangled, ann, core.Lam(lam.var, dom, body_cast)), EMPTY

    # -- programs

    def elab_program(self, p: s.SProgram) -> ElabResult:
        for m in p.modules:
            if m.name in self.delta:
                raise ElabError(f"duplicate module {m.name}", m.pos)
            gamma_eff: dict = {}
            gamma_val: dict = {}
            for d in m.decls:
                self.elab_decl(d, gamma_eff, gamma_val)
            self.delta[m.name] = ModuleExports(dict(gamma_eff), dict(gamma_val))
        gamma_eff, gamma_val = {}, {}
        for d in p.main_decls:
            self.elab_decl(d, gamma_eff, gamma_val)
        term, eff, val = self.elab_term(p.main_term, gamma_eff, gamma_val)
        for name, bound, beff in reversed(self.bindings):
            sigma = self.join(None, beff, eff)
            term = core.Let(
                self.cast_eff(sigma, beff, bound, None),
                name,
                self.cast_eff(sigma, eff, term, None),
            )
            eff = sigma
        return ElabResult(self.sig, term, eff, val)


def elab_program(p: s.SProgram) -> ElabResult:
    return _Elab().elab_program(p)


def elab_source(src: str) -> ElabResult:
    return elab_program(s.parse_program(src))
