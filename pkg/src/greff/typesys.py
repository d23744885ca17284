"""Value types, effect types, and the relations between them.

Value types are bool, 1 (unit), str, Queue A, and effectful arrows
A -[sigma]> B.  An effect type sigma is either the dynamic effect ? or a
finite map from operation names to request/response typings eps@A~>B.
A signature Sigma gives every declared operation a non-tracking typing
(every effect annotation inside is ?); |t| erases a type down to it.

Four relations are implemented:

  subtype          A <= B     width/depth subtyping; ? <= ? only
  precision        A |_ B     more-precise-than; sigma |_ ? for any sigma
  gradual_subtype  A <~ B     subtyping up to precision (adds ? axioms)
  compatible       A ~ B      gradual subtyping in both directions

plus the gradual join/meet used when elaboration combines branch types,
the least upper bound in <= used by the core typechecker, and precision
derivations (proof terms for |_) with their composition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union


class JoinUndefined(Exception):
    """Raised when a join/meet/lub does not exist."""


class EndpointMismatch(Exception):
    """Raised when composing derivations whose endpoints do not meet."""


class DerivationError(Exception):
    """Raised when no precision derivation exists for the given endpoints."""


class SignatureError(Exception):
    """Raised for malformed signatures or unknown operations."""


# ---------------------------------------------------------------------------
# Syntax of types


@dataclass(frozen=True)
class Bool:
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class Unit:
    def __str__(self) -> str:
        return "1"


@dataclass(frozen=True)
class Str:
    def __str__(self) -> str:
        return "str"


@dataclass(frozen=True)
class QueueOf:
    elem: "ValueType"

    def __str__(self) -> str:
        return f"Queue {_atom(self.elem)}"


@dataclass(frozen=True)
class Arrow:
    dom: "ValueType"
    eff: "EffectType"
    cod: "ValueType"

    def __str__(self) -> str:
        return f"{_atom(self.dom)} -{self.eff}> {self.cod}"


@dataclass(frozen=True)
class OpSig:
    """Request/response typing of one operation: eps@req ~> resp."""

    req: "ValueType"
    resp: "ValueType"

    def __str__(self) -> str:
        return f"{self.req} ~> {self.resp}"


@dataclass(frozen=True)
class Dyn:
    """The dynamic effect ?."""

    def __str__(self) -> str:
        return "[?]"


@dataclass(frozen=True)
class Concrete:
    """A finite map from operation names to typings, kept name-sorted."""

    ops: tuple[tuple[str, OpSig], ...]

    def __init__(self, ops: Union[Mapping[str, OpSig], Iterable[tuple[str, OpSig]]]):
        items = sorted(dict(ops).items())
        object.__setattr__(self, "ops", tuple(items))

    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.ops)

    def get(self, name: str) -> Optional[OpSig]:
        return dict(self.ops).get(name)

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self.ops)

    def __str__(self) -> str:
        return "[" + ",".join(self.names()) + "]"


ValueType = Union[Bool, Unit, Str, QueueOf, Arrow]
EffectType = Union[Dyn, Concrete]
Type = Union[ValueType, EffectType]

DYN = Dyn()
EMPTY = Concrete({})


def _atom(t: ValueType) -> str:
    s = str(t)
    return f"({s})" if isinstance(t, (Arrow, QueueOf)) else s


def is_value_type(t: Type) -> bool:
    return isinstance(t, (Bool, Unit, Str, QueueOf, Arrow))


def is_effect_type(t: Type) -> bool:
    return isinstance(t, (Dyn, Concrete))


# ---------------------------------------------------------------------------
# Signatures


@dataclass(frozen=True)
class Signature:
    """Declared operations at their non-tracking (fully erased) typings."""

    ops: tuple[tuple[str, OpSig], ...]

    def __init__(self, ops: Union[Mapping[str, OpSig], Iterable[tuple[str, OpSig]]]):
        items = sorted(dict(ops).items())
        for name, sig in items:
            if sig.req != erase(sig.req) or sig.resp != erase(sig.resp):
                raise SignatureError(f"signature typing of {name} is not erased: {sig}")
        object.__setattr__(self, "ops", tuple(items))

    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.ops)

    def get(self, name: str) -> Optional[OpSig]:
        return dict(self.ops).get(name)

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self.ops)

    def at(self, names: Iterable[str]) -> Concrete:
        """The concrete effect giving `names` their signature typings."""
        table = dict(self.ops)
        missing = [n for n in names if n not in table]
        if missing:
            raise SignatureError(f"operations not in signature: {missing}")
        return Concrete({n: table[n] for n in names})

    def extend(self, name: str, sig: OpSig) -> "Signature":
        if name in self:
            raise SignatureError(f"operation {name} already declared")
        return Signature(dict(self.ops) | {name: sig})


def ops_of(eff: EffectType, sig: Signature) -> dict[str, OpSig]:
    """The operations an effect may raise; ? means every declared operation."""
    if isinstance(eff, Dyn):
        return dict(sig.ops)
    return dict(eff.ops)


# ---------------------------------------------------------------------------
# Erasure


def erase(t: Type) -> Type:
    """Replace every effect annotation inside t with ?."""
    if isinstance(t, (Bool, Unit, Str)):
        return t
    if isinstance(t, QueueOf):
        return QueueOf(erase(t.elem))
    if isinstance(t, Arrow):
        return Arrow(erase(t.dom), DYN, erase(t.cod))
    if isinstance(t, Dyn):
        return DYN
    if isinstance(t, Concrete):
        return DYN
    raise TypeError(f"not a type: {t!r}")


def wellformed(t: Type, sig: Signature) -> bool:
    """Every operation mentioned in t is declared and erases to its signature typing."""
    if isinstance(t, (Bool, Unit, Str, Dyn)):
        return True
    if isinstance(t, QueueOf):
        return wellformed(t.elem, sig)
    if isinstance(t, Arrow):
        return wellformed(t.dom, sig) and wellformed(t.eff, sig) and wellformed(t.cod, sig)
    if isinstance(t, Concrete):
        for name, op in t.ops:
            declared = sig.get(name)
            if declared is None:
                return False
            if erase(op.req) != declared.req or erase(op.resp) != declared.resp:
                return False
            if not (wellformed(op.req, sig) and wellformed(op.resp, sig)):
                return False
        return True
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# Subtyping (width/depth; the dynamic effect is only below itself)


def subtype(t: Type, u: Type) -> bool:
    if isinstance(t, (Bool, Unit, Str)):
        return t == u
    if isinstance(t, QueueOf):
        return isinstance(u, QueueOf) and subtype(t.elem, u.elem)
    if isinstance(t, Arrow):
        return (
            isinstance(u, Arrow)
            and subtype(u.dom, t.dom)
            and subtype(t.eff, u.eff)
            and subtype(t.cod, u.cod)
        )
    if isinstance(t, Dyn):
        return isinstance(u, Dyn)
    if isinstance(t, Concrete):
        if not isinstance(u, Concrete):
            return False
        table = dict(u.ops)
        for name, op in t.ops:
            wider = table.get(name)
            if wider is None:
                return False
            # requests covariant, responses contravariant
            if not (subtype(op.req, wider.req) and subtype(wider.resp, op.resp)):
                return False
        return True
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# Precision (covariant everywhere; concrete effects need equal domains)


def precision(t: Type, u: Type) -> bool:
    if isinstance(t, (Bool, Unit, Str)):
        return t == u
    if isinstance(t, QueueOf):
        return isinstance(u, QueueOf) and precision(t.elem, u.elem)
    if isinstance(t, Arrow):
        return (
            isinstance(u, Arrow)
            and precision(t.dom, u.dom)
            and precision(t.eff, u.eff)
            and precision(t.cod, u.cod)
        )
    if is_effect_type(t):
        if isinstance(u, Dyn):
            return True
        if isinstance(t, Dyn):
            return False
        assert isinstance(t, Concrete) and isinstance(u, Concrete)
        if t.names() != u.names():
            return False
        return all(
            precision(a.req, b.req) and precision(a.resp, b.resp)
            for (_, a), (_, b) in zip(t.ops, u.ops)
        )
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# Gradual subtyping and compatibility


def gradual_subtype(t: Type, u: Type) -> bool:
    if isinstance(t, (Bool, Unit, Str)):
        return t == u
    if isinstance(t, QueueOf):
        return isinstance(u, QueueOf) and gradual_subtype(t.elem, u.elem)
    if isinstance(t, Arrow):
        return (
            isinstance(u, Arrow)
            and gradual_subtype(u.dom, t.dom)
            and gradual_subtype(t.eff, u.eff)
            and gradual_subtype(t.cod, u.cod)
        )
    if is_effect_type(t):
        # ? is gradually below and above every effect type
        if isinstance(t, Dyn) or isinstance(u, Dyn):
            return True
        assert isinstance(t, Concrete) and isinstance(u, Concrete)
        table = dict(u.ops)
        for name, op in t.ops:
            wider = table.get(name)
            if wider is None:
                return False
            if not (gradual_subtype(op.req, wider.req) and gradual_subtype(wider.resp, op.resp)):
                return False
        return True
    raise TypeError(f"not a type: {t!r}")


def compatible(t: Type, u: Type) -> bool:
    return gradual_subtype(t, u) and gradual_subtype(u, t)


# ---------------------------------------------------------------------------
# Gradual join/meet (used when elaboration merges branch/operand types)


def gradual_join(t: Type, u: Type) -> Type:
    if isinstance(t, (Bool, Unit, Str)):
        if t == u:
            return t
        raise JoinUndefined(f"{t} join {u}")
    if isinstance(t, QueueOf) and isinstance(u, QueueOf):
        return QueueOf(gradual_join(t.elem, u.elem))
    if isinstance(t, Arrow) and isinstance(u, Arrow):
        return Arrow(
            gradual_meet(t.dom, u.dom),
            gradual_join(t.eff, u.eff),
            gradual_join(t.cod, u.cod),
        )
    if is_effect_type(t) and is_effect_type(u):
        # ? absorbs on join: merging a dynamic row with anything yields the
        # dynamic row, so mixed-precision merges defer checks to casts rather
        # than committing the result to one side's concrete row.  (Committing
        # would plant a concrete downcast around the dynamic subterm, which
        # errors on effects the other side never mentioned.)
        if isinstance(t, Dyn) or isinstance(u, Dyn):
            return DYN
        return _concrete_merge(t, u, join=True)
    raise JoinUndefined(f"{t} join {u}")


def gradual_meet(t: Type, u: Type) -> Type:
    if isinstance(t, (Bool, Unit, Str)):
        if t == u:
            return t
        raise JoinUndefined(f"{t} meet {u}")
    if isinstance(t, QueueOf) and isinstance(u, QueueOf):
        return QueueOf(gradual_meet(t.elem, u.elem))
    if isinstance(t, Arrow) and isinstance(u, Arrow):
        return Arrow(
            gradual_join(t.dom, u.dom),
            gradual_meet(t.eff, u.eff),
            gradual_meet(t.cod, u.cod),
        )
    if is_effect_type(t) and is_effect_type(u):
        # Dual to join: ? is the identity on meet, the concrete side wins.
        if isinstance(t, Dyn):
            return u
        if isinstance(u, Dyn):
            return t
        return _concrete_merge(t, u, join=False)
    raise JoinUndefined(f"{t} meet {u}")


def _concrete_merge(t: Concrete, u: Concrete, join: bool) -> Concrete:
    """Join: union of domains; meet: intersection.  Shared names must carry
    the same typing on both sides (elaboration always merges types drawn from
    one module context, where this holds)."""
    left, right = dict(t.ops), dict(u.ops)
    out: dict[str, OpSig] = {}
    for name in set(left) | set(right):
        a, b = left.get(name), right.get(name)
        if a is not None and b is not None:
            if a != b:
                raise JoinUndefined(f"operation {name} carries {a} and {b}")
            if join:
                out[name] = OpSig(gradual_join(a.req, b.req), gradual_meet(a.resp, b.resp))
            else:
                out[name] = OpSig(gradual_meet(a.req, b.req), gradual_join(a.resp, b.resp))
        elif join:
            out[name] = a if a is not None else b  # type: ignore[assignment]
    return Concrete(out)


# ---------------------------------------------------------------------------
# Least upper/greatest lower bounds in <= (core typechecker; no ? axioms)


def lub(t: Type, u: Type) -> Type:
    if isinstance(t, (Bool, Unit, Str)):
        if t == u:
            return t
        raise JoinUndefined(f"{t} lub {u}")
    if isinstance(t, QueueOf) and isinstance(u, QueueOf):
        return QueueOf(lub(t.elem, u.elem))
    if isinstance(t, Arrow) and isinstance(u, Arrow):
        return Arrow(glb(t.dom, u.dom), lub(t.eff, u.eff), lub(t.cod, u.cod))
    if is_effect_type(t) and is_effect_type(u):
        if isinstance(t, Dyn) and isinstance(u, Dyn):
            return DYN
        if isinstance(t, Dyn) or isinstance(u, Dyn):
            raise JoinUndefined("? has no common bound with a concrete effect in <=")
        left, right = dict(t.ops), dict(u.ops)
        out: dict[str, OpSig] = {}
        for name in set(left) | set(right):
            a, b = left.get(name), right.get(name)
            if a is not None and b is not None:
                out[name] = OpSig(lub(a.req, b.req), glb(a.resp, b.resp))
            else:
                out[name] = a if a is not None else b  # type: ignore[assignment]
        return Concrete(out)
    raise JoinUndefined(f"{t} lub {u}")


def glb(t: Type, u: Type) -> Type:
    if isinstance(t, (Bool, Unit, Str)):
        if t == u:
            return t
        raise JoinUndefined(f"{t} glb {u}")
    if isinstance(t, QueueOf) and isinstance(u, QueueOf):
        return QueueOf(glb(t.elem, u.elem))
    if isinstance(t, Arrow) and isinstance(u, Arrow):
        return Arrow(lub(t.dom, u.dom), glb(t.eff, u.eff), glb(t.cod, u.cod))
    if is_effect_type(t) and is_effect_type(u):
        if isinstance(t, Dyn) and isinstance(u, Dyn):
            return DYN
        if isinstance(t, Dyn) or isinstance(u, Dyn):
            raise JoinUndefined("? has no common bound with a concrete effect in <=")
        left, right = dict(t.ops), dict(u.ops)
        out: dict[str, OpSig] = {}
        for name in set(left) & set(right):
            a, b = left[name], right[name]
            out[name] = OpSig(glb(a.req, b.req), lub(a.resp, b.resp))
        return Concrete(out)
    raise JoinUndefined(f"{t} glb {u}")


# ---------------------------------------------------------------------------
# Precision derivations


@dataclass(frozen=True)
class BoolRefl:
    pass


@dataclass(frozen=True)
class UnitRefl:
    pass


@dataclass(frozen=True)
class StrRefl:
    pass


@dataclass(frozen=True)
class QueueCong:
    elem: "Derivation"


@dataclass(frozen=True)
class ArrowCong:
    dom: "Derivation"
    eff: "Derivation"
    cod: "Derivation"


@dataclass(frozen=True)
class DynRefl:
    """? |_ ?"""


@dataclass(frozen=True)
class Inj:
    """sigma_c |_ ?, via a derivation sigma_c |_ Sigma-at-support(sigma_c)."""

    inner: "Derivation"


@dataclass(frozen=True)
class ConcreteCong:
    """Pointwise derivations between concrete effects with equal domains."""

    ops: tuple[tuple[str, tuple["Derivation", "Derivation"]], ...]

    def __init__(self, ops):
        object.__setattr__(self, "ops", tuple(sorted(dict(ops).items())))


Derivation = Union[BoolRefl, UnitRefl, StrRefl, QueueCong, ArrowCong, DynRefl, Inj, ConcreteCong]


def derive_precision(sig: Signature, t: Type, u: Type) -> Derivation:
    """The unique derivation of t |_ u, or DerivationError if unrelated."""
    if isinstance(t, Bool) and isinstance(u, Bool):
        return BoolRefl()
    if isinstance(t, Unit) and isinstance(u, Unit):
        return UnitRefl()
    if isinstance(t, Str) and isinstance(u, Str):
        return StrRefl()
    if isinstance(t, QueueOf) and isinstance(u, QueueOf):
        return QueueCong(derive_precision(sig, t.elem, u.elem))
    if isinstance(t, Arrow) and isinstance(u, Arrow):
        return ArrowCong(
            derive_precision(sig, t.dom, u.dom),
            derive_precision(sig, t.eff, u.eff),
            derive_precision(sig, t.cod, u.cod),
        )
    if isinstance(t, Dyn) and isinstance(u, Dyn):
        return DynRefl()
    if isinstance(t, Concrete) and isinstance(u, Dyn):
        lifted = sig.at(t.names())
        return Inj(derive_precision(sig, t, lifted))
    if isinstance(t, Concrete) and isinstance(u, Concrete):
        if t.names() != u.names():
            raise DerivationError(f"effect domains differ: {t} vs {u}")
        table = dict(u.ops)
        ops = {}
        for name, op in t.ops:
            other = table[name]
            ops[name] = (
                derive_precision(sig, op.req, other.req),
                derive_precision(sig, op.resp, other.resp),
            )
        return ConcreteCong(ops)
    raise DerivationError(f"no precision derivation for {t} |_ {u}")


def endpoints(d: Derivation, sig: Signature) -> tuple[Type, Type]:
    """The (lower, upper) endpoints a derivation proves related."""
    if isinstance(d, BoolRefl):
        return Bool(), Bool()
    if isinstance(d, UnitRefl):
        return Unit(), Unit()
    if isinstance(d, StrRefl):
        return Str(), Str()
    if isinstance(d, QueueCong):
        lo, hi = endpoints(d.elem, sig)
        return QueueOf(lo), QueueOf(hi)
    if isinstance(d, ArrowCong):
        dlo, dhi = endpoints(d.dom, sig)
        elo, ehi = endpoints(d.eff, sig)
        clo, chi = endpoints(d.cod, sig)
        return Arrow(dlo, elo, clo), Arrow(dhi, ehi, chi)
    if isinstance(d, DynRefl):
        return DYN, DYN
    if isinstance(d, Inj):
        lo, hi = endpoints(d.inner, sig)
        if not isinstance(lo, Concrete) or hi != sig.at(lo.names()):
            raise DerivationError("Inj must reach the signature typing of its support")
        return lo, DYN
    if isinstance(d, ConcreteCong):
        lo_ops, hi_ops = {}, {}
        for name, (dr, ds) in d.ops:
            rlo, rhi = endpoints(dr, sig)
            slo, shi = endpoints(ds, sig)
            lo_ops[name] = OpSig(rlo, slo)
            hi_ops[name] = OpSig(rhi, shi)
        return Concrete(lo_ops), Concrete(hi_ops)
    raise TypeError(f"not a derivation: {d!r}")


def compose_derivations(d1: Derivation, d2: Derivation) -> Derivation:
    """Cut: from t |_ u and u |_ v produce t |_ v."""
    if isinstance(d1, (BoolRefl, UnitRefl, StrRefl)) and type(d1) is type(d2):
        return d1
    if isinstance(d1, QueueCong) and isinstance(d2, QueueCong):
        return QueueCong(compose_derivations(d1.elem, d2.elem))
    if isinstance(d1, ArrowCong) and isinstance(d2, ArrowCong):
        return ArrowCong(
            compose_derivations(d1.dom, d2.dom),
            compose_derivations(d1.eff, d2.eff),
            compose_derivations(d1.cod, d2.cod),
        )
    if isinstance(d1, DynRefl) and isinstance(d2, DynRefl):
        return DynRefl()
    if isinstance(d1, Inj) and isinstance(d2, DynRefl):
        return d1
    if isinstance(d1, ConcreteCong) and isinstance(d2, Inj):
        return Inj(compose_derivations(d1, d2.inner))
    if isinstance(d1, ConcreteCong) and isinstance(d2, ConcreteCong):
        left, right = dict(d1.ops), dict(d2.ops)
        if set(left) != set(right):
            raise EndpointMismatch("concrete derivation domains differ")
        ops = {}
        for name in left:
            (r1, s1), (r2, s2) = left[name], right[name]
            ops[name] = (compose_derivations(r1, r2), compose_derivations(s1, s2))
        return ConcreteCong(ops)
    raise EndpointMismatch(f"cannot compose {type(d1).__name__} with {type(d2).__name__}")


def reflexivity(t: Type, sig: Signature) -> Derivation:
    """The derivation of t |_ t."""
    return derive_precision(sig, t, t)
