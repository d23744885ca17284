"""Surface language: lexer, parser, surface syntax trees, pretty-printer.

Programs are a sequence of modules followed by a main block:

    module Operations where
    effect print : str ~> 1
    define twice : str -[print]> 1 =
      lambda s. print(s); print(s)

    main {
      import Operations.print : str ~> 1
      import Operations.twice as t : str -[print]> 1
      handle [] 1 (t "hi") with
        ret x -> (x)
        print(s, k) -> (k ())
    }

A trailing `module Main where ... define main : A = M` is accepted as sugar
for a main block whose final term is `M :: A`.  Inside a main block an
optional `in` may fence the final term off from the declarations (needed
when a define body would otherwise absorb the term as an argument).

Types are bool, 1, str, Queue A, and arrows `A -[e1,e2]> B` / `A -[?]> B` /
`A -[]> B`.  Ascriptions are `M :: A` (value type) and `M :: [e1,e2]`
(effect).  `--` starts a line comment.  Identifiers may contain inner dashes
(`sch-loop`) and trailing primes (`q'`).  `f(M)` applies f when f is a value
and raises when f is an effect declared or imported in the enclosing module;
`raise f M` is the explicit form.  `M; N` abbreviates `let _ = M in N`.

Handler clause sequences carry no separators, so the application parser
stops when the upcoming tokens look like a clause head (`name(x, k) ->`,
`ret x ->`, `empty ->`, or `dequeue(x, q) ->`); no expression form can
produce those token shapes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Tokens

KEYWORDS = {
    "module", "where", "effect", "import", "as", "define",
    "lambda", "let", "in", "if", "then", "else",
    "match", "with", "empty", "dequeue", "enqueue",
    "handle", "shallow-handle", "ret", "raise",
    "true", "false", "bool", "str", "Queue",
}

_PUNCT2 = ("::", "++", "-[", "]>", "->", "~>")
_PUNCT1 = "(){}[],.;:=?"


@dataclass(frozen=True)
class Token:
    kind: str  # ident, string, one, punct, eof
    text: str
    line: int
    col: int


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(src: str) -> list[Token]:
    out: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if src[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = src[i]
        if c.isspace():
            advance(1)
            continue
        if src.startswith("--", i):
            while i < n and src[i] != "\n":
                advance(1)
            continue
        start_line, start_col = line, col
        if c == '"':
            advance(1)
            buf = []
            while i < n and src[i] != '"':
                if src[i] == "\\":
                    advance(1)
                    if i >= n:
                        raise ParseError("dangling escape in string", line, col)
                    esc = src[i]
                    buf.append({"n": "\n", "t": "\t"}.get(esc, esc))
                    advance(1)
                else:
                    buf.append(src[i])
                    advance(1)
            if i >= n:
                raise ParseError("unterminated string literal", start_line, start_col)
            advance(1)
            out.append(Token("string", "".join(buf), start_line, start_col))
            continue
        two = src[i : i + 2]
        if two in _PUNCT2:
            out.append(Token("punct", two, start_line, start_col))
            advance(2)
            continue
        if c == "1":
            out.append(Token("one", "1", start_line, start_col))
            advance(1)
            continue
        if c in _PUNCT1:
            out.append(Token("punct", c, start_line, start_col))
            advance(1)
            continue
        if _is_ident_start(c):
            j = i
            while j < n:
                if _is_ident_char(src[j]):
                    j += 1
                elif (
                    src[j] == "-"
                    and j + 1 < n
                    and _is_ident_start(src[j + 1])
                ):
                    j += 1
                else:
                    break
            while j < n and src[j] == "'":
                j += 1
            text = src[i:j]
            advance(j - i)
            out.append(Token("ident", text, start_line, start_col))
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    out.append(Token("eof", "", line, col))
    return out


# ---------------------------------------------------------------------------
# Surface syntax trees (positions excluded from equality)


def _pos_field():
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class SDynEff:
    pos: Optional[tuple] = _pos_field()

    def __str__(self):
        return "?"


@dataclass(frozen=True)
class SNames:
    names: tuple[str, ...]
    pos: Optional[tuple] = _pos_field()

    def __init__(self, names, pos=None):
        object.__setattr__(self, "names", tuple(sorted(names)))
        object.__setattr__(self, "pos", pos)

    def __str__(self):
        return ",".join(self.names)


SEffect = Union[SDynEff, SNames]


@dataclass(frozen=True)
class SBool:
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SUnit:
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SStr:
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SQueue:
    elem: "SType"
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SArrow:
    dom: "SType"
    eff: SEffect
    cod: "SType"
    pos: Optional[tuple] = _pos_field()


SType = Union[SBool, SUnit, SStr, SQueue, SArrow]


@dataclass(frozen=True)
class SVar:
    name: str
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SBoolLit:
    value: bool
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SUnitLit:
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SStrLit:
    value: str
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SLam:
    var: str
    ann: Optional[SType]
    body: "STerm"
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SApp:
    fn: "STerm"
    arg: "STerm"
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SLet:
    var: str
    bound: "STerm"
    body: "STerm"
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SIf:
    cond: "STerm"
    then: "STerm"
    els: "STerm"
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SConcat:
    left: "STerm"
    right: "STerm"
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SEmptyQueue:
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SEnqueue:
    queue: "STerm"
    elem: "STerm"
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SMatch:
    scrutinee: "STerm"
    empty_body: "STerm"
    head_var: str
    rest_var: str
    cons_body: "STerm"
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SRaise:
    op: str
    payload: "STerm"
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SClause:
    op: str
    payload_var: str
    resume_var: str
    body: "STerm"
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SHandle:
    deep: bool
    eff_ann: SEffect
    type_ann: SType
    scrutinee: "STerm"
    ret_var: str
    ret_body: "STerm"
    clauses: tuple[SClause, ...]
    pos: Optional[tuple] = _pos_field()

    def __post_init__(self):
        object.__setattr__(
            self, "clauses", tuple(sorted(self.clauses, key=lambda c: c.op))
        )


@dataclass(frozen=True)
class SAscribeType:
    term: "STerm"
    ann: SType
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SAscribeEff:
    term: "STerm"
    ann: SEffect
    pos: Optional[tuple] = _pos_field()


STerm = Union[
    SVar, SBoolLit, SUnitLit, SStrLit, SLam, SApp, SLet, SIf, SConcat,
    SEmptyQueue, SEnqueue, SMatch, SRaise, SHandle, SAscribeType, SAscribeEff,
]


@dataclass(frozen=True)
class SEffectDecl:
    name: str
    req: SType
    resp: SType
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SImportEffect:
    module: str
    name: str
    req: SType
    resp: SType
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SImportValue:
    module: str
    name: str
    alias: str
    ann: SType
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SDefine:
    name: str
    ann: SType
    body: "STerm"
    pos: Optional[tuple] = _pos_field()


SDecl = Union[SEffectDecl, SImportEffect, SImportValue, SDefine]


@dataclass(frozen=True)
class SModule:
    name: str
    decls: tuple[SDecl, ...]
    pos: Optional[tuple] = _pos_field()


@dataclass(frozen=True)
class SProgram:
    modules: tuple[SModule, ...]
    main_decls: tuple[SDecl, ...]
    main_term: "STerm"
    pos: Optional[tuple] = _pos_field()


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.effects: set[str] = set()

    # -- token plumbing

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.text == text and t.kind in ("punct", "ident")

    def expect(self, text: str) -> Token:
        t = self.peek()
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {t.text or t.kind!r}", t.line, t.col)
        return self.next()

    def ident(self, what="identifier") -> Token:
        t = self.peek()
        if t.kind != "ident" or t.text in KEYWORDS:
            raise ParseError(f"expected {what}, found {t.text or t.kind!r}", t.line, t.col)
        return self.next()

    def _err(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # -- types

    def parse_type(self) -> SType:
        left = self.type_atom()
        if self.at("-["):
            pos = (self.peek().line, self.peek().col)
            self.next()
            eff = self.effect_names()
            self.expect("]>")
            cod = self.parse_type()
            return SArrow(left, eff, cod, pos=pos)
        return left

    def type_atom(self) -> SType:
        t = self.peek()
        pos = (t.line, t.col)
        if t.kind == "one":
            self.next()
            return SUnit(pos=pos)
        if self.at("bool"):
            self.next()
            return SBool(pos=pos)
        if self.at("str"):
            self.next()
            return SStr(pos=pos)
        if self.at("Queue"):
            self.next()
            return SQueue(self.type_atom(), pos=pos)
        if self.at("("):
            self.next()
            inner = self.parse_type()
            self.expect(")")
            return inner
        self._err(f"expected a type, found {t.text or t.kind!r}")

    def effect_names(self) -> SEffect:
        t = self.peek()
        pos = (t.line, t.col)
        if self.at("?"):
            self.next()
            return SDynEff(pos=pos)
        names = []
        while self.peek().kind == "ident":
            names.append(self.ident("effect name").text)
            if self.at(","):
                self.next()
            else:
                break
        return SNames(tuple(names), pos=pos)

    # -- clause-head lookahead (see module docstring)

    def _at_clause_head(self) -> bool:
        t0, t1 = self.peek(0), self.peek(1)
        if t0.kind != "ident":
            return False
        if t0.text == "ret" and t1.kind == "ident" and self.at("->", 2):
            return True
        if t0.text == "empty" and t1.text == "->":
            return True
        if (
            t1.text == "("
            and self.peek(2).kind == "ident"
            and self.at(",", 3)
            and self.peek(4).kind == "ident"
            and self.at(")", 5)
            and self.at("->", 6)
        ):
            return True
        return False

    # -- terms

    def parse_term(self) -> STerm:
        t = self.peek()
        pos = (t.line, t.col)
        if self.at("lambda"):
            self.next()
            var = self.ident("parameter").text
            ann = None
            if self.at(":"):
                self.next()
                ann = self.parse_type()
            self.expect(".")
            return SLam(var, ann, self.parse_term(), pos=pos)
        if self.at("let"):
            self.next()
            var = self.ident("binder").text
            self.expect("=")
            bound = self.parse_term()
            self.expect("in")
            return SLet(var, bound, self.parse_term(), pos=pos)
        if self.at("if"):
            self.next()
            cond = self.parse_term()
            self.expect("then")
            then = self.parse_term()
            self.expect("else")
            return SIf(cond, then, self.parse_term(), pos=pos)
        if self.at("match"):
            return self.parse_match()
        if self.at("handle") or self.at("shallow-handle"):
            return self.parse_handle()
        if self.at("raise"):
            self.next()
            op = self.ident("effect name").text
            payload = self.parse_atom()
            term = SRaise(op, payload, pos=pos)
            return self.seq_tail(self.asc_tail(term))
        return self.seq_tail(self.parse_ascribed())

    def seq_tail(self, term: STerm) -> STerm:
        if self.at(";"):
            pos = (self.peek().line, self.peek().col)
            self.next()
            return SLet("_", term, self.parse_term(), pos=pos)
        return term

    def parse_ascribed(self) -> STerm:
        return self.asc_tail(self.parse_concat())

    def asc_tail(self, term: STerm) -> STerm:
        while self.at("::"):
            pos = (self.peek().line, self.peek().col)
            self.next()
            if self.at("["):
                self.next()
                eff = self.effect_names()
                self.expect("]")
                term = SAscribeEff(term, eff, pos=pos)
            else:
                term = SAscribeType(term, self.parse_type(), pos=pos)
        return term

    def parse_concat(self) -> STerm:
        left = self.parse_app()
        while self.at("++"):
            pos = (self.peek().line, self.peek().col)
            self.next()
            left = SConcat(left, self.parse_app(), pos=pos)
        return left

    def _at_atom(self) -> bool:
        t = self.peek()
        if t.kind in ("string",):
            return True
        if t.text == "(":
            return True
        if t.kind == "ident":
            if t.text == "main" and self.at("{", 1):
                return False  # start of the main block, not a variable
            return t.text not in KEYWORDS or t.text in ("true", "false", "empty", "enqueue")
        return False

    def parse_app(self) -> STerm:
        head = self.parse_atom()
        while self._at_atom() and not self._at_clause_head():
            pos = (self.peek().line, self.peek().col)
            arg = self.parse_atom()
            head = SApp(head, arg, pos=pos)
        return head

    def parse_atom(self) -> STerm:
        t = self.peek()
        pos = (t.line, t.col)
        if t.kind == "string":
            self.next()
            return SStrLit(t.text, pos=pos)
        if self.at("true"):
            self.next()
            return SBoolLit(True, pos=pos)
        if self.at("false"):
            self.next()
            return SBoolLit(False, pos=pos)
        if self.at("empty"):
            self.next()
            return SEmptyQueue(pos=pos)
        if self.at("enqueue"):
            self.next()
            q = self.parse_atom()
            v = self.parse_atom()
            return SEnqueue(q, v, pos=pos)
        if self.at("("):
            self.next()
            if self.at(")"):
                self.next()
                return SUnitLit(pos=pos)
            inner = self.parse_term()
            self.expect(")")
            return inner
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.next()
            if t.text in self.effects and self.at("("):
                self.next()
                if self.at(")"):
                    self.next()
                    payload: STerm = SUnitLit(pos=pos)
                else:
                    payload = self.parse_term()
                    self.expect(")")
                return SRaise(t.text, payload, pos=pos)
            return SVar(t.text, pos=pos)
        self._err(f"expected a term, found {t.text or t.kind!r}")

    def parse_match(self) -> STerm:
        pos = (self.peek().line, self.peek().col)
        self.expect("match")
        scrutinee = self.parse_ascribed()
        self.expect("with")
        self.expect("empty")
        self.expect("->")
        empty_body = self.parse_term()
        self.expect("dequeue")
        self.expect("(")
        head_var = self.ident("binder").text
        self.expect(",")
        rest_var = self.ident("binder").text
        self.expect(")")
        self.expect("->")
        cons_body = self.parse_term()
        return SMatch(scrutinee, empty_body, head_var, rest_var, cons_body, pos=pos)

    def parse_handle(self) -> STerm:
        t = self.next()
        pos = (t.line, t.col)
        deep = t.text == "handle"
        self.expect("[")
        eff_ann = self.effect_names()
        self.expect("]")
        type_ann = self.type_atom()
        scrutinee = self.parse_ascribed()
        self.expect("with")
        self.expect("ret")
        ret_var = self.ident("binder").text
        self.expect("->")
        ret_body = self.parse_term()
        clauses = []
        while self._at_clause_head():
            cpos = (self.peek().line, self.peek().col)
            op = self.ident("effect name").text
            self.expect("(")
            payload_var = self.ident("binder").text
            self.expect(",")
            resume_var = self.ident("binder").text
            self.expect(")")
            self.expect("->")
            body = self.parse_term()
            clauses.append(SClause(op, payload_var, resume_var, body, pos=cpos))
        return SHandle(
            deep, eff_ann, type_ann, scrutinee, ret_var, ret_body, tuple(clauses),
            pos=pos,
        )

    # -- declarations and programs

    def parse_decl(self) -> SDecl:
        t = self.peek()
        pos = (t.line, t.col)
        if self.at("effect"):
            self.next()
            name = self.ident("effect name").text
            self.expect(":")
            req = self.parse_type()
            self.expect("~>")
            resp = self.parse_type()
            self.effects.add(name)
            return SEffectDecl(name, req, resp, pos=pos)
        if self.at("import"):
            self.next()
            module = self.ident("module name").text
            self.expect(".")
            name = self.ident("imported name").text
            if self.at("as"):
                self.next()
                alias = self.ident("alias").text
                self.expect(":")
                return SImportValue(module, name, alias, self.parse_type(), pos=pos)
            self.expect(":")
            ty = self.parse_type()
            if self.at("~>"):
                self.next()
                resp = self.parse_type()
                self.effects.add(name)
                return SImportEffect(module, name, ty, resp, pos=pos)
            return SImportValue(module, name, name, ty, pos=pos)
        if self.at("define"):
            self.next()
            name = self.ident("name").text
            self.expect(":")
            ann = self.parse_type()
            self.expect("=")
            return SDefine(name, ann, self.parse_term(), pos=pos)
        self._err(f"expected a declaration, found {t.text or t.kind!r}")

    def _at_decl(self) -> bool:
        return self.at("effect") or self.at("import") or self.at("define")

    def parse_module(self) -> SModule:
        pos = (self.peek().line, self.peek().col)
        self.expect("module")
        name = self.ident("module name").text
        self.expect("where")
        self.effects = set()
        decls = []
        while self._at_decl():
            decls.append(self.parse_decl())
        return SModule(name, tuple(decls), pos=pos)

    def parse_program(self) -> SProgram:
        pos = (self.peek().line, self.peek().col)
        modules = []
        while self.at("module"):
            modules.append(self.parse_module())
        if self.at("main") and self.at("{", 1):
            self.next()
            self.expect("{")
            self.effects = set()
            decls = []
            while self._at_decl():
                decls.append(self.parse_decl())
            # an optional `in` fences the final term off from a preceding
            # define body, which would otherwise absorb it as an argument
            if self.at("in"):
                self.next()
            term = self.parse_term()
            self.expect("}")
            program = SProgram(tuple(modules), tuple(decls), term, pos=pos)
        else:
            # sugar: a trailing module Main with a define main : A = M
            if not modules or modules[-1].name != "Main":
                self._err("expected a main block or a final module Main")
            last = modules[-1]
            if not (last.decls and isinstance(last.decls[-1], SDefine)
                    and last.decls[-1].name == "main"):
                t = self.peek()
                raise ParseError(
                    "module Main must end with a define main", t.line, t.col
                )
            main_def = last.decls[-1]
            term = SAscribeType(main_def.body, main_def.ann, pos=main_def.pos)
            program = SProgram(
                tuple(modules[:-1]), tuple(last.decls[:-1]), term, pos=pos
            )
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(f"unexpected {t.text!r} after program", t.line, t.col)
        return program


def parse_program(src: str) -> SProgram:
    return _Parser(tokenize(src)).parse_program()


def parse_term(src: str, effects: frozenset[str] = frozenset()) -> STerm:
    p = _Parser(tokenize(src))
    p.effects = set(effects)
    term = p.parse_term()
    t = p.peek()
    if t.kind != "eof":
        raise ParseError(f"unexpected {t.text!r} after term", t.line, t.col)
    return term


def parse_type(src: str) -> SType:
    p = _Parser(tokenize(src))
    ty = p.parse_type()
    t = p.peek()
    if t.kind != "eof":
        raise ParseError(f"unexpected {t.text!r} after type", t.line, t.col)
    return ty


# ---------------------------------------------------------------------------
# Pretty-printer (output reparses to an equal tree)


def pretty_eff(e: SEffect) -> str:
    if isinstance(e, SDynEff):
        return "?"
    return ",".join(e.names)


def pretty_type(t: SType) -> str:
    if isinstance(t, SBool):
        return "bool"
    if isinstance(t, SUnit):
        return "1"
    if isinstance(t, SStr):
        return "str"
    if isinstance(t, SQueue):
        return f"Queue {_type_atom(t.elem)}"
    if isinstance(t, SArrow):
        return f"{_type_atom(t.dom)} -[{pretty_eff(t.eff)}]> {pretty_type(t.cod)}"
    raise TypeError(f"not a surface type: {t!r}")


def _type_atom(t: SType) -> str:
    s = pretty_type(t)
    return f"({s})" if isinstance(t, (SArrow, SQueue)) else s


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def pretty_term(t: STerm) -> str:
    if isinstance(t, SVar):
        return t.name
    if isinstance(t, SBoolLit):
        return "true" if t.value else "false"
    if isinstance(t, SUnitLit):
        return "()"
    if isinstance(t, SStrLit):
        return _q(t.value)
    if isinstance(t, SLam):
        ann = f" : {pretty_type(t.ann)}" if t.ann is not None else ""
        return f"lambda {t.var}{ann}. {pretty_term(t.body)}"
    if isinstance(t, SApp):
        return f"{_term_app_pos(t.fn)} {_term_atom(t.arg)}"
    if isinstance(t, SLet):
        if t.var == "_":
            return f"{_term_asc(t.bound)}; {pretty_term(t.body)}"
        return f"let {t.var} = {pretty_term(t.bound)} in {pretty_term(t.body)}"
    if isinstance(t, SIf):
        return (
            f"if {pretty_term(t.cond)} then {pretty_term(t.then)} "
            f"else {pretty_term(t.els)}"
        )
    if isinstance(t, SConcat):
        return f"{_term_cat(t.left)} ++ {_term_app(t.right)}"
    if isinstance(t, SEmptyQueue):
        return "empty"
    if isinstance(t, SEnqueue):
        return f"enqueue {_term_atom(t.queue)} {_term_atom(t.elem)}"
    if isinstance(t, SMatch):
        return (
            f"match {_term_asc(t.scrutinee)} with "
            f"empty -> ({pretty_term(t.empty_body)}) "
            f"dequeue({t.head_var}, {t.rest_var}) -> ({pretty_term(t.cons_body)})"
        )
    if isinstance(t, SRaise):
        return f"raise {t.op} {_term_atom(t.payload)}"
    if isinstance(t, SHandle):
        kw = "handle" if t.deep else "shallow-handle"
        head = (
            f"{kw} [{pretty_eff(t.eff_ann)}] {_type_atom(t.type_ann)} "
            f"{_term_asc(t.scrutinee)} with ret {t.ret_var} -> ({pretty_term(t.ret_body)})"
        )
        for c in t.clauses:
            head += (
                f" {c.op}({c.payload_var}, {c.resume_var}) -> ({pretty_term(c.body)})"
            )
        return head
    if isinstance(t, SAscribeType):
        return f"{_term_asc(t.term)} :: {pretty_type(t.ann)}"
    if isinstance(t, SAscribeEff):
        return f"{_term_asc(t.term)} :: [{pretty_eff(t.ann)}]"
    raise TypeError(f"not a surface term: {t!r}")


def _term_atom(t: STerm) -> str:
    if isinstance(t, (SVar, SBoolLit, SUnitLit, SStrLit, SEmptyQueue)):
        return pretty_term(t)
    return f"({pretty_term(t)})"


def _term_app(t: STerm) -> str:
    if isinstance(t, (SApp, SEnqueue)):
        return pretty_term(t)
    return _term_atom(t)


def _term_app_pos(t: STerm) -> str:
    # function position of an application
    if isinstance(t, SApp):
        return pretty_term(t)
    return _term_atom(t)


def _term_cat(t: STerm) -> str:
    if isinstance(t, SConcat):
        return pretty_term(t)
    return _term_app(t)


def _term_asc(t: STerm) -> str:
    if isinstance(t, (SAscribeType, SAscribeEff, SConcat)):
        return pretty_term(t)
    return _term_app(t)


def pretty_decl(d: SDecl) -> str:
    if isinstance(d, SEffectDecl):
        return f"effect {d.name} : {_type_atom(d.req)} ~> {_type_atom(d.resp)}"
    if isinstance(d, SImportEffect):
        return (
            f"import {d.module}.{d.name} : {_type_atom(d.req)} ~> {_type_atom(d.resp)}"
        )
    if isinstance(d, SImportValue):
        alias = f" as {d.alias}" if d.alias != d.name else ""
        return f"import {d.module}.{d.name}{alias} : {pretty_type(d.ann)}"
    if isinstance(d, SDefine):
        return f"define {d.name} : {pretty_type(d.ann)} =\n  {pretty_term(d.body)}"
    raise TypeError(f"not a declaration: {d!r}")


def pretty_program(p: SProgram) -> str:
    parts = []
    for m in p.modules:
        parts.append(f"module {m.name} where")
        for d in m.decls:
            parts.append(pretty_decl(d))
        parts.append("")
    parts.append("main {")
    for d in p.main_decls:
        parts.append("  " + pretty_decl(d).replace("\n", "\n  "))
    if p.main_decls:
        parts.append("  in")
    parts.append("  " + pretty_term(p.main_term))
    parts.append("}")
    return "\n".join(parts) + "\n"
