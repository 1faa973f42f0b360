"""Parser and printer for system files, plus term parsing for commands.

Concrete syntax (one declaration per ``;``, ``#`` comments):

    sort list;
    fun cons : int -> list -> list;
    fun app  : list -> list -> list;
    app nil ys -> ys;
    app (cons x xs) ys -> cons x (app xs ys);
    rev (app xs ys) nil == app (rev ys nil) (rev xs nil);
    axiom x + y == y + x mode gc;
    trust termination;

Rules are named R1, R2, ... in order of appearance.  Identifiers that are
not declared symbols are variables; their types are inferred.  Infix theory
operators carry the usual precedences; ``(+)`` is the prefix form of a
partially applicable operator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from .engine import Equation
from .rewriting import Axiom, RewriteSystem, Rule, SystemError_
from .terms import (
    Arrow,
    FunctionSymbol,
    SimpleType,
    Sort,
    Term,
    Variable,
    app,
    arrow,
    format_type,
    fresh_variable,
    var_term,
)
from .theory import (
    BOOL,
    INT,
    THEORY_SYMBOLS,
    TRUE_TERM,
    format_term,
    is_constraint,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Tokens


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | punct | op
    text: str
    line: int
    column: int


_PUNCT = ["->", "==", ";", ":", "(", ")", "[", "]", "|", ",", ":="]
_OPS = ["<=", ">=", "<", ">", "=", "+", "-", "*", "/\\", "\\/"]


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    symbols = sorted(_PUNCT + _OPS, key=len, reverse=True)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        matched = None
        for s in symbols:
            if text.startswith(s, i):
                matched = s
                break
        # an integer literal wins over the minus operator when glued to digits
        if matched == "-" and i + 1 < n and text[i + 1].isdigit():
            prev = tokens[-1] if tokens else None
            if prev is None or prev.kind == "punct" and prev.text not in (")",) or prev.kind == "op":
                matched = None
        if matched in ("->",) or matched in _PUNCT:
            tokens.append(Token("punct", matched, line, col))
            i += len(matched)
            col += len(matched)
            continue
        if matched in _OPS:
            tokens.append(Token("op", matched, line, col))
            i += len(matched)
            col += len(matched)
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            word = text[i:j]
            tokens.append(Token("ident", word, line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    return tokens


# ---------------------------------------------------------------------------
# Type expressions with inference metavariables


class Meta:
    _ids = itertools.count(1)

    def __init__(self):
        self.id = next(Meta._ids)
        self.ref: Optional[TypeExpr] = None

    def __repr__(self):
        return f"?{self.id}"


TypeExpr = Union[Sort, "ArrowExpr", Meta]


@dataclass
class ArrowExpr:
    arg: TypeExpr
    res: TypeExpr


def _resolve(t: TypeExpr) -> TypeExpr:
    while isinstance(t, Meta) and t.ref is not None:
        t = t.ref
    return t


def _unify_types(a: TypeExpr, b: TypeExpr, where: Token):
    a, b = _resolve(a), _resolve(b)
    if a is b:
        return
    if isinstance(a, Meta):
        a.ref = b
        return
    if isinstance(b, Meta):
        b.ref = a
        return
    if isinstance(a, Sort) and isinstance(b, Sort):
        if a != b:
            raise ParseError(f"type mismatch: {a.name} vs {b.name}", where.line, where.column)
        return
    if isinstance(a, ArrowExpr) and isinstance(b, ArrowExpr):
        _unify_types(a.arg, b.arg, where)
        _unify_types(a.res, b.res, where)
        return
    if isinstance(a, ArrowExpr) and isinstance(b, Sort) or isinstance(a, Sort) and isinstance(b, ArrowExpr):
        raise ParseError("type mismatch: function type vs sort", where.line, where.column)
    raise ParseError("type mismatch", where.line, where.column)


def _lift(t: SimpleType) -> TypeExpr:
    if isinstance(t, Arrow):
        return ArrowExpr(_lift(t.arg), _lift(t.res))
    return t


def _concretize(t: TypeExpr, where: Token) -> SimpleType:
    t = _resolve(t)
    if isinstance(t, Meta):
        raise ParseError("cannot infer a type here (annotate by using the variable)", where.line, where.column)
    if isinstance(t, ArrowExpr):
        return Arrow(_concretize(t.arg, where), _concretize(t.res, where))
    return t


# ---------------------------------------------------------------------------
# Raw term ASTs


@dataclass
class Node:
    kind: str  # ident | int | bool | opref | apply | binop | not
    token: Token
    payload: tuple = ()


_PREC = {"\\/": 2, "/\\": 3, "<": 5, "<=": 5, ">": 5, ">=": 5, "=": 5, "+": 7, "-": 7, "*": 8}


class _TermParser:
    def __init__(self, tokens: list[Token], pos: int = 0):
        self.tokens = tokens
        self.pos = pos

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else Token("punct", "", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.column)
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.column)
        return tok

    def parse_term(self, min_prec: int = 0) -> Node:
        tok = self.peek()
        if tok is not None and tok.kind == "ident" and tok.text == "not":
            self.next()
            inner = self.parse_term(10)
            left = Node("not", tok, (inner,))
        else:
            left = self.parse_application()
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "op":
                return left
            prec = _PREC[tok.text]
            if prec < min_prec:
                return left
            self.next()
            right = self.parse_term(prec + 1)
            left = Node("binop", tok, (tok.text, left, right))

    def parse_application(self) -> Node:
        parts = [self.parse_primary()]
        while True:
            tok = self.peek()
            if tok is None:
                break
            if tok.kind in ("ident", "int") and tok.text != "not":
                parts.append(self.parse_primary())
            elif tok.kind == "punct" and tok.text == "(":
                parts.append(self.parse_primary())
            else:
                break
        node = parts[0]
        for arg in parts[1:]:
            node = Node("apply", node.token, (node, arg))
        return node

    def parse_primary(self) -> Node:
        tok = self.next()
        if tok.kind == "int":
            return Node("int", tok, (int(tok.text),))
        if tok.kind == "ident":
            if tok.text in ("true", "false"):
                return Node("bool", tok, (tok.text == "true",))
            return Node("ident", tok, (tok.text,))
        if tok.text == "(":
            nxt = self.peek()
            if nxt is not None and nxt.kind == "op":
                op = self.next()
                self.expect(")")
                return Node("opref", op, (op.text,))
            if nxt is not None and nxt.kind == "ident" and nxt.text == "not":
                after = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else None
                if after is not None and after.text == ")":
                    op = self.next()
                    self.expect(")")
                    return Node("opref", op, ("not",))
            inner = self.parse_term(0)
            self.expect(")")
            return inner
        raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.column)


# ---------------------------------------------------------------------------
# Elaboration of raw ASTs into typed terms


class TermBuilder:
    """Type inference and term construction for one rule/equation scope."""

    def __init__(self, symbols: dict[str, FunctionSymbol], var_env: Optional[dict[str, Variable]] = None):
        self.symbols = symbols
        self.vars: dict[str, Variable] = dict(var_env or {})
        self.pending: dict[str, Meta] = {}

    def infer(self, node: Node) -> TypeExpr:
        if node.kind == "int":
            return INT
        if node.kind == "bool":
            return BOOL
        if node.kind == "opref":
            return _lift(THEORY_SYMBOLS[node.payload[0]].typ)
        if node.kind == "not":
            inner = self.infer(node.payload[0])
            _unify_types(inner, BOOL, node.token)
            return BOOL
        if node.kind == "binop":
            opname, left, right = node.payload
            sym = THEORY_SYMBOLS[opname]
            lt = self.infer(left)
            rt = self.infer(right)
            args = []
            t = sym.typ
            while isinstance(t, Arrow):
                args.append(t.arg)
                t = t.res
            _unify_types(lt, _lift(args[0]), node.token)
            _unify_types(rt, _lift(args[1]), node.token)
            return t
        if node.kind == "ident":
            name = node.payload[0]
            if name in self.symbols:
                return _lift(self.symbols[name].typ)
            if name in THEORY_SYMBOLS:
                return _lift(THEORY_SYMBOLS[name].typ)
            if name in self.vars:
                return _lift(self.vars[name].typ)
            if name not in self.pending:
                self.pending[name] = Meta()
            return self.pending[name]
        if node.kind == "apply":
            fun, arg = node.payload
            ft = self.infer(fun)
            at = self.infer(arg)
            result = Meta()
            _unify_types(ft, ArrowExpr(at, result), node.token)
            return result
        raise AssertionError(node.kind)

    def commit_variables(self):
        for name, meta in sorted(self.pending.items()):
            typ = _concretize(meta, Token("ident", name, 0, 0))
            self.vars[name] = fresh_variable(name, typ)
        self.pending.clear()

    def build(self, node: Node) -> Term:
        if node.kind == "int":
            from .theory import value_term

            return value_term(node.payload[0])
        if node.kind == "bool":
            from .theory import value_term

            return value_term(node.payload[0])
        if node.kind == "opref":
            return Term(THEORY_SYMBOLS[node.payload[0]])
        if node.kind == "not":
            from .theory import NOT

            return app(NOT, self.build(node.payload[0]))
        if node.kind == "binop":
            opname, left, right = node.payload
            return app(THEORY_SYMBOLS[opname], self.build(left), self.build(right))
        if node.kind == "ident":
            name = node.payload[0]
            if name in self.symbols:
                return Term(self.symbols[name])
            if name in THEORY_SYMBOLS:
                return Term(THEORY_SYMBOLS[name])
            return var_term(self.vars[name])
        if node.kind == "apply":
            fun, arg = node.payload
            f = self.build(fun)
            return app(f, self.build(arg))
        raise AssertionError(node.kind)

    def elaborate(self, *nodes: Node) -> list[Term]:
        for n in nodes:
            self.infer(n)
        self.commit_variables()
        return [self.build(n) for n in nodes]


def parse_term_text(
    text: str,
    symbols: dict[str, FunctionSymbol],
    var_env: Optional[dict[str, Variable]] = None,
) -> Term:
    """Parse one term from command input, resolving names in the given scope."""
    return parse_terms_jointly([text], symbols, var_env)[0]


def parse_terms_jointly(
    texts: list[str],
    symbols: dict[str, FunctionSymbol],
    var_env: Optional[dict[str, Variable]] = None,
) -> list[Term]:
    """Parse several terms in one scope so that shared variables unify."""
    nodes = []
    for text in texts:
        tokens = tokenize(text)
        parser = _TermParser(tokens)
        node = parser.parse_term(0)
        if parser.peek() is not None:
            tok = parser.peek()
            raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.column)
        nodes.append(node)
    builder = TermBuilder(symbols, var_env)
    return builder.elaborate(*nodes)


# ---------------------------------------------------------------------------
# System files


@dataclass
class SystemFile:
    system: RewriteSystem
    goals: list[Equation] = field(default_factory=list)


_TRUST_NAMES = {
    "quasi_reductivity": "quasi-reductivity",
    "termination": "termination",
    "ground_confluence": "ground-confluence",
    "weak_normalization": "weak-normalization",
}


def parse_system(text: str) -> SystemFile:
    tokens = tokenize(text)
    pos = 0
    sorts: set[Sort] = set()
    symbols: dict[str, FunctionSymbol] = {}
    rules: list[Rule] = []
    axioms: list[Axiom] = []
    goals: list[Equation] = []
    trust: set[str] = set()

    def statement_tokens() -> Optional[list[Token]]:
        nonlocal pos
        if pos >= len(tokens):
            return None
        out = []
        while pos < len(tokens) and tokens[pos].text != ";":
            out.append(tokens[pos])
            pos += 1
        if pos >= len(tokens):
            last = out[-1] if out else tokens[-1]
            raise ParseError("missing ';'", last.line, last.column)
        pos += 1  # skip ;
        return out

    def parse_type(toks: list[Token], at: int) -> tuple[SimpleType, int]:
        def prim(i: int) -> tuple[SimpleType, int]:
            if i >= len(toks):
                last = toks[-1]
                raise ParseError("expected a type", last.line, last.column + len(last.text))
            tok = toks[i]
            if tok.text == "(":
                inner, j = arrow_ty(i + 1)
                if j >= len(toks) or toks[j].text != ")":
                    raise ParseError("expected ')'", tok.line, tok.column)
                return inner, j + 1
            if tok.kind != "ident":
                raise ParseError(f"expected a type, found {tok.text!r}", tok.line, tok.column)
            if tok.text == "int":
                return INT, i + 1
            if tok.text == "bool":
                return BOOL, i + 1
            sort = Sort(tok.text)
            if sort not in sorts:
                raise ParseError(f"unknown sort {tok.text}", tok.line, tok.column)
            return sort, i + 1

        def arrow_ty(i: int) -> tuple[SimpleType, int]:
            left, j = prim(i)
            if j < len(toks) and toks[j].text == "->":
                right, k = arrow_ty(j + 1)
                return Arrow(left, right), k
            return left, j

        return arrow_ty(at)

    def split_constraint(toks: list[Token]) -> tuple[list[Token], Optional[list[Token]]]:
        depth = 0
        for i, tok in enumerate(toks):
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1
            elif tok.text == "[" and depth == 0:
                if toks[-1].text != "]":
                    raise ParseError("expected ']' at end", tok.line, tok.column)
                return toks[:i], toks[i + 1:-1]
        return toks, None

    def parse_sides(toks: list[Token], separator: str):
        depth = 0
        for i, tok in enumerate(toks):
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1
            elif tok.text == separator and depth == 0:
                return toks[:i], toks[i + 1:]
        raise ParseError(f"expected {separator!r}", toks[0].line, toks[0].column)

    def node_of(toks: list[Token]) -> Node:
        parser = _TermParser(toks)
        node = parser.parse_term(0)
        if parser.peek() is not None:
            tok = parser.peek()
            raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.column)
        return node

    rule_counter = itertools.count(1)
    axiom_counter = itertools.count(1)
    while True:
        stmt = statement_tokens()
        if stmt is None:
            break
        if not stmt:
            continue
        head = stmt[0]
        if head.text == "sort":
            if len(stmt) != 2 or stmt[1].kind != "ident":
                raise ParseError("usage: sort <name>;", head.line, head.column)
            name = stmt[1].text
            if name in ("int", "bool"):
                raise ParseError(f"sort {name} is built in", head.line, head.column)
            sorts.add(Sort(name))
        elif head.text == "fun":
            if len(stmt) < 4 or stmt[1].kind != "ident" or stmt[2].text != ":":
                raise ParseError("usage: fun <name> : <type>;", head.line, head.column)
            name = stmt[1].text
            if name in symbols or name in THEORY_SYMBOLS:
                raise ParseError(f"symbol {name} already declared", stmt[1].line, stmt[1].column)
            typ, end = parse_type(stmt, 3)
            if end != len(stmt):
                tok = stmt[end]
                raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.column)
            symbols[name] = FunctionSymbol(name, typ, "term")
        elif head.text == "trust":
            if len(stmt) != 2 or stmt[1].text not in _TRUST_NAMES:
                options = ", ".join(sorted(_TRUST_NAMES))
                raise ParseError(f"usage: trust <{options}>;", head.line, head.column)
            trust.add(_TRUST_NAMES[stmt[1].text])
        elif head.text == "axiom":
            body = stmt[1:]
            mode = "ground-confluent"
            if len(body) >= 2 and body[-2].text == "mode":
                shown = body[-1].text
                if shown not in ("gc", "bounded"):
                    raise ParseError("axiom mode is gc or bounded", body[-1].line, body[-1].column)
                mode = "ground-confluent" if shown == "gc" else "bounded-convertible"
                body = body[:-2]
            core, constraint_toks = split_constraint(body)
            left_toks, right_toks = parse_sides(core, "==")
            builder = TermBuilder(symbols)
            nodes = [node_of(left_toks), node_of(right_toks)]
            if constraint_toks is not None:
                nodes.append(node_of(constraint_toks))
            terms = builder.elaborate(*nodes)
            constraint = terms[2] if constraint_toks is not None else TRUE_TERM
            if not is_constraint(constraint):
                raise ParseError("axiom guard is not a constraint", head.line, head.column)
            axioms.append(
                Axiom(terms[0], terms[1], constraint, mode, name=f"A{next(axiom_counter)}")
            )
        else:
            core, constraint_toks = split_constraint(stmt)
            is_rule = any(t.text == "->" and _toplevel(core, i) for i, t in enumerate(core))
            separator = "->" if is_rule else "=="
            left_toks, right_toks = parse_sides(core, separator)
            builder = TermBuilder(symbols)
            nodes = [node_of(left_toks), node_of(right_toks)]
            if constraint_toks is not None:
                nodes.append(node_of(constraint_toks))
            try:
                terms = builder.elaborate(*nodes)
            except ParseError:
                raise
            constraint = terms[2] if constraint_toks is not None else TRUE_TERM
            if is_rule:
                rule = Rule(terms[0], terms[1], constraint, name=f"R{next(rule_counter)}")
                try:
                    from .rewriting import check_rule

                    check_rule(rule)
                except SystemError_ as e:
                    raise ParseError(f"{e.code}: {e}", head.line, head.column)
                rules.append(rule)
            else:
                goals.append(Equation(terms[0], terms[1], constraint))

    try:
        system = RewriteSystem(symbols, rules, sorts, tuple(axioms), frozenset(trust))
    except SystemError_ as e:
        raise ParseError(f"{e.code}: {e}", 1, 1)
    return SystemFile(system, goals)


def _toplevel(toks: list[Token], index: int) -> bool:
    depth = 0
    for i, tok in enumerate(toks):
        if i == index:
            return depth == 0
        if tok.text in ("(", "["):
            depth += 1
        elif tok.text in (")", "]"):
            depth -= 1
    return False


# ---------------------------------------------------------------------------
# Printing


def print_system(sf: SystemFile) -> str:
    sys = sf.system
    lines = []
    for sort in sorted(s.name for s in sys.sorts if s.name not in ("int", "bool")):
        lines.append(f"sort {sort};")
    for name in sorted(sys.symbols):
        lines.append(f"fun {name} : {format_type(sys.symbols[name].typ)};")
    for rule in sys.rules:
        base = f"{format_term(rule.lhs)} -> {format_term(rule.rhs)}"
        if rule.constraint != TRUE_TERM:
            base += f" [{format_term(rule.constraint)}]"
        lines.append(base + ";")
    for ax in sys.axioms:
        base = f"axiom {format_term(ax.lhs)} == {format_term(ax.rhs)}"
        if ax.constraint != TRUE_TERM:
            base += f" [{format_term(ax.constraint)}]"
        if ax.mode != "ground-confluent":
            base += " mode bounded"
        lines.append(base + ";")
    for eq in sf.goals:
        base = f"{format_term(eq.lhs)} == {format_term(eq.rhs)}"
        if eq.constraint != TRUE_TERM:
            base += f" [{format_term(eq.constraint)}]"
        lines.append(base + ";")
    for name in sorted(sys.trust):
        lines.append(f"trust {name.replace('-', '_')};")
    return "\n".join(lines) + "\n"
