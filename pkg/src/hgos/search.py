"""Find expressions over the current workspace's nodes.

Grammar (EBNF):

    query = or
    or    = and {"or" and}
    and   = not {"and" not}
    not   = ["not"] prim
    prim  = cmp | "(" query ")"
    cmp   = arith op arith | "has" attrRef
    arith = term {("+"|"-") term}
    term  = fact {("*"|"/") fact}
    fact  = number | string | attrRef | "(" arith ")"

op is one of == != < <= > >= ~ (substring, case-sensitive). attrRef is
@name with the pseudo-attributes @id, @label, @type. Evaluation is total:
a missing attribute makes `has` false and any comparison or arithmetic that
touches it false; cross-kind comparisons are false; division by zero makes
the enclosing comparison false.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

from .errors import QuerySyntaxError
from .model import NodeRecord, WorkspaceDoc
from .values import values_equal

PSEUDO_ATTRS = ("id", "label", "type")

COMPARE_OPS = ("==", "!=", "<=", ">=", "<", ">", "~")


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class NumberLit:
    value: float


@dataclass(frozen=True)
class StringLit:
    value: str


@dataclass(frozen=True)
class AttrRef:
    name: str


@dataclass(frozen=True)
class Arith:
    op: str  # + - * /
    left: Any
    right: Any


@dataclass(frozen=True)
class Compare:
    op: str
    left: Any
    right: Any


@dataclass(frozen=True)
class HasAttr:
    name: str


@dataclass(frozen=True)
class NotExpr:
    item: Any


@dataclass(frozen=True)
class AndExpr:
    left: Any
    right: Any


@dataclass(frozen=True)
class OrExpr:
    left: Any
    right: Any


@dataclass(frozen=True)
class Query:
    ast: Any
    text: str


# --- tokenizer ---------------------------------------------------------------

_KEYWORDS = {"and", "or", "not", "has"}


@dataclass(frozen=True)
class _Token:
    kind: str  # number | string | attr | op | punct | keyword | end
    value: Any
    offset: int  # byte offset into the query text


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    # byte offset of each char index (queries may contain non-ASCII strings)
    offsets = [0] * (n + 1)
    acc = 0
    for idx, ch in enumerate(text):
        offsets[idx] = acc
        acc += len(ch.encode("utf-8"))
    offsets[n] = acc

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        start = offsets[i]
        if ch.isdigit():
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k + 1
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(_Token("number", float(text[i:j]), start))
            i = j
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise QuerySyntaxError(offsets[n], "closing quote")
            tokens.append(_Token("string", "".join(buf), start))
            i = j + 1
            continue
        if ch == "@":
            j = i + 1
            if j >= n or not _is_ident_start(text[j]):
                raise QuerySyntaxError(start, "attribute name after @")
            while j < n and _is_ident(text[j]):
                j += 1
            tokens.append(_Token("attr", text[i + 1 : j], start))
            i = j
            continue
        two = text[i : i + 2]
        if two in ("==", "!=", "<=", ">="):
            tokens.append(_Token("op", two, start))
            i += 2
            continue
        if ch in "<>~":
            tokens.append(_Token("op", ch, start))
            i += 1
            continue
        if ch in "+-*/()":
            tokens.append(_Token("punct", ch, start))
            i += 1
            continue
        if _is_ident_start(ch):
            j = i + 1
            while j < n and _is_ident(text[j]):
                j += 1
            word = text[i:j]
            if word not in _KEYWORDS:
                raise QuerySyntaxError(start, "keyword and/or/not/has")
            tokens.append(_Token("keyword", word, start))
            i = j
            continue
        raise QuerySyntaxError(start, "a valid token")
    tokens.append(_Token("end", None, offsets[n]))
    return tokens


# --- parser --------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected: str):
        raise QuerySyntaxError(self.peek().offset, expected)

    def expect_punct(self, ch: str):
        tok = self.peek()
        if tok.kind != "punct" or tok.value != ch:
            self.fail(f"'{ch}'")
        return self.advance()

    def parse_query(self):
        node = self.parse_and()
        while self.peek().kind == "keyword" and self.peek().value == "or":
            self.advance()
            node = OrExpr(node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_not()
        while self.peek().kind == "keyword" and self.peek().value == "and":
            self.advance()
            node = AndExpr(node, self.parse_not())
        return node

    def parse_not(self):
        if self.peek().kind == "keyword" and self.peek().value == "not":
            self.advance()
            return NotExpr(self.parse_prim())
        return self.parse_prim()

    def parse_prim(self):
        tok = self.peek()
        if tok.kind == "keyword" and tok.value == "has":
            self.advance()
            ref = self.peek()
            if ref.kind != "attr":
                self.fail("attribute reference")
            self.advance()
            return HasAttr(ref.value)
        # try a comparison first; on failure a leading "(" may open a sub-query
        saved = self.pos
        try:
            left = self.parse_arith()
            op_tok = self.peek()
            if op_tok.kind != "op":
                self.fail("comparison operator")
            self.advance()
            right = self.parse_arith()
            return Compare(op_tok.value, left, right)
        except QuerySyntaxError:
            if tok.kind == "punct" and tok.value == "(":
                self.pos = saved
                self.expect_punct("(")
                node = self.parse_query()
                self.expect_punct(")")
                return node
            raise

    def parse_arith(self):
        node = self.parse_term()
        while self.peek().kind == "punct" and self.peek().value in "+-":
            op = self.advance().value
            node = Arith(op, node, self.parse_term())
        return node

    def parse_term(self):
        node = self.parse_fact()
        while self.peek().kind == "punct" and self.peek().value in "*/":
            op = self.advance().value
            node = Arith(op, node, self.parse_fact())
        return node

    def parse_fact(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return NumberLit(tok.value)
        if tok.kind == "string":
            self.advance()
            return StringLit(tok.value)
        if tok.kind == "attr":
            self.advance()
            return AttrRef(tok.value)
        if tok.kind == "punct" and tok.value == "(":
            self.advance()
            node = self.parse_arith()
            self.expect_punct(")")
            return node
        self.fail("value")


def parse_query(text: str) -> Query:
    parser = _Parser(_tokenize(text))
    ast = parser.parse_query()
    if parser.peek().kind != "end":
        parser.fail("end of query")
    return Query(ast=ast, text=text)


# --- evaluation ------------------------------------------------------------------

_UNDEF = object()


def _type_class(value: Any) -> str:
    # uri values behave as their text at the search layer
    if isinstance(value, bool):
        return "flag"
    if isinstance(value, float):
        return "number"
    if isinstance(value, str):
        return "text"
    if isinstance(value, list):
        return "list"
    return "map"


def _attr_getter(name: str) -> Callable[[NodeRecord], Any]:
    if name == "id":
        return lambda node: node.id
    if name == "label":
        return lambda node: node.label
    if name == "type":
        return lambda node: node.type_key
    return lambda node: node.attributes.get(name, _UNDEF)


def _compile_arith(ast) -> Callable[[NodeRecord], Any]:
    if isinstance(ast, NumberLit):
        value = ast.value
        return lambda node: value
    if isinstance(ast, StringLit):
        value = ast.value
        return lambda node: value
    if isinstance(ast, AttrRef):
        return _attr_getter(ast.name)
    if isinstance(ast, Arith):
        left, right, op = _compile_arith(ast.left), _compile_arith(ast.right), ast.op

        def run(node, left=left, right=right, op=op):
            a, b = left(node), right(node)
            if _type_class_safe(a) != "number" or _type_class_safe(b) != "number":
                return _UNDEF
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if b == 0.0:
                return _UNDEF
            return a / b

        return run
    raise TypeError(f"not an arithmetic node: {ast!r}")


def _type_class_safe(value: Any) -> Optional[str]:
    return None if value is _UNDEF else _type_class(value)


def _compare(op: str, a: Any, b: Any) -> bool:
    if a is _UNDEF or b is _UNDEF:
        return False
    ca, cb = _type_class(a), _type_class(b)
    if ca != cb:
        return False
    if op == "==":
        return values_equal(a, b) if ca in ("list", "map") else a == b
    if op == "!=":
        return not values_equal(a, b) if ca in ("list", "map") else a != b
    if op == "~":
        return ca == "text" and b in a
    if ca == "number" or ca == "text":
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
    return False


def compile_query(q: Query) -> Callable[[NodeRecord], bool]:
    """Compile the AST into a predicate over nodes."""
    ast = q.ast if isinstance(q, Query) else q

    def compile_bool(node_ast) -> Callable[[NodeRecord], bool]:
        if isinstance(node_ast, OrExpr):
            left, right = compile_bool(node_ast.left), compile_bool(node_ast.right)
            return lambda node: left(node) or right(node)
        if isinstance(node_ast, AndExpr):
            left, right = compile_bool(node_ast.left), compile_bool(node_ast.right)
            return lambda node: left(node) and right(node)
        if isinstance(node_ast, NotExpr):
            inner = compile_bool(node_ast.item)
            return lambda node: not inner(node)
        if isinstance(node_ast, HasAttr):
            name = node_ast.name
            if name in PSEUDO_ATTRS:
                return lambda node: True
            return lambda node: name in node.attributes
        if isinstance(node_ast, Compare):
            left, right, op = _compile_arith(node_ast.left), _compile_arith(node_ast.right), node_ast.op
            return lambda node: _compare(op, left(node), right(node))
        raise TypeError(f"not a boolean node: {node_ast!r}")

    return compile_bool(ast)


def evaluate(ws: WorkspaceDoc, q: Query) -> list[str]:
    """Ids of the nodes where the query holds, in id order. Never raises."""
    predicate = compile_query(q)
    return [nid for nid in sorted(ws.nodes) if predicate(ws.nodes[nid])]
