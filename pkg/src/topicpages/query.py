"""Parsing and serialization of PubMed Advanced Search Builder expressions.

The grammar is the familiar boolean one: terms optionally carry a bracketed
field tag (``heart attack[Title]``), and are combined with AND, OR and NOT.
Operator precedence is NOT > AND > OR; parentheses override. Bare terms are
searched against All Fields, which is also what the server does.

Everything here is pure; parse/serialize round-trip stability is the core
contract (``parse_query(serialize_query(x)) == x``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import DanglingOperator, EmptyQuery, UnbalancedParens

ALL_FIELDS = "All Fields"

# Tags the Advanced Search Builder documents; unknown bracketed tags are
# preserved verbatim but reported by unknown_field_tags().
KNOWN_FIELD_TAGS = {
    "all fields", "af",
    "title", "ti",
    "title/abstract", "tiab",
    "abstract", "ab",
    "mesh terms", "mh", "mesh",
    "mesh major topic", "majr",
    "mesh subheading", "sh",
    "author", "au",
    "first author", "1au",
    "last author", "lastau",
    "journal", "ta",
    "affiliation", "ad",
    "language", "la",
    "publication type", "pt",
    "date - publication", "pdat", "dp",
    "text word", "tw",
    "pmid", "uid",
}


@dataclass(frozen=True)
class Term:
    text: str
    field: str = ALL_FIELDS


@dataclass(frozen=True)
class And:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Or:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Not:
    left: "Node"
    right: "Node"


Node = Union[Term, And, Or, Not]


@dataclass(frozen=True)
class QueryAst:
    root: Node


_OPERATORS = {"AND", "OR", "NOT"}

_TOKEN_RE = re.compile(
    r"""
    (?P<lparen>\() |
    (?P<rparen>\)) |
    (?P<tag>\[[^\[\]]*\]) |
    (?P<word>[^\s()\[\]]+)
    """,
    re.VERBOSE,
)


def _tokenize(raw: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    for m in _TOKEN_RE.finditer(raw):
        between = raw[pos : m.start()]
        if between.strip():
            raise UnbalancedParens(f"unexpected character(s) {between.strip()!r}")
        pos = m.end()
        kind = m.lastgroup
        text = m.group()
        if kind == "word" and text.upper() in _OPERATORS:
            tokens.append(("op", text.upper()))
        else:
            tokens.append((kind, text))  # type: ignore[arg-type]
    if raw[pos:].strip():
        raise UnbalancedParens(f"unexpected character(s) {raw[pos:].strip()!r}")
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> tuple[str, str]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.parse_or()
        if self.peek() is not None:
            kind, text = self.peek()  # type: ignore[misc]
            if kind == "rparen":
                raise UnbalancedParens("unmatched ')'")
            raise DanglingOperator(f"unexpected trailing {text!r}")
        return node

    def parse_or(self) -> Node:
        node = self.parse_and()
        while self.peek() == ("op", "OR"):
            self.next()
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> Node:
        node = self.parse_not()
        while self.peek() == ("op", "AND"):
            self.next()
            node = And(node, self.parse_not())
        return node

    def parse_not(self) -> Node:
        node = self.parse_atom()
        while self.peek() == ("op", "NOT"):
            self.next()
            node = Not(node, self.parse_atom())
        return node

    def parse_atom(self) -> Node:
        tok = self.peek()
        if tok is None:
            raise DanglingOperator("expected a term or '('")
        kind, text = tok
        if kind == "lparen":
            self.next()
            node = self.parse_or()
            closing = self.peek()
            if closing is None:
                raise UnbalancedParens("unmatched '('")
            if closing[0] != "rparen":
                raise DanglingOperator(f"unexpected {closing[1]!r} before ')'")
            self.next()
            return node
        if kind == "op":
            raise DanglingOperator(f"operator {text!r} is missing a left operand")
        if kind == "rparen":
            raise UnbalancedParens("unmatched ')'")
        return self.parse_term()

    def parse_term(self) -> Term:
        words: list[str] = []
        while True:
            tok = self.peek()
            if tok is None or tok[0] not in ("word", "tag"):
                break
            kind, text = self.next()
            if kind == "tag":
                if not words:
                    raise DanglingOperator(f"field tag {text!r} has no term")
                return Term(" ".join(words), text[1:-1].strip())
            words.append(text)
        if not words:
            raise DanglingOperator("expected a term")
        return Term(" ".join(words))


def parse_query(raw: str) -> QueryAst:
    """Parse a PubMed advanced-search expression into an AST.

    Raises EmptyQuery on blank input, UnbalancedParens on mismatched
    parentheses, DanglingOperator on operators missing an operand.
    """
    if not raw or not raw.strip():
        raise EmptyQuery("query is empty")
    tokens = _tokenize(raw)
    if not tokens:
        raise EmptyQuery("query is empty")
    depth = 0
    for kind, _text in tokens:
        if kind == "lparen":
            depth += 1
        elif kind == "rparen":
            depth -= 1
            if depth < 0:
                raise UnbalancedParens("unmatched ')'")
    if depth != 0:
        raise UnbalancedParens("unmatched '('")
    return QueryAst(_Parser(tokens).parse())


_PRECEDENCE = {Or: 1, And: 2, Not: 3, Term: 4}
_KEYWORD = {Or: "OR", And: "AND", Not: "NOT"}


def _serialize(node: Node) -> str:
    if isinstance(node, Term):
        if node.field == ALL_FIELDS:
            return node.text
        return f"{node.text}[{node.field}]"
    prec = _PRECEDENCE[type(node)]
    left = _serialize(node.left)
    if _PRECEDENCE[type(node.left)] < prec:
        left = f"({left})"
    right = _serialize(node.right)
    if _PRECEDENCE[type(node.right)] <= prec:
        right = f"({right})"
    return f"{left} {_KEYWORD[type(node)]} {right}"


def serialize_query(ast: QueryAst) -> str:
    """Emit canonical PubMed syntax with minimal, precedence-aware parens."""
    return _serialize(ast.root)


def unknown_field_tags(ast: QueryAst) -> list[str]:
    """Bracketed tags in the AST that are not on the documented allow-list."""
    found: list[str] = []

    def walk(node: Node) -> None:
        if isinstance(node, Term):
            if node.field.lower() not in KNOWN_FIELD_TAGS:
                found.append(node.field)
        else:
            walk(node.left)
            walk(node.right)

    walk(ast.root)
    return found
