import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topicpages.errors import DanglingOperator, EmptyQuery, QueryError, UnbalancedParens
from topicpages.query import (
    ALL_FIELDS,
    And,
    Not,
    Or,
    QueryAst,
    Term,
    parse_query,
    serialize_query,
    unknown_field_tags,
)


class TestParse:
    def test_bare_term_gets_all_fields(self):
        assert parse_query("microplastic") == QueryAst(Term("microplastic", ALL_FIELDS))

    def test_multiword_term_with_tags(self):
        ast = parse_query(
            "Post-acute COVID-19 Syndrome[Title] AND Post-acute COVID-19 Syndrome[MeSH Terms]"
        )
        assert ast == QueryAst(
            And(
                Term("Post-acute COVID-19 Syndrome", "Title"),
                Term("Post-acute COVID-19 Syndrome", "MeSH Terms"),
            )
        )

    def test_empty_raises(self):
        with pytest.raises(EmptyQuery):
            parse_query("")
        with pytest.raises(EmptyQuery):
            parse_query("   \t ")

    def test_unbalanced_parens(self):
        with pytest.raises(UnbalancedParens):
            parse_query("(")
        with pytest.raises(UnbalancedParens):
            parse_query("(a OR b")
        with pytest.raises(UnbalancedParens):
            parse_query("a) AND b")

    def test_dangling_operator(self):
        with pytest.raises(DanglingOperator):
            parse_query("cancer AND")
        with pytest.raises(DanglingOperator):
            parse_query("AND cancer")
        with pytest.raises(DanglingOperator):
            parse_query("a AND OR b")

    def test_precedence_not_over_and_over_or(self):
        ast = parse_query("a OR b AND c NOT d")
        assert ast == QueryAst(Or(Term("a"), And(Term("b"), Not(Term("c"), Term("d")))))

    def test_parens_override(self):
        ast = parse_query("(a OR b) AND c")
        assert ast == QueryAst(And(Or(Term("a"), Term("b")), Term("c")))

    def test_case_insensitive_operators(self):
        assert parse_query("a and b") == parse_query("a AND b")
        assert parse_query("a Or b") == parse_query("a OR b")

    def test_whitespace_normalized(self):
        assert parse_query("heart   attack").root == Term("heart attack")

    def test_unknown_tag_preserved_and_flagged(self):
        ast = parse_query("something[Weird Tag] AND x[Title]")
        assert ast.root.left == Term("something", "Weird Tag")
        assert unknown_field_tags(ast) == ["Weird Tag"]

    def test_known_tags_not_flagged(self):
        ast = parse_query("a[Title] OR b[MeSH Terms] OR c[tiab]")
        assert unknown_field_tags(ast) == []


class TestSerialize:
    def test_identity_term(self):
        assert serialize_query(QueryAst(Term("microplastic", ALL_FIELDS))) == "microplastic"

    def test_tagged_term(self):
        assert serialize_query(QueryAst(Term("x", "Title"))) == "x[Title]"

    def test_and_without_parens(self):
        assert serialize_query(QueryAst(And(Term("a"), Term("b")))) == "a AND b"

    def test_not_with_or_needs_parens(self):
        ast = QueryAst(Not(Term("a"), Or(Term("b"), Term("c"))))
        assert serialize_query(ast) == "a NOT (b OR c)"
        assert parse_query(serialize_query(ast)) == ast

    def test_minimal_parens_for_mixed_precedence(self):
        ast = QueryAst(Or(Term("a"), And(Term("b"), Term("c"))))
        assert serialize_query(ast) == "a OR b AND c"
        ast2 = QueryAst(And(Or(Term("a"), Term("b")), Term("c")))
        assert serialize_query(ast2) == "(a OR b) AND c"


# --- round-trip property ---

_words = st.text(
    alphabet="abcdefghijklmnopqrstuvwxyz0123456789-", min_size=1, max_size=8
).filter(lambda w: w not in {"and", "or", "not"})
_terms = st.builds(
    Term,
    text=st.lists(_words, min_size=1, max_size=3).map(" ".join),
    field=st.sampled_from([ALL_FIELDS, "Title", "MeSH Terms", "Author", "Weird Tag"]),
)


def _nodes(depth):
    if depth <= 0:
        return _terms
    sub = _nodes(depth - 1)
    return st.one_of(_terms, st.builds(And, sub, sub), st.builds(Or, sub, sub), st.builds(Not, sub, sub))


@settings(max_examples=300, deadline=None)
@given(st.builds(QueryAst, _nodes(6)))
def test_round_trip(ast):
    assert parse_query(serialize_query(ast)) == ast


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=60))
def test_parser_total_on_arbitrary_text(raw):
    try:
        parse_query(raw)
    except QueryError:
        pass
