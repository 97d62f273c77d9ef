"""Parsing and echoing PubMed advanced-search expressions.

Shows the operator precedence (NOT > AND > OR), field tags, the canonical
serialization, and how unknown tags are preserved but flagged.
"""

from topicpages.query import parse_query, serialize_query, unknown_field_tags

examples = [
    "microplastic",
    "Post-acute COVID-19 Syndrome[Title] AND Post-acute COVID-19 Syndrome[MeSH Terms]",
    "(aspirin OR ibuprofen) AND cardiovascular NOT pediatric",
    "crispr[tiab] NOT (review[Publication Type] OR editorial[SomeOddTag])",
]

for raw in examples:
    ast = parse_query(raw)
    print(f"input:     {raw}")
    print(f"canonical: {serialize_query(ast)}")
    print(f"tree:      {ast.root}")
    flagged = unknown_field_tags(ast)
    if flagged:
        print(f"flagged unknown tags: {flagged}")
    print()
