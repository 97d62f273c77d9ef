"""Single source of truth for the inline citation surface format.

The prompt instructs the model to cite claims as parenthesized,
semicolon-separated PMID groups, e.g. ``(PMID: 12345678; PMID: 23456789)``.
The extraction regex below is derived from the same constants so the prompt
instruction and the parser cannot drift.
"""

from __future__ import annotations

import re
from typing import Iterable

CITATION_ITEM_PREFIX = "PMID: "
CITATION_SEPARATOR = "; "

# one parenthesized group of one-or-more "PMID: n" items
CITATION_GROUP_RE = re.compile(
    r"\((PMID:\s*\d+(?:\s*;\s*PMID:\s*\d+)*)\)"
)
CITATION_ITEM_RE = re.compile(r"PMID:\s*(\d+)")

# written without literal digits so that the only numeric PMIDs in a prompt
# are those of the sampled papers themselves
CITATION_INSTRUCTION = (
    "Support every claim with one or more inline citations, written as the "
    "PubMed ID(s) of the supporting paper(s) in parentheses, in the form "
    "(PMID: <number>) for a single source or (PMID: <number>; PMID: <number>) "
    "for several. Cite only PMIDs that appear in the provided papers."
)


def format_citation(pmids: Iterable[int]) -> str:
    """Render a citation group in the instructed surface format."""
    items = [f"{CITATION_ITEM_PREFIX}{p}" for p in pmids]
    if not items:
        raise ValueError("a citation group needs at least one PMID")
    return "(" + CITATION_SEPARATOR.join(items) + ")"
