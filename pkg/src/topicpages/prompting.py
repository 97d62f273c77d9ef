"""Prompt assembly: abstract truncation, paper rendering, and the two-role
prompt (system: task framing; user: input description, citation
instruction, entity metadata, sampled literature, output format).

Templates live in ``templates/`` as ``string.Template`` files so wording
can be revised without code changes.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from importlib import resources

from .citations import CITATION_INSTRUCTION
from .errors import BudgetExceeded
from .pubmed import PaperRecord, PubDate
from .sampling import SampledCorpus, TokenBudget

TRUNCATE_TOKEN = "[TRUNCATE]"
HEAD_SENTENCES = 3
TAIL_SENTENCES = 2

# tokens that end with '.' but do not end a sentence
_ABBREVIATIONS = {
    "al.", "fig.", "figs.", "eq.", "eqs.", "ref.", "refs.", "e.g.", "i.e.",
    "vs.", "etc.", "cf.", "ca.", "approx.", "dr.", "prof.", "no.", "resp.",
    "spp.", "sp.", "var.", "inc.", "jr.", "sr.", "st.",
}

_BOUNDARY_RE = re.compile(r"(?<=[.!?])\s+(?=[A-Z0-9(\[\"])")


def split_sentences(text: str) -> list[str]:
    """Rule-based sentence segmentation with an abbreviation guard list."""
    if not text.strip():
        return []
    sentences: list[str] = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        before = text[start : m.start()].rstrip()
        last_word = before.rsplit(None, 1)[-1].lower() if before else ""
        if last_word in _ABBREVIATIONS:
            continue
        sentences.append(before)
        start = m.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def truncate_abstract(abstract: str) -> str:
    """Keep the first three and last two sentences, eliding the middle.

    Abstracts of five or fewer sentences pass through unchanged.
    """
    sentences = split_sentences(abstract)
    if len(sentences) <= HEAD_SENTENCES + TAIL_SENTENCES:
        return abstract
    head = " ".join(sentences[:HEAD_SENTENCES])
    tail = " ".join(sentences[-TAIL_SENTENCES:])
    return f"{head} {TRUNCATE_TOKEN} {tail}"


_MONTH_NAMES = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
]


def format_pub_date(date: PubDate) -> str:
    if date.year is None:
        return "unknown"
    parts = [str(date.year)]
    if date.month is not None:
        parts.append(_MONTH_NAMES[date.month - 1])
        if date.day is not None:
            parts.append(str(date.day))
    return " ".join(parts)


def render_paper_block(record: PaperRecord) -> str:
    """The exact form in which a paper enters the prompt (and is budgeted)."""
    lines = [
        f"PMID: {record.pmid}",
        f"Publication date: {format_pub_date(record.pub_date)}",
        f"Title: {record.title}",
    ]
    abstract = truncate_abstract(record.abstract)
    if abstract:
        lines.append(f"Abstract: {abstract}")
    return "\n".join(lines)


@dataclass(frozen=True)
class EntityContext:
    entity_name: str
    canonical_names: list[str] = field(default_factory=list)
    total_publications: int = 0
    pubs_per_year: dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    token_count: int
    included_pmids: frozenset[int]


def _load_template(name: str) -> string.Template:
    text = resources.files("topicpages").joinpath("templates", name).read_text("utf-8")
    return string.Template(text)


def _render_histogram(pubs_per_year: dict[int, int]) -> str:
    if not pubs_per_year:
        return "unknown"
    return "; ".join(f"{year}: {count}" for year, count in sorted(pubs_per_year.items()))


def build_prompt(
    corpus: SampledCorpus, ctx: EntityContext, limits: TokenBudget
) -> PromptBundle:
    """Render the full two-role prompt.

    `limits.max_tokens` is the whole prompt allowance (model context minus
    the generation reserve); exceeding it means the upstream literature
    budget was computed wrong, so it raises rather than truncating.
    """
    if not ctx.entity_name:
        raise ValueError("entity_name must be non-empty")
    system_text = _load_template("system.txt").substitute().strip()

    blocks: list[str] = []
    pmids: set[int] = set()
    for group in corpus.groups:
        for record in group:
            blocks.append(render_paper_block(record))
            pmids.add(record.pmid)
    papers_text = "\n\n".join(blocks) if blocks else "(no papers sampled)"

    user_text = _load_template("user.txt").substitute(
        citation_instruction=CITATION_INSTRUCTION,
        entity_name=ctx.entity_name,
        canonical_names="; ".join(ctx.canonical_names) if ctx.canonical_names else "none provided",
        total_publications=str(ctx.total_publications),
        pubs_per_year=_render_histogram(ctx.pubs_per_year),
        papers=papers_text,
    ).strip()

    token_count = limits.counter(system_text) + limits.counter(user_text)
    if token_count > limits.max_tokens:
        raise BudgetExceeded(
            f"prompt is {token_count} tokens but only {limits.max_tokens} are available"
        )
    return PromptBundle(
        system_text=system_text,
        user_text=user_text,
        token_count=token_count,
        included_pmids=frozenset(pmids),
    )


def scaffold_cost(ctx: EntityContext, limits: TokenBudget) -> int:
    """Token cost of the prompt with an empty corpus.

    The literature sub-budget handed to the sampler is
    ``context_limit - generation_reserve - scaffold_cost`` so build_prompt
    can never overflow on sampler output.
    """
    empty = SampledCorpus()
    bundle = build_prompt(empty, ctx, TokenBudget(max_tokens=10**9, counter=limits.counter))
    return bundle.token_count
