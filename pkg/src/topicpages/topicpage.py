"""Topic-page post-processing: section parsing, citation extraction and
validation, audit sampling, and versioned JSON export/import.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

from .citations import CITATION_GROUP_RE, CITATION_ITEM_RE
from .errors import NoCitations
from .prompting import split_sentences
from .pubmed import PaperRecord

SCHEMA_VERSION = 1

SECTION_DEFINITION = "definition"
SECTION_MAIN = "main"
SECTION_FUTURE = "future"

STATUS_VALID_IN_CORPUS = "valid_in_corpus"
STATUS_VALID_RETRIEVED = "valid_retrieved"
STATUS_UNKNOWN_PMID = "unknown_pmid"


@dataclass(frozen=True)
class Citation:
    pmid: int
    section: str
    start: int
    end: int
    status: str


@dataclass
class PageMetadata:
    query: str = ""
    atm_translation: str = ""
    total_count: int = 0
    cluster_count: int = 0
    threshold_used: float = 0.0
    skipped_clustering: bool = True
    sampler_seed: int = 0
    model_id: str = ""
    generated_at: str = ""


@dataclass
class TopicPage:
    entity_name: str
    definition: str = ""
    main_content: str = ""
    future_directions: str = ""
    citations: list[Citation] = field(default_factory=list)
    structure_failure: bool = False
    metadata: PageMetadata = field(default_factory=PageMetadata)

    def section_text(self, section: str) -> str:
        return {
            SECTION_DEFINITION: self.definition,
            SECTION_MAIN: self.main_content,
            SECTION_FUTURE: self.future_directions,
        }[section]


# --- section parsing ---

_HEADER_RES = {
    SECTION_DEFINITION: r"definition(?:\s+statement)?",
    SECTION_MAIN: r"main\s+content",
    SECTION_FUTURE: r"future\s+(?:research\s+)?directions(?:\s+and\s+open\s+questions)?",
}

# a heading is the section name alone on a line, or followed by a colon and
# inline content; a colon is required before content so that prose merely
# starting with the word "definition" is not mistaken for a heading
_HEADER_LINE_RES = {
    name: re.compile(
        rf"^\s*(?:#+\s*)?(?:\*\*)?\s*(?:\d+[.)]\s*)?{pattern}\s*(?:\*\*)?\s*"
        rf"(?::\s*(?P<rest>.*)|[.\-]?\s*)$",
        re.IGNORECASE,
    )
    for name, pattern in _HEADER_RES.items()
}


def parse_sections(completion: str, entity_name: str) -> TopicPage:
    """Split a completion into the three sections.

    Tolerant to heading case/punctuation variants; when any heading is
    missing, falls back to paragraph-order assignment and sets the
    structure-failure flag. Never raises on malformed structure.
    """
    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in completion.splitlines():
        matched = False
        for name, pattern in _HEADER_LINE_RES.items():
            m = pattern.match(line)
            if m and name not in sections:
                sections[name] = []
                current = name
                rest = (m.group("rest") or "").strip()
                if rest:
                    sections[name].append(rest)
                matched = True
                break
        if not matched and current is not None and line.strip():
            sections[current].append(line.strip())

    if set(sections) == set(_HEADER_RES):
        return TopicPage(
            entity_name=entity_name,
            definition=" ".join(sections[SECTION_DEFINITION]),
            main_content=" ".join(sections[SECTION_MAIN]),
            future_directions=" ".join(sections[SECTION_FUTURE]),
            structure_failure=False,
        )

    # paragraph fallback
    paragraphs = [p.strip() for p in re.split(r"\n\s*\n", completion) if p.strip()]
    page = TopicPage(entity_name=entity_name, structure_failure=True)
    if len(paragraphs) >= 3:
        page.definition = paragraphs[0]
        page.main_content = " ".join(paragraphs[1:-1])
        page.future_directions = paragraphs[-1]
    elif len(paragraphs) == 2:
        page.definition = paragraphs[0]
        page.main_content = paragraphs[1]
    elif len(paragraphs) == 1:
        page.main_content = paragraphs[0]
    return page


# --- citation extraction ---

def extract_citations(
    page: TopicPage,
    included: Iterable[int],
    existence_check=None,
) -> list[Citation]:
    """Scan each section for citation groups and classify every PMID.

    A PMID in `included` (the prompt's paper set) is valid_in_corpus;
    otherwise it is unknown_pmid, unless an optional `existence_check`
    callable (live EFetch probe) confirms it exists, upgrading it to
    valid_retrieved. Spans are offsets of each ``PMID: n`` item within
    its section's text.
    """
    included = set(included)
    citations: list[Citation] = []
    for section in (SECTION_DEFINITION, SECTION_MAIN, SECTION_FUTURE):
        text = page.section_text(section)
        for group in CITATION_GROUP_RE.finditer(text):
            for item in CITATION_ITEM_RE.finditer(group.group(1)):
                pmid = int(item.group(1))
                start = group.start(1) + item.start()
                end = group.start(1) + item.end()
                if pmid in included:
                    status = STATUS_VALID_IN_CORPUS
                elif existence_check is not None and existence_check(pmid):
                    status = STATUS_VALID_RETRIEVED
                else:
                    status = STATUS_UNKNOWN_PMID
                citations.append(
                    Citation(pmid=pmid, section=section, start=start, end=end, status=status)
                )
    return citations


# --- audit sampling ---

@dataclass
class AuditBundle:
    citation: Citation
    context: str
    cited_title: str | None
    cited_abstract: str | None


def sample_audit_citation(
    page: TopicPage,
    rng_seed: int,
    records_by_pmid: dict[int, PaperRecord] | None = None,
) -> AuditBundle:
    """Uniformly sample one citation with its containing sentence(s) and
    the cited record's title/abstract from the retrieval cache."""
    if not page.citations:
        raise NoCitations("page has no citations to audit")
    rng = random.Random(rng_seed)
    citation = page.citations[rng.randrange(len(page.citations))]

    text = page.section_text(citation.section)
    context = text
    cursor = 0
    for sentence in split_sentences(text):
        start = text.find(sentence, cursor)
        end = start + len(sentence)
        cursor = end
        if start <= citation.start < end:
            context = sentence
            break

    record = (records_by_pmid or {}).get(citation.pmid)
    return AuditBundle(
        citation=citation,
        context=context,
        cited_title=record.title if record else None,
        cited_abstract=record.abstract if record else None,
    )


# --- JSON export/import ---

def load_schema() -> dict:
    text = resources.files("topicpages").joinpath("schemas", "topic_page.schema.json").read_text("utf-8")
    return json.loads(text)


def page_to_dict(page: TopicPage) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "entity_name": page.entity_name,
        "sections": {
            "definition": page.definition,
            "main_content": page.main_content,
            "future_directions": page.future_directions,
        },
        "citations": [
            {
                "pmid": c.pmid,
                "section": c.section,
                "start": c.start,
                "end": c.end,
                "status": c.status,
            }
            for c in page.citations
        ],
        "structure_failure": page.structure_failure,
        "metadata": {
            "query": page.metadata.query,
            "atm_translation": page.metadata.atm_translation,
            "total_count": page.metadata.total_count,
            "cluster_count": page.metadata.cluster_count,
            "threshold_used": page.metadata.threshold_used,
            "skipped_clustering": page.metadata.skipped_clustering,
            "sampler_seed": page.metadata.sampler_seed,
            "model_id": page.metadata.model_id,
            "generated_at": page.metadata.generated_at,
        },
    }


def export_json(page: TopicPage) -> str:
    return json.dumps(page_to_dict(page), ensure_ascii=False, indent=2, sort_keys=True)


def import_json(document: str) -> TopicPage:
    data = json.loads(document)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {data.get('schema_version')!r}")
    meta = data["metadata"]
    return TopicPage(
        entity_name=data["entity_name"],
        definition=data["sections"]["definition"],
        main_content=data["sections"]["main_content"],
        future_directions=data["sections"]["future_directions"],
        citations=[Citation(**c) for c in data["citations"]],
        structure_failure=data["structure_failure"],
        metadata=PageMetadata(**meta),
    )
