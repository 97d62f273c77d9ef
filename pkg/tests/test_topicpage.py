from collections import Counter

import jsonschema
import pytest

from topicpages.citations import format_citation
from topicpages.errors import NoCitations
from topicpages.topicpage import (
    Citation,
    PageMetadata,
    TopicPage,
    export_json,
    extract_citations,
    import_json,
    load_schema,
    page_to_dict,
    parse_sections,
    sample_audit_citation,
)

from conftest import make_record

WELL_FORMED = """Definition:
Widgets are small devices (PMID: 11).

Main Content:
Widgets are studied widely (PMID: 11; PMID: 22). Other work disagrees (PMID: 33).

Future Directions:
Open questions remain (PMID: 22).
"""


class TestParseSections:
    def test_well_formed(self):
        page = parse_sections(WELL_FORMED, "widgets")
        assert not page.structure_failure
        assert page.definition.startswith("Widgets are small devices")
        assert "studied widely" in page.main_content
        assert page.future_directions.startswith("Open questions")

    def test_heading_variants(self):
        text = "## DEFINITION STATEMENT\nA.\n\n**Main content**\nB.\n\nFuture research directions:\nC.\n"
        page = parse_sections(text, "x")
        assert not page.structure_failure
        assert (page.definition, page.main_content, page.future_directions) == ("A.", "B.", "C.")

    def test_missing_header_paragraph_fallback(self):
        text = "Widgets are devices.\n\nThey are studied a lot. Much work exists.\n\nQuestions remain.\n"
        page = parse_sections(text, "x")
        assert page.structure_failure
        assert page.definition == "Widgets are devices."
        assert page.main_content == "They are studied a lot. Much work exists."
        assert page.future_directions == "Questions remain."

    def test_partial_headers_fall_back(self):
        text = "Definition:\nA.\n\nMain Content:\nB.\n\nC without its header.\n"
        page = parse_sections(text, "x")
        assert page.structure_failure

    def test_empty_completion(self):
        page = parse_sections("", "x")
        assert page.structure_failure
        assert page.definition == page.main_content == page.future_directions == ""

    def test_prose_starting_with_definition_is_not_a_header(self):
        text = (
            "Definition:\nA.\n\nMain Content:\nB sentence here.\n"
            "Definition of terms varies across studies.\n\nFuture Directions:\nC.\n"
        )
        page = parse_sections(text, "x")
        assert not page.structure_failure
        assert "Definition of terms varies" in page.main_content


class TestExtractCitations:
    def page(self):
        return parse_sections(WELL_FORMED, "widgets")

    def test_classification_by_corpus_membership(self):
        page = self.page()
        citations = extract_citations(page, included={11, 22})
        statuses = {(c.pmid, c.status) for c in citations}
        assert (11, "valid_in_corpus") in statuses
        assert (22, "valid_in_corpus") in statuses
        assert (33, "unknown_pmid") in statuses

    def test_multi_pmid_group_yields_one_citation_each(self):
        page = self.page()
        citations = [c for c in extract_citations(page, {11, 22, 33}) if c.section == "main"]
        assert [c.pmid for c in citations] == [11, 22, 33]

    def test_spans_slice_back_to_items(self):
        page = self.page()
        for c in extract_citations(page, {11, 22, 33}):
            text = page.section_text(c.section)
            assert text[c.start : c.end] == f"PMID: {c.pmid}"

    def test_live_existence_check_upgrades(self):
        page = self.page()
        citations = extract_citations(page, included={11, 22}, existence_check=lambda p: p == 33)
        by_pmid = {c.pmid: c.status for c in citations}
        assert by_pmid[33] == "valid_retrieved"

    def test_no_citations(self):
        page = parse_sections("Definition:\nA.\n\nMain Content:\nB.\n\nFuture Directions:\nC.\n", "x")
        assert extract_citations(page, {1}) == []

    def test_round_trip_with_format_helper(self):
        rendered = f"Claims here {format_citation([12345678, 23456789])}."
        page = TopicPage(entity_name="x", definition=rendered)
        citations = extract_citations(page, {12345678, 23456789})
        assert [c.pmid for c in citations] == [12345678, 23456789]
        assert all(c.status == "valid_in_corpus" for c in citations)


class TestAuditSampling:
    def cited_page(self, n):
        main = " ".join(f"Claim {i} is made (PMID: {100 + i})." for i in range(n))
        page = TopicPage(entity_name="x", main_content=main)
        page.citations = extract_citations(page, {100 + i for i in range(n)})
        return page

    def test_singleton(self):
        page = self.cited_page(1)
        bundle = sample_audit_citation(page, rng_seed=5)
        assert bundle.citation.pmid == 100

    def test_context_is_containing_sentence(self):
        page = self.cited_page(4)
        bundle = sample_audit_citation(page, rng_seed=1)
        i = bundle.citation.pmid - 100
        assert bundle.context == f"Claim {i} is made (PMID: {100 + i})."

    def test_record_lookup(self):
        page = self.cited_page(2)
        records = {100: make_record(100, title="T100", abstract="A100"), 101: make_record(101)}
        bundle = sample_audit_citation(page, rng_seed=0, records_by_pmid=records)
        assert bundle.cited_title in ("T100", "Paper 101")

    def test_uniformity(self):
        page = self.cited_page(4)
        counts = Counter(
            sample_audit_citation(page, rng_seed=seed).citation.pmid for seed in range(10_000)
        )
        for pmid in (100, 101, 102, 103):
            assert counts[pmid] / 10_000 == pytest.approx(0.25, abs=0.02)

    def test_no_citations_raises(self):
        with pytest.raises(NoCitations):
            sample_audit_citation(TopicPage(entity_name="x"), rng_seed=0)


def full_page():
    page = parse_sections(WELL_FORMED, "widgets")
    page.citations = extract_citations(page, {11, 22})
    page.metadata = PageMetadata(
        query="widgets",
        atm_translation='"widgets"[All Fields]',
        total_count=120,
        cluster_count=3,
        threshold_used=0.94,
        skipped_clustering=False,
        sampler_seed=42,
        model_id="mock",
        generated_at="2024-01-01T00:00:00+00:00",
    )
    return page


class TestExportImport:
    def test_round_trip(self):
        page = full_page()
        assert import_json(export_json(page)) == page

    def test_unicode_round_trip(self):
        page = full_page()
        page.definition = "α-synuclein aggregates—β-sheets (PMID: 11)."
        document = export_json(page)
        assert import_json(document) == page
        assert export_json(import_json(document)) == document

    def test_schema_valid(self):
        jsonschema.validate(page_to_dict(full_page()), load_schema())

    def test_schema_rejects_missing_sections(self):
        data = page_to_dict(full_page())
        del data["sections"]["definition"]
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(data, load_schema())

    def test_import_rejects_unknown_schema_version(self):
        document = export_json(full_page()).replace('"schema_version": 1', '"schema_version": 99')
        with pytest.raises(ValueError):
            import_json(document)
