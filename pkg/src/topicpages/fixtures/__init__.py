"""Recorded E-utilities XML served through an in-process transport, so the
full pipeline can run hermetically (CLI --mock, tests, demos)."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from importlib import resources


def _load(name: str) -> bytes:
    return resources.files("topicpages").joinpath("fixtures", name).read_bytes()


def fixture_transport(url: str, params: dict) -> tuple[int, bytes]:
    """Transport for PubMedClient that answers from the bundled recordings."""
    if "esearch" in url:
        return 200, _load("esearch.xml")
    if "efetch" in url:
        wanted = {int(p) for p in str(params.get("id", "")).split(",") if p}
        root = ET.fromstring(_load("efetch.xml"))
        for article in list(root):
            pmid = int(article.findtext(".//MedlineCitation/PMID") or 0)
            if pmid not in wanted:
                root.remove(article)
        return 200, ET.tostring(root)
    return 404, b"unknown endpoint"
