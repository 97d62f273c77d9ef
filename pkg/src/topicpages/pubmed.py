"""NCBI E-utilities client: relevance-ranked search plus batched record fetch.

Retrieval is two-phase: ESearch returns PMIDs sorted by relevance (plus the
server's automatic-term-mapping echo), then EFetch downloads title/abstract/
date in batches of 200 IDs. The client is rate limited (3 req/s without an
API key, 10 req/s with one) and retries transport failures and 429s with
exponential backoff.

Tests replay recorded XML through an injected transport; NCBI_BASE_URL can
also point the client at a local fixture server.
"""

from __future__ import annotations

import logging
import os
import threading
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Callable, Iterable

import requests

from . import config
from .errors import MalformedResponse, NetworkError, NoResults, RateLimited
from .query import QueryAst, serialize_query

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils"

# transport(url, params) -> (status_code, body_bytes)
Transport = Callable[[str, dict], tuple[int, bytes]]


@dataclass(frozen=True)
class PubDate:
    year: int | None
    month: int | None = None
    day: int | None = None


@dataclass(frozen=True)
class PaperRecord:
    pmid: int
    title: str
    abstract: str
    pub_date: PubDate


@dataclass
class SearchResult:
    records: list[PaperRecord]
    total_count: int
    atm_translation: str
    query: QueryAst | None


class RateLimiter:
    """Token-interval limiter; `clock` and `sleep` are injectable for tests."""

    def __init__(
        self,
        rate_per_sec: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.interval = 1.0 / rate_per_sec
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_allowed = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            wait = self._next_allowed - now
            if wait > 0:
                self._sleep(wait)
                now = self._next_allowed
            self._next_allowed = max(now, self._next_allowed) + self.interval


def _requests_transport(url: str, params: dict) -> tuple[int, bytes]:
    resp = requests.get(url, params=params, timeout=30)
    return resp.status_code, resp.content


class PubMedClient:
    """Shared, rate-limited client for ESearch/EFetch.

    One instance may serve many concurrent jobs; the rate limiter is the
    single serialized point.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        email: str | None = None,
        transport: Transport | None = None,
        rate_limiter: RateLimiter | None = None,
        retries: int = config.RETRY_ATTEMPTS,
        backoff_base: float = config.RETRY_BACKOFF_BASE,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = (base_url or os.environ.get("NCBI_BASE_URL") or DEFAULT_BASE_URL).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get("NCBI_API_KEY")
        self.email = email if email is not None else os.environ.get("NCBI_EMAIL")
        self.transport = transport or _requests_transport
        rate = config.RATE_WITH_KEY if self.api_key else config.RATE_NO_KEY
        self.rate_limiter = rate_limiter or RateLimiter(rate)
        self.retries = retries
        self.backoff_base = backoff_base
        self._sleep = sleep

    # --- HTTP plumbing ---

    def _get(self, endpoint: str, params: dict) -> bytes:
        url = f"{self.base_url}/{endpoint}"
        params = dict(params)
        if self.api_key:
            params["api_key"] = self.api_key
        if self.email:
            params["email"] = self.email
        last_error: Exception | None = None
        for attempt in range(self.retries):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            self.rate_limiter.acquire()
            try:
                status, body = self.transport(url, params)
            except Exception as exc:  # transport failure: retry
                last_error = exc
                logger.warning("transport error on %s (attempt %d): %s", endpoint, attempt + 1, exc)
                continue
            if status == 429:
                last_error = RateLimited(f"{endpoint} returned 429")
                continue
            if status >= 500:
                last_error = NetworkError(f"{endpoint} returned {status}")
                continue
            if status != 200:
                raise NetworkError(f"{endpoint} returned {status}")
            return body
        if isinstance(last_error, RateLimited):
            raise last_error
        raise NetworkError(f"{endpoint} failed after {self.retries} attempts") from last_error

    # --- search ---

    def search(self, query: QueryAst | str, cap: int = config.RETRIEVAL_CAP) -> SearchResult:
        """Retrieve up to `cap` relevance-ranked records for `query`."""
        if cap < 1:
            raise ValueError("cap must be >= 1")
        ast = query if isinstance(query, QueryAst) else None
        term = serialize_query(query) if isinstance(query, QueryAst) else query
        body = self._get(
            "esearch.fcgi",
            {
                "db": "pubmed",
                "term": term,
                "retmode": "xml",
                "retmax": cap,
                "sort": "relevance",
            },
        )
        total_count, pmids, atm = _parse_esearch(body)
        if total_count == 0:
            raise NoResults(f"no PubMed results for {term!r}")
        # dedupe, first (most relevant) occurrence wins
        seen: set[int] = set()
        ordered: list[int] = []
        for pmid in pmids:
            if pmid not in seen:
                seen.add(pmid)
                ordered.append(pmid)
        ordered = ordered[:cap]
        records = self.fetch_records(ordered)
        return SearchResult(records=records, total_count=total_count, atm_translation=atm, query=ast)

    def fetch_records(self, pmids: list[int]) -> list[PaperRecord]:
        """EFetch the given PMIDs in batches, preserving input order."""
        by_pmid: dict[int, PaperRecord] = {}
        for start in range(0, len(pmids), config.EFETCH_BATCH_SIZE):
            batch = pmids[start : start + config.EFETCH_BATCH_SIZE]
            body = self._get(
                "efetch.fcgi",
                {"db": "pubmed", "id": ",".join(map(str, batch)), "retmode": "xml"},
            )
            for rec in _parse_efetch(body):
                by_pmid.setdefault(rec.pmid, rec)
        return [by_pmid[p] for p in pmids if p in by_pmid]

    def pmid_exists(self, pmid: int) -> bool:
        """Cheap existence probe used by the citation audit's live upgrade."""
        try:
            return bool(self.fetch_records([pmid]))
        except (NetworkError, RateLimited, MalformedResponse):
            return False


@dataclass
class YearHistogram:
    per_year: dict[int, int] = field(default_factory=dict)
    unknown: int = 0


def publications_per_year(records: Iterable[PaperRecord]) -> YearHistogram:
    """Count records per publication year; dateless records go to `unknown`."""
    hist = YearHistogram()
    for rec in records:
        if rec.pub_date.year is None:
            hist.unknown += 1
        else:
            hist.per_year[rec.pub_date.year] = hist.per_year.get(rec.pub_date.year, 0) + 1
    return hist


# --- XML parsing ---

def _parse_xml(body: bytes) -> ET.Element:
    try:
        return ET.fromstring(body)
    except ET.ParseError as exc:
        raise MalformedResponse(f"unparseable XML: {exc}") from exc


def _parse_esearch(body: bytes) -> tuple[int, list[int], str]:
    root = _parse_xml(body)
    count_el = root.find("Count")
    if count_el is None or count_el.text is None:
        raise MalformedResponse("ESearch response missing Count")
    try:
        count = int(count_el.text)
    except ValueError as exc:
        raise MalformedResponse(f"bad Count: {count_el.text!r}") from exc
    pmids = []
    for id_el in root.findall("./IdList/Id"):
        try:
            pmids.append(int(id_el.text or ""))
        except ValueError as exc:
            raise MalformedResponse(f"bad PMID: {id_el.text!r}") from exc
    atm_el = root.find("QueryTranslation")
    atm = (atm_el.text or "") if atm_el is not None else ""
    return count, pmids, atm


_MONTHS = {
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}


def _parse_pub_date(article: ET.Element) -> PubDate:
    date_el = article.find(".//Article/Journal/JournalIssue/PubDate")
    if date_el is None:
        return PubDate(year=None)
    year = month = day = None
    year_el = date_el.find("Year")
    if year_el is not None and year_el.text and year_el.text.isdigit():
        year = int(year_el.text)
    else:
        # MedlineDate like "2020 Jan-Feb" or "1998-1999"
        md = date_el.findtext("MedlineDate") or ""
        for token in md.replace("-", " ").split():
            if token.isdigit() and len(token) == 4:
                year = int(token)
                break
    month_text = (date_el.findtext("Month") or "").strip()
    if month_text.isdigit():
        month = int(month_text)
    elif month_text[:3].lower() in _MONTHS:
        month = _MONTHS[month_text[:3].lower()]
    day_text = (date_el.findtext("Day") or "").strip()
    if day_text.isdigit():
        day = int(day_text)
    return PubDate(year=year, month=month, day=day)


def _element_text(el: ET.Element | None) -> str:
    if el is None:
        return ""
    return "".join(el.itertext()).strip()


def _parse_efetch(body: bytes) -> list[PaperRecord]:
    root = _parse_xml(body)
    records: list[PaperRecord] = []
    for article in root.findall(".//PubmedArticle"):
        pmid_text = article.findtext(".//MedlineCitation/PMID")
        if pmid_text is None:
            raise MalformedResponse("PubmedArticle missing PMID")
        try:
            pmid = int(pmid_text)
        except ValueError as exc:
            raise MalformedResponse(f"bad PMID: {pmid_text!r}") from exc
        title = _element_text(article.find(".//Article/ArticleTitle"))
        if not title:
            # title is contractually non-empty; fall back to a placeholder
            title = f"[untitled PMID {pmid}]"
        abstract_parts = [
            _element_text(part)
            for part in article.findall(".//Article/Abstract/AbstractText")
        ]
        abstract = " ".join(p for p in abstract_parts if p)
        records.append(
            PaperRecord(pmid=pmid, title=title, abstract=abstract, pub_date=_parse_pub_date(article))
        )
    return records
