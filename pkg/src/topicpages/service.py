"""End-to-end orchestration: the pipeline runner, job registry with staged
progress, the retrieval cache, and the HTTP API.

A job moves through queued -> searching -> embedding -> clustering ->
sampling -> generating -> postprocessing -> done (failed is reachable from
any non-terminal state). Each stage completion appends a progress event
carrying that stage's statistics.
"""

from __future__ import annotations

import json
import logging
import os
import sqlite3
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable

import pydantic

from . import config
from .clustering import ClusterSet, cluster_with_relaxation
from .embedding import EmbeddingBackend, HashingBackend, RemoteBackend, embed_batch
from .errors import InvalidQuery, NoCitations, NotFound, QueryError, TopicPagesError
from .generation import ChatBackend, GenerationConfig, HttpChatBackend, MockChatBackend, generate
from .prompting import EntityContext, build_prompt, render_paper_block, scaffold_cost
from .pubmed import PaperRecord, PubDate, PubMedClient, SearchResult, publications_per_year
from .query import parse_query, serialize_query
from .sampling import SampledCorpus, TokenBudget, approx_token_counter, sample, sample_flat
from .topicpage import PageMetadata, TopicPage, extract_citations, parse_sections, sample_audit_citation

logger = logging.getLogger(__name__)

STATES = [
    "queued",
    "searching",
    "embedding",
    "clustering",
    "sampling",
    "generating",
    "postprocessing",
    "done",
    "failed",
]


@dataclass
class ProgressEvent:
    timestamp: float
    stage: str
    message: str
    stats: dict = field(default_factory=dict)


@dataclass
class JobRequest:
    query: str
    canonical_names: list[str] = field(default_factory=list)
    overrides: dict = field(default_factory=dict)


@dataclass
class Job:
    id: str
    request: JobRequest
    state: str = "queued"
    progress_log: list[ProgressEvent] = field(default_factory=list)
    result: TopicPage | None = None
    error: str | None = None
    error_type: str | None = None


@dataclass
class PipelineBackends:
    pubmed: PubMedClient
    embedder: EmbeddingBackend
    llm: ChatBackend
    generation: GenerationConfig = field(default_factory=GenerationConfig)


def backends_from_env(mock: bool = False) -> PipelineBackends:
    """Wire backends from LLM_* / NCBI_* env vars, or fully hermetic mocks."""
    if mock:
        from .fixtures import fixture_transport

        return PipelineBackends(
            pubmed=PubMedClient(transport=fixture_transport, sleep=lambda _s: None),
            embedder=HashingBackend(),
            llm=MockChatBackend(),
            generation=GenerationConfig(model_id="mock"),
        )
    gen = GenerationConfig(
        model_id=os.environ.get("LLM_MODEL_ID", "gpt-4"),
        endpoint=os.environ.get("LLM_BASE_URL", "") .rstrip("/") + "/chat/completions"
        if os.environ.get("LLM_BASE_URL")
        else "",
        api_key=os.environ.get("LLM_API_KEY"),
    )
    embed_url = os.environ.get("EMBEDDING_URL")
    embedder: EmbeddingBackend
    if embed_url:
        embedder = RemoteBackend(embed_url, os.environ.get("EMBEDDING_TOKEN"))
    else:
        embedder = HashingBackend()
    return PipelineBackends(
        pubmed=PubMedClient(), embedder=embedder, llm=HttpChatBackend(), generation=gen
    )


def run_pipeline(
    request: JobRequest,
    cfg: config.PipelineConfig,
    backends: PipelineBackends,
    progress: Callable[[str, str, dict], None] | None = None,
    search_result: SearchResult | None = None,
) -> TopicPage:
    """Run search -> embed -> cluster -> sample -> generate -> postprocess.

    `progress(stage, message, stats)` is called as each stage completes.
    `search_result` lets the caller inject a cached retrieval.
    """
    def report(stage: str, message: str, **stats) -> None:
        if progress:
            progress(stage, message, stats)

    try:
        ast = parse_query(request.query)
    except QueryError as exc:
        raise InvalidQuery(str(exc)) from exc
    query_text = serialize_query(ast)
    entity_name = request.canonical_names[0] if request.canonical_names else query_text

    t0 = time.monotonic()
    if search_result is None:
        search_result = backends.pubmed.search(ast, cap=cfg.max_papers)
    records = search_result.records
    report(
        "searching",
        f"retrieved {len(records)} of {search_result.total_count} matching records",
        records=len(records),
        total_count=search_result.total_count,
        atm_translation=search_result.atm_translation,
        seconds=round(time.monotonic() - t0, 3),
    )

    hist = publications_per_year(records)
    ctx = EntityContext(
        entity_name=entity_name,
        canonical_names=list(request.canonical_names),
        total_publications=search_result.total_count,
        pubs_per_year=hist.per_year,
    )

    counter = approx_token_counter
    prompt_budget = TokenBudget(
        max_tokens=cfg.context_limit - cfg.generation_reserve, counter=counter
    )
    literature_budget = TokenBudget(
        max_tokens=prompt_budget.max_tokens - scaffold_cost(ctx, prompt_budget),
        counter=counter,
    )
    cost = lambda record: counter(render_paper_block(record))

    clusterset = ClusterSet()
    corpus: SampledCorpus
    if len(records) > cfg.flat_sampling_cutoff:
        t0 = time.monotonic()
        embedded = embed_batch(records, backends.embedder)
        report(
            "embedding",
            f"embedded {len(embedded)} records",
            records=len(embedded),
            dimension=int(embedded[0].vector.shape[0]) if embedded else 0,
            seconds=round(time.monotonic() - t0, 3),
        )
        t0 = time.monotonic()
        clusterset = cluster_with_relaxation(
            embedded,
            start_threshold=cfg.cluster_threshold,
            step=cfg.threshold_step,
            floor=cfg.threshold_floor,
            min_size=cfg.min_cluster_size,
        )
        report(
            "clustering",
            "clustering skipped" if clusterset.skipped
            else f"found {len(clusterset.clusters)} clusters at threshold {clusterset.threshold_used}",
            clusters=len(clusterset.clusters),
            threshold_used=clusterset.threshold_used,
            skipped=clusterset.skipped,
            noise=len(clusterset.noise),
            seconds=round(time.monotonic() - t0, 3),
        )
    else:
        report("embedding", "skipped: small corpus takes the flat sampling path")
        report("clustering", "skipped: small corpus takes the flat sampling path", skipped=True)

    t0 = time.monotonic()
    if clusterset.skipped:
        corpus = sample_flat(records, literature_budget, cfg.seed, cost=cost)
    else:
        corpus = sample(clusterset, literature_budget, cfg.seed, cost=cost)
    report(
        "sampling",
        f"sampled {len(corpus.papers())} papers in {len(corpus.groups)} groups",
        papers=len(corpus.papers()),
        groups=len(corpus.groups),
        literature_tokens=corpus.total_tokens,
        fallback_random=corpus.fallback_random,
        seconds=round(time.monotonic() - t0, 3),
    )

    prompt = build_prompt(corpus, ctx, prompt_budget)
    gen_cfg = backends.generation
    gen_cfg.temperature = cfg.temperature
    gen_cfg.max_output_tokens = cfg.generation_reserve
    gen_cfg.context_limit = cfg.context_limit
    t0 = time.monotonic()
    result = generate(prompt, gen_cfg, backend=backends.llm)
    report(
        "generating",
        "completion received",
        prompt_tokens=prompt.token_count,
        usage=result.usage,
        retries=result.retries,
        seconds=round(time.monotonic() - t0, 3),
    )

    page = parse_sections(result.text, entity_name)
    page.citations = extract_citations(page, prompt.included_pmids)
    page.metadata = PageMetadata(
        query=query_text,
        atm_translation=search_result.atm_translation,
        total_count=search_result.total_count,
        cluster_count=len(clusterset.clusters),
        threshold_used=clusterset.threshold_used,
        skipped_clustering=clusterset.skipped,
        sampler_seed=cfg.seed,
        model_id=gen_cfg.model_id,
        generated_at=datetime.now(timezone.utc).isoformat(),
    )
    report(
        "postprocessing",
        f"parsed page with {len(page.citations)} citations",
        citations=len(page.citations),
        structure_failure=page.structure_failure,
    )
    return page


# --- retrieval cache ---

class RetrievalCache:
    """On-disk (sqlite) cache of search results, keyed by the normalized
    serialized query plus the retrieval cap, with a TTL."""

    def __init__(self, path: str = ":memory:", ttl_seconds: float = 24 * 3600):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._lock = threading.Lock()
        self.ttl = ttl_seconds
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS retrievals "
                "(key TEXT PRIMARY KEY, fetched_at REAL, payload TEXT)"
            )
            self._conn.commit()

    @staticmethod
    def key_for(query_text: str, cap: int) -> str:
        return f"{serialize_query(parse_query(query_text))}|cap={cap}"

    def get(self, key: str) -> SearchResult | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT fetched_at, payload FROM retrievals WHERE key = ?", (key,)
            ).fetchone()
        if row is None:
            return None
        fetched_at, payload = row
        if time.time() - fetched_at > self.ttl:
            return None
        return _search_result_from_dict(json.loads(payload))

    def put(self, key: str, result: SearchResult) -> None:
        payload = json.dumps(_search_result_to_dict(result))
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO retrievals (key, fetched_at, payload) VALUES (?, ?, ?)",
                (key, time.time(), payload),
            )
            self._conn.commit()


def _search_result_to_dict(result: SearchResult) -> dict:
    return {
        "total_count": result.total_count,
        "atm_translation": result.atm_translation,
        "records": [
            {
                "pmid": r.pmid,
                "title": r.title,
                "abstract": r.abstract,
                "year": r.pub_date.year,
                "month": r.pub_date.month,
                "day": r.pub_date.day,
            }
            for r in result.records
        ],
    }


def _search_result_from_dict(data: dict) -> SearchResult:
    return SearchResult(
        records=[
            PaperRecord(
                pmid=r["pmid"],
                title=r["title"],
                abstract=r["abstract"],
                pub_date=PubDate(year=r["year"], month=r["month"], day=r["day"]),
            )
            for r in data["records"]
        ],
        total_count=data["total_count"],
        atm_translation=data["atm_translation"],
        query=None,
    )


# --- job service ---

class TopicPageService:
    """Job registry plus shared backends and retrieval cache."""

    def __init__(
        self,
        backends: PipelineBackends | None = None,
        cfg: config.PipelineConfig | None = None,
        cache_path: str = ":memory:",
        cache_ttl: float = 24 * 3600,
        synchronous: bool = False,
    ):
        self.backends = backends or backends_from_env()
        self.cfg = cfg or config.PipelineConfig()
        self.cache = RetrievalCache(cache_path, cache_ttl)
        self.synchronous = synchronous
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit_job(self, request: JobRequest) -> str:
        try:
            parse_query(request.query)
        except QueryError as exc:
            raise InvalidQuery(str(exc)) from exc
        job = Job(id=uuid.uuid4().hex, request=request)
        with self._lock:
            self._jobs[job.id] = job
        if self.synchronous:
            self._run(job)
        else:
            thread = threading.Thread(target=self._run, args=(job,), daemon=True)
            thread.start()
        return job.id

    def get_job(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFound(f"no job {job_id!r}")
            # shallow snapshot: progress list copied, events are append-only
            return Job(
                id=job.id,
                request=job.request,
                state=job.state,
                progress_log=list(job.progress_log),
                result=job.result,
                error=job.error,
                error_type=job.error_type,
            )

    def _set_state(self, job: Job, state: str) -> None:
        with self._lock:
            job.state = state

    def _config_for(self, request: JobRequest) -> config.PipelineConfig:
        cfg = config.PipelineConfig(**vars(self.cfg))
        for name, value in request.overrides.items():
            if not hasattr(cfg, name):
                raise InvalidQuery(f"unknown override {name!r}")
            setattr(cfg, name, value)
        return cfg

    def _run(self, job: Job) -> None:
        def progress(stage: str, message: str, stats: dict) -> None:
            with self._lock:
                job.progress_log.append(
                    ProgressEvent(timestamp=time.time(), stage=stage, message=message, stats=stats)
                )

        try:
            cfg = self._config_for(job.request)
            self._set_state(job, "searching")
            key = RetrievalCache.key_for(job.request.query, cfg.max_papers)
            cached = self.cache.get(key)
            if cached is None:
                ast = parse_query(job.request.query)
                cached = self.backends.pubmed.search(ast, cap=cfg.max_papers)
                self.cache.put(key, cached)

            def staged(stage: str, message: str, stats: dict) -> None:
                next_state = {
                    "searching": "embedding",
                    "embedding": "clustering",
                    "clustering": "sampling",
                    "sampling": "generating",
                    "generating": "postprocessing",
                }.get(stage)
                progress(stage, message, stats)
                if next_state:
                    self._set_state(job, next_state)

            page = run_pipeline(
                job.request, cfg, self.backends, progress=staged, search_result=cached
            )
            with self._lock:
                job.result = page
                job.state = "done"
        except TopicPagesError as exc:
            logger.warning("job %s failed: %s", job.id, exc)
            with self._lock:
                job.error = str(exc)
                job.error_type = type(exc).__name__
                job.state = "failed"
        except Exception as exc:  # defensive: never leave a job hanging
            logger.exception("job %s crashed", job.id)
            with self._lock:
                job.error = str(exc)
                job.error_type = type(exc).__name__
                job.state = "failed"

    def audit_bundle(self, job_id: str, seed: int = 0) -> dict:
        job = self.get_job(job_id)
        if job.result is None:
            raise NotFound(f"job {job_id!r} has no completed page")
        key = RetrievalCache.key_for(job.request.query, self._config_for(job.request).max_papers)
        cached = self.cache.get(key)
        records = {r.pmid: r for r in cached.records} if cached else {}
        bundle = sample_audit_citation(job.result, seed, records)
        return {
            "citation": {
                "pmid": bundle.citation.pmid,
                "section": bundle.citation.section,
                "start": bundle.citation.start,
                "end": bundle.citation.end,
                "status": bundle.citation.status,
            },
            "context": bundle.context,
            "cited_title": bundle.cited_title,
            "cited_abstract": bundle.cited_abstract,
        }


def job_to_dict(job: Job) -> dict:
    return {
        "id": job.id,
        "state": job.state,
        "request": {
            "query": job.request.query,
            "canonical_names": job.request.canonical_names,
            "overrides": job.request.overrides,
        },
        "progress": [
            {
                "timestamp": ev.timestamp,
                "stage": ev.stage,
                "message": ev.message,
                "stats": ev.stats,
            }
            for ev in job.progress_log
        ],
        "error": job.error,
        "error_type": job.error_type,
    }


class JobBody(pydantic.BaseModel):
    query: str
    canonical_names: list[str] = []
    overrides: dict = {}


def create_app(service: TopicPageService):
    """FastAPI app exposing the job API."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import Response

    from .topicpage import export_json

    app = FastAPI(title="topicpages")

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/jobs", status_code=202)
    def post_job(body: JobBody):
        try:
            job_id = service.submit_job(
                JobRequest(
                    query=body.query,
                    canonical_names=body.canonical_names,
                    overrides=body.overrides,
                )
            )
        except InvalidQuery as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"id": job_id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        try:
            return job_to_dict(service.get_job(job_id))
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/api/jobs/{job_id}/page")
    def get_page(job_id: str):
        try:
            job = service.get_job(job_id)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if job.result is None:
            raise HTTPException(status_code=404, detail=f"job {job_id!r} has no completed page")
        return Response(content=export_json(job.result), media_type="application/json")

    @app.get("/api/jobs/{job_id}/audit")
    def get_audit(job_id: str, seed: int = 0):
        try:
            return service.audit_bundle(job_id, seed)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except NoCitations as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    return app
