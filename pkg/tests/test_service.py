import json
import time

import jsonschema
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from topicpages import cli
from topicpages.config import PipelineConfig
from topicpages.errors import InvalidQuery, NotFound
from topicpages.fixtures import fixture_transport
from topicpages.generation import GenerationConfig, MockChatBackend
from topicpages.embedding import HashingBackend
from topicpages.pubmed import PubMedClient
from topicpages.service import (
    STATES,
    JobRequest,
    PipelineBackends,
    TopicPageService,
    backends_from_env,
    create_app,
)
from topicpages.topicpage import load_schema


def counting_fixture_transport(counts):
    def transport(url, params):
        key = "esearch" if "esearch" in url else "efetch"
        counts[key] = counts.get(key, 0) + 1
        return fixture_transport(url, params)

    return transport


def mock_service(synchronous=True, transport=None, **kwargs):
    backends = PipelineBackends(
        pubmed=PubMedClient(
            transport=transport or fixture_transport,
            sleep=lambda _s: None,
            base_url="http://fixture",
            api_key="",
            email="",
        ),
        embedder=HashingBackend(),
        llm=MockChatBackend(),
        generation=GenerationConfig(model_id="mock"),
    )
    return TopicPageService(backends=backends, synchronous=synchronous, **kwargs)


class TestJobs:
    def test_happy_path_reaches_done(self):
        service = mock_service()
        job_id = service.submit_job(JobRequest(query="microplastic", canonical_names=["Microplastics"]))
        job = service.get_job(job_id)
        assert job.state == "done"
        assert job.result is not None
        assert job.result.entity_name == "Microplastics"
        stages = [ev.stage for ev in job.progress_log]
        assert stages == ["searching", "embedding", "clustering", "sampling", "generating", "postprocessing"]

    def test_invalid_query_rejected_before_enqueue(self):
        with pytest.raises(InvalidQuery):
            mock_service().submit_job(JobRequest(query="("))

    def test_unknown_id(self):
        with pytest.raises(NotFound):
            mock_service().get_job("nope")

    def test_progress_timestamps_monotone(self):
        service = mock_service()
        job_id = service.submit_job(JobRequest(query="microplastic"))
        log = service.get_job(job_id).progress_log
        times = [ev.timestamp for ev in log]
        assert times == sorted(times)

    def test_no_results_surfaces_as_failed_job(self):
        def transport(url, params):
            if "esearch" in url:
                return 200, b"<eSearchResult><Count>0</Count><IdList/></eSearchResult>"
            raise AssertionError("unreachable")

        service = mock_service(transport=transport)
        job_id = service.submit_job(JobRequest(query="nothing matches"))
        job = service.get_job(job_id)
        assert job.state == "failed"
        assert job.error_type == "NoResults"

    def test_polling_states_never_regress(self):
        service = mock_service(synchronous=False)
        job_id = service.submit_job(JobRequest(query="microplastic"))
        observed = []
        deadline = time.time() + 20
        while time.time() < deadline:
            state = service.get_job(job_id).state
            observed.append(state)
            if state in ("done", "failed"):
                break
            time.sleep(0.005)
        assert observed[-1] == "done"
        indices = [STATES.index(s) for s in observed]
        assert indices == sorted(indices)

    def test_retrieval_cache_serves_repeat_queries(self):
        counts = {}
        service = mock_service(transport=counting_fixture_transport(counts))
        service.submit_job(JobRequest(query="microplastic"))
        first = dict(counts)
        service.submit_job(JobRequest(query="microplastic"))
        assert counts == first  # no new HTTP traffic
        assert counts["esearch"] == 1

    def test_override_unknown_field_rejected(self):
        service = mock_service()
        job_id = service.submit_job(JobRequest(query="x", overrides={"bogus": 1}))
        assert service.get_job(job_id).state == "failed"

    def test_stage_stats_carried_on_events(self):
        service = mock_service()
        job_id = service.submit_job(JobRequest(query="microplastic"))
        log = service.get_job(job_id).progress_log
        by_stage = {ev.stage: ev.stats for ev in log}
        assert by_stage["searching"]["records"] == 12
        assert "atm_translation" in by_stage["searching"]
        assert "literature_tokens" in by_stage["sampling"]
        assert "usage" in by_stage["generating"]


class TestHttpApi:
    def client(self):
        return TestClient(create_app(mock_service()))

    def test_health(self):
        assert self.client().get("/api/health").json() == {"status": "ok"}

    def test_job_lifecycle_over_http(self):
        client = self.client()
        resp = client.post("/api/jobs", json={"query": "microplastic", "canonical_names": ["Microplastics"]})
        assert resp.status_code == 202
        job_id = resp.json()["id"]

        snap = client.get(f"/api/jobs/{job_id}").json()
        assert snap["state"] == "done"

        page_resp = client.get(f"/api/jobs/{job_id}/page")
        assert page_resp.status_code == 200
        jsonschema.validate(json.loads(page_resp.text), load_schema())

        audit = client.get(f"/api/jobs/{job_id}/audit", params={"seed": 3}).json()
        assert audit["citation"]["pmid"] > 0
        assert audit["cited_title"]

    def test_invalid_query_http_400(self):
        resp = self.client().post("/api/jobs", json={"query": "("})
        assert resp.status_code == 400

    def test_unknown_job_http_404(self):
        client = self.client()
        assert client.get("/api/jobs/zzz").status_code == 404
        assert client.get("/api/jobs/zzz/page").status_code == 404
        assert client.get("/api/jobs/zzz/audit").status_code == 404


class TestCli:
    def test_missing_query_usage_error(self):
        result = CliRunner().invoke(cli.main, ["generate"])
        assert result.exit_code == 2

    def test_mock_generate_writes_schema_valid_file(self, tmp_path):
        out = tmp_path / "page.json"
        result = CliRunner().invoke(
            cli.main,
            ["generate", "--query", "microplastic", "--seed", "42", "--mock", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        jsonschema.validate(data, load_schema())
        assert data["metadata"]["sampler_seed"] == 42

    def test_invalid_query_exit_code(self):
        result = CliRunner().invoke(cli.main, ["generate", "--query", "(", "--mock"])
        assert result.exit_code == cli.EXIT_INVALID_QUERY

    def test_max_papers_takes_flat_path(self, tmp_path):
        out = tmp_path / "page.json"
        result = CliRunner().invoke(
            cli.main,
            ["generate", "--query", "microplastic", "--mock", "--max-papers", "100", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["metadata"]["skipped_clustering"] is True
        assert data["metadata"]["cluster_count"] == 0


class TestBackendsFromEnv:
    def test_mock_wiring_is_hermetic(self):
        backends = backends_from_env(mock=True)
        assert isinstance(backends.llm, MockChatBackend)
        assert isinstance(backends.embedder, HashingBackend)

    def test_env_wiring(self, monkeypatch):
        monkeypatch.setenv("LLM_MODEL_ID", "model-x")
        monkeypatch.setenv("LLM_BASE_URL", "https://llm.example/v1")
        monkeypatch.setenv("LLM_API_KEY", "secret")
        backends = backends_from_env()
        assert backends.generation.model_id == "model-x"
        assert backends.generation.endpoint == "https://llm.example/v1/chat/completions"
        assert backends.generation.api_key == "secret"
