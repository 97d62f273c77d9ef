"""LLM generation: submit the two-role prompt to a chat-completion endpoint.

The backend contract is the ubiquitous chat wire shape (messages with role
and content). An HTTP backend and a deterministic mock ship; the mock
builds a well-formed three-section page citing only PMIDs present in its
prompt, which is what makes hermetic end-to-end grounding tests possible.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

import requests

from . import config
from .citations import format_citation
from .errors import BackendError, ContextOverflow, EmptyCompletion
from .prompting import PromptBundle

logger = logging.getLogger(__name__)


@dataclass
class GenerationConfig:
    model_id: str = "gpt-4"
    endpoint: str = ""
    api_key: str | None = None
    temperature: float = config.TEMPERATURE
    max_output_tokens: int = config.GENERATION_RESERVE
    context_limit: int = config.CONTEXT_LIMIT
    timeout: float = 120.0

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")


@dataclass
class GenerationResult:
    text: str
    usage: dict = field(default_factory=dict)
    retries: int = 0


class ChatBackend(Protocol):
    def complete(self, system_text: str, user_text: str, cfg: GenerationConfig) -> GenerationResult:
        ...


class HttpChatBackend:
    """POSTs {model, messages, temperature, max_tokens} and reads back
    choices[0].message.content plus usage accounting.

    Retries transport errors, 429 and 5xx with exponential backoff; 4xx
    semantic errors fail immediately.
    """

    def __init__(
        self,
        retries: int = config.RETRY_ATTEMPTS,
        backoff_base: float = config.RETRY_BACKOFF_BASE,
        sleep: Callable[[float], None] = time.sleep,
        post=requests.post,
    ):
        self.retries = retries
        self.backoff_base = backoff_base
        self._sleep = sleep
        self._post = post

    def complete(self, system_text: str, user_text: str, cfg: GenerationConfig) -> GenerationResult:
        body = {
            "model": cfg.model_id,
            "messages": [
                {"role": "system", "content": system_text},
                {"role": "user", "content": user_text},
            ],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
        }
        headers = {}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        logger.info("chat request to %s: %s", cfg.endpoint, _redacted(body))
        last_error: Exception | None = None
        retries_used = 0
        for attempt in range(self.retries):
            if attempt:
                retries_used += 1
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self._post(cfg.endpoint, json=body, headers=headers, timeout=cfg.timeout)
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = BackendError(f"endpoint returned {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise BackendError(f"endpoint returned {resp.status_code}: {resp.text[:500]}")
            payload = resp.json()
            try:
                text = payload["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed completion payload: {exc}") from exc
            return GenerationResult(
                text=text, usage=payload.get("usage", {}), retries=retries_used
            )
        raise BackendError(f"endpoint failed after {self.retries} attempts") from last_error


def _redacted(body: dict) -> dict:
    redacted = dict(body)
    redacted["messages"] = f"<{len(body['messages'])} messages>"
    return redacted


_ENTITY_RE = re.compile(r"^Entity: (.*)$", re.MULTILINE)
_PMID_LINE_RE = re.compile(r"^PMID: (\d+)$", re.MULTILINE)
_TITLE_LINE_RE = re.compile(r"^Title: (.*)$", re.MULTILINE)


class MockChatBackend:
    """Deterministic stand-in: writes a three-section page whose citations
    are exactly (a subset of) the PMIDs found in the prompt."""

    def complete(self, system_text: str, user_text: str, cfg: GenerationConfig) -> GenerationResult:
        entity_m = _ENTITY_RE.search(user_text)
        entity = entity_m.group(1) if entity_m else "the entity"
        pmids = [int(p) for p in _PMID_LINE_RE.findall(user_text)]
        titles = _TITLE_LINE_RE.findall(user_text)

        def cite(ps: list[int]) -> str:
            return f" {format_citation(ps)}" if ps else ""

        definition = (
            f"{entity} is a biomedical topic with an active research literature"
            f"{cite(pmids[:1])}."
        )
        main_sentences = []
        for i, pmid in enumerate(pmids[:6]):
            title = titles[i] if i < len(titles) else "an untitled study"
            main_sentences.append(
                f'One line of work is represented by "{title}"{cite([pmid])}.'
            )
        if not main_sentences:
            main_sentences.append(f"No sampled literature was provided for {entity}.")
        future = (
            f"Open questions about {entity} remain for future research"
            f"{cite(pmids[-1:])}."
        )
        text = (
            "Definition:\n"
            f"{definition}\n\n"
            "Main Content:\n"
            f"{' '.join(main_sentences)}\n\n"
            "Future Directions:\n"
            f"{future}\n"
        )
        usage = {"prompt_tokens": len(user_text.split()), "completion_tokens": len(text.split())}
        return GenerationResult(text=text, usage=usage, retries=0)


def generate(prompt: PromptBundle, cfg: GenerationConfig, backend: ChatBackend | None = None) -> GenerationResult:
    """Run one completion. Refuses locally (no network call) when the
    prompt plus the output reserve cannot fit the model context."""
    if prompt.token_count + cfg.max_output_tokens > cfg.context_limit:
        raise ContextOverflow(
            f"{prompt.token_count} prompt + {cfg.max_output_tokens} output tokens "
            f"exceed the {cfg.context_limit}-token context"
        )
    backend = backend or HttpChatBackend()
    result = backend.complete(prompt.system_text, prompt.user_text, cfg)
    if not result.text.strip():
        raise EmptyCompletion("backend returned an empty completion")
    return result
