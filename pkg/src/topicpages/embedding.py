"""Embedding backends: turn paper records into unit vectors.

Two implementations ship: a remote HTTP backend speaking a minimal
texts-in / vectors-out JSON contract (put a hosted scientific-text encoder
behind it), and a deterministic feature-hashing backend used by every
hermetic test. Vectors are L2-normalized on ingestion so cosine similarity
downstream is a plain dot product.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import BackendUnavailable, DimensionMismatch
from .pubmed import PaperRecord

SEPARATOR = "[SEP]"


@dataclass(frozen=True)
class EmbeddedPaper:
    record: PaperRecord
    vector: np.ndarray

    @property
    def pmid(self) -> int:
        return self.record.pmid


def format_input(record: PaperRecord) -> str:
    """Render a record for the encoder: title, separator, abstract.

    Records without an abstract degrade to the bare title (no trailing
    separator); no escaping is applied to either field.
    """
    if not record.abstract:
        return record.title
    return f"{record.title} {SEPARATOR} {record.abstract}"


class EmbeddingBackend(Protocol):
    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return one vector per text, shape (len(texts), dim)."""
        ...


class HashingBackend:
    """Seeded feature-hashing of tokens into a fixed-dim bag-of-words vector.

    Deterministic by construction: token -> (bucket, sign) via a keyed
    blake2b digest. Meant for tests and offline runs, not semantic quality.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def _token_bucket(self, token: str) -> tuple[int, float]:
        digest = hashlib.blake2b(
            token.encode("utf-8"), key=str(self.seed).encode("utf-8"), digest_size=8
        ).digest()
        value = int.from_bytes(digest, "big")
        return value % self.dim, 1.0 if (value >> 32) & 1 else -1.0

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            for token in re.findall(r"\w+", text.lower()):
                bucket, sign = self._token_bucket(token)
                out[i, bucket] += sign
        return out


class RemoteBackend:
    """HTTP embedding endpoint: POST {"texts": [...]} -> {"vectors": [[...]]}"""

    def __init__(self, url: str, auth_token: str | None = None, timeout: float = 60.0):
        self.url = url
        self.auth_token = auth_token
        self.timeout = timeout

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        headers = {}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        try:
            resp = requests.post(
                self.url, json={"texts": list(texts)}, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(f"embedding endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(f"embedding endpoint returned {resp.status_code}")
        vectors = resp.json().get("vectors")
        if vectors is None or len(vectors) != len(texts):
            raise BackendUnavailable("embedding endpoint returned a malformed payload")
        return np.asarray(vectors, dtype=np.float64)


def embed_batch(records: Sequence[PaperRecord], backend: EmbeddingBackend) -> list[EmbeddedPaper]:
    """Embed records (order preserved) and L2-normalize each vector."""
    if not records:
        return []
    vectors = backend.embed([format_input(r) for r in records])
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != len(records):
        raise DimensionMismatch(
            f"backend returned shape {vectors.shape} for {len(records)} records"
        )
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    # degenerate all-zero vector: pin to a fixed axis so the unit-norm
    # invariant holds
    zero = norms[:, 0] < 1e-12
    if zero.any():
        vectors[zero] = 0.0
        vectors[zero, 0] = 1.0
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    vectors = vectors / norms
    return [EmbeddedPaper(record=r, vector=vectors[i]) for i, r in enumerate(records)]
