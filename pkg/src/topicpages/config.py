"""Shipped pipeline defaults.

These mirror the production configuration; every one of them can be
overridden per run (CLI flags, service request overrides, or env vars).
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Retrieval
RETRIEVAL_CAP = 10_000
EFETCH_BATCH_SIZE = 200
RATE_NO_KEY = 3.0        # requests/sec without an NCBI API key
RATE_WITH_KEY = 10.0     # requests/sec with an API key
RETRY_ATTEMPTS = 3
RETRY_BACKOFF_BASE = 0.5

# Clustering
CLUSTER_THRESHOLD = 0.96
THRESHOLD_STEP = 0.02
THRESHOLD_FLOOR = 0.90
MIN_CLUSTER_SIZE = 5

# Sampling
FLAT_SAMPLING_CUTOFF = 100

# Prompting / generation
CONTEXT_LIMIT = 8_192
GENERATION_RESERVE = 512
TEMPERATURE = 0.0


@dataclass
class PipelineConfig:
    """One bag of knobs threaded through the full pipeline."""

    max_papers: int = RETRIEVAL_CAP
    cluster_threshold: float = CLUSTER_THRESHOLD
    threshold_step: float = THRESHOLD_STEP
    threshold_floor: float = THRESHOLD_FLOOR
    min_cluster_size: int = MIN_CLUSTER_SIZE
    flat_sampling_cutoff: int = FLAT_SAMPLING_CUTOFF
    context_limit: int = CONTEXT_LIMIT
    generation_reserve: int = GENERATION_RESERVE
    temperature: float = TEMPERATURE
    seed: int = 0
    canonical_names: list[str] = field(default_factory=list)
