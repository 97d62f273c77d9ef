"""Budget-constrained diverse paper selection.

Clustered path: all cluster representatives first (largest cluster first),
then repeated draws of a cluster with probability proportional to the
square root of its size, followed by a uniform draw among that cluster's
not-yet-sampled members. Every candidate is appended only if its token cost
fits the remaining budget; a drawn paper that does not fit is marked
unsampleable so the loop always terminates.

Flat path (small or unclustered corpora): seeded uniform permutation,
greedy take-what-fits.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from typing import Callable

from .clustering import ClusterSet
from .pubmed import PaperRecord


def whitespace_token_counter(text: str) -> int:
    return len(text.split())


_PIECE_RE = re.compile(r"\w+|[^\w\s]")


def approx_token_counter(text: str) -> int:
    """Cheap stand-in for a subword tokenizer: words longer than 8 chars
    count one extra piece per 4 extra chars; punctuation counts singly."""
    count = 0
    for piece in _PIECE_RE.findall(text):
        count += 1 + max(0, (len(piece) - 8 + 3) // 4)
    return count


@dataclass(frozen=True)
class TokenBudget:
    max_tokens: int
    counter: Callable[[str], int] = approx_token_counter

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass
class SampledCorpus:
    # one inner list per represented cluster, descending original cluster size
    groups: list[list[PaperRecord]] = field(default_factory=list)
    total_tokens: int = 0
    fallback_random: bool = False
    # instrumentation: cluster index (in descending-size order) of every
    # phase-2 die roll, including rolls that landed on an exhausted cluster
    phase2_picks: list[int] = field(default_factory=list)

    def papers(self) -> list[PaperRecord]:
        return [p for group in self.groups for p in group]


def _default_cost(budget: TokenBudget) -> Callable[[PaperRecord], int]:
    from .prompting import render_paper_block  # avoids a module cycle

    return lambda record: budget.counter(render_paper_block(record))


def sample(
    clusters: ClusterSet,
    budget: TokenBudget,
    rng_seed: int,
    cost: Callable[[PaperRecord], int] | None = None,
) -> SampledCorpus:
    """Two-phase clustered sampling; deterministic given `rng_seed`."""
    cost = cost or _default_cost(budget)
    rng = random.Random(rng_seed)

    ordered = sorted(clusters.clusters, key=lambda c: (-c.size, c.centroid.pmid))
    remaining = budget.max_tokens
    groups: dict[int, list[PaperRecord]] = {}
    selected_pmids: set[int] = set()
    total = 0

    # phase 1: representatives, largest cluster first; non-fitting ones are
    # skipped and the loop continues
    for ci, cluster in enumerate(ordered):
        c = cluster.centroid.record
        c_cost = cost(c)
        if c_cost <= remaining:
            groups.setdefault(ci, []).append(c)
            selected_pmids.add(c.pmid)
            remaining -= c_cost
            total += c_cost

    # phase 2: sqrt-size-weighted cluster die roll over ALL clusters
    # (a roll landing on an exhausted cluster is a no-op), then a uniform
    # draw among that cluster's not-yet-sampled members
    pools: dict[int, list[PaperRecord]] = {}
    for ci, cluster in enumerate(ordered):
        pool = [m.record for m in cluster.members if m.record.pmid not in selected_pmids]
        if pool:
            pools[ci] = pool
    indices = list(range(len(ordered)))
    weights = [math.sqrt(c.size) for c in ordered]
    picks: list[int] = []

    while pools:
        ci = rng.choices(indices, weights=weights, k=1)[0]
        picks.append(ci)
        pool = pools.get(ci)
        if not pool:
            continue
        paper = pool.pop(rng.randrange(len(pool)))
        if not pool:
            del pools[ci]
        p_cost = cost(paper)
        if p_cost <= remaining:
            groups.setdefault(ci, []).append(paper)
            remaining -= p_cost
            total += p_cost
        # else: unsampleable, permanently dropped from its pool

    return SampledCorpus(
        groups=[groups[ci] for ci in sorted(groups)],
        total_tokens=total,
        fallback_random=False,
        phase2_picks=picks,
    )


def sample_flat(
    papers: list[PaperRecord],
    budget: TokenBudget,
    rng_seed: int,
    cost: Callable[[PaperRecord], int] | None = None,
) -> SampledCorpus:
    """Seeded uniform permutation, greedily keeping papers that fit."""
    cost = cost or _default_cost(budget)
    rng = random.Random(rng_seed)
    shuffled = list(papers)
    rng.shuffle(shuffled)

    picked: list[PaperRecord] = []
    remaining = budget.max_tokens
    total = 0
    for paper in shuffled:
        p_cost = cost(paper)
        if p_cost <= remaining:
            picked.append(paper)
            remaining -= p_cost
            total += p_cost

    groups = [picked] if picked else []
    return SampledCorpus(groups=groups, total_tokens=total, fallback_random=True)
