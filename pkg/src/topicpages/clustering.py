"""Greedy community detection over unit embeddings, with threshold relaxation.

A point's neighborhood is every point whose cosine similarity to it meets
the threshold. Points with at least `min_size` neighbors (self included)
are candidate seeds; seeds are visited in descending neighborhood size and
claim their still-unassigned neighbors. A claim that ends up smaller than
`min_size` is dissolved, and whatever remains unassigned at the end is
noise.

If fewer than 2 communities emerge at similarity 0.96 the threshold is
relaxed in 0.02 steps down to 0.90; below that, clustering is skipped and
the caller falls back to flat sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .embedding import EmbeddedPaper
from .errors import DimensionMismatch

_BLOCK = 1024


@dataclass
class Cluster:
    members: list[EmbeddedPaper]
    centroid: EmbeddedPaper

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class ClusterSet:
    clusters: list[Cluster] = field(default_factory=list)
    noise: list[EmbeddedPaper] = field(default_factory=list)
    threshold_used: float = config.THRESHOLD_FLOOR
    skipped: bool = True


def _similarity_rows(matrix: np.ndarray, start: int, stop: int) -> np.ndarray:
    return matrix[start:stop] @ matrix.T


def _neighborhoods(matrix: np.ndarray, threshold: float) -> list[np.ndarray]:
    """Index arrays of each point's neighbors (similarity >= threshold)."""
    n = matrix.shape[0]
    neighborhoods: list[np.ndarray] = []
    for start in range(0, n, _BLOCK):
        sims = _similarity_rows(matrix, start, min(start + _BLOCK, n))
        for row in sims:
            neighborhoods.append(np.nonzero(row >= threshold - 1e-12)[0])
    return neighborhoods


def _medoid(matrix: np.ndarray, member_idx: list[int], papers: list[EmbeddedPaper]) -> int:
    """Member index maximizing summed similarity to co-members; ties -> lowest PMID."""
    sub = matrix[member_idx] @ matrix[member_idx].T
    totals = sub.sum(axis=1)
    best = None
    best_key = None
    for pos, idx in enumerate(member_idx):
        key = (-totals[pos], papers[idx].pmid)
        if best_key is None or key < best_key:
            best_key = key
            best = idx
    assert best is not None
    return best


def detect_communities(
    papers: list[EmbeddedPaper], threshold: float, min_size: int
) -> ClusterSet:
    """One pass of greedy community detection at a fixed threshold."""
    if not (0 < threshold <= 1):
        raise ValueError("threshold must be in (0, 1]")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    if not papers:
        return ClusterSet(threshold_used=threshold, skipped=True)
    dims = {p.vector.shape[0] for p in papers}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed vector dimensions: {sorted(dims)}")

    matrix = np.stack([p.vector for p in papers])
    neighborhoods = _neighborhoods(matrix, threshold)

    seeds = [i for i in range(len(papers)) if len(neighborhoods[i]) >= min_size]
    seeds.sort(key=lambda i: (-len(neighborhoods[i]), papers[i].pmid))

    assigned = np.zeros(len(papers), dtype=bool)
    clusters: list[Cluster] = []
    for seed in seeds:
        if assigned[seed]:
            continue
        member_idx = [int(j) for j in neighborhoods[seed] if not assigned[j]]
        if len(member_idx) < min_size:
            continue  # dissolved: members stay claimable by later seeds
        assigned[member_idx] = True
        centroid_idx = _medoid(matrix, member_idx, papers)
        clusters.append(
            Cluster(members=[papers[j] for j in member_idx], centroid=papers[centroid_idx])
        )

    noise = [papers[i] for i in range(len(papers)) if not assigned[i]]
    return ClusterSet(clusters=clusters, noise=noise, threshold_used=threshold, skipped=False)


def cluster_with_relaxation(
    papers: list[EmbeddedPaper],
    start_threshold: float = config.CLUSTER_THRESHOLD,
    step: float = config.THRESHOLD_STEP,
    floor: float = config.THRESHOLD_FLOOR,
    min_size: int = config.MIN_CLUSTER_SIZE,
) -> ClusterSet:
    """Relax the threshold (0.96, 0.94, 0.92, 0.90) until >= 2 communities.

    If no threshold down to the floor produces 2 communities, returns a
    skipped ClusterSet with every paper in noise.
    """
    threshold = start_threshold
    while threshold >= floor - 1e-9:
        result = detect_communities(papers, round(threshold, 10), min_size)
        if len(result.clusters) >= 2:
            return result
        threshold -= step
    return ClusterSet(
        clusters=[],
        noise=list(papers),
        threshold_used=floor,
        skipped=True,
    )
