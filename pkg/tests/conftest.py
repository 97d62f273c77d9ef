import numpy as np
import pytest

from topicpages.clustering import Cluster, ClusterSet
from topicpages.embedding import EmbeddedPaper
from topicpages.pubmed import PaperRecord, PubDate


def make_record(pmid, title=None, abstract="", year=2020, month=None, day=None):
    return PaperRecord(
        pmid=pmid,
        title=title or f"Paper {pmid}",
        abstract=abstract,
        pub_date=PubDate(year=year, month=month, day=day),
    )


def make_embedded(pmid, vector, **kwargs):
    v = np.asarray(vector, dtype=np.float64)
    v = v / np.linalg.norm(v)
    return EmbeddedPaper(record=make_record(pmid, **kwargs), vector=v)


def make_cluster_set(sizes, start_pmid=1000, dim=8):
    """Synthetic ClusterSet: one orthogonal axis per cluster, PMIDs dense.

    The first member of each cluster is its designated representative.
    """
    clusters = []
    pmid = start_pmid
    for ci, size in enumerate(sizes):
        vector = np.zeros(max(dim, len(sizes)))
        vector[ci] = 1.0
        members = []
        for _ in range(size):
            members.append(make_embedded(pmid, vector))
            pmid += 1
        clusters.append(Cluster(members=members, centroid=members[0]))
    return ClusterSet(clusters=clusters, noise=[], threshold_used=0.96, skipped=False)


def correlated_group(n, within_sim, axis_offset, dim):
    """n unit vectors with pairwise cosine exactly `within_sim`, supported on
    axes [axis_offset, axis_offset + n], orthogonal to other offsets."""
    shared = np.zeros(dim)
    shared[axis_offset] = 1.0
    vectors = []
    for i in range(n):
        unique = np.zeros(dim)
        unique[axis_offset + 1 + i] = 1.0
        vectors.append(np.sqrt(within_sim) * shared + np.sqrt(1 - within_sim) * unique)
    return vectors


@pytest.fixture
def unit_cost():
    return lambda record: 1
