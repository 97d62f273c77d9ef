"""Community clustering with threshold relaxation, then budgeted sampling.

Builds a synthetic corpus with three planted research communities plus
outliers, clusters it, and samples a diverse token-budgeted subset:
representatives first, then square-root-biased draws.
"""

import numpy as np

from topicpages.clustering import cluster_with_relaxation
from topicpages.embedding import EmbeddedPaper
from topicpages.pubmed import PaperRecord, PubDate
from topicpages.sampling import TokenBudget, sample

rng = np.random.default_rng(0)

papers = []
pmid = 1
for c, (size, spread) in enumerate([(60, 0.05), (25, 0.05), (10, 0.04)]):
    center = rng.normal(size=16)
    center /= np.linalg.norm(center)
    for _ in range(size):
        v = center + spread * rng.normal(size=16)
        v /= np.linalg.norm(v)
        record = PaperRecord(
            pmid=pmid, title=f"Paper {pmid} (community {c})", abstract="",
            pub_date=PubDate(year=2015 + c),
        )
        papers.append(EmbeddedPaper(record=record, vector=v))
        pmid += 1
for _ in range(15):  # outliers
    v = rng.normal(size=16)
    v /= np.linalg.norm(v)
    record = PaperRecord(pmid=pmid, title=f"Outlier {pmid}", abstract="", pub_date=PubDate(year=2020))
    papers.append(EmbeddedPaper(record=record, vector=v))
    pmid += 1

clusters = cluster_with_relaxation(papers)
print(f"threshold used: {clusters.threshold_used}, skipped: {clusters.skipped}")
for i, cluster in enumerate(clusters.clusters):
    print(f"cluster {i}: size {cluster.size}, representative PMID {cluster.centroid.pmid}")
print(f"noise: {len(clusters.noise)} papers")

corpus = sample(clusters, TokenBudget(200), rng_seed=42, cost=lambda r: 10)
print(f"\nsampled {len(corpus.papers())} papers in {len(corpus.groups)} groups "
      f"({corpus.total_tokens} tokens)")
for group in corpus.groups:
    print("  group:", [p.pmid for p in group])
