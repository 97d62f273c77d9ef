"""Citation-grounded scientific topic pages for biomedical entities.

Pipeline: parse a PubMed query, retrieve relevance-ranked records via the
E-utilities, embed and cluster them into research communities, sample a
diverse token-budgeted subset, prompt an LLM for a three-section page, and
machine-validate its inline PMID citations.
"""

from .clustering import Cluster, ClusterSet, cluster_with_relaxation, detect_communities
from .config import PipelineConfig
from .embedding import EmbeddedPaper, HashingBackend, RemoteBackend, embed_batch, format_input
from .generation import GenerationConfig, HttpChatBackend, MockChatBackend, generate
from .prompting import EntityContext, PromptBundle, build_prompt, truncate_abstract
from .pubmed import PaperRecord, PubMedClient, SearchResult, publications_per_year
from .query import QueryAst, parse_query, serialize_query
from .sampling import SampledCorpus, TokenBudget, sample, sample_flat
from .service import JobRequest, TopicPageService, create_app, run_pipeline
from .topicpage import (
    Citation,
    TopicPage,
    export_json,
    extract_citations,
    import_json,
    parse_sections,
    sample_audit_citation,
)

__version__ = "0.1.0"
