"""Full pipeline end to end, entirely offline.

Uses the bundled recorded PubMed responses, the deterministic hashing
embedder, and the mock LLM; prints the staged progress and the final
topic-page JSON. Same wiring as `topicpages generate --mock`.
"""

from topicpages.config import PipelineConfig
from topicpages.service import JobRequest, backends_from_env, run_pipeline
from topicpages.topicpage import export_json


def progress(stage, message, stats):
    print(f"[{stage}] {message}")


page = run_pipeline(
    JobRequest(query="microplastic", canonical_names=["Microplastics"]),
    PipelineConfig(seed=42),
    backends_from_env(mock=True),
    progress=progress,
)

print()
print(export_json(page))
