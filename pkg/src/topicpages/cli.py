"""Command line entry points: one-shot page generation and the API server."""

from __future__ import annotations

import sys

import click

from . import config
from .errors import (
    GenerationError,
    InvalidQuery,
    NoResults,
    QueryError,
    RetrievalError,
    TopicPagesError,
)
from .service import JobRequest, backends_from_env, run_pipeline
from .topicpage import export_json

EXIT_INVALID_QUERY = 3
EXIT_NO_RESULTS = 4
EXIT_RETRIEVAL = 5
EXIT_GENERATION = 6
EXIT_OTHER = 7


@click.group()
def main() -> None:
    """Generate citation-grounded topic pages from PubMed literature."""


@main.command()
@click.option("--query", required=True, help="PubMed advanced-search expression.")
@click.option("--canonical-name", "canonical_names", multiple=True,
              help="Canonicalized entity name (repeatable; first is the page title).")
@click.option("--max-papers", default=config.RETRIEVAL_CAP, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--min-cluster-size", default=config.MIN_CLUSTER_SIZE, show_default=True)
@click.option("--threshold", default=config.CLUSTER_THRESHOLD, show_default=True)
@click.option("--context-limit", default=config.CONTEXT_LIMIT, show_default=True)
@click.option("--max-output-tokens", default=config.GENERATION_RESERVE, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the page JSON here instead of stdout.")
@click.option("--mock", is_flag=True, help="Hermetic mode: fixture retrieval, mock embedder and LLM.")
def generate(query, canonical_names, max_papers, seed, min_cluster_size, threshold,
             context_limit, max_output_tokens, out, mock):
    """Run the full pipeline once and emit topic-page JSON."""
    cfg = config.PipelineConfig(
        max_papers=max_papers,
        seed=seed,
        min_cluster_size=min_cluster_size,
        cluster_threshold=threshold,
        context_limit=context_limit,
        generation_reserve=max_output_tokens,
        canonical_names=list(canonical_names),
    )
    backends = backends_from_env(mock=mock)

    def progress(stage: str, message: str, stats: dict) -> None:
        click.echo(f"[{stage}] {message}", err=True)

    request = JobRequest(query=query, canonical_names=list(canonical_names))
    try:
        page = run_pipeline(request, cfg, backends, progress=progress)
    except (InvalidQuery, QueryError) as exc:
        click.echo(f"error: invalid query: {exc}", err=True)
        sys.exit(EXIT_INVALID_QUERY)
    except NoResults as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NO_RESULTS)
    except RetrievalError as exc:
        click.echo(f"error: retrieval failed: {exc}", err=True)
        sys.exit(EXIT_RETRIEVAL)
    except GenerationError as exc:
        click.echo(f"error: generation failed: {exc}", err=True)
        sys.exit(EXIT_GENERATION)
    except TopicPagesError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_OTHER)

    document = export_json(page)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(document + "\n")
        click.echo(f"wrote {out}", err=True)
    else:
        click.echo(document)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--cache", "cache_path", default=":memory:",
              help="Path to the sqlite retrieval cache.")
@click.option("--mock", is_flag=True, help="Serve with hermetic mock backends.")
def serve(host, port, cache_path, mock):
    """Run the HTTP job API."""
    import uvicorn

    from .service import TopicPageService, create_app

    service = TopicPageService(backends=backends_from_env(mock=mock), cache_path=cache_path)
    uvicorn.run(create_app(service), host=host, port=port)


if __name__ == "__main__":
    main()
