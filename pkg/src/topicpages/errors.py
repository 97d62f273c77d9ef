"""Typed errors shared across the pipeline."""


class TopicPagesError(Exception):
    """Base class for all errors raised by this package."""


# --- query parsing ---

class QueryError(TopicPagesError):
    pass


class EmptyQuery(QueryError):
    pass


class UnbalancedParens(QueryError):
    pass


class DanglingOperator(QueryError):
    pass


# --- retrieval ---

class RetrievalError(TopicPagesError):
    pass


class NetworkError(RetrievalError):
    pass


class RateLimited(RetrievalError):
    pass


class NoResults(RetrievalError):
    pass


class MalformedResponse(RetrievalError):
    pass


# --- embedding ---

class EmbeddingError(TopicPagesError):
    pass


class BackendUnavailable(EmbeddingError):
    pass


class DimensionMismatch(EmbeddingError):
    pass


# --- prompting / generation ---

class BudgetExceeded(TopicPagesError):
    pass


class GenerationError(TopicPagesError):
    pass


class BackendError(GenerationError):
    pass


class ContextOverflow(GenerationError):
    pass


class EmptyCompletion(GenerationError):
    pass


# --- topic page ---

class NoCitations(TopicPagesError):
    pass


# --- service ---

class InvalidQuery(TopicPagesError):
    pass


class NotFound(TopicPagesError):
    pass
