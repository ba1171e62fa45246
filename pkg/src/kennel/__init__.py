"""kennel: one chat interface over interchangeable model backends, with
keyword retrieval, file-backed sessions, an HTTP service, and a CLI."""

from kennel.cache import FileCache, response_cache_key
from kennel.chatter import BarkCallback, Chatter
from kennel.errors import (
    BarkError,
    CacheError,
    InvalidInputError,
    NetworkError,
    ProviderError,
    RagError,
    SerializationError,
)
from kennel.providers import (
    HttpProvider,
    MockProvider,
    Provider,
    ProviderConfig,
    ProviderKind,
    make_provider,
)
from kennel.rag import (
    Chunk,
    CompositeHandler,
    IdentityHandler,
    KeywordCorpusHandler,
    KnowledgeSourceConfig,
    RagChatter,
    RagHandler,
    SourceKind,
    WebSearchHandler,
    build_handler,
    rag_bark,
)
from kennel.retrieval import DocumentChunk, InvertedIndex, ScoredChunk, chunk_document
from kennel.review import Finding, ReviewReport, run_review
from kennel.types import (
    ChatResponse,
    FinishReason,
    Message,
    PromptParameters,
    Role,
    Usage,
)

__version__ = "0.1.0"

__all__ = [
    "BarkCallback",
    "BarkError",
    "CacheError",
    "ChatResponse",
    "Chatter",
    "Chunk",
    "CompositeHandler",
    "DocumentChunk",
    "FileCache",
    "Finding",
    "FinishReason",
    "HttpProvider",
    "IdentityHandler",
    "InvalidInputError",
    "InvertedIndex",
    "KeywordCorpusHandler",
    "KnowledgeSourceConfig",
    "Message",
    "MockProvider",
    "NetworkError",
    "PromptParameters",
    "Provider",
    "ProviderConfig",
    "ProviderError",
    "ProviderKind",
    "RagChatter",
    "RagError",
    "RagHandler",
    "ReviewReport",
    "Role",
    "ScoredChunk",
    "SerializationError",
    "SourceKind",
    "Usage",
    "WebSearchHandler",
    "build_handler",
    "chunk_document",
    "make_provider",
    "rag_bark",
    "response_cache_key",
    "run_review",
    "__version__",
]
