"""Frequency-weighted tag co-occurrence memory with LLM-free recall."""

from .chunker import ChunkingConfig, chunk_document, count_tokens
from .errors import (
    BambooError,
    ConfigError,
    CorruptSnapshot,
    DuplicateChunk,
    DuplicateDocument,
    EmptyDocument,
    EmptyTag,
    InvalidPair,
    NoKnownTags,
    NoTagsFound,
    ParseError,
    TaggerUnavailable,
    UnknownTag,
    VersionMismatch,
)
from .graph import Chunk, ChunkId, ChunkIndex, GraphStats, TagGraph, graph_stats, normalize_tag
from .memorise import CorpusIngestError, IngestReport, ingest_corpus, ingest_document
from .persistence import export_jsonl, import_jsonl, load_snapshot, save_snapshot
from .recall import (
    QuerySubgraph,
    RecallContext,
    RecallResult,
    RetrievalParams,
    build_query_subgraph,
    collect_context,
    recall,
    traverse,
)
from .store import BambooStore
from .tagger import TaggerConfig, tag_chunk, tag_query

__version__ = "0.1.0"
