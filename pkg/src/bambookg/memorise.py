"""Document -> chunks -> tags -> merged graph.

Ingest is staged: every chunk of a document is tagged before anything
touches the store, so a tagger failure part-way through a document
leaves no trace. The tagger is called exactly once per chunk.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

from .chunker import ChunkingConfig, TextChunk, chunk_document
from .errors import BambooError, DuplicateDocument, NoTagsFound
from .store import BambooStore
from .tagger import Tagger, TaggerConfig, tag_chunk

logger = logging.getLogger(__name__)


@dataclass
class IngestReport:
    doc_id: str
    chunks_created: int = 0
    tags_created: int = 0
    edges_created: int = 0
    edges_reinforced: int = 0


@dataclass
class StagedDocument:
    doc_id: str
    chunks: List[Tuple[TextChunk, List[str]]]


class CorpusIngestError(BambooError):
    """Some documents of a corpus failed; the rest were ingested."""

    def __init__(self, reports: List[IngestReport], failures: List[Tuple[str, Exception]]):
        names = ", ".join(doc for doc, _ in failures)
        super().__init__(f"{len(failures)} document(s) failed: {names}")
        self.reports = reports
        self.failures = failures


def stage_document(
    doc_text: str,
    doc_id: str,
    chunk_cfg: ChunkingConfig,
    tagger_cfg: TaggerConfig,
    tagger: Optional[Tagger] = None,
) -> StagedDocument:
    """Chunk and tag a document without touching any store."""
    staged = []
    for piece in chunk_document(doc_text, chunk_cfg):
        try:
            tags = tag_chunk(piece.text, tagger_cfg, tagger)
        except NoTagsFound:
            tags = []
        staged.append((piece, tags))
    return StagedDocument(doc_id, staged)


def merge_staged(store: BambooStore, staged: StagedDocument) -> IngestReport:
    rows = [(piece.text, piece.token_count, tags) for piece, tags in staged.chunks]
    new_tags, deltas = store.merge_chunks(staged.doc_id, rows)
    report = IngestReport(staged.doc_id, len(rows), new_tags)
    for chunk_deltas in deltas:
        for delta in chunk_deltas:
            if delta.created:
                report.edges_created += 1
            else:
                report.edges_reinforced += 1
    return report


def ingest_document(
    store: BambooStore,
    doc_text: str,
    doc_id: str,
    chunk_cfg: Optional[ChunkingConfig] = None,
    tagger_cfg: Optional[TaggerConfig] = None,
    tagger: Optional[Tagger] = None,
) -> IngestReport:
    """Memorise one document.

    Raises:
        DuplicateDocument: if ``doc_id`` is already stored.
        EmptyDocument: for whitespace-only text.
        TaggerUnavailable: if tagging fails; the store is unchanged.
    """
    if store.has_document(doc_id):
        raise DuplicateDocument(doc_id)
    staged = stage_document(doc_text, doc_id, chunk_cfg or store.chunking, tagger_cfg or store.tagging, tagger)
    return merge_staged(store, staged)


def ingest_corpus(
    store: BambooStore,
    documents: Iterable[Tuple[str, str]],
    chunk_cfg: Optional[ChunkingConfig] = None,
    tagger_cfg: Optional[TaggerConfig] = None,
    tagger: Optional[Tagger] = None,
    workers: int = 1,
) -> List[IngestReport]:
    """Memorise ``(doc_id, text)`` pairs in order.

    Staging may run on ``workers`` threads; merging is always sequential
    in input order. Failing documents are skipped and reported together
    once the whole corpus has been processed.

    Raises:
        CorpusIngestError: carrying the successful reports and the
            per-document failures.
    """
    docs = list(documents)
    chunk_cfg = chunk_cfg or store.chunking
    tagger_cfg = tagger_cfg or store.tagging

    def stage(item: Tuple[str, str]):
        doc_id, text = item
        if store.has_document(doc_id):
            return DuplicateDocument(doc_id)
        try:
            return stage_document(text, doc_id, chunk_cfg, tagger_cfg, tagger)
        except BambooError as exc:
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            staged = list(pool.map(stage, docs))
    else:
        staged = [stage(d) for d in docs]

    reports: List[IngestReport] = []
    failures: List[Tuple[str, Exception]] = []
    for (doc_id, _), result in zip(docs, staged):
        if isinstance(result, Exception):
            failures.append((doc_id, result))
            continue
        try:
            reports.append(merge_staged(store, result))
        except BambooError as exc:
            failures.append((doc_id, exc))
    for doc_id, exc in failures:
        logger.warning("ingest of %s failed: %s", doc_id, exc)
    if failures:
        raise CorpusIngestError(reports, failures)
    return reports
