"""The memory store: tag graph, chunk index, vocabulary and config echo."""

from __future__ import annotations

import threading
from dataclasses import asdict
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .chunker import ChunkingConfig
from .errors import DuplicateChunk, DuplicateDocument
from .graph import Chunk, ChunkId, ChunkIndex, EdgeDelta, GraphStats, TagGraph, TagId, graph_stats
from .recall import RetrievalParams
from .tagger import TaggerConfig, Vocabulary


class BambooStore:
    """Both knowledge graphs plus the settings they were built with.

    Readers may run concurrently; writes go through :meth:`merge_chunks`
    and are serialized by an internal lock. Recall never writes.
    """

    def __init__(
        self,
        chunking: Optional[ChunkingConfig] = None,
        tagging: Optional[TaggerConfig] = None,
        retrieval: Optional[RetrievalParams] = None,
    ) -> None:
        self.chunking = chunking or ChunkingConfig()
        self.tagging = tagging or TaggerConfig()
        self.retrieval = retrieval or RetrievalParams()
        self.graph = TagGraph()
        self.index = ChunkIndex()
        self.vocabulary = Vocabulary()
        self._docs: Set[str] = set()
        self._lock = threading.Lock()

    @property
    def doc_ids(self) -> Set[str]:
        return set(self._docs)

    def has_document(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def intern(self, surface: str) -> TagId:
        tag = self.graph.intern(surface)
        self.vocabulary.add(self.graph.surface(tag))
        return tag

    def merge_chunks(
        self, doc_id: str, chunks: Sequence[Tuple[str, int, Sequence[str]]]
    ) -> Tuple[int, List[List[EdgeDelta]]]:
        """Merge one document's tagged chunks as a single unit.

        ``chunks`` holds ``(text, token_count, tags)`` per ordinal.
        All checks run before the first mutation, so a rejected document
        leaves the store untouched.

        Returns:
            The number of newly interned tags and the edge deltas of each
            chunk.
        """
        with self._lock:
            if doc_id in self._docs:
                raise DuplicateDocument(doc_id)
            ids = [ChunkId(doc_id, i) for i in range(len(chunks))]
            for cid in ids:
                if cid in self.index:
                    raise DuplicateChunk(str(cid))
            before = len(self.graph)
            deltas = []
            for cid, (text, token_count, tags) in zip(ids, chunks):
                tag_ids = tuple(dict.fromkeys(self.intern(t) for t in tags))
                self.index.add(Chunk(cid, text, token_count, tag_ids))
                deltas.append(self.graph.record_cooccurrence(tag_ids, cid))
            self._docs.add(doc_id)
            return len(self.graph) - before, deltas

    def stats(self) -> GraphStats:
        return graph_stats(self.graph, self.index)

    def config_echo(self) -> Dict[str, dict]:
        return {
            "chunking": {"chunk_tokens": self.chunking.chunk_tokens},
            "tagger": {"max_tags": self.tagging.max_tags, "mode": self.tagging.mode},
            "retrieval": asdict(self.retrieval),
        }

    @classmethod
    def from_parts(
        cls,
        graph: TagGraph,
        chunks: Iterable[Chunk],
        chunking: Optional[ChunkingConfig] = None,
        tagging: Optional[TaggerConfig] = None,
        retrieval: Optional[RetrievalParams] = None,
    ) -> "BambooStore":
        store = cls(chunking, tagging, retrieval)
        store.graph = graph
        for surface in graph.vocabulary():
            store.vocabulary.add(surface)
        for chunk in chunks:
            store.index.add(chunk)
            store._docs.add(chunk.id.doc)
        return store
