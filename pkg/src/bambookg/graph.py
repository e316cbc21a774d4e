"""Frequency-weighted tag graph and the tag -> chunk index.

Two structures live here:

* :class:`TagGraph` -- undirected co-occurrence graph over interned tags.
  The weight of an edge is the number of chunks whose tag set contains
  both endpoints.
* :class:`ChunkIndex` -- postings from each tag to the chunks it was
  extracted from. Edge provenance is not stored; it is recomputed as a
  postings intersection.

Neighbor lists are kept permanently sorted by (descending weight,
ascending tag surface). Every top-k selection in the package relies on
that order as its tie-break. Surfaces rather than ids break ties so that
results do not depend on the order in which documents were ingested.
"""

from __future__ import annotations

import unicodedata
from bisect import bisect_left
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple

from .errors import DuplicateChunk, EmptyTag, InvalidPair, UnknownTag

TagId = int


def normalize_tag(surface: str) -> str:
    """Canonical tag form: NFC, lowercase, trimmed, single internal spaces."""
    text = unicodedata.normalize("NFC", surface).lower()
    text = unicodedata.normalize("NFC", text)
    return " ".join(text.split())


class ChunkId(NamedTuple):
    doc: str
    ordinal: int

    def __str__(self) -> str:
        return f"{self.doc}#{self.ordinal}"


@dataclass(frozen=True)
class Chunk:
    id: ChunkId
    text: str
    token_count: int
    tags: Tuple[TagId, ...] = ()


class EdgeDelta(NamedTuple):
    """One edge touched by :meth:`TagGraph.record_cooccurrence`."""

    a: TagId
    b: TagId
    weight: int

    @property
    def created(self) -> bool:
        return self.weight == 1


class SecondDegree(NamedTuple):
    tag: TagId
    score: float
    via: TagId


def path_score(seed_weight: int, hop_weight: int, decay: float) -> float:
    """Decay-discounted score of a two-edge path seed -> m -> c."""
    return decay * (seed_weight * hop_weight)


class TagGraph:
    """Undirected co-occurrence graph with dense integer tag ids.

    Weights are held twice: a dict per node for O(1) lookup and a ranked
    list of ``(-weight, surface, neighbor)`` keys for top-k reads. Both
    views are updated together on every increment.
    """

    def __init__(self) -> None:
        self._surfaces: List[str] = []
        self._ids: Dict[str, TagId] = {}
        self._weights: List[Dict[TagId, int]] = []
        self._ranked: List[List[Tuple[int, str, TagId]]] = []
        self._recorded: Set[ChunkId] = set()
        self._edge_count = 0
        self._total_weight = 0

    # -- vocabulary ---------------------------------------------------

    def intern(self, surface: str) -> TagId:
        """Return the id of ``surface``, allocating the next id if new.

        Raises:
            EmptyTag: if the surface normalizes to an empty string.
        """
        tag = normalize_tag(surface)
        if not tag:
            raise EmptyTag(f"tag {surface!r} is empty after normalization")
        tag_id = self._ids.get(tag)
        if tag_id is None:
            tag_id = len(self._surfaces)
            self._ids[tag] = tag_id
            self._surfaces.append(tag)
            self._weights.append({})
            self._ranked.append([])
        return tag_id

    def lookup(self, surface: str) -> Optional[TagId]:
        return self._ids.get(normalize_tag(surface))

    def surface(self, tag: TagId) -> str:
        self._check(tag)
        return self._surfaces[tag]

    def vocabulary(self) -> List[str]:
        """All tag surfaces, indexed by TagId."""
        return list(self._surfaces)

    def __len__(self) -> int:
        return len(self._surfaces)

    def __contains__(self, tag: object) -> bool:
        return isinstance(tag, int) and 0 <= tag < len(self._surfaces)

    def _check(self, tag: TagId) -> None:
        if tag not in self:
            raise UnknownTag(tag)

    # -- edges --------------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self._surfaces)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    @property
    def total_weight(self) -> int:
        return self._total_weight

    def weight(self, a: TagId, b: TagId) -> int:
        """Co-occurrence count of ``a`` and ``b``; 0 when no edge exists."""
        if a not in self or b not in self:
            return 0
        return self._weights[a].get(b, 0)

    def degree(self, tag: TagId) -> int:
        self._check(tag)
        return len(self._weights[tag])

    def neighbors(self, tag: TagId) -> List[Tuple[TagId, int]]:
        """Full neighbor list in (descending weight, ascending surface) order."""
        self._check(tag)
        return [(b, -neg) for neg, _, b in self._ranked[tag]]

    def edges(self) -> Iterator[Tuple[TagId, TagId, int]]:
        """Yield ``(a, b, weight)`` with ``a < b``, sorted by ``(a, b)``."""
        for a, row in enumerate(self._weights):
            for b in sorted(n for n in row if n > a):
                yield a, b, row[b]

    def recorded_chunks(self) -> Set[ChunkId]:
        return set(self._recorded)

    def _bump(self, a: TagId, b: TagId, old: int) -> None:
        ranked = self._ranked[a]
        name = self._surfaces[b]
        if old:
            del ranked[bisect_left(ranked, (-old, name, b))]
        key = (-old - 1, name, b)
        ranked.insert(bisect_left(ranked, key), key)
        self._weights[a][b] = old + 1

    def record_cooccurrence(self, tags: Iterable[TagId], chunk: ChunkId) -> List[EdgeDelta]:
        """Merge one chunk's complete tag subgraph into the graph.

        Every unordered pair of distinct tags gains exactly one unit of
        weight, however often the words repeat inside the chunk.

        Returns:
            One :class:`EdgeDelta` per touched pair, ordered by ``(a, b)``.

        Raises:
            DuplicateChunk: if ``chunk`` was merged before.
            UnknownTag: if any tag id was never interned.
        """
        if chunk in self._recorded:
            raise DuplicateChunk(str(chunk))
        unique = sorted(set(tags))
        for tag in unique:
            self._check(tag)
        self._recorded.add(chunk)
        deltas = []
        for a, b in combinations(unique, 2):
            old = self._weights[a].get(b, 0)
            self._bump(a, b, old)
            self._bump(b, a, old)
            if not old:
                self._edge_count += 1
            self._total_weight += 1
            deltas.append(EdgeDelta(a, b, old + 1))
        return deltas

    # -- neighborhood queries -----------------------------------------

    def top_first_degree(self, seed: TagId, x: int) -> List[Tuple[TagId, int]]:
        """The ``x`` strongest direct neighbors of ``seed``."""
        self._check(seed)
        if x <= 0:
            return []
        return [(b, -neg) for neg, _, b in self._ranked[seed][:x]]

    def top_second_degree(
        self,
        seed: TagId,
        first: Sequence[TagId],
        y: int,
        decay: float = 0.5,
    ) -> List[SecondDegree]:
        """The ``y`` best tags two hops from ``seed`` through ``first``.

        A candidate ``c`` is any neighbor of a tag in ``first`` other than
        ``seed`` and ``first`` itself. Its score is the best
        :func:`path_score` over all intermediaries in ``first``; equal
        scores keep the intermediary with the smaller surface. The result
        is ordered by (descending score, ascending surface).
        """
        self._check(seed)
        for m in first:
            self._check(m)
        if y <= 0 or not first:
            return []
        excluded = set(first)
        excluded.add(seed)
        seed_row = self._weights[seed]
        names = self._surfaces
        hops = [(m, seed_row[m]) for m in sorted(excluded - {seed}, key=names.__getitem__) if m in seed_row]

        # Within one intermediary's ranked list, score is monotone in the
        # hop weight, so only its first y admissible entries can reach the
        # global top y.
        candidates: Set[TagId] = set()
        for m, _ in hops:
            taken = 0
            for _, _, c in self._ranked[m]:
                if c in excluded:
                    continue
                candidates.add(c)
                taken += 1
                if taken == y:
                    break

        scored = []
        for c in candidates:
            best = None
            for m, ws in hops:
                wm = self._weights[m].get(c)
                if wm is None:
                    continue
                score = path_score(ws, wm, decay)
                if best is None or score > best[0]:
                    best = (score, m)
            scored.append(SecondDegree(c, best[0], best[1]))
        scored.sort(key=lambda s: (-s.score, names[s.tag]))
        return scored[:y]

    # -- reconstruction -----------------------------------------------

    @classmethod
    def from_tables(
        cls,
        surfaces: Sequence[str],
        edges: Iterable[Tuple[TagId, TagId, int]],
        recorded: Iterable[ChunkId] = (),
    ) -> "TagGraph":
        """Rebuild a graph from a tag table and canonical edge rows.

        Surfaces must already be normalized and unique; ids follow their
        position. Edge rows are trusted to satisfy ``a < b`` and
        ``weight >= 1`` (callers validate).
        """
        graph = cls()
        for surface in surfaces:
            graph.intern(surface)
        if len(graph) != len(surfaces):
            raise ValueError("tag table holds duplicate surfaces")
        for a, b, w in edges:
            graph._weights[a][b] = w
            graph._weights[b][a] = w
            graph._edge_count += 1
            graph._total_weight += w
        names = graph._surfaces
        graph._ranked = [sorted((-w, names[b], b) for b, w in row.items()) for row in graph._weights]
        graph._recorded = set(recorded)
        return graph


class ChunkIndex:
    """Postings from tag id to the chunks carrying that tag."""

    def __init__(self) -> None:
        self._postings: Dict[TagId, Set[ChunkId]] = {}
        self._chunks: Dict[ChunkId, Chunk] = {}

    def add(self, chunk: Chunk) -> None:
        if chunk.id in self._chunks:
            raise DuplicateChunk(str(chunk.id))
        self._chunks[chunk.id] = chunk
        for tag in chunk.tags:
            self._postings.setdefault(tag, set()).add(chunk.id)

    def __len__(self) -> int:
        return len(self._chunks)

    def __contains__(self, chunk_id: object) -> bool:
        return chunk_id in self._chunks

    def get(self, chunk_id: ChunkId) -> Chunk:
        return self._chunks[chunk_id]

    def chunks(self) -> List[Chunk]:
        """All chunks sorted by ``(doc, ordinal)``."""
        return [self._chunks[cid] for cid in sorted(self._chunks)]

    def doc_ids(self) -> Set[str]:
        return {cid.doc for cid in self._chunks}

    def postings(self, tag: TagId) -> List[ChunkId]:
        return sorted(self._postings.get(tag, ()))

    def chunks_for_edge(self, a: TagId, b: TagId) -> List[ChunkId]:
        """Chunks that contributed to edge ``(a, b)``, sorted.

        Raises:
            InvalidPair: for ``a == b``; self-loops never exist.
        """
        if a == b:
            raise InvalidPair(f"self-pair ({a}, {a}) is not an edge")
        return sorted(self.edge_chunk_set(a, b))

    def edge_chunk_set(self, a: TagId, b: TagId) -> Set[ChunkId]:
        """Unordered form of :meth:`chunks_for_edge` for hot paths."""
        if a == b:
            raise InvalidPair(f"self-pair ({a}, {a}) is not an edge")
        pa = self._postings.get(a)
        pb = self._postings.get(b)
        if not pa or not pb:
            return set()
        return pa & pb


@dataclass(frozen=True)
class GraphStats:
    nodes: int = 0
    edges: int = 0
    total_weight: int = 0
    chunks: int = 0
    max_degree: int = 0

    def as_dict(self) -> Dict[str, int]:
        return {
            "nodes": self.nodes,
            "edges": self.edges,
            "total_weight": self.total_weight,
            "chunks": self.chunks,
            "max_degree": self.max_degree,
        }


def graph_stats(graph: TagGraph, index: ChunkIndex) -> GraphStats:
    max_degree = max((len(row) for row in graph._weights), default=0)
    return GraphStats(
        nodes=graph.node_count,
        edges=graph.edge_count,
        total_weight=graph.total_weight,
        chunks=len(index),
        max_degree=max_degree,
    )
