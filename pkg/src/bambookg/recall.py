"""Query-time traversal: query tags -> subgraph -> chunk context.

Nothing in this module calls a model or the network. Tagging the query
text is the only step that may (in LLM mode) and it is timed apart from
the traversal.

Selection rules, per query tag ``q``:

* first degree: the ``x`` strongest neighbors of ``q``;
* second degree: the ``y`` best candidates two hops out, scored by
  ``decay * w(q, m) * w(m, c)`` maximized over intermediaries ``m``.

Retrieved edges are ``q - m`` for each first-degree ``m``, ``m - c`` for
each selected second-degree ``c`` and every first-degree ``m`` adjacent
to it, and any edge joining two query tags. A chunk is recalled when it
holds both endpoints of a retrieved edge; its relevance is the sum of
the scores of the edges that selected it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, NamedTuple, Optional, Sequence, Tuple

from .errors import ConfigError, NoKnownTags, NoTagsFound
from .graph import ChunkId, ChunkIndex, SecondDegree, TagGraph, TagId, path_score

if TYPE_CHECKING:
    from .store import BambooStore
    from .tagger import Tagger, TaggerConfig

Edge = Tuple[TagId, TagId]


def _edge(a: TagId, b: TagId) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class RetrievalParams:
    x: int = 5
    y: int = 3
    decay: float = 0.5
    max_context_tokens: Optional[int] = None

    def __post_init__(self) -> None:
        if self.x < 0 or self.y < 0:
            raise ConfigError("x and y must be non-negative")
        if not 0 < self.decay <= 1:
            raise ConfigError("decay must lie in (0, 1]")
        if self.max_context_tokens is not None and self.max_context_tokens < 0:
            raise ConfigError("max_context_tokens must be non-negative")


@dataclass
class TagExpansion:
    tag: TagId
    first: List[Tuple[TagId, int]]
    second: List[SecondDegree]


@dataclass
class QuerySubgraph:
    query_tags: List[TagId]
    expansions: List[TagExpansion]
    # edge -> selection score; an edge reached by several routes keeps the max
    retrieved_edges: Dict[Edge, float] = field(default_factory=dict)

    def nodes(self) -> List[TagId]:
        found = set(self.query_tags)
        for exp in self.expansions:
            found.update(t for t, _ in exp.first)
            found.update(s.tag for s in exp.second)
        return sorted(found)

    def edges(self) -> List[Edge]:
        return sorted(self.retrieved_edges)


class ContextChunk(NamedTuple):
    chunk_id: ChunkId
    text: str
    token_count: int
    score: float
    edges: Tuple[Edge, ...]


@dataclass
class RecallContext:
    chunks: List[ContextChunk] = field(default_factory=list)

    @property
    def total_tokens(self) -> int:
        return sum(c.token_count for c in self.chunks)

    def chunk_ids(self) -> List[ChunkId]:
        return [c.chunk_id for c in self.chunks]


@dataclass
class RecallResult:
    query: str
    query_tags: List[str]
    subgraph: QuerySubgraph
    context: RecallContext
    tagging_ms: float
    traversal_ms: float


def build_query_subgraph(graph: TagGraph, query_tags: Sequence[TagId], params: RetrievalParams) -> QuerySubgraph:
    """Expand each query tag into its first- and second-degree neighborhood.

    Raises:
        NoKnownTags: if ``query_tags`` is empty.
        UnknownTag: if a tag id is not in ``graph``.
    """
    tags = list(dict.fromkeys(query_tags))
    if not tags:
        raise NoKnownTags("query has no tags known to the graph")

    retrieved: Dict[Edge, float] = {}

    def keep(a: TagId, b: TagId, score: float) -> None:
        key = _edge(a, b)
        if score > retrieved.get(key, 0.0):
            retrieved[key] = score

    expansions = []
    for q in tags:
        first = graph.top_first_degree(q, params.x)
        first_ids = [m for m, _ in first]
        second = graph.top_second_degree(q, first_ids, params.y, params.decay)
        for m, w in first:
            keep(q, m, float(w))
        for cand in second:
            for m, ws in first:
                wm = graph.weight(m, cand.tag)
                if wm:
                    keep(m, cand.tag, path_score(ws, wm, params.decay))
        expansions.append(TagExpansion(q, first, second))

    for i, a in enumerate(tags):
        for b in tags[i + 1:]:
            w = graph.weight(a, b)
            if w:
                keep(a, b, float(w))

    return QuerySubgraph(tags, expansions, retrieved)


def collect_context(index: ChunkIndex, subgraph: QuerySubgraph, params: RetrievalParams) -> RecallContext:
    """Gather every chunk that formed a retrieved edge, best first.

    Chunks are ordered by (descending relevance, ChunkId). With
    ``max_context_tokens`` set, the list is cut before the first chunk
    that would overflow the budget.
    """
    retrieved = subgraph.retrieved_edges
    provenance: Dict[ChunkId, List[Edge]] = {}
    for edge in sorted(retrieved):
        for cid in index.edge_chunk_set(*edge):
            seen = provenance.get(cid)
            if seen is None:
                provenance[cid] = [edge]
            else:
                seen.append(edge)
    # fsum is exact, so scores do not depend on edge iteration order
    scores = {cid: math.fsum([retrieved[e] for e in edges]) for cid, edges in provenance.items()}

    # stable two-pass sort: ChunkId ascending, then score descending
    ordered = sorted(scores)
    ordered.sort(key=scores.__getitem__, reverse=True)
    out: List[ContextChunk] = []
    budget = params.max_context_tokens
    used = 0
    get = index.get
    for cid in ordered:
        chunk = get(cid)
        if budget is not None and used + chunk.token_count > budget:
            break
        used += chunk.token_count
        out.append(ContextChunk(cid, chunk.text, chunk.token_count, scores[cid], tuple(provenance[cid])))
    return RecallContext(out)


def traverse(store: "BambooStore", query_tags: Sequence[TagId], params: RetrievalParams) -> Tuple[QuerySubgraph, RecallContext]:
    """The LLM-free part of recall: subgraph expansion plus context."""
    subgraph = build_query_subgraph(store.graph, query_tags, params)
    return subgraph, collect_context(store.index, subgraph, params)


def recall(
    store: "BambooStore",
    query_text: str,
    params: Optional[RetrievalParams] = None,
    tagger_cfg: Optional["TaggerConfig"] = None,
    tagger: Optional["Tagger"] = None,
) -> RecallResult:
    """Answer a free-text query with the chunks most associated to it.

    Tags outside the store's vocabulary are ignored, so a query that
    mentions one known concept among unknown ones still recalls that
    concept's neighborhood.

    Raises:
        NoKnownTags: if no query word or phrase is a known tag.
    """
    from .tagger import TaggerConfig, tag_query

    params = params or store.retrieval
    if tagger_cfg is None:
        tagger_cfg = TaggerConfig(max_tags=store.tagging.max_tags, stoplist_path=store.tagging.stoplist_path)

    t0 = time.perf_counter()
    try:
        surfaces = tag_query(query_text, store.vocabulary, tagger_cfg, tagger)
    except NoTagsFound as exc:
        raise NoKnownTags(f"no known tags in query {query_text!r}") from exc
    ids = [store.graph.lookup(s) for s in surfaces]
    query_tags = [t for t in ids if t is not None]
    t1 = time.perf_counter()
    subgraph, context = traverse(store, query_tags, params)
    t2 = time.perf_counter()
    return RecallResult(
        query=query_text,
        query_tags=[store.graph.surface(t) for t in query_tags],
        subgraph=subgraph,
        context=context,
        tagging_ms=(t1 - t0) * 1000.0,
        traversal_ms=(t2 - t1) * 1000.0,
    )
