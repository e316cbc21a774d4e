import random
from math import comb

import pytest

from bambookg import (
    BambooStore,
    ChunkingConfig,
    CorpusIngestError,
    DuplicateDocument,
    EmptyDocument,
    TaggerConfig,
    TaggerUnavailable,
    chunk_document,
    ingest_corpus,
    ingest_document,
    tag_chunk,
)
from bambookg.persistence import dumps

import oracles
from oracles import ScriptedTagger

TWO_CHUNK_DOC = " ".join(f"w{i}" for i in range(250)) + " " + " ".join(f"v{i}" for i in range(100))
CFG = ChunkingConfig(200)


def surface_weights(store):
    g = store.graph
    return sorted((tuple(sorted((g.surface(a), g.surface(b)))), w) for a, b, w in g.edges())


def test_two_chunks_merge_into_shared_hub():
    store = BambooStore()
    tagger = ScriptedTagger([["cat", "pet"], ["dog", "pet"]])
    report = ingest_document(store, TWO_CHUNK_DOC, "d1", CFG, tagger=tagger)
    g = store.graph
    cat, dog, pet = g.lookup("cat"), g.lookup("dog"), g.lookup("pet")
    assert sorted(g.vocabulary()) == ["cat", "dog", "pet"]
    assert g.weight(cat, pet) == 1 and g.weight(dog, pet) == 1
    assert g.weight(cat, dog) == 0
    assert (report.chunks_created, report.tags_created, report.edges_created, report.edges_reinforced) == (2, 3, 2, 0)
    assert tagger.calls == 2


def test_duplicate_document_leaves_store_unchanged():
    store = BambooStore()
    ingest_document(store, "cats are pets", "d1")
    before = dumps(store)
    with pytest.raises(DuplicateDocument):
        ingest_document(store, "dogs are pets", "d1")
    assert dumps(store) == before


def test_single_tag_chunks_make_no_edges_but_stay_retrievable():
    store = BambooStore()
    ingest_document(store, TWO_CHUNK_DOC, "d1", CFG, tagger=ScriptedTagger([["cat"], ["dog"]]))
    assert store.graph.edge_count == 0
    assert [str(c) for c in store.index.postings(store.graph.lookup("dog"))] == ["d1#1"]


def test_chunk_without_tags_is_still_stored():
    store = BambooStore()
    report = ingest_document(store, "the and of", "d1")
    assert report.chunks_created == 1
    assert store.index.chunks()[0].tags == ()


def test_tagger_failure_is_atomic():
    store = BambooStore()
    ingest_document(store, "cats and dogs", "d0")
    before = dumps(store)
    tagger = ScriptedTagger([["a", "b"]], fail_at=2)
    with pytest.raises(TaggerUnavailable):
        ingest_document(store, TWO_CHUNK_DOC, "d1", CFG, tagger=tagger)
    assert dumps(store) == before
    assert not store.has_document("d1")


def test_empty_document_rejected():
    with pytest.raises(EmptyDocument):
        ingest_document(BambooStore(), "   ", "d1")


def test_report_accounts_for_every_pair():
    rng = random.Random(3)
    store = BambooStore()
    for d in range(20):
        script = [rng.sample("abcdefghij", rng.randint(0, 6)) for _ in range(2)]
        tagger = ScriptedTagger(script)
        report = ingest_document(store, TWO_CHUNK_DOC, f"d{d}", CFG, tagger=tagger)
        pairs = sum(comb(len(set(tags)), 2) for tags in script)
        assert report.edges_created + report.edges_reinforced == pairs


def test_empty_corpus():
    assert ingest_corpus(BambooStore(), []) == []


def test_document_order_does_not_change_graph_content():
    docs = [("a", "Cats chase mice. Cats are pets."), ("b", "Dogs are pets and dogs chase cats.")]
    s1, s2 = BambooStore(), BambooStore()
    ingest_corpus(s1, docs)
    ingest_corpus(s2, docs[::-1])
    assert surface_weights(s1) == surface_weights(s2)
    for a, b in [("cats", "pets"), ("chase", "cats"), ("dogs", "pets")]:
        e1 = s1.index.chunks_for_edge(s1.graph.lookup(a), s1.graph.lookup(b))
        e2 = s2.index.chunks_for_edge(s2.graph.lookup(a), s2.graph.lookup(b))
        assert e1 == e2 and e1


def synthetic_docs(n, seed):
    rng = random.Random(seed)
    vocab = [f"topic{i}" for i in range(60)]
    docs = []
    for d in range(n):
        sentences = []
        for _ in range(rng.randint(5, 60)):
            sentences.append(" ".join(rng.choices(vocab, k=rng.randint(3, 12))) + ".")
        docs.append((f"doc{d:03d}", " ".join(sentences)))
    return docs


def test_hundred_doc_corpus_matches_oracle_recount():
    docs = synthetic_docs(100, seed=11)
    store = BambooStore()
    ingest_corpus(store, docs, CFG, TaggerConfig(max_tags=6))
    # independent recount: re-chunk and re-tag, then count pairs by enumeration
    sets = {}
    for doc_id, text in docs:
        for piece in chunk_document(text, CFG):
            sets[(doc_id, piece.ordinal)] = frozenset(tag_chunk(piece.text, TaggerConfig(max_tags=6)))
    weights = oracles.all_weights(sets)
    assert store.stats().chunks == len(sets)
    assert store.stats().nodes == len(oracles.universe(sets))
    assert store.stats().edges == len(weights)
    assert store.stats().total_weight == sum(weights.values())
    assert dict(((a, b), w) for (a, b), w in surface_weights(store)) == weights


def test_corpus_errors_report_partial_progress():
    store = BambooStore()
    with pytest.raises(CorpusIngestError) as info:
        ingest_corpus(store, [("a", "cats"), ("b", "  "), ("a", "dogs"), ("c", "fish")])
    err = info.value
    assert [r.doc_id for r in err.reports] == ["a", "c"]
    assert [(d, type(e)) for d, e in err.failures] == [("b", EmptyDocument), ("a", DuplicateDocument)]
    assert store.doc_ids == {"a", "c"}


def test_parallel_staging_matches_sequential():
    docs = synthetic_docs(30, seed=5)
    s1, s2 = BambooStore(), BambooStore()
    ingest_corpus(s1, docs, CFG)
    ingest_corpus(s2, docs, CFG, workers=4)
    assert dumps(s1) == dumps(s2)
