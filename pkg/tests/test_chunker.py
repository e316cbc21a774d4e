import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bambookg import ChunkingConfig, ConfigError, EmptyDocument, chunk_document, count_tokens
from bambookg.chunker import SNAP_WINDOW


def words(n, start=0):
    return " ".join(f"w{i}" for i in range(start, start + n))


def test_count_tokens():
    assert count_tokens("") == 0
    assert count_tokens("a b  c") == 3
    assert count_tokens(words(500)) == 500


def test_config_band():
    ChunkingConfig(200)
    ChunkingConfig(1200)
    assert ChunkingConfig().chunk_tokens == 300
    for bad in (199, 1201, 0):
        with pytest.raises(ConfigError):
            ChunkingConfig(bad)


@pytest.mark.parametrize("n, sizes", [(400, [200, 200]), (450, [200, 200, 50]), (100, [100])])
def test_fixed_size_without_sentence_marks(n, sizes):
    chunks = chunk_document(words(n), ChunkingConfig(200))
    assert [c.token_count for c in chunks] == sizes
    assert [c.ordinal for c in chunks] == list(range(len(sizes)))
    assert chunks[0].text == words(sizes[0])


def test_empty_document():
    with pytest.raises(EmptyDocument):
        chunk_document("  \n\t ")


def test_boundary_snaps_to_sentence_end():
    doc = words(210) + ". " + words(100, 210)
    sizes = [c.token_count for c in chunk_document(doc, ChunkingConfig(200))]
    assert sizes == [210, 100]


def test_sentence_end_outside_window_is_ignored():
    doc = words(200 + SNAP_WINDOW + 5) + ". " + words(20, 500)
    sizes = [c.token_count for c in chunk_document(doc, ChunkingConfig(200))]
    assert sizes[0] == 200


def test_newline_counts_as_sentence_end():
    doc = words(205) + "\n" + words(100, 300)
    assert [c.token_count for c in chunk_document(doc, ChunkingConfig(200))] == [205, 100]


def test_boundary_already_on_sentence_end_does_not_move():
    doc = words(199) + " end. " + words(100, 300) + "."
    assert [c.token_count for c in chunk_document(doc, ChunkingConfig(200))] == [200, 100]


def reconstruct(doc, chunks):
    out, pos = [], 0
    for c in chunks:
        gap = doc[pos:c.start]
        assert gap.strip() == ""
        out.append(gap + c.text)
        pos = c.end
    out.append(doc[pos:])
    return "".join(out)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(200, 400))
def test_chunking_invariants(seed, size):
    rng = random.Random(seed)
    parts = []
    for i in range(rng.randint(1, 1500)):
        tok = f"t{i}" + rng.choice(["", "", "", ".", "!", "?", "\"."])
        parts.append(tok + rng.choice([" ", " ", "  ", "\n", "\t "]))
    doc = rng.choice(["", "  ", "\n"]) + "".join(parts)
    chunks = chunk_document(doc, ChunkingConfig(size))
    assert reconstruct(doc, chunks) == doc
    assert sum(c.token_count for c in chunks) == count_tokens(doc)
    assert all(c.token_count <= size + SNAP_WINDOW for c in chunks)
    assert all(c.token_count >= size for c in chunks[:-1])
    assert all(c.token_count == count_tokens(c.text) for c in chunks)
