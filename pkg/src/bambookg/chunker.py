"""Fixed-size, sentence-snapped document chunking.

Tokens are whitespace-delimited words. A chunk ends after
``chunk_tokens`` tokens unless a sentence end appears within the next
``SNAP_WINDOW`` tokens, in which case the boundary moves forward to it.
Chunk text is the exact source slice from its first to its last token,
so gaps between chunks hold only whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List

from .errors import ConfigError, EmptyDocument

MIN_CHUNK_TOKENS = 200
MAX_CHUNK_TOKENS = 1200
DEFAULT_CHUNK_TOKENS = 300
SNAP_WINDOW = 30

_TOKEN = re.compile(r"\S+")
_SENTENCE_END = re.compile(r"[.!?][\"'’”)\]]*$")


@dataclass(frozen=True)
class ChunkingConfig:
    chunk_tokens: int = DEFAULT_CHUNK_TOKENS

    def __post_init__(self) -> None:
        if not MIN_CHUNK_TOKENS <= self.chunk_tokens <= MAX_CHUNK_TOKENS:
            raise ConfigError(
                f"chunk_tokens must lie in [{MIN_CHUNK_TOKENS}, {MAX_CHUNK_TOKENS}], "
                f"got {self.chunk_tokens}"
            )


@dataclass(frozen=True)
class TextChunk:
    """An untagged chunk plus its character span in the source document."""

    ordinal: int
    text: str
    token_count: int
    start: int
    end: int


def count_tokens(text: str) -> int:
    return len(text.split())


def _ends_sentence(doc: str, match: re.Match, following: "re.Match | None") -> bool:
    if _SENTENCE_END.search(match.group()):
        return True
    gap_end = following.start() if following is not None else len(doc)
    return "\n" in doc[match.end():gap_end]


def chunk_document(doc_text: str, cfg: ChunkingConfig = ChunkingConfig()) -> List[TextChunk]:
    """Split ``doc_text`` into ordered, non-overlapping chunks.

    Raises:
        EmptyDocument: if the text holds no tokens.
    """
    tokens = list(_TOKEN.finditer(doc_text))
    if not tokens:
        raise EmptyDocument("document contains no tokens")

    chunks: List[TextChunk] = []
    n = len(tokens)
    start = 0
    while start < n:
        stop = min(start + cfg.chunk_tokens, n)
        if stop < n and not _ends_sentence(doc_text, tokens[stop - 1], tokens[stop]):
            limit = min(stop + SNAP_WINDOW, n)
            for j in range(stop, limit):
                following = tokens[j + 1] if j + 1 < n else None
                if _ends_sentence(doc_text, tokens[j], following):
                    stop = j + 1
                    break
        lo, hi = tokens[start].start(), tokens[stop - 1].end()
        chunks.append(TextChunk(len(chunks), doc_text[lo:hi], stop - start, lo, hi))
        start = stop
    return chunks
