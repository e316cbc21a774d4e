"""Reproducible stand-in for the LLM tagger: stoplisted term frequency."""

from __future__ import annotations

from collections import Counter
from importlib import resources
from pathlib import Path
from typing import FrozenSet, List, Optional, Union

from .vocabulary import Vocabulary, words


def load_stoplist(path: Optional[Union[str, Path]] = None) -> FrozenSet[str]:
    """Read a one-word-per-line stoplist; ``None`` loads the embedded list."""
    if path is None:
        text = resources.files(__package__).joinpath("assets/stoplist.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    )


def rank(counts: Counter, max_tags: int) -> List[str]:
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [tag for tag, _ in ordered[:max_tags]]


class DeterministicTagger:
    """Top terms by frequency, ties broken alphabetically.

    Without a vocabulary, candidates are single words that are not
    stopwords and are longer than one character. With a vocabulary,
    candidates are the vocabulary phrases found in the text.
    """

    def __init__(self, stoplist: Optional[FrozenSet[str]] = None) -> None:
        self.stoplist = load_stoplist() if stoplist is None else frozenset(stoplist)

    def tag(self, text: str, max_tags: int, vocabulary: Optional[Vocabulary] = None) -> List[str]:
        if vocabulary is not None:
            return rank(vocabulary.match(text), max_tags)
        counts = Counter(
            w for w in words(text) if len(w) > 1 and w not in self.stoplist
        )
        return rank(counts, max_tags)
