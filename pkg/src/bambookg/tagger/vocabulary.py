"""Word tokenization and longest-phrase matching against a tag set."""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from typing import Dict, Iterable, Iterator, List, Tuple

from ..graph import normalize_tag

_WORD = re.compile(r"\w+(?:['’-]\w+)*")


def words(text: str) -> List[str]:
    """Lowercased word tokens of ``text`` (NFC, punctuation dropped)."""
    text = unicodedata.normalize("NFC", text).lower()
    return _WORD.findall(text)


class Vocabulary:
    """A growing set of normalized tags with a phrase index.

    Each tag is indexed by its word tuple so that multi-word tags can be
    found as contiguous phrases in free text.
    """

    def __init__(self, tags: Iterable[str] = ()) -> None:
        self._tags: set = set()
        self._phrases: Dict[Tuple[str, ...], str] = {}
        self._max_len = 0
        for tag in tags:
            self.add(tag)

    def add(self, tag: str) -> None:
        tag = normalize_tag(tag)
        if not tag or tag in self._tags:
            return
        self._tags.add(tag)
        key = tuple(words(tag))
        if not key:
            return
        held = self._phrases.get(key)
        if held is None or tag < held:
            self._phrases[key] = tag
        self._max_len = max(self._max_len, len(key))

    def __contains__(self, tag: object) -> bool:
        return isinstance(tag, str) and normalize_tag(tag) in self._tags

    def __len__(self) -> int:
        return len(self._tags)

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._tags))

    def match(self, text: str) -> Counter:
        """Count vocabulary phrases in ``text``, longest match first.

        Scanning is left to right; a matched phrase consumes its words, so
        shorter tags nested inside it are not counted separately.
        """
        tokens = words(text)
        found: Counter = Counter()
        i, n = 0, len(tokens)
        while i < n:
            for size in range(min(self._max_len, n - i), 0, -1):
                tag = self._phrases.get(tuple(tokens[i:i + size]))
                if tag is not None:
                    found[tag] += 1
                    i += size
                    break
            else:
                i += 1
        return found
