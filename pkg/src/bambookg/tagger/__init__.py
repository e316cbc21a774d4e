"""Pluggable chunk and query tagging.

Any object with a ``tag(text, max_tags, vocabulary)`` method can serve
as a tagger. :func:`tag_chunk` and :func:`tag_query` wrap it with the
guarantees the graph relies on: normalized, de-duplicated output of at
most ``max_tags`` tags, restricted to the vocabulary when one is given.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, List, Optional, Protocol, Union

from ..errors import ConfigError, NoTagsFound
from ..graph import normalize_tag
from .deterministic import DeterministicTagger, load_stoplist
from .llm import LlmTagger, LlmTaggerEndpoint
from .vocabulary import Vocabulary, words

DEFAULT_MAX_TAGS = 8
MODES = ("deterministic", "llm")

__all__ = [
    "DEFAULT_MAX_TAGS",
    "DeterministicTagger",
    "LlmTagger",
    "LlmTaggerEndpoint",
    "Tagger",
    "TaggerConfig",
    "Vocabulary",
    "load_stoplist",
    "make_tagger",
    "tag_chunk",
    "tag_query",
    "words",
]


class Tagger(Protocol):
    def tag(self, text: str, max_tags: int, vocabulary: Optional[Vocabulary] = None) -> List[str]:
        ...


@dataclass(frozen=True)
class TaggerConfig:
    max_tags: int = DEFAULT_MAX_TAGS
    vocabulary_constraint: Optional[Union[Vocabulary, frozenset]] = None
    mode: str = "deterministic"
    stoplist_path: Optional[str] = None
    endpoint: Optional[LlmTaggerEndpoint] = None

    def __post_init__(self) -> None:
        if self.max_tags < 1:
            raise ConfigError("max_tags must be at least 1")
        if self.mode not in MODES:
            raise ConfigError(f"unknown tagger mode {self.mode!r}")
        if self.mode == "llm" and self.endpoint is None:
            raise ConfigError("llm mode needs an endpoint")


@lru_cache(maxsize=8)
def _deterministic(stoplist_path: Optional[str]) -> DeterministicTagger:
    return DeterministicTagger(load_stoplist(stoplist_path))


@lru_cache(maxsize=8)
def _llm(endpoint: LlmTaggerEndpoint) -> LlmTagger:
    return LlmTagger(endpoint)


def make_tagger(cfg: TaggerConfig) -> Tagger:
    if cfg.mode == "llm":
        return _llm(cfg.endpoint)
    return _deterministic(cfg.stoplist_path)


def _as_vocabulary(tags: Union[Vocabulary, Iterable[str]]) -> Vocabulary:
    return tags if isinstance(tags, Vocabulary) else Vocabulary(tags)


def tag_chunk(text: str, cfg: TaggerConfig = TaggerConfig(), tagger: Optional[Tagger] = None) -> List[str]:
    """Tag one chunk of text.

    Raises:
        NoTagsFound: if nothing survives normalization and the
            vocabulary constraint.
        TaggerUnavailable: from LLM-backed taggers.
    """
    if not text.strip():
        raise ValueError("cannot tag empty text")
    vocab = None
    if cfg.vocabulary_constraint is not None:
        vocab = _as_vocabulary(cfg.vocabulary_constraint)
        if not len(vocab):
            raise NoTagsFound("vocabulary constraint is empty")
    tagger = tagger or make_tagger(cfg)

    out: List[str] = []
    seen = set()
    for raw in tagger.tag(text, cfg.max_tags, vocab):
        tag = normalize_tag(raw)
        if not tag or tag in seen or (vocab is not None and tag not in vocab):
            continue
        seen.add(tag)
        out.append(tag)
        if len(out) == cfg.max_tags:
            break
    if not out:
        raise NoTagsFound("no tags found in text")
    return out


def tag_query(
    query: str,
    vocabulary: Union[Vocabulary, Iterable[str]],
    cfg: TaggerConfig = TaggerConfig(),
    tagger: Optional[Tagger] = None,
) -> List[str]:
    """Tag a query using only tags already present in ``vocabulary``.

    Raises:
        NoTagsFound: when no vocabulary tag occurs in the query, i.e. the
            graph has not learned any concept the query mentions.
    """
    cfg = replace(cfg, vocabulary_constraint=_as_vocabulary(vocabulary))
    return tag_chunk(query, cfg, tagger)
