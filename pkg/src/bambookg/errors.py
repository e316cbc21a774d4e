"""Exception hierarchy shared by every bambookg module."""

from __future__ import annotations


class BambooError(Exception):
    """Base class for all bambookg errors."""


class EmptyTag(BambooError, ValueError):
    """A tag surface normalized to the empty string."""


class UnknownTag(BambooError, KeyError):
    """A TagId that was never interned into the graph."""


class InvalidPair(BambooError, ValueError):
    """A tag pair that cannot be an edge (self-pair)."""


class DuplicateChunk(BambooError):
    """A chunk id was merged into the graph twice."""


class DuplicateDocument(BambooError):
    """A document id was ingested twice."""


class EmptyDocument(BambooError, ValueError):
    """A document contains no tokens."""


class ConfigError(BambooError, ValueError):
    """A configuration value lies outside its allowed range."""


class TaggerUnavailable(BambooError):
    """The tagging backend failed (network, timeout, malformed reply)."""


class NoTagsFound(BambooError):
    """The tagger produced no tags for the input."""


class NoKnownTags(BambooError):
    """None of the query's tags exist in the graph vocabulary."""


class CorruptSnapshot(BambooError):
    """A snapshot failed its checksum or an invariant check."""


class VersionMismatch(BambooError):
    """A snapshot was written with an unsupported format version."""


class ParseError(BambooError, ValueError):
    """A benchmark dataset record could not be parsed."""

    def __init__(self, message: str, record_id: str | None = None):
        super().__init__(message)
        self.record_id = record_id
