"""Binary snapshots and JSON-lines interchange for :class:`BambooStore`.

Binary layout (all integers little-endian)::

    magic     8 bytes   b"BAMBOOKG"
    version   u32       FORMAT_VERSION
    section*  4-byte name, u64 payload length, payload
              CONF  UTF-8 JSON config echo, keys sorted
              TAGS  u32 n, then n x (u32 len, UTF-8 surface), by TagId
              CHNK  u32 n, then n x chunk record, sorted by (doc, ordinal)
                    chunk record: str doc, u32 ordinal, u32 token_count,
                    str text, u32 k, k x u32 TagId
              EDGE  u64 n, then n x (u32 a, u32 b, u32 weight), a < b,
                    sorted by (a, b)
    checksum  32 bytes  SHA-256 of every preceding byte

``str`` is a u32 byte length followed by UTF-8 bytes. Loading verifies
the checksum first, then the version, then structural invariants; edge
weights must match a recount from the chunk tag sets.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import struct
import tempfile
from collections import Counter
from itertools import combinations
from pathlib import Path
from typing import IO, Dict, Iterable, List, Tuple, Union

from .chunker import ChunkingConfig
from .errors import BambooError, CorruptSnapshot, VersionMismatch
from .graph import Chunk, ChunkId, TagGraph, normalize_tag
from .recall import RetrievalParams
from .store import BambooStore
from .tagger import TaggerConfig

MAGIC = b"BAMBOOKG"
FORMAT_VERSION = 1
JSONL_FORMAT = "bambookg-jsonl"
_DIGEST = 32
_SECTIONS = (b"CONF", b"TAGS", b"CHNK", b"EDGE")

PathLike = Union[str, os.PathLike]


# -- encoding -----------------------------------------------------------


def _str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _section(name: bytes, payload: bytes) -> bytes:
    return name + struct.pack("<Q", len(payload)) + payload


def _edge_rows(store: BambooStore) -> List[Tuple[int, int, int]]:
    return list(store.graph.edges())


def dumps(store: BambooStore) -> bytes:
    conf = json.dumps(store.config_echo(), sort_keys=True, separators=(",", ":")).encode("utf-8")

    tags = io.BytesIO()
    vocab = store.graph.vocabulary()
    tags.write(struct.pack("<I", len(vocab)))
    for surface in vocab:
        tags.write(_str(surface))

    chunks = io.BytesIO()
    rows = store.index.chunks()
    chunks.write(struct.pack("<I", len(rows)))
    for chunk in rows:
        chunks.write(_str(chunk.id.doc))
        chunks.write(struct.pack("<II", chunk.id.ordinal, chunk.token_count))
        chunks.write(_str(chunk.text))
        chunks.write(struct.pack(f"<I{len(chunk.tags)}I", len(chunk.tags), *chunk.tags))

    edges = io.BytesIO()
    edge_rows = _edge_rows(store)
    edges.write(struct.pack("<Q", len(edge_rows)))
    for a, b, w in edge_rows:
        edges.write(struct.pack("<III", a, b, w))

    body = MAGIC + struct.pack("<I", FORMAT_VERSION)
    for name, payload in zip(_SECTIONS, (conf, tags.getvalue(), chunks.getvalue(), edges.getvalue())):
        body += _section(name, payload)
    return body + hashlib.sha256(body).digest()


def _atomic_write(path: PathLike, data: bytes) -> int:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(data)


def save_snapshot(store: BambooStore, path: PathLike) -> int:
    """Write ``store`` atomically (temp file + rename); return bytes written."""
    return _atomic_write(path, dumps(store))


# -- decoding -----------------------------------------------------------


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise CorruptSnapshot("unexpected end of section")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def u32(self) -> int:
        return self.unpack("<I")[0]

    def string(self) -> str:
        raw = self.take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptSnapshot("invalid UTF-8") from exc

    def done(self) -> bool:
        return self.pos == len(self.data)


def _configs(echo: dict) -> Tuple[ChunkingConfig, TaggerConfig, RetrievalParams]:
    try:
        chunking = ChunkingConfig(**echo["chunking"])
        tagging = TaggerConfig(max_tags=echo["tagger"]["max_tags"])
        retrieval = RetrievalParams(**echo["retrieval"])
    except (KeyError, TypeError, BambooError) as exc:
        raise CorruptSnapshot(f"bad config echo: {exc}") from exc
    return chunking, tagging, retrieval


def build_store(
    echo: dict,
    surfaces: List[str],
    chunks: List[Chunk],
    edges: List[Tuple[int, int, int]],
) -> BambooStore:
    """Assemble a store from decoded tables, enforcing every invariant.

    Raises:
        CorruptSnapshot: on any violated invariant.
    """
    if any(not s or normalize_tag(s) != s for s in surfaces) or len(set(surfaces)) != len(surfaces):
        raise CorruptSnapshot("tag table is not a set of normalized tags")
    n_tags = len(surfaces)

    per_doc: Dict[str, List[int]] = {}
    seen = set()
    recount: Counter = Counter()
    for chunk in chunks:
        if chunk.id in seen:
            raise CorruptSnapshot(f"duplicate chunk {chunk.id}")
        seen.add(chunk.id)
        per_doc.setdefault(chunk.id.doc, []).append(chunk.id.ordinal)
        if chunk.token_count < 1 and chunk.text.strip():
            raise CorruptSnapshot(f"chunk {chunk.id} has no tokens")
        if len(set(chunk.tags)) != len(chunk.tags) or any(not 0 <= t < n_tags for t in chunk.tags):
            raise CorruptSnapshot(f"chunk {chunk.id} has bad tag ids")
        recount.update(combinations(sorted(chunk.tags), 2))
    for doc, ordinals in per_doc.items():
        if sorted(ordinals) != list(range(len(ordinals))):
            raise CorruptSnapshot(f"document {doc!r} has non-consecutive ordinals")

    prev = None
    for a, b, w in edges:
        if not (0 <= a < b < n_tags) or w < 1:
            raise CorruptSnapshot(f"invalid edge row ({a}, {b}, {w})")
        if prev is not None and (a, b) <= prev:
            raise CorruptSnapshot("edge table is not strictly sorted")
        prev = (a, b)
    if {(a, b): w for a, b, w in edges} != dict(recount):
        raise CorruptSnapshot("edge weights disagree with chunk tag sets")

    graph = TagGraph.from_tables(surfaces, edges, (c.id for c in chunks))
    return BambooStore.from_parts(graph, chunks, *_configs(echo))


def loads(data: bytes) -> BambooStore:
    head = len(MAGIC) + 4
    if len(data) < head + _DIGEST:
        raise CorruptSnapshot("file too short")
    body, digest = data[:-_DIGEST], data[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptSnapshot("checksum mismatch")
    if body[:len(MAGIC)] != MAGIC:
        raise CorruptSnapshot("bad magic")
    (version,) = struct.unpack("<I", body[len(MAGIC):head])
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"snapshot version {version}, expected {FORMAT_VERSION}")

    outer = _Reader(body[head:])
    payloads = {}
    for name in _SECTIONS:
        if outer.take(4) != name:
            raise CorruptSnapshot(f"expected section {name.decode()}")
        (length,) = outer.unpack("<Q")
        payloads[name] = outer.take(length)
    if not outer.done():
        raise CorruptSnapshot("trailing bytes after sections")

    try:
        echo = json.loads(payloads[b"CONF"].decode("utf-8"))
    except ValueError as exc:
        raise CorruptSnapshot("config section is not JSON") from exc

    r = _Reader(payloads[b"TAGS"])
    surfaces = [r.string() for _ in range(r.u32())]
    if not r.done():
        raise CorruptSnapshot("trailing bytes in TAGS")

    r = _Reader(payloads[b"CHNK"])
    chunks = []
    for _ in range(r.u32()):
        doc = r.string()
        ordinal, token_count = r.unpack("<II")
        text = r.string()
        k = r.u32()
        tags = r.unpack(f"<{k}I")
        chunks.append(Chunk(ChunkId(doc, ordinal), text, token_count, tuple(tags)))
    if not r.done():
        raise CorruptSnapshot("trailing bytes in CHNK")

    r = _Reader(payloads[b"EDGE"])
    (n_edges,) = r.unpack("<Q")
    edges = [r.unpack("<III") for _ in range(n_edges)]
    if not r.done():
        raise CorruptSnapshot("trailing bytes in EDGE")

    return build_store(echo, surfaces, chunks, edges)


def load_snapshot(path: PathLike) -> BambooStore:
    """Read a snapshot written by :func:`save_snapshot`.

    Raises:
        OSError: if the file cannot be read.
        CorruptSnapshot: checksum or invariant failure.
        VersionMismatch: unknown format version.
    """
    return loads(Path(path).read_bytes())


# -- JSON lines -----------------------------------------------------------


def export_jsonl(store: BambooStore, fh: IO[str]) -> int:
    """Write one JSON record per line: header, tags, chunks, edges.

    Returns the number of records written.
    """
    records: List[dict] = [{"type": "header", "format": JSONL_FORMAT, "version": FORMAT_VERSION,
                            "config": store.config_echo()}]
    records += [{"type": "tag", "id": i, "surface": s} for i, s in enumerate(store.graph.vocabulary())]
    records += [
        {"type": "chunk", "doc": c.id.doc, "ordinal": c.id.ordinal, "token_count": c.token_count,
         "text": c.text, "tags": list(c.tags)}
        for c in store.index.chunks()
    ]
    records += [{"type": "edge", "a": a, "b": b, "weight": w} for a, b, w in store.graph.edges()]
    for rec in records:
        fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
    return len(records)


def import_jsonl(lines: Iterable[str]) -> BambooStore:
    """Rebuild a store from :func:`export_jsonl` output.

    Raises:
        CorruptSnapshot: malformed records or violated invariants.
        VersionMismatch: unknown interchange version.
    """
    echo = None
    surfaces: List[str] = []
    chunks: List[Chunk] = []
    edges: List[Tuple[int, int, int]] = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec["type"]
            if kind == "header":
                if rec.get("format") != JSONL_FORMAT:
                    raise CorruptSnapshot("not a bambookg interchange file")
                if rec.get("version") != FORMAT_VERSION:
                    raise VersionMismatch(f"interchange version {rec.get('version')}")
                echo = rec["config"]
            elif kind == "tag":
                if rec["id"] != len(surfaces):
                    raise CorruptSnapshot(f"line {lineno}: tag ids must be dense and ordered")
                surfaces.append(rec["surface"])
            elif kind == "chunk":
                chunks.append(Chunk(ChunkId(rec["doc"], int(rec["ordinal"])), rec["text"],
                                    int(rec["token_count"]), tuple(int(t) for t in rec["tags"])))
            elif kind == "edge":
                edges.append((int(rec["a"]), int(rec["b"]), int(rec["weight"])))
            else:
                raise CorruptSnapshot(f"line {lineno}: unknown record type {kind!r}")
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptSnapshot(f"line {lineno}: {exc}") from exc
    if echo is None:
        raise CorruptSnapshot("missing header record")
    return build_store(echo, surfaces, chunks, edges)
