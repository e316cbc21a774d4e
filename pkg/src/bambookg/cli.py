"""``bambookg`` command line: ingest, query, stats, export, import.

Settings resolve as built-in defaults, then ``--config`` (a JSON object
with the same keys as ``--print-config`` shows), then flags.

Exit codes: 0 ok, 1 runtime error, 2 usage error, 3 no known tags.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO

from .chunker import ChunkingConfig
from .errors import BambooError, ConfigError, NoKnownTags
from .graph import TagGraph
from .memorise import CorpusIngestError, ingest_corpus
from .persistence import export_jsonl, import_jsonl, load_snapshot, save_snapshot
from .recall import RecallResult, RetrievalParams, recall
from .store import BambooStore
from .tagger import TaggerConfig
from .tagger.llm import API_KEY_ENV, LlmTaggerEndpoint

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_NO_TAGS = 0, 1, 2, 3
DOC_SUFFIXES = (".txt", ".md")

DEFAULTS: Dict[str, Any] = {
    "store": "bambookg.snap",
    "chunk_tokens": 300,
    "max_tags": 8,
    "x": 5,
    "y": 3,
    "decay": 0.5,
    "max_context_tokens": None,
    "tagger": "det",
    "stoplist": None,
    "format": "human",
    "llm": {"base_url": None, "model_name": None, "timeout": 30.0},
}


class UsageError(Exception):
    pass


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--store", help="snapshot file (default: bambookg.snap)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--chunk-tokens", dest="chunk_tokens", type=int)
    p.add_argument("--max-tags", dest="max_tags", type=int)
    p.add_argument("--x", type=int, help="first-degree neighbors per query tag")
    p.add_argument("--y", type=int, help="second-degree neighbors per query tag")
    p.add_argument("--decay", type=float)
    p.add_argument("--max-context-tokens", dest="max_context_tokens", type=int)
    p.add_argument("--tagger", choices=["det", "llm"])
    p.add_argument("--stoplist", help="stoplist file for the deterministic tagger")
    p.add_argument("--format", choices=["human", "json"])
    p.add_argument("--print-config", dest="print_config", action="store_true",
                   help="print the effective config and exit")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="bambookg", parents=[common],
                                     description="Frequency-weighted tag memory.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="memorise text files or directories")
    p.add_argument("paths", nargs="+")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("query", parents=[common], help="recall chunks for a query")
    p.add_argument("text")

    sub.add_parser("stats", parents=[common], help="graph statistics")

    p = sub.add_parser("export", parents=[common], help="dump the store as JSON lines")
    p.add_argument("--output", "-o", help="destination file (default: stdout)")

    p = sub.add_parser("import", parents=[common], help="load JSON lines into --store")
    p.add_argument("source")
    return parser


def effective_config(args: argparse.Namespace) -> Dict[str, Any]:
    cfg = json.loads(json.dumps(DEFAULTS))
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text("utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {config_path}: {exc}")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        llm = dict(cfg["llm"], **loaded.pop("llm", {}))
        cfg.update(loaded, llm=llm)
    for key in DEFAULTS:
        if key != "llm" and hasattr(args, key):
            cfg[key] = getattr(args, key)
    return cfg


def _tagger_config(cfg: Dict[str, Any]) -> TaggerConfig:
    if cfg["tagger"] == "llm":
        llm = cfg["llm"]
        if not llm.get("base_url") or not llm.get("model_name"):
            raise UsageError("--tagger llm needs llm.base_url and llm.model_name in --config")
        endpoint = LlmTaggerEndpoint(llm["base_url"], llm["model_name"], float(llm.get("timeout", 30.0)))
        return TaggerConfig(max_tags=cfg["max_tags"], mode="llm", endpoint=endpoint)
    return TaggerConfig(max_tags=cfg["max_tags"], stoplist_path=cfg["stoplist"])


def _params(cfg: Dict[str, Any]) -> RetrievalParams:
    return RetrievalParams(cfg["x"], cfg["y"], cfg["decay"], cfg["max_context_tokens"])


def _open_store(cfg: Dict[str, Any]) -> BambooStore:
    path = Path(cfg["store"])
    if path.exists():
        return load_snapshot(path)
    return BambooStore(ChunkingConfig(cfg["chunk_tokens"]), _tagger_config(cfg), _params(cfg))


def _emit(obj: Any, out: TextIO) -> None:
    out.write(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def _collect_documents(paths: Sequence[str]) -> List[Path]:
    found: List[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            found.extend(sorted(p for p in path.rglob("*") if p.is_file() and p.suffix in DOC_SUFFIXES))
        elif path.is_file():
            found.append(path)
        else:
            raise FileNotFoundError(f"no such file or directory: {raw}")
    return found


def _doc_id(path: Path) -> str:
    try:
        return Path(os.path.relpath(path)).as_posix()
    except ValueError:
        return path.as_posix()


def cmd_ingest(args: argparse.Namespace, cfg: Dict[str, Any], out: TextIO, err: TextIO) -> int:
    files = _collect_documents(args.paths)
    if not files:
        err.write("no documents found\n")
        return EXIT_RUNTIME
    store = _open_store(cfg)
    docs = [(_doc_id(p), p.read_text("utf-8")) for p in files]
    failures: List = []
    try:
        reports = ingest_corpus(store, docs, ChunkingConfig(cfg["chunk_tokens"]), _tagger_config(cfg),
                                workers=args.workers)
    except CorpusIngestError as exc:
        reports, failures = exc.reports, exc.failures
    save_snapshot(store, cfg["store"])
    stats = store.stats().as_dict()

    if cfg["format"] == "json":
        _emit({
            "documents": [vars(r) for r in reports],
            "errors": [{"doc_id": d, "error": type(e).__name__, "message": str(e)} for d, e in failures],
            "stats": stats,
        }, out)
    else:
        for r in reports:
            out.write(f"{r.doc_id}: {r.chunks_created} chunks, {r.tags_created} new tags, "
                      f"{r.edges_created} new edges, {r.edges_reinforced} reinforced\n")
        out.write(f"ingested {len(reports)} document(s)\n")
        out.write(_stats_table(stats))
    for doc_id, exc in failures:
        err.write(f"error: {doc_id}: {type(exc).__name__}: {exc}\n")
    return EXIT_RUNTIME if failures else EXIT_OK


def result_as_dict(result: RecallResult, graph: TagGraph) -> Dict[str, Any]:
    """JSON-ready recall output; tags appear by surface, never by id."""
    name = graph.surface
    sub = result.subgraph

    def pair(edge):
        return sorted((name(edge[0]), name(edge[1])))

    edges = sorted((pair(e), score) for e, score in sub.retrieved_edges.items())
    return {
        "query": result.query,
        "query_tags": result.query_tags,
        "subgraph": {
            "nodes": sorted(name(t) for t in sub.nodes()),
            "expansions": [
                {
                    "tag": name(exp.tag),
                    "first": [{"tag": name(t), "weight": w} for t, w in exp.first],
                    "second": [{"tag": name(s.tag), "score": s.score, "via": name(s.via)} for s in exp.second],
                }
                for exp in sub.expansions
            ],
            "edges": [{"a": a, "b": b, "score": score} for (a, b), score in edges],
        },
        "context": {
            "total_tokens": result.context.total_tokens,
            "chunks": [
                {
                    "doc": c.chunk_id.doc,
                    "ordinal": c.chunk_id.ordinal,
                    "score": c.score,
                    "token_count": c.token_count,
                    "edges": sorted(pair(e) for e in c.edges),
                    "text": c.text,
                }
                for c in result.context.chunks
            ],
        },
        "timing": {"tagging_ms": result.tagging_ms, "traversal_ms": result.traversal_ms},
    }


def cmd_query(args: argparse.Namespace, cfg: Dict[str, Any], out: TextIO, err: TextIO) -> int:
    store = _open_store(cfg)
    tagger_cfg = _tagger_config(cfg)
    try:
        result = recall(store, args.text, _params(cfg), tagger_cfg)
    except NoKnownTags as exc:
        err.write(f"{exc}: the store has not learned any concept in this query\n")
        return EXIT_NO_TAGS
    if cfg["format"] == "json":
        _emit(result_as_dict(result, store.graph), out)
        return EXIT_OK
    out.write(f"query tags: {', '.join(result.query_tags)}\n")
    out.write(f"retrieved edges: {len(result.subgraph.retrieved_edges)}, "
              f"chunks: {len(result.context.chunks)}, tokens: {result.context.total_tokens}\n")
    out.write(f"tagging: {result.tagging_ms:.3f} ms, traversal: {result.traversal_ms:.3f} ms\n")
    name = store.graph.surface
    for c in result.context.chunks:
        via = "; ".join(f"{name(a)}-{name(b)}" for a, b in c.edges)
        out.write(f"\n[{c.chunk_id}] score={c.score:g} tokens={c.token_count} via {via}\n{c.text}\n")
    return EXIT_OK


def _stats_table(stats: Dict[str, int]) -> str:
    width = max(len(k) for k in stats)
    return "".join(f"{k:<{width}}  {v}\n" for k, v in stats.items())


def cmd_stats(args: argparse.Namespace, cfg: Dict[str, Any], out: TextIO, err: TextIO) -> int:
    stats = _open_store(cfg).stats().as_dict()
    if cfg["format"] == "json":
        _emit(stats, out)
    else:
        out.write(_stats_table(stats))
    return EXIT_OK


def cmd_export(args: argparse.Namespace, cfg: Dict[str, Any], out: TextIO, err: TextIO) -> int:
    store = _open_store(cfg)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            n = export_jsonl(store, fh)
        err.write(f"wrote {n} records to {args.output}\n")
    else:
        export_jsonl(store, out)
    return EXIT_OK


def cmd_import(args: argparse.Namespace, cfg: Dict[str, Any], out: TextIO, err: TextIO) -> int:
    with open(args.source, encoding="utf-8") as fh:
        store = import_jsonl(fh)
    written = save_snapshot(store, cfg["store"])
    out.write(f"imported {len(store.index)} chunks, {store.graph.node_count} tags into "
              f"{cfg['store']} ({written} bytes)\n")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "query": cmd_query,
    "stats": cmd_stats,
    "export": cmd_export,
    "import": cmd_import,
}


def main(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
        if getattr(args, "print_config", False):
            _emit(cfg, out)
            return EXIT_OK
        if cfg["tagger"] == "llm" and not os.environ.get(API_KEY_ENV):
            logger.warning("%s is not set; requests go out unauthenticated", API_KEY_ENV)
        return COMMANDS[args.command](args, cfg, out, err)
    except (UsageError, ConfigError) as exc:
        err.write(f"bambookg: error: {exc}\n")
        return EXIT_USAGE
    except (BambooError, OSError) as exc:
        err.write(f"bambookg: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
