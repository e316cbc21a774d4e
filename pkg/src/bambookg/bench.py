"""Retrieval benchmark over HotPotQA / MuSiQue style question files.

For each question a fresh store is built from the question's context
documents (supporting and distractor alike), the question is recalled,
and the harness scores supporting-document recall: the fraction of gold
documents with at least one chunk in the returned context.

Input shapes
------------
HotPotQA (distractor setting): a JSON list of records with ``_id``,
``question``, ``context`` as ``[[title, [sentence, ...]], ...]`` and
``supporting_facts`` as ``[[title, sentence_index], ...]``.

MuSiQue: JSON lines with ``id``, ``question``, ``paragraphs`` as
``[{"idx", "title", "paragraph_text", "is_supporting"}, ...]`` and
optionally ``question_decomposition`` (its length is the hop count;
otherwise an ``"<n>hop"`` id prefix is used).

Output CSV columns: question_id, hops, recall, context_tokens,
traversal_ms, tagging_ms, status. Aggregate rows follow the question
rows with status ``aggregate``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import random
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Callable, Dict, List, Optional, Sequence, TextIO, Tuple

from .chunker import ChunkingConfig
from .errors import BambooError, NoKnownTags, ParseError
from .memorise import CorpusIngestError, ingest_corpus
from .recall import RecallResult, RetrievalParams, recall
from .store import BambooStore
from .tagger import TaggerConfig

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("question_id", "hops", "recall", "context_tokens", "traversal_ms", "tagging_ms", "status")
FORMATS = ("hotpotqa", "musique")


@dataclass(frozen=True)
class QaDocument:
    doc_id: str
    title: str
    text: str


@dataclass
class QaInstance:
    question_id: str
    question: str
    documents: List[QaDocument]
    supporting_titles: List[str]
    supporting_facts: List[Tuple[str, int]] = field(default_factory=list)
    hops: Optional[int] = None


@dataclass
class QuestionRow:
    question_id: str
    hops: Optional[int]
    recall: float
    context_tokens: int
    traversal_ms: float
    tagging_ms: float
    status: str


@dataclass
class AggregateRow:
    label: str
    hops: Optional[int]
    recall: float
    context_tokens: float
    traversal_ms: float
    tagging_ms: float
    count: int


@dataclass
class BenchmarkResult:
    rows: List[QuestionRow]
    aggregates: List[AggregateRow]


def _unique_ids(titles: Sequence[str]) -> List[str]:
    seen: Dict[str, int] = {}
    out = []
    for title in titles:
        seen[title] = seen.get(title, 0) + 1
        out.append(title if seen[title] == 1 else f"{title} ({seen[title]})")
    return out


def _parse_hotpotqa(rec: dict, pos: int) -> QaInstance:
    qid = str(rec.get("_id", f"#{pos}"))
    try:
        titles = [str(t) for t, _ in rec["context"]]
        texts = [" ".join(s.strip() for s in sents) for _, sents in rec["context"]]
        facts = [(str(t), int(i)) for t, i in rec["supporting_facts"]]
        question = str(rec["question"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"record {qid}: missing or malformed field ({exc})", qid) from exc
    docs = [QaDocument(d, t, x) for d, t, x in zip(_unique_ids(titles), titles, texts)]
    gold = list(dict.fromkeys(t for t, _ in facts))
    return QaInstance(qid, question, docs, gold, facts, None)


_HOP_PREFIX = re.compile(r"^(\d+)hop")


def _parse_musique(rec: dict, pos: int) -> QaInstance:
    qid = str(rec.get("id", f"#{pos}"))
    try:
        paras = sorted(rec["paragraphs"], key=lambda p: int(p.get("idx", 0)))
        titles = [str(p["title"]) for p in paras]
        texts = [str(p["paragraph_text"]) for p in paras]
        gold = list(dict.fromkeys(str(p["title"]) for p in paras if p.get("is_supporting")))
        question = str(rec["question"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"record {qid}: missing or malformed field ({exc})", qid) from exc
    hops = None
    if rec.get("question_decomposition"):
        hops = len(rec["question_decomposition"])
    else:
        m = _HOP_PREFIX.match(qid)
        hops = int(m.group(1)) if m else None
    docs = [QaDocument(d, t, x) for d, t, x in zip(_unique_ids(titles), titles, texts)]
    return QaInstance(qid, question, docs, gold, [], hops)


def load_dataset(path, fmt: str, sample: Optional[int] = None, seed: int = 0) -> List[QaInstance]:
    """Parse a question file and optionally draw a seeded sample.

    Sampled questions keep their file order.

    Raises:
        ParseError: naming the offending record.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown dataset format {fmt!r}")
    raw = Path(path).read_text("utf-8")
    try:
        if fmt == "hotpotqa":
            records = json.loads(raw)
        else:
            records = [json.loads(line) for line in raw.splitlines() if line.strip()]
    except ValueError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(records, list):
        raise ParseError(f"{path}: expected a list of records")

    parse = _parse_hotpotqa if fmt == "hotpotqa" else _parse_musique
    instances = []
    for pos, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise ParseError(f"record #{pos} is not an object", f"#{pos}")
        inst = parse(rec, pos)
        titles = {d.title for d in inst.documents}
        missing = [t for t in inst.supporting_titles if t not in titles]
        if missing:
            raise ParseError(f"record {inst.question_id}: gold titles not in context: {missing}",
                             inst.question_id)
        instances.append(inst)

    if sample is not None and sample < len(instances):
        picked = sorted(random.Random(seed).sample(range(len(instances)), sample))
        instances = [instances[i] for i in picked]
    return instances


def _ingest(store: BambooStore, docs: Sequence[QaDocument], chunk_cfg, tagger_cfg) -> None:
    try:
        ingest_corpus(store, [(d.doc_id, d.text) for d in docs], chunk_cfg, tagger_cfg)
    except CorpusIngestError as exc:
        for doc_id, err in exc.failures:
            logger.info("skipped document %s: %s", doc_id, err)


def _shared_documents(instances: Sequence[QaInstance]) -> Tuple[List[QaDocument], Dict[Tuple[str, str], str]]:
    """Union of all context documents, one doc per distinct (title, text)."""
    docs: List[QaDocument] = []
    ids: Dict[Tuple[str, str], str] = {}
    per_title: Dict[str, int] = {}
    for inst in instances:
        for d in inst.documents:
            key = (d.title, d.text)
            if key in ids:
                continue
            per_title[d.title] = per_title.get(d.title, 0) + 1
            n = per_title[d.title]
            doc_id = d.title if n == 1 else f"{d.title} ({n})"
            ids[key] = doc_id
            docs.append(QaDocument(doc_id, d.title, d.text))
    return docs, ids


def run_benchmark(
    instances: Sequence[QaInstance],
    chunk_cfg: Optional[ChunkingConfig] = None,
    tagger_cfg: Optional[TaggerConfig] = None,
    params: Optional[RetrievalParams] = None,
    shared_corpus: bool = False,
    hook: Optional[Callable[[QaInstance, RecallResult], None]] = None,
) -> BenchmarkResult:
    """Score supporting-document recall for every question.

    ``hook`` receives each successful recall; use it to attach an
    answer generator or judge. Its return value is ignored.
    """
    chunk_cfg = chunk_cfg or ChunkingConfig()
    tagger_cfg = tagger_cfg or TaggerConfig()
    params = params or RetrievalParams()

    shared = None
    titles_by_doc: Dict[str, str] = {}
    if shared_corpus:
        docs, _ = _shared_documents(instances)
        shared = BambooStore(chunk_cfg, tagger_cfg, params)
        _ingest(shared, docs, chunk_cfg, tagger_cfg)
        titles_by_doc = {d.doc_id: d.title for d in docs}

    rows = []
    for inst in instances:
        if shared is None:
            store = BambooStore(chunk_cfg, tagger_cfg, params)
            _ingest(store, inst.documents, chunk_cfg, tagger_cfg)
            doc_titles = {d.doc_id: d.title for d in inst.documents}
        else:
            store, doc_titles = shared, titles_by_doc
        try:
            result = recall(store, inst.question, params, tagger_cfg)
        except NoKnownTags:
            rows.append(QuestionRow(inst.question_id, inst.hops, 0.0, 0, 0.0, 0.0, "no_known_tags"))
            continue
        except BambooError as exc:
            logger.warning("question %s failed: %s", inst.question_id, exc)
            rows.append(QuestionRow(inst.question_id, inst.hops, 0.0, 0, 0.0, 0.0,
                                    f"error:{type(exc).__name__}"))
            continue
        found = {doc_titles[c.chunk_id.doc] for c in result.context.chunks}
        gold = set(inst.supporting_titles)
        score = len(gold & found) / len(gold) if gold else 0.0
        rows.append(QuestionRow(inst.question_id, inst.hops, score, result.context.total_tokens,
                                result.traversal_ms, result.tagging_ms, "ok"))
        if hook is not None:
            hook(inst, result)
    return BenchmarkResult(rows, aggregate(rows))


def aggregate(rows: Sequence[QuestionRow]) -> List[AggregateRow]:
    """Arithmetic means over all rows, then per hop count."""

    def mean_row(label: str, hops: Optional[int], group: Sequence[QuestionRow]) -> AggregateRow:
        return AggregateRow(
            label, hops,
            fmean(r.recall for r in group),
            fmean(r.context_tokens for r in group),
            fmean(r.traversal_ms for r in group),
            fmean(r.tagging_ms for r in group),
            len(group),
        )

    if not rows:
        return []
    out = [mean_row("__mean__", None, rows)]
    for h in sorted({r.hops for r in rows if r.hops is not None}):
        out.append(mean_row(f"__mean_hops_{h}__", h, [r for r in rows if r.hops == h]))
    return out


def write_csv(result: BenchmarkResult, fh: TextIO, timings: bool = True) -> None:
    """Write question rows then aggregate rows.

    With ``timings=False`` the two timing columns are left empty so the
    file depends only on the inputs and is byte-stable across runs.
    """

    def ms(v: float) -> str:
        return f"{v:.3f}" if timings else ""

    def hops(v: Optional[int]) -> str:
        return "" if v is None else str(v)

    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in result.rows:
        writer.writerow([r.question_id, hops(r.hops), f"{r.recall:.6f}", r.context_tokens,
                         ms(r.traversal_ms), ms(r.tagging_ms), r.status])
    for a in result.aggregates:
        writer.writerow([a.label, hops(a.hops), f"{a.recall:.6f}", f"{a.context_tokens:.3f}",
                         ms(a.traversal_ms), ms(a.tagging_ms), "aggregate"])


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="bambookg-bench", description=__doc__.splitlines()[0])
    parser.add_argument("dataset")
    parser.add_argument("--format", choices=FORMATS, required=True, dest="fmt")
    parser.add_argument("--sample", type=int)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--x", type=int, default=5)
    parser.add_argument("--y", type=int, default=3)
    parser.add_argument("--decay", type=float, default=0.5)
    parser.add_argument("--chunk-tokens", type=int, default=300)
    parser.add_argument("--max-tags", type=int, default=8)
    parser.add_argument("--shared-corpus", action="store_true")
    parser.add_argument("--no-timing", action="store_true", help="leave timing columns empty")
    parser.add_argument("--output", "-o", help="CSV destination (default: stdout)")
    parser.add_argument("--summary", help="write a JSON summary (seed, params, aggregates)")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING)

    try:
        instances = load_dataset(args.dataset, args.fmt, args.sample, args.seed)
        params = RetrievalParams(args.x, args.y, args.decay)
        chunk_cfg = ChunkingConfig(args.chunk_tokens)
        tagger_cfg = TaggerConfig(max_tags=args.max_tags)
    except (BambooError, OSError) as exc:
        print(f"bambookg-bench: {exc}", file=sys.stderr)
        return 1

    result = run_benchmark(instances, chunk_cfg, tagger_cfg, params, args.shared_corpus)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_csv(result, fh, timings=not args.no_timing)
    else:
        write_csv(result, sys.stdout, timings=not args.no_timing)
    summary = {
        "dataset": str(args.dataset),
        "format": args.fmt,
        "seed": args.seed,
        "sample": args.sample,
        "questions": len(result.rows),
        "params": asdict(params),
        "aggregates": [asdict(a) for a in result.aggregates],
    }
    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, indent=2) + "\n", "utf-8")
    else:
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
