import csv
import io
import json

import pytest

from bambookg import ParseError, RetrievalParams
from bambookg.bench import (
    CSV_COLUMNS,
    QaDocument,
    QaInstance,
    QuestionRow,
    aggregate,
    load_dataset,
    main,
    run_benchmark,
    write_csv,
)


def csv_text(result, timings=False):
    buf = io.StringIO()
    write_csv(result, buf, timings=timings)
    return buf.getvalue()


def test_hotpotqa_parse(fixtures_dir):
    items = load_dataset(fixtures_dir / "hotpotqa_5.json", "hotpotqa")
    assert [i.question_id for i in items] == [f"hp-00{k}" for k in range(1, 6)]
    first = items[0]
    assert first.supporting_titles == ["Arthur's Magazine", "First for Women"]
    assert first.hops is None
    assert all(d.text and d.title for d in first.documents)


def test_musique_parse_hops(fixtures_dir):
    items = load_dataset(fixtures_dir / "musique_5.jsonl", "musique")
    assert [i.hops for i in items] == [2, 2, 3, 3, 4]
    assert all(i.supporting_titles for i in items)


def test_seeded_sample_is_deterministic(fixtures_dir):
    path = fixtures_dir / "hotpotqa_5.json"
    a = [i.question_id for i in load_dataset(path, "hotpotqa", sample=3, seed=7)]
    b = [i.question_id for i in load_dataset(path, "hotpotqa", sample=3, seed=7)]
    assert a == b and len(a) == 3 and a == sorted(a)


def test_missing_context_names_record(tmp_path, fixtures_dir):
    records = json.loads((fixtures_dir / "hotpotqa_5.json").read_text())
    del records[2]["context"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(records))
    with pytest.raises(ParseError) as info:
        load_dataset(bad, "hotpotqa")
    assert info.value.record_id == "hp-003"
    assert "hp-003" in str(info.value)


def test_gold_title_must_exist(tmp_path, fixtures_dir):
    records = json.loads((fixtures_dir / "hotpotqa_5.json").read_text())
    records[0]["supporting_facts"].append(["Nowhere", 0])
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(records))
    with pytest.raises(ParseError, match="hp-001"):
        load_dataset(bad, "hotpotqa")


def crafted(question, gold=("Axolotl", "Mexico City")):
    docs = [
        QaDocument("Axolotl", "Axolotl", "The axolotl is a salamander native to lake Xochimilco."),
        QaDocument("Mexico City", "Mexico City", "Lake Xochimilco lies in the south of Mexico City."),
        QaDocument("Penguin", "Penguin", "Penguins are flightless seabirds of the southern hemisphere."),
    ]
    return QaInstance("q1", question, docs, list(gold), [], 2)


def test_crafted_question_full_recall():
    result = run_benchmark([crafted("Which city holds the lake where the axolotl lives?")])
    (row,) = result.rows
    assert row.status == "ok" and row.recall == 1.0
    assert row.context_tokens > 0


def test_unknown_question_scores_zero():
    (row,) = run_benchmark([crafted("quantum chromodynamics")]).rows
    assert (row.status, row.recall, row.context_tokens) == ("no_known_tags", 0.0, 0)


def test_hook_sees_each_result():
    seen = []
    run_benchmark([crafted("axolotl lake")], hook=lambda inst, res: seen.append(inst.question_id))
    assert seen == ["q1"]


def test_aggregates_match_recomputation():
    rows = [QuestionRow("a", 2, 1.0, 10, 1.0, 2.0, "ok"), QuestionRow("b", 2, 0.5, 20, 3.0, 4.0, "ok"),
            QuestionRow("c", 3, 0.0, 0, 0.0, 0.0, "no_known_tags")]
    agg = {a.label: a for a in aggregate(rows)}
    assert agg["__mean__"].recall == pytest.approx(0.5, abs=1e-6)
    assert agg["__mean__"].count == 3
    assert agg["__mean_hops_2__"].recall == pytest.approx(0.75, abs=1e-6)
    assert agg["__mean_hops_2__"].context_tokens == pytest.approx(15.0)
    assert agg["__mean_hops_3__"].count == 1
    assert aggregate([]) == []


@pytest.mark.parametrize("name, fmt", [("hotpotqa_5.json", "hotpotqa"), ("musique_5.jsonl", "musique")])
def test_fixture_runs(fixtures_dir, name, fmt):
    items = load_dataset(fixtures_dir / name, fmt)
    result = run_benchmark(items)
    rows = list(csv.reader(io.StringIO(csv_text(result, timings=True))))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + len(items) + len(result.aggregates)
    mean = next(a for a in result.aggregates if a.label == "__mean__")
    assert mean.recall == pytest.approx(sum(r.recall for r in result.rows) / len(items), abs=1e-6)
    assert all(0.0 <= r.recall <= 1.0 for r in result.rows)


def test_csv_byte_identical_without_timings(fixtures_dir):
    items = load_dataset(fixtures_dir / "musique_5.jsonl", "musique")
    assert csv_text(run_benchmark(items)) == csv_text(run_benchmark(items))


def test_shared_corpus_mode(fixtures_dir):
    items = load_dataset(fixtures_dir / "hotpotqa_5.json", "hotpotqa")
    result = run_benchmark(items, shared_corpus=True)
    assert len(result.rows) == 5
    assert all(r.status == "ok" for r in result.rows)


def test_wider_expansion_never_loses_recall(fixtures_dir):
    items = load_dataset(fixtures_dir / "musique_5.jsonl", "musique")
    narrow = run_benchmark(items, params=RetrievalParams(1, 0))
    wide = run_benchmark(items, params=RetrievalParams(5, 3))
    for a, b in zip(narrow.rows, wide.rows):
        assert b.recall >= a.recall


def test_cli_writes_csv_and_summary(tmp_path, fixtures_dir):
    out, summary = tmp_path / "r.csv", tmp_path / "s.json"
    code = main([str(fixtures_dir / "hotpotqa_5.json"), "--format", "hotpotqa", "--sample", "3",
                 "--seed", "7", "--no-timing", "-o", str(out), "--summary", str(summary)])
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    info = json.loads(summary.read_text())
    assert info["seed"] == 7
    again = tmp_path / "r2.csv"
    main([str(fixtures_dir / "hotpotqa_5.json"), "--format", "hotpotqa", "--sample", "3",
          "--seed", "7", "--no-timing", "-o", str(again)])
    assert again.read_bytes() == out.read_bytes()


def test_cli_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "x1", "question": "q"}\n')
    assert main([str(bad), "--format", "musique"]) == 1
