import json

import pytest

from essaydetect.corpus import (
    Essay,
    SplitCounts,
    corpus_stats,
    load_corpus,
    load_split,
    make_split,
    save_corpus,
    save_split,
)
from essaydetect.errors import DataFormatError, InsufficientDataError, InvalidInputError
from essaydetect.rng import SplitMix64

from conftest import random_corpus


def write_lines(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")


def rec(eid, text="some words here.", prompt="p1", source="human"):
    return {"id": eid, "prompt_id": prompt, "source": source, "text": text}


def test_load_three_line_fixture_in_order(tmp_path):
    f = tmp_path / "c.jsonl"
    write_lines(f, [rec("e1"), rec("e2"), rec("e3")])
    essays = load_corpus(f)
    assert [e.id for e in essays] == ["e1", "e2", "e3"]
    assert essays[0].text == "some words here."


def test_duplicate_id_rejected(tmp_path):
    f = tmp_path / "c.jsonl"
    write_lines(f, [rec("e1"), rec("e1")])
    with pytest.raises(DataFormatError, match='duplicate id "e1"'):
        load_corpus(f)


def test_whitespace_text_rejected(tmp_path):
    f = tmp_path / "c.jsonl"
    write_lines(f, [rec("e1", text="   ")])
    with pytest.raises(DataFormatError, match="empty text"):
        load_corpus(f)


def test_malformed_line_reports_line_number(tmp_path):
    f = tmp_path / "c.jsonl"
    f.write_text(json.dumps(rec("e1")) + "\nnot json at all\n")
    with pytest.raises(DataFormatError, match="line 2"):
        load_corpus(f)


def test_missing_field_reported(tmp_path):
    f = tmp_path / "c.jsonl"
    write_lines(f, [{"id": "e1", "text": "hi there."}])
    with pytest.raises(DataFormatError, match="missing field"):
        load_corpus(f)


def test_corpus_roundtrip_preserves_order_and_meta(tmp_path):
    essays = [Essay(f"e{i}", "p1", "m1", f"text number {i}.") for i in range(5)]
    f = tmp_path / "c.jsonl"
    save_corpus(f, essays, meta={"seed": 3, "version": "x"})
    assert load_corpus(f) == essays
    first = json.loads(f.read_text().splitlines()[0])
    assert first["_meta"]["seed"] == 3


def test_stats_paper_shaped_counts():
    essays = [
        Essay(f"m1-{i}", "p1" if i < 200 else "p2", "m1", "one two three. four five.")
        for i in range(400)
    ]
    stats = corpus_stats(essays)
    assert stats["m1"]["prompts"] == {"p1": 200, "p2": 200}
    assert stats["m1"]["count"] == 400


def test_stats_single_essay_and_conservation():
    one = [Essay("a", "p1", "m1", "hello world.")]
    assert corpus_stats(one)["m1"]["count"] == 1

    rng = SplitMix64(5)
    essays = random_corpus(rng, ["m1", "m2"], 7)
    stats = corpus_stats(essays)
    assert sum(row["count"] for row in stats.values()) == len(essays)


def paper_shaped_corpus(rng, sources=("m1", "m2")):
    # 200 humans + 400 essays per AI source, balanced across two prompts
    essays = random_corpus(rng, ["human"], 200)
    essays += random_corpus(rng, list(sources), 400)
    return essays


def test_make_split_paper_defaults():
    essays = paper_shaped_corpus(SplitMix64(11))
    plan = make_split(essays, SplitCounts(), seed=3)
    assert len(plan.universal_human_test) == 100
    for src, s in plan.per_source.items():
        assert len(s.test_ai) == 100
        assert len(s.train_ai) == 300
        assert len(s.train_human) == 100
    # at paper counts the shared human train pool is exactly the non-test humans
    human_ids = {e.id for e in essays if e.source == "human"}
    s = plan.per_source["m1"]
    assert set(s.train_human) == human_ids - set(plan.universal_human_test)


def test_make_split_insufficient_humans():
    rng = SplitMix64(2)
    essays = random_corpus(rng, ["human"], 50) + random_corpus(rng, ["m1"], 400)
    with pytest.raises(InsufficientDataError, match='"human"'):
        make_split(essays, SplitCounts(), seed=0)


def test_make_split_insufficient_ai_names_source():
    rng = SplitMix64(2)
    essays = random_corpus(rng, ["human"], 200) + random_corpus(rng, ["m9"], 100)
    with pytest.raises(InsufficientDataError, match='"m9"'):
        make_split(essays, SplitCounts(), seed=0)


def test_make_split_requires_balanced_test():
    rng = SplitMix64(2)
    with pytest.raises(InvalidInputError, match="balanced"):
        make_split(paper_shaped_corpus(rng), SplitCounts(100, 50, 300, 100), seed=0)


def test_make_split_deterministic_bytes(tmp_path):
    essays = paper_shaped_corpus(SplitMix64(4))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_split(a, make_split(essays, SplitCounts(), seed=77), meta={"m": 1})
    save_split(b, make_split(essays, SplitCounts(), seed=77), meta={"m": 1})
    assert a.read_bytes() == b.read_bytes()
    save_split(b, make_split(essays, SplitCounts(), seed=78), meta={"m": 1})
    assert a.read_bytes() != b.read_bytes()


def test_split_invariants_over_random_corpora():
    for trial in range(10):
        rng = SplitMix64(1000 + trial)
        n_src = 2 + rng.randbelow(3)
        sources = [f"m{i}" for i in range(n_src)]
        essays = random_corpus(rng, ["human"], 40) + random_corpus(rng, sources, 60)
        counts = SplitCounts(10, 10, 30, 16)
        plan = make_split(essays, counts, seed=rng.next_u64())
        universal = set(plan.universal_human_test)
        by_id = {e.id: e for e in essays}
        for src, s in plan.per_source.items():
            train = set(s.train_ai) | set(s.train_human)
            test = set(s.test_ai) | universal
            assert not train & test
            assert len(s.test_ai) == len(universal)
            assert all(by_id[i].source == src for i in s.train_ai)
            assert all(i in by_id for i in train | test)
            # stratification: per-prompt counts within 1 of even allocation
            for group in (s.test_ai, s.train_ai):
                per_prompt = {}
                for i in group:
                    per_prompt[by_id[i].prompt_id] = per_prompt.get(by_id[i].prompt_id, 0) + 1
                even = len(group) / 2
                assert all(abs(c - even) <= 1 for c in per_prompt.values())


def test_split_plan_roundtrip(tmp_path):
    essays = paper_shaped_corpus(SplitMix64(9))
    plan = make_split(essays, SplitCounts(), seed=5)
    f = tmp_path / "plan.json"
    save_split(f, plan)
    assert load_split(f) == plan
