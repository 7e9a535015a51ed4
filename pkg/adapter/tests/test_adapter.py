import json
import math
import subprocess
import sys

import pytest

from essaydetect_adapter import AdapterConfig, score_corpus, score_essays
from essaydetect_adapter.essayio import Essay, read_corpus, split_sentences


def write_corpus(path, essays):
    with open(path, "w", encoding="utf-8") as fh:
        for e in essays:
            fh.write(json.dumps({"id": e.id, "prompt_id": e.prompt_id, "source": e.source, "text": e.text}) + "\n")


def three_essays():
    return [
        Essay("e1", "p1", "human", "the cat sat on a mat. the dog ran far away."),
        Essay("e2", "p1", "gen", "rivers flow past green hills. birds sing songs every year!"),
        Essay("e3", "p2", "human", "children write essays about cities. science and society?"),
    ]


def test_config_validation():
    with pytest.raises(ValueError, match="batch size"):
        AdapterConfig(model="x", batch_size=0)
    with pytest.raises(ValueError, match="context_mode"):
        AdapterConfig(model="x", context_mode="paragraph")


def test_model_load_failure_is_reported():
    with pytest.raises(RuntimeError, match="failed to load model"):
        score_essays(three_essays(), AdapterConfig(model="/nonexistent/model/path"))


def test_three_essay_fixture_scores_in_order(tiny_model_dir, tmp_path):
    corpus = tmp_path / "c.jsonl"
    out = tmp_path / "scored.jsonl"
    write_corpus(corpus, three_essays())
    meta = score_corpus(corpus, out, AdapterConfig(model=tiny_model_dir))
    lines = [json.loads(l) for l in out.read_text().splitlines()]
    assert set(lines[0]) == {"_meta"}
    records = lines[1:]
    assert [r["essay_id"] for r in records] == ["e1", "e2", "e3"]
    for rec in records:
        assert len(rec["logprobs"]) == len(rec["tokens"]) > 0
        assert all(math.isfinite(lp) and lp <= 0 for lp in rec["logprobs"])
        assert rec["sentence_breaks"][0] == 0
        assert len(rec["sentence_breaks"]) == 2  # two sentences each
    assert meta["total_tokens"] == sum(len(r["tokens"]) for r in records)
    assert meta["chunked_essays"] == []


def test_sentence_breaks_fall_on_sentence_starts(tiny_model_dir):
    records, _ = score_essays(
        [Essay("e", "p", "s", "the cat sat. the dog ran away. birds sing songs.")],
        AdapterConfig(model=tiny_model_dir),
    )
    rec = records[0]
    # the token right at each break is the first token of a raw sentence
    sentences = split_sentences("the cat sat. the dog ran away. birds sing songs.")
    firsts = [s.split()[0] for s in sentences]
    for brk, word in zip(rec["sentence_breaks"], firsts):
        assert rec["tokens"][brk] == word


def test_long_essay_chunked_token_count_preserved(tiny_model_dir):
    words = ("the cat sat on a mat and the dog ran far away " * 12).strip()
    essay = Essay("long", "p", "s", words + ".")
    records, meta = score_essays([essay], AdapterConfig(model=tiny_model_dir))
    rec = records[0]
    assert meta["chunked_essays"] == ["long"]
    assert len(rec["tokens"]) == len(words.split()) + 1  # final period is its own token
    assert len(rec["logprobs"]) == len(rec["tokens"])


def test_batch_size_does_not_change_scores(tiny_model_dir):
    essays = three_essays()
    one, _ = score_essays(essays, AdapterConfig(model=tiny_model_dir, batch_size=1))
    four, _ = score_essays(essays, AdapterConfig(model=tiny_model_dir, batch_size=4))
    for a, b in zip(one, four):
        assert a["tokens"] == b["tokens"]
        assert a["logprobs"] == pytest.approx(b["logprobs"], abs=1e-4)


def test_document_mode_differs_after_first_sentence(tiny_model_dir):
    essays = [Essay("e", "p", "s", "the cat sat. the dog ran away.")]
    sent, _ = score_essays(essays, AdapterConfig(model=tiny_model_dir, context_mode="sentence"))
    doc, _ = score_essays(essays, AdapterConfig(model=tiny_model_dir, context_mode="document"))
    assert sent[0]["tokens"] == doc[0]["tokens"]
    assert sent[0]["sentence_breaks"] == doc[0]["sentence_breaks"]
    brk = sent[0]["sentence_breaks"][1]
    assert sent[0]["logprobs"][:brk] == pytest.approx(doc[0]["logprobs"][:brk], abs=1e-5)
    assert sent[0]["logprobs"][brk] != pytest.approx(doc[0]["logprobs"][brk], abs=1e-6)


def test_segmentation_mirrors_toolkit_rule():
    from essaydetect.reflm import split_sentences as toolkit_split

    samples = [
        "Dogs bark. Cats don't.",
        "pi is 3.14 here. next one!",
        "no terminator at all",
        "so it goes... and on? yes!",
    ]
    for text in samples:
        assert split_sentences(text) == toolkit_split(text)


def test_corpus_reader_rejects_bad_lines(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "a", "prompt_id": "p", "source": "s", "text": "x."}\n{"id": "a"}\n')
    with pytest.raises(ValueError, match="line 2"):
        read_corpus(bad)


def test_cli_roundtrip(tiny_model_dir, tmp_path):
    from essaydetect_adapter.cli import main

    corpus = tmp_path / "c.jsonl"
    write_corpus(corpus, three_essays())
    out = tmp_path / "scored.jsonl"
    assert main(["--model", tiny_model_dir, "--input", str(corpus), "--out", str(out)]) == 0
    assert out.exists()
    assert main(["--model", tiny_model_dir, "--input", str(tmp_path / "missing.jsonl"), "--out", str(out)]) == 1


def test_acceptance_adapter_roundtrip(tiny_model_dir, tmp_path):
    """ScoredTokens from the adapter validate against the toolkit's schema
    checker and flow through `features` and `train-detector` untouched."""
    fixture = three_essays()
    corpus3 = tmp_path / "three.jsonl"
    write_corpus(corpus3, fixture)
    scored3 = tmp_path / "three_scored.jsonl"
    score_corpus(corpus3, scored3, AdapterConfig(model=tiny_model_dir))

    from essaydetect.reflm import load_scored

    checked = load_scored(scored3)  # the primary schema checker
    assert [s.essay_id for s in checked] == ["e1", "e2", "e3"]

    # a slightly larger labeled corpus so the detector has folds to work with
    texts = [
        "the cat sat on a mat. the dog ran far away. birds sing songs.",
        "rivers flow past green hills. children write essays. science and society.",
        "the dog ran away. a pale sky. the cat sat on the mat every year.",
        "birds sing songs about cities. rivers flow far. children write essays.",
    ]
    essays = []
    for i, t in enumerate(texts):
        essays.append(Essay(f"h{i}", "p1", "human", t))
        essays.append(Essay(f"g{i}", "p1", "gen", t.replace("the", "a")))
    corpus8 = tmp_path / "eight.jsonl"
    write_corpus(corpus8, essays)
    scored8 = tmp_path / "eight_scored.jsonl"
    score_corpus(corpus8, scored8, AdapterConfig(model=tiny_model_dir))

    def toolkit(*argv):
        proc = subprocess.run(
            [sys.executable, "-m", "essaydetect.cli", *argv],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        return proc.stdout

    features = tmp_path / "features.csv"
    toolkit("features", "--scored", str(scored8), "--corpus", str(corpus8), "--out", str(features))
    detector = tmp_path / "detector.json"
    toolkit("train-detector", "--features", str(features), "--folds", "2",
            "--grid", "rounds=10,depth=2,lr=0.1", "--out", str(detector))
    assert detector.exists()
    print("\n[criterion 9] PASS: adapter output validates against the toolkit schema checker "
          "and flows through features -> train-detector")
