"""Essay corpora: ingestion, validation, summary statistics, and seeded splits.

An essay corpus is a line-delimited JSON file, one flat object per line with
fields ``id``, ``prompt_id``, ``source``, ``text``. The source label
``"human"`` is reserved for human-written essays; any other label names a
generator.

Split protocol: a single universal human test set is drawn once and paired
with a per-generator balanced AI test set; the remaining essays form each
generator's training set, with one shared human training pool serving every
generator's detector.
"""

from dataclasses import dataclass

from .errors import DataFormatError, EmptyTextError, InsufficientDataError, InvalidInputError
from .fileio import make_meta, read_json, read_jsonl, write_json, write_jsonl
from .reflm import tokenize_and_segment
from .rng import SplitMix64

HUMAN_SOURCE = "human"

_ESSAY_FIELDS = ("id", "prompt_id", "source", "text")


@dataclass(frozen=True)
class Essay:
    id: str
    prompt_id: str
    source: str
    text: str


@dataclass(frozen=True)
class SplitCounts:
    """(n_human_test, n_ai_test, n_ai_train, n_human_train); defaults follow the
    200-human / 400-per-generator corpus design."""

    n_human_test: int = 100
    n_ai_test: int = 100
    n_ai_train: int = 300
    n_human_train: int = 100


@dataclass(frozen=True)
class SourceSplit:
    train_ai: tuple
    test_ai: tuple
    train_human: tuple


@dataclass(frozen=True)
class SplitPlan:
    universal_human_test: tuple
    per_source: dict
    counts: SplitCounts


def load_corpus(path):
    """Read a corpus file, enforcing unique ids and non-empty text/source."""
    records, _ = read_jsonl(path)
    essays = []
    seen = set()
    for lineno, obj in records:
        if not isinstance(obj, dict):
            raise DataFormatError(f"{path}: line {lineno}: expected an object")
        missing = [f for f in _ESSAY_FIELDS if f not in obj]
        if missing:
            raise DataFormatError(f"{path}: line {lineno}: missing field(s) {', '.join(missing)}")
        essay = Essay(
            id=str(obj["id"]),
            prompt_id=str(obj["prompt_id"]),
            source=str(obj["source"]),
            text=str(obj["text"]),
        )
        if essay.id in seen:
            raise DataFormatError(f"{path}: line {lineno}: duplicate id \"{essay.id}\"")
        seen.add(essay.id)
        if not essay.text.strip():
            raise DataFormatError(f"{path}: line {lineno}: empty text for id \"{essay.id}\"")
        if not essay.source:
            raise DataFormatError(f"{path}: line {lineno}: empty source for id \"{essay.id}\"")
        essays.append(essay)
    return essays


def save_corpus(path, essays, meta=None):
    write_jsonl(
        path,
        ({"id": e.id, "prompt_id": e.prompt_id, "source": e.source, "text": e.text} for e in essays),
        meta=meta,
    )


def corpus_stats(essays):
    """Per source x prompt counts plus token/sentence means.

    Returns ``{source: {"prompts": {prompt: count}, "count": n,
    "mean_tokens": t, "mean_sentences": s}}``; counts sum to the corpus size.
    """
    if not essays:
        raise InvalidInputError("corpus is empty")
    stats = {}
    for e in essays:
        row = stats.setdefault(e.source, {"prompts": {}, "count": 0, "_tok": 0, "_sen": 0})
        row["prompts"][e.prompt_id] = row["prompts"].get(e.prompt_id, 0) + 1
        row["count"] += 1
        try:
            stream = tokenize_and_segment(e.text)
            row["_tok"] += len(stream.tokens)
            row["_sen"] += len(stream.sentence_breaks)
        except EmptyTextError:
            pass
    for row in stats.values():
        n = row["count"]
        row["mean_tokens"] = row.pop("_tok") / n
        row["mean_sentences"] = row.pop("_sen") / n
    return stats


def _by_prompt(essays):
    groups = {}
    for e in essays:
        groups.setdefault(e.prompt_id, []).append(e.id)
    return groups


def _stratified_draw(groups, total, rng, what):
    """Draw ``total`` ids evenly across prompts (round-robin remainder over
    sorted prompt ids); within a prompt the pool is shuffled in corpus order."""
    prompts = sorted(groups)
    base, rem = divmod(total, len(prompts))
    chosen = []
    for i, p in enumerate(prompts):
        quota = base + (1 if i < rem else 0)
        pool = list(groups[p])
        if quota > len(pool):
            raise InsufficientDataError(
                f"{what}: prompt \"{p}\" has {len(pool)} essays, need {quota} (short by {quota - len(pool)})"
            )
        rng.shuffle(pool)
        chosen.extend(pool[:quota])
    return chosen


def make_split(essays, counts=SplitCounts(), seed=0):
    """Build a SplitPlan. Deterministic for fixed (corpus, counts, seed).

    Draw order from one splitmix64 stream: (1) universal human test,
    (2) shared human train from the remaining humans, (3) per source in
    sorted order, AI test then AI train. Every draw is stratified by prompt.
    """
    if counts.n_ai_test != counts.n_human_test:
        raise InvalidInputError(
            f"balanced test requires n_ai_test == n_human_test, got {counts.n_ai_test} != {counts.n_human_test}"
        )
    humans = [e for e in essays if e.source == HUMAN_SOURCE]
    ai_by_source = {}
    for e in essays:
        if e.source != HUMAN_SOURCE:
            ai_by_source.setdefault(e.source, []).append(e)
    need_h = counts.n_human_test + counts.n_human_train
    if len(humans) < need_h:
        raise InsufficientDataError(
            f"source \"human\": has {len(humans)} essays, need {need_h} (short by {need_h - len(humans)})"
        )
    need_ai = counts.n_ai_test + counts.n_ai_train
    for src in sorted(ai_by_source):
        n = len(ai_by_source[src])
        if n < need_ai:
            raise InsufficientDataError(
                f"source \"{src}\": has {n} essays, need {need_ai} (short by {need_ai - n})"
            )
    if not ai_by_source:
        raise InsufficientDataError("corpus has no AI sources")

    rng = SplitMix64(seed)
    h_groups = _by_prompt(humans)
    test_h = _stratified_draw(h_groups, counts.n_human_test, rng, "human test")
    test_h_set = set(test_h)
    rest_groups = {p: [i for i in ids if i not in test_h_set] for p, ids in h_groups.items()}
    train_h = _stratified_draw(rest_groups, counts.n_human_train, rng, "human train")

    per_source = {}
    for src in sorted(ai_by_source):
        groups = _by_prompt(ai_by_source[src])
        test_ai = _stratified_draw(groups, counts.n_ai_test, rng, f"{src} test")
        taken = set(test_ai)
        rest = {p: [i for i in ids if i not in taken] for p, ids in groups.items()}
        train_ai = _stratified_draw(rest, counts.n_ai_train, rng, f"{src} train")
        per_source[src] = SourceSplit(
            train_ai=tuple(sorted(train_ai)),
            test_ai=tuple(sorted(test_ai)),
            train_human=tuple(sorted(train_h)),
        )
    return SplitPlan(
        universal_human_test=tuple(sorted(test_h)),
        per_source=per_source,
        counts=counts,
    )


def save_split(path, plan, meta=None):
    obj = {
        "meta": meta or make_meta(),
        "counts": {
            "n_human_test": plan.counts.n_human_test,
            "n_ai_test": plan.counts.n_ai_test,
            "n_ai_train": plan.counts.n_ai_train,
            "n_human_train": plan.counts.n_human_train,
        },
        "universal_human_test": list(plan.universal_human_test),
        "per_source": {
            src: {
                "train_ai": list(s.train_ai),
                "test_ai": list(s.test_ai),
                "train_human": list(s.train_human),
            }
            for src, s in plan.per_source.items()
        },
    }
    write_json(path, obj)


def load_split(path):
    obj = read_json(path)
    try:
        counts = SplitCounts(**obj["counts"])
        per_source = {
            src: SourceSplit(
                train_ai=tuple(s["train_ai"]),
                test_ai=tuple(s["test_ai"]),
                train_human=tuple(s["train_human"]),
            )
            for src, s in obj["per_source"].items()
        }
        return SplitPlan(
            universal_human_test=tuple(obj["universal_human_test"]),
            per_source=per_source,
            counts=counts,
        )
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"{path}: not a valid split plan ({exc})") from exc
