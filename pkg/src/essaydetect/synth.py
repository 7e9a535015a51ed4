"""Deterministic synthetic corpora for desk-scale experiments.

Three generator "sources" are n-gram models of different orders, each
trained on a different bundled public-domain text (Austen, Melville,
Carroll excerpts); their essays are sampled token streams rendered back to
prose. The "human" essays are sliding windows of real sentences from a
fourth bundled anthology of public-domain passages that no generator ever
saw, so the human corpus is held out by construction.

Everything derives from one seed: per-essay sampling seeds come from
derive_seed(seed, "synth:<source>:<index>").
"""

from importlib import resources

from .corpus import Essay, HUMAN_SOURCE
from .errors import InsufficientDataError
from .reflm import split_sentences, train_lm_from_text
from .rng import SplitMix64, derive_seed
from .watermark import render_text, sample_stream

# (source name, n-gram order); each trains on the data file of the same name
GENERATORS = (("austen", 1), ("melville", 2), ("carroll", 3))
HUMAN_TEXT = "anthology"
BUNDLED = tuple(name for name, _ in GENERATORS) + (HUMAN_TEXT,)

DEFAULT_GEN_K = 0.005  # generator smoothing
DEFAULT_REF_ORDER = 2
DEFAULT_REF_K = 0.01


def bundled_text(name):
    return resources.files("essaydetect").joinpath(f"data/{name}.txt").read_text(encoding="utf-8")


def generator_models(k=DEFAULT_GEN_K):
    return {
        name: train_lm_from_text(bundled_text(name), order=order, k=k, trained_on=f"bundled:{name}")
        for name, order in GENERATORS
    }


def reference_model(order=DEFAULT_REF_ORDER, k=DEFAULT_REF_K):
    """The common scoring model: trained on all bundled texts together."""
    text = "\n\n".join(bundled_text(name) for name in BUNDLED)
    return train_lm_from_text(text, order=order, k=k, trained_on="bundled:all")


def human_essays(count, prompts=("p1", "p2"), window=8):
    """Overlapping windows of consecutive anthology sentences, first half of
    the windows on the first prompt."""
    sentences = split_sentences(bundled_text(HUMAN_TEXT))
    if len(sentences) < window + count - 1:
        raise InsufficientDataError(
            f"anthology has {len(sentences)} sentences, need {window + count - 1} for {count} essays"
        )
    stride = max(1, (len(sentences) - window) // max(count - 1, 1))
    essays = []
    half = (count + 1) // 2
    for i in range(count):
        start = min(i * stride, len(sentences) - window)
        text = " ".join(sentences[start : start + window])
        prompt = prompts[0] if i < half else prompts[min(1, len(prompts) - 1)]
        essays.append(Essay(id=f"human-{i:04d}", prompt_id=prompt, source=HUMAN_SOURCE, text=text))
    return essays


def build_corpus(
    seed,
    essays_per_source=200,
    prompts=("p1", "p2"),
    length_range=(90, 150),
    sentence_tokens=(5, 18),
    gen_k=DEFAULT_GEN_K,
):
    """The full synthetic corpus: one block of essays per generator plus the
    held-out human block. Deterministic for a fixed seed."""
    essays = list(human_essays(essays_per_source, prompts=prompts))
    models = generator_models(k=gen_k)
    for name, _order in GENERATORS:
        model = models[name]
        for i in range(essays_per_source):
            essay_rng = SplitMix64(derive_seed(seed, f"synth:{name}:{i}"))
            length = essay_rng.randint(*length_range)
            stream = sample_stream(
                model, length, seed=essay_rng.next_u64(), sentence_tokens=sentence_tokens
            )
            essays.append(
                Essay(
                    id=f"{name}-{i:04d}",
                    prompt_id=prompts[i % len(prompts)],
                    source=name,
                    text=render_text(stream),
                )
            )
    return essays
