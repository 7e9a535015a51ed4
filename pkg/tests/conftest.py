import pytest

from essaydetect.corpus import Essay
from essaydetect.rng import SplitMix64

WORDS = (
    "the quick brown fox jumps over a lazy dog while rain falls on green hills "
    "and ships sail past the harbor toward distant islands full of birds"
).split()


def make_essay(eid, text, prompt="p1", source="gen"):
    return Essay(id=eid, prompt_id=prompt, source=source, text=text)


def random_text(rng: SplitMix64, n_sentences=6, words_per_sentence=(4, 12), vocab=WORDS):
    sentences = []
    for _ in range(n_sentences):
        n = rng.randint(*words_per_sentence)
        sentences.append(" ".join(rng.choice(vocab) for _ in range(n)) + ".")
    return " ".join(sentences)


def random_corpus(rng: SplitMix64, sources, per_source, prompts=("p1", "p2")):
    essays = []
    for src in sources:
        for i in range(per_source):
            essays.append(
                Essay(
                    id=f"{src}-{i}",
                    prompt_id=prompts[i % len(prompts)],
                    source=src,
                    text=random_text(rng),
                )
            )
    return essays


@pytest.fixture(scope="session")
def ref_model():
    from essaydetect.synth import reference_model

    return reference_model()
