"""Tokenization, sentence segmentation, an add-k n-gram reference language
model, and perplexity scoring.

Tokens are maximal runs of alphanumeric characters plus apostrophes,
case-folded. A ``.``, ``!`` or ``?`` terminates a sentence unless it sits
between two alphanumeric characters (so ``3.14`` and ``U.S.A`` do not split).

The reference model is the toolkit's stand-in for a large pretrained scorer:
any external model can feed the same pipelines by writing ScoredTokens lines
(one essay per line: essay_id, tokens, logprobs, sentence_breaks, natural
log throughout). That file format is the interchange contract; bundled and
external scorers are interchangeable behind it.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, EmptyTextError, InvalidInputError
from .fileio import make_meta, read_json, read_jsonl, write_json, write_jsonl

BOS_ID = 0
UNK_ID = 1
MIN_TOKEN_COUNT = 2  # training tokens seen fewer times map to UNK

_TOKEN_RE = re.compile(r"(?:[^\W_]|')+", re.UNICODE)
_TERMINATORS = frozenset(".!?")


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple
    sentence_breaks: tuple


@dataclass(frozen=True)
class ScoredTokens:
    essay_id: str
    tokens: tuple
    logprobs: tuple
    sentence_breaks: tuple


def _token_spans(text):
    """Token (casefolded, start, end) triples; runs without any alphanumeric
    character (bare apostrophes) are dropped."""
    spans = []
    for m in _TOKEN_RE.finditer(text):
        tok = m.group(0)
        if tok.strip("'"):
            spans.append((tok.casefold(), m.start(), m.end()))
    return spans


def _terminator_positions(text):
    pos = []
    n = len(text)
    for i, ch in enumerate(text):
        if ch in _TERMINATORS:
            prev_alnum = i > 0 and text[i - 1].isalnum()
            next_alnum = i + 1 < n and text[i + 1].isalnum()
            if not (prev_alnum and next_alnum):
                pos.append(i)
    return pos


def tokenize_with_spans(text):
    """TokenStream plus per-token character spans into the original text."""
    if not text or not text.strip():
        raise EmptyTextError("text has no tokens")
    spans = _token_spans(text)
    if not spans:
        raise EmptyTextError("text has no tokens after normalization")
    terms = _terminator_positions(text)
    tokens = tuple(t for t, _, _ in spans)
    breaks = [0]
    ti = 0  # next terminator to consume
    pending = False
    for idx, (_, start, _) in enumerate(spans):
        while ti < len(terms) and terms[ti] < start:
            if idx > 0:  # a terminator before any token is ignored
                pending = True
            ti += 1
        if pending:
            breaks.append(idx)
            pending = False
    return TokenStream(tokens=tokens, sentence_breaks=tuple(breaks)), tuple((s, e) for _, s, e in spans)


def tokenize_and_segment(text):
    stream, _ = tokenize_with_spans(text)
    return stream


def split_sentences(text):
    """Raw sentence substrings (terminator included), skipping token-free spans.

    Used to slice real text into essay-sized windows; boundaries agree with
    tokenize_and_segment.
    """
    spans = _token_spans(text)
    if not spans:
        return []
    terms = _terminator_positions(text)
    sentences = []
    seg_start = 0
    si = 0  # token cursor
    for pos in terms:
        has_token = False
        while si < len(spans) and spans[si][1] < pos:
            has_token = True
            si += 1
        if has_token:
            sentences.append(text[seg_start : pos + 1].strip())
        seg_start = pos + 1
    tail = text[seg_start:].strip()
    if tail and _token_spans(tail):
        sentences.append(tail)
    return sentences


def sentence_slices(stream):
    """Half-open (start, end) token ranges, one per sentence."""
    breaks = list(stream.sentence_breaks) + [len(stream.tokens)]
    return [(breaks[i], breaks[i + 1]) for i in range(len(breaks) - 1)]


class NGramModel:
    """Word-level add-k n-gram model with backoff to shorter contexts.

    p(t | ctx) = (count(ctx, t) + k) / (count(ctx) + k * |V|), evaluated at
    the longest context suffix that was observed in training (down to the
    unigram, whose empty context is always observed). |V| counts every
    predictable token including UNK; BOS is context-only. Per-sentence BOS
    padding both in training and scoring.
    """

    def __init__(self, order, k, vocab, counts, trained_on=""):
        if order < 1:
            raise InvalidInputError(f"order must be >= 1, got {order}")
        if k <= 0:
            raise InvalidInputError(f"smoothing constant must be > 0, got {k}")
        self.order = order
        self.k = k
        self.vocab = vocab  # token -> id (ids start at 2)
        self.counts = counts  # counts[ctx_len][ctx_tuple][token_id]
        self.totals = [
            {ctx: sum(d.values()) for ctx, d in level.items()} for level in counts
        ]
        self.trained_on = trained_on
        self.id_to_token = {i: t for t, i in vocab.items()}
        self._sample_cache = {}

    @property
    def vocab_size(self):
        # predictable tokens: kept vocabulary plus UNK
        return len(self.vocab) + 1

    @property
    def descriptor(self):
        return f"ngram(order={self.order}, k={self.k}, trained_on={self.trained_on})"

    def token_id(self, token):
        return self.vocab.get(token, UNK_ID)

    def prob(self, context_ids, token_id):
        """context_ids: the (order-1)-length BOS-padded context, oldest first."""
        k, v = self.k, self.vocab_size
        for ctx_len in range(self.order - 1, -1, -1):
            ctx = tuple(context_ids[len(context_ids) - ctx_len :])
            total = self.totals[ctx_len].get(ctx)
            if total:
                c = self.counts[ctx_len][ctx].get(token_id, 0)
                return (c + k) / (total + k * v)
        raise InvalidInputError("model has no unigram counts (empty training corpus)")

    def logprob(self, context_ids, token_id):
        return math.log(self.prob(context_ids, token_id))

    def score_stream(self, stream):
        """Natural-log probability per token, context reset to BOS at each sentence."""
        logprobs = []
        pad = self.order - 1
        for start, end in sentence_slices(stream):
            ids = [BOS_ID] * pad + [self.token_id(t) for t in stream.tokens[start:end]]
            for j in range(pad, len(ids)):
                logprobs.append(self.logprob(ids[j - pad : j] if pad else (), ids[j]))
        return logprobs

    def sampling_weights(self, context_ids):
        """(token strings, probability array) over the kept vocabulary for the
        longest observed context suffix. BOS and UNK are never emitted; the
        distribution is the model's, renormalized over real tokens."""
        if not self.vocab:
            raise InvalidInputError("vocabulary is empty after the min-count filter; cannot sample")
        k = self.k
        for ctx_len in range(self.order - 1, -1, -1):
            ctx = tuple(context_ids[len(context_ids) - ctx_len :])
            total = self.totals[ctx_len].get(ctx)
            if total:
                key = (ctx_len, ctx)
                cached = self._sample_cache.get(key)
                if cached is None:
                    w = np.full(len(self.sample_tokens), k, dtype=np.float64)
                    for tid, c in self.counts[ctx_len][ctx].items():
                        if tid >= 2:
                            w[tid - 2] += c
                    cached = w / w.sum()
                    self._sample_cache[key] = cached
                return self.sample_tokens, cached
        raise InvalidInputError("model has no unigram counts (empty training corpus)")

    @property
    def sample_tokens(self):
        """Kept vocabulary tokens in id order (position i holds id i + 2)."""
        toks = getattr(self, "_sample_tokens_cached", None)
        if toks is None:
            toks = [self.id_to_token[i] for i in sorted(self.id_to_token)]
            self._sample_tokens_cached = toks
        return toks

    def text_perplexity(self, text):
        stream = tokenize_and_segment(text)
        lp = self.score_stream(stream)
        return math.exp(-sum(lp) / len(lp))


def train_lm(corpus, order, k, trained_on=""):
    """Fit the n-gram model on every essay in the corpus.

    Tokens seen fewer than twice in training map to UNK; contexts are padded
    with BOS per sentence at every order from unigram up to ``order``.
    """
    if not corpus:
        raise InvalidInputError("training corpus is empty")
    streams = [tokenize_and_segment(e.text) for e in corpus]
    freq = {}
    for stream in streams:
        for tok in stream.tokens:
            freq[tok] = freq.get(tok, 0) + 1
    vocab = {t: i + 2 for i, t in enumerate(sorted(t for t, c in freq.items() if c >= MIN_TOKEN_COUNT))}
    counts = [dict() for _ in range(order)]
    pad = order - 1
    for stream in streams:
        for start, end in sentence_slices(stream):
            ids = [BOS_ID] * pad + [vocab.get(t, UNK_ID) for t in stream.tokens[start:end]]
            for j in range(pad, len(ids)):
                tid = ids[j]
                for ctx_len in range(order):
                    ctx = tuple(ids[j - ctx_len : j])
                    bucket = counts[ctx_len].setdefault(ctx, {})
                    bucket[tid] = bucket.get(tid, 0) + 1
    return NGramModel(order=order, k=k, vocab=vocab, counts=counts, trained_on=trained_on)


def train_lm_from_text(text, order, k, trained_on=""):
    class _Blob:
        def __init__(self, t):
            self.text = t

    return train_lm([_Blob(text)], order, k, trained_on=trained_on)


def score_essay(model, essay):
    stream = tokenize_and_segment(essay.text)
    logprobs = model.score_stream(stream)
    return ScoredTokens(
        essay_id=essay.id,
        tokens=stream.tokens,
        logprobs=tuple(logprobs),
        sentence_breaks=stream.sentence_breaks,
    )


def perplexity(scored, span=None):
    """exp(-mean natural-log probability) over ``span`` (half-open token range)."""
    n = len(scored.logprobs)
    start, end = span if span is not None else (0, n)
    if not (0 <= start < end <= n):
        raise InvalidInputError(f"empty or out-of-bounds span ({start}, {end}) for {n} tokens")
    window = scored.logprobs[start:end]
    return math.exp(-sum(window) / len(window))


def sentence_perplexities(scored):
    stream = TokenStream(tokens=scored.tokens, sentence_breaks=scored.sentence_breaks)
    return [perplexity(scored, span) for span in sentence_slices(stream)]


# ---------------------------------------------------------------------------
# serialization

def save_model(path, model, meta=None):
    obj = {
        "meta": meta or make_meta(),
        "order": model.order,
        "k": model.k,
        "trained_on": model.trained_on,
        "vocab": model.vocab,
        "counts": {
            str(ctx_len): {
                ",".join(map(str, ctx)): {str(t): c for t, c in bucket.items()}
                for ctx, bucket in level.items()
            }
            for ctx_len, level in enumerate(model.counts)
        },
    }
    write_json(path, obj)


def load_model(path):
    obj = read_json(path)
    try:
        order = int(obj["order"])
        counts = [dict() for _ in range(order)]
        for ctx_len_s, level in obj["counts"].items():
            ctx_len = int(ctx_len_s)
            for ctx_s, bucket in level.items():
                ctx = tuple(int(x) for x in ctx_s.split(",")) if ctx_s else ()
                counts[ctx_len][ctx] = {int(t): c for t, c in bucket.items()}
        return NGramModel(
            order=order,
            k=float(obj["k"]),
            vocab={t: int(i) for t, i in obj["vocab"].items()},
            counts=counts,
            trained_on=obj.get("trained_on", ""),
        )
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{path}: not a valid n-gram model file ({exc})") from exc


def validate_scored_record(obj, where="record"):
    """Schema check for one ScoredTokens line; raises DataFormatError."""
    if not isinstance(obj, dict):
        raise DataFormatError(f"{where}: expected an object")
    for field in ("essay_id", "tokens", "logprobs", "sentence_breaks"):
        if field not in obj:
            raise DataFormatError(f"{where}: missing field \"{field}\"")
    tokens, logprobs, breaks = obj["tokens"], obj["logprobs"], obj["sentence_breaks"]
    if not tokens:
        raise DataFormatError(f"{where}: empty token list")
    if len(logprobs) != len(tokens):
        raise DataFormatError(f"{where}: {len(logprobs)} logprobs for {len(tokens)} tokens")
    for lp in logprobs:
        if not isinstance(lp, (int, float)) or not math.isfinite(lp) or lp > 1e-12:
            raise DataFormatError(f"{where}: logprobs must be finite and <= 0, got {lp!r}")
    if not breaks or breaks[0] != 0:
        raise DataFormatError(f"{where}: sentence_breaks must start at 0")
    for a, b in zip(breaks, breaks[1:]):
        if b <= a:
            raise DataFormatError(f"{where}: sentence_breaks must be strictly increasing")
    if breaks[-1] >= len(tokens):
        raise DataFormatError(f"{where}: sentence break {breaks[-1]} out of range")
    return ScoredTokens(
        essay_id=str(obj["essay_id"]),
        tokens=tuple(tokens),
        logprobs=tuple(float(x) for x in logprobs),
        sentence_breaks=tuple(int(x) for x in breaks),
    )


def save_scored(path, scored_list, meta=None):
    write_jsonl(
        path,
        (
            {
                "essay_id": s.essay_id,
                "tokens": list(s.tokens),
                "logprobs": list(s.logprobs),
                "sentence_breaks": list(s.sentence_breaks),
            }
            for s in scored_list
        ),
        meta=meta,
    )


def load_scored(path):
    records, _ = read_jsonl(path)
    out = []
    seen = set()
    for lineno, obj in records:
        scored = validate_scored_record(obj, where=f"{path}: line {lineno}")
        if scored.essay_id in seen:
            raise DataFormatError(f"{path}: line {lineno}: duplicate essay_id \"{scored.essay_id}\"")
        seen.add(scored.essay_id)
        out.append(scored)
    return out
