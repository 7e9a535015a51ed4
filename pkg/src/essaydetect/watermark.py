"""Green-list watermarking: keyed sampling bias at generation time and a
one-proportion z-test at detection time.

A token is green given its predecessor when
``splitmix64(key XOR (prev_id * 0x9E3779B97F4A7C15) XOR token_id) < gamma * 2**64``
in unsigned 64-bit arithmetic. Token ids are stable FNV-1a hashes of the
token strings, so detection needs no model or vocabulary; the first token
of a text is tested against context id 0, which makes the tested count
equal the token count exactly.

Generation adds ``delta`` to green tokens' log-probabilities before
renormalizing, then samples by inverse CDF with one uniform draw per token
(plus one draw per sentence for its length), so a fixed seed reproduces the
token sequence bit for bit and ``delta = 0`` matches plain sampling.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .fileio import write_jsonl
from .reflm import BOS_ID, TokenStream, sentence_slices
from .rng import GOLDEN, MASK64, SplitMix64, splitmix64, token_id64

MIN_DETECT_TOKENS = 16


@dataclass(frozen=True)
class WatermarkConfig:
    key: int
    gamma: float = 0.5
    delta: float = 2.0
    z_threshold: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise InvalidInputError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.delta < 0.0:
            raise InvalidInputError(f"delta must be >= 0, got {self.delta}")


@dataclass(frozen=True)
class WatermarkVerdict:
    tokens_tested: int
    green_count: int
    z: float
    flagged: bool


def green_threshold(gamma):
    return int(gamma * 2.0**64)


def is_green(prev_token_id, token_id, config):
    x = (config.key ^ ((prev_token_id * GOLDEN) & MASK64) ^ token_id) & MASK64
    return splitmix64(x) < green_threshold(config.gamma)


def _splitmix64_arr(x):
    with np.errstate(over="ignore"):
        z = x + np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def _green_mask(prev_id, ids_u64, config):
    """Vectorized is_green for one context over an id array."""
    with np.errstate(over="ignore"):
        x = np.uint64(config.key & MASK64) ^ np.uint64((prev_id * GOLDEN) & MASK64) ^ ids_u64
        return _splitmix64_arr(x) < np.uint64(green_threshold(config.gamma))


def _vocab_hash_ids(model):
    cached = getattr(model, "_watermark_hash_ids", None)
    if cached is None:
        cached = np.array([token_id64(t) for t in model.sample_tokens], dtype=np.uint64)
        model._watermark_hash_ids = cached
    return cached


def _generate(model, length, seed, sentence_tokens, config):
    """Shared sampler. Draw order per splitmix64 stream: one randint for each
    sentence length, then one uniform per token."""
    if length < 1:
        raise InvalidInputError(f"length must be >= 1, got {length}")
    lo, hi = sentence_tokens
    rng = SplitMix64(seed)
    biased = config is not None and config.delta > 0.0
    ids_u64 = _vocab_hash_ids(model) if biased else None
    e_delta = math.exp(config.delta) if biased else 1.0
    pad = model.order - 1
    tokens = []
    breaks = []
    prev_hash = 0  # BOS context id for the very first token; flows across sentences
    while len(tokens) < length:
        breaks.append(len(tokens))
        want = min(rng.randint(lo, hi), length - len(tokens))
        ctx = [BOS_ID] * pad
        for _ in range(want):
            toks, p = model.sampling_weights(ctx)
            if biased:
                mask = _green_mask(prev_hash, ids_u64, config)
                w = p * np.where(mask, e_delta, 1.0)
                p = w / w.sum()
            cdf = np.cumsum(p)
            u = rng.random()
            i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
            if i >= len(toks):
                i = len(toks) - 1
            tok = toks[i]
            tokens.append(tok)
            prev_hash = token_id64(tok)
            if pad:
                ctx = (ctx + [model.token_id(tok)])[-pad:]
    return TokenStream(tokens=tuple(tokens), sentence_breaks=tuple(breaks))


def sample_stream(model, length, seed, sentence_tokens=(5, 20)):
    """Plain (unwatermarked) sampling from the model."""
    return _generate(model, length, seed, sentence_tokens, config=None)


def generate_watermarked(model, config, length, seed, sentence_tokens=(5, 20)):
    return _generate(model, length, seed, sentence_tokens, config=config)


def render_text(stream):
    """Token stream back to plain text: space-joined sentences ending in periods.
    Round-trips through tokenize_and_segment to the same tokens and breaks."""
    parts = []
    for start, end in sentence_slices(stream):
        parts.append(" ".join(stream.tokens[start:end]) + ".")
    return " ".join(parts)


def z_score(tokens_tested, green_count, gamma):
    expected = gamma * tokens_tested
    return (green_count - expected) / math.sqrt(tokens_tested * gamma * (1.0 - gamma))


def detect_watermark(tokens, config):
    """Count green tokens over the flat stream and score the one-proportion z.

    Accepts a TokenStream or a sequence of token strings; texts shorter than
    16 tokens are rejected as indeterminate.
    """
    if isinstance(tokens, TokenStream):
        tokens = tokens.tokens
    tokens = tuple(tokens)
    if len(tokens) < MIN_DETECT_TOKENS:
        raise InvalidInputError(
            f"indeterminate verdict: need >= {MIN_DETECT_TOKENS} tokens, got {len(tokens)}"
        )
    ids = np.array([token_id64(t) for t in tokens], dtype=np.uint64)
    prev = np.concatenate(([np.uint64(0)], ids[:-1]))
    with np.errstate(over="ignore"):
        x = np.uint64(config.key & MASK64) ^ (prev * np.uint64(GOLDEN)) ^ ids
    green = _splitmix64_arr(x) < np.uint64(green_threshold(config.gamma))
    tested = len(tokens)
    g = int(green.sum())
    z = z_score(tested, g, config.gamma)
    return WatermarkVerdict(tokens_tested=tested, green_count=g, z=z, flagged=z >= config.z_threshold)


def save_verdicts(path, items, meta=None):
    """items: iterable of (essay_id, WatermarkVerdict)."""
    write_jsonl(
        path,
        (
            {
                "essay_id": eid,
                "tokens_tested": v.tokens_tested,
                "green_count": v.green_count,
                "z": v.z,
                "flagged": v.flagged,
            }
            for eid, v in items
        ),
        meta=meta,
    )
