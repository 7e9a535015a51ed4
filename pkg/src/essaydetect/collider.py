"""Prompt-pool overlap scanning.

For a fixed prompt, a pool of machine-generated essays is indexed by hashed
k-gram fingerprints. A submission is scanned in two stages: pool essays
sharing enough fingerprints become candidates, then token-level local
alignment (match +2, mismatch -1, gap -2) extracts the overlapping
segments. Matched spans map back to the original text through per-token
character offsets, so reports show the raw submission and pool excerpts
side by side.
"""

import warnings
from dataclasses import dataclass

from .errors import DataFormatError, InvalidInputError
from .fileio import make_meta, read_json, write_json
from .reflm import tokenize_with_spans
from .rng import MASK64, token_id64

_HASH_BASE = 0x100000001B3  # FNV prime as the rolling polynomial base


@dataclass(frozen=True)
class ScanParams:
    min_fingerprints: int = 2  # shared k-grams required to become a candidate
    match: int = 2
    mismatch: int = -1
    gap: int = -2
    min_span: int = 20

    @property
    def min_score(self):
        # a reported alignment must score at least 60% of a clean min_span run
        return self.min_span * self.match * 0.6


@dataclass(frozen=True)
class PoolEntry:
    essay_id: str
    tokens: tuple
    spans: tuple  # per-token (start, end) character offsets
    text: str


@dataclass(frozen=True)
class PoolIndex:
    prompt_id: str
    k: int
    entries: dict  # essay_id -> PoolEntry
    postings: dict  # kgram hash -> tuple of (essay_id, token position)


@dataclass(frozen=True)
class AlignmentMatch:
    pool_essay_id: str
    sub_span: tuple  # half-open token range in the submission
    pool_span: tuple
    matched_tokens: int
    score: float
    identity: float  # matches / aligned columns


@dataclass(frozen=True)
class OverlapReport:
    submission_id: str
    token_count: int
    covered_fraction: float
    matches: tuple
    excerpts: tuple  # (submission excerpt, pool essay id, pool excerpt)


def kgram_hashes(tokens, k):
    """64-bit rolling polynomial hash of every k consecutive token ids."""
    n = len(tokens)
    if n < k:
        return []
    ids = [token_id64(t) for t in tokens]
    top = pow(_HASH_BASE, k - 1, 1 << 64)
    h = 0
    for i in range(k):
        h = (h * _HASH_BASE + ids[i]) & MASK64
    out = [h]
    for i in range(k, n):
        h = ((h - ids[i - k] * top) * _HASH_BASE + ids[i]) & MASK64
        out.append(h)
    return out


def build_pool(essays, k=8):
    """Index one prompt's pool essays; essays shorter than k tokens are skipped."""
    if not essays:
        raise InvalidInputError("pool is empty")
    if k < 4:
        raise InvalidInputError(f"shingle length must be >= 4, got {k}")
    prompt_id = essays[0].prompt_id
    entries = {}
    postings = {}
    for e in essays:
        if e.prompt_id != prompt_id:
            raise InvalidInputError(
                f"mixed prompt ids in pool: \"{prompt_id}\" vs \"{e.prompt_id}\" (essay {e.id})"
            )
        stream, spans = tokenize_with_spans(e.text)
        if len(stream.tokens) < k:
            warnings.warn(f"pool essay {e.id} has {len(stream.tokens)} tokens (< k={k}), skipped")
            continue
        entries[e.id] = PoolEntry(essay_id=e.id, tokens=stream.tokens, spans=spans, text=e.text)
        for pos, h in enumerate(kgram_hashes(stream.tokens, k)):
            postings.setdefault(h, []).append((e.id, pos))
    if not entries:
        raise InvalidInputError("every pool essay was shorter than the shingle length")
    return PoolIndex(
        prompt_id=prompt_id,
        k=k,
        entries=entries,
        postings={h: tuple(v) for h, v in postings.items()},
    )


def _local_align_best(sub, pool, lo, hi, params):
    """Best local alignment between sub[lo:hi] and the full pool sequence.

    Returns (score, sub_span, pool_span, matched, columns) or None. Classic
    quadratic dynamic program with traceback.
    """
    m = hi - lo
    n = len(pool)
    if m <= 0 or n == 0:
        return None
    mt, mm, gp = params.match, params.mismatch, params.gap
    prev = [0] * (n + 1)
    # direction codes: 0 stop, 1 diag, 2 up (advance sub), 3 left (advance pool)
    dirs = [bytearray(n + 1) for _ in range(m + 1)]
    best = (0, 0, 0)
    for i in range(1, m + 1):
        cur = [0] * (n + 1)
        a = sub[lo + i - 1]
        drow = dirs[i]
        for j in range(1, n + 1):
            diag = prev[j - 1] + (mt if a == pool[j - 1] else mm)
            up = prev[j] + gp
            left = cur[j - 1] + gp
            v = diag
            d = 1
            if up > v:
                v, d = up, 2
            if left > v:
                v, d = left, 3
            if v <= 0:
                v, d = 0, 0
            cur[j] = v
            drow[j] = d
            if v > best[0]:
                best = (v, i, j)
        prev = cur
    score, bi, bj = best
    if score <= 0:
        return None
    # traceback
    i, j = bi, bj
    matched = 0
    columns = 0
    end_i, end_j = i, j
    while i > 0 and j > 0 and dirs[i][j] != 0:
        d = dirs[i][j]
        columns += 1
        if d == 1:
            if sub[lo + i - 1] == pool[j - 1]:
                matched += 1
            i -= 1
            j -= 1
        elif d == 2:
            i -= 1
        else:
            j -= 1
    return (
        float(score),
        (lo + i, lo + end_i),
        (j, end_j),
        matched,
        columns,
    )


def _alignments_for_pair(sub_tokens, entry, params):
    """All non-overlapping (in submission coordinates) local alignments that
    clear the score threshold, found by best-first recursion on the flanks."""
    found = []

    def rec(lo, hi):
        if hi - lo < 2:
            return
        got = _local_align_best(sub_tokens, entry.tokens, lo, hi, params)
        if got is None:
            return
        score, sub_span, pool_span, matched, columns = got
        if score < params.min_score:
            return
        found.append(
            AlignmentMatch(
                pool_essay_id=entry.essay_id,
                sub_span=sub_span,
                pool_span=pool_span,
                matched_tokens=matched,
                score=score,
                identity=matched / columns if columns else 0.0,
            )
        )
        rec(lo, sub_span[0])
        rec(sub_span[1], hi)

    rec(0, len(sub_tokens))
    return found


def scan(submission, pool, params=ScanParams()):
    """Find pool overlaps in a submission.

    Returns matches sorted by score descending, greedily made non-overlapping
    in submission coordinates so each region is attributed to one pool essay.
    """
    if submission.prompt_id != pool.prompt_id:
        raise InvalidInputError(
            f"prompt mismatch: submission \"{submission.prompt_id}\" vs pool \"{pool.prompt_id}\""
        )
    stream, _ = tokenize_with_spans(submission.text)
    sub_hashes = set(kgram_hashes(stream.tokens, pool.k))
    shared = {}
    for h in sub_hashes:
        for eid, _pos in pool.postings.get(h, ()):
            shared[eid] = shared.get(eid, set())
            shared[eid].add(h)
    candidates = sorted(
        (eid for eid, hs in shared.items() if len(hs) >= params.min_fingerprints),
        key=lambda eid: (-len(shared[eid]), eid),
    )
    all_matches = []
    for eid in candidates:
        all_matches.extend(_alignments_for_pair(stream.tokens, pool.entries[eid], params))
    all_matches.sort(key=lambda m: (-m.score, m.pool_essay_id, m.sub_span))
    chosen = []
    for m in all_matches:
        s, e = m.sub_span
        if all(e <= cs or s >= ce for cs, ce in (c.sub_span for c in chosen)):
            chosen.append(m)
    return chosen


def overlap_report(matches, submission, pool=None):
    """Covered-token fraction plus original-text excerpts for each match.

    Excerpts come from the pre-normalization text on both sides via the
    token-to-character offset maps; pass the pool to fill in its side.
    """
    stream, spans = tokenize_with_spans(submission.text)
    n = len(stream.tokens)
    covered = [False] * n
    for m in matches:
        for i in range(*m.sub_span):
            covered[i] = True
    excerpts = []
    for m in matches:
        s, e = m.sub_span
        sub_text = submission.text[spans[s][0] : spans[e - 1][1]]
        pool_text = ""
        if pool is not None:
            entry = pool.entries.get(m.pool_essay_id)
            if entry is not None:
                ps, pe = m.pool_span
                pool_text = entry.text[entry.spans[ps][0] : entry.spans[pe - 1][1]]
        excerpts.append((sub_text, m.pool_essay_id, pool_text))
    return OverlapReport(
        submission_id=submission.id,
        token_count=n,
        covered_fraction=sum(covered) / n,
        matches=tuple(matches),
        excerpts=tuple(excerpts),
    )


def render_report(report):
    """Plain-text rendering with the submission and pool excerpts side by side."""
    lines = [
        f"submission {report.submission_id}: {report.token_count} tokens, "
        f"{report.covered_fraction:.1%} covered by {len(report.matches)} match(es)",
    ]
    for m, (sub_text, pool_id, pool_text) in zip(report.matches, report.excerpts):
        lines.append("")
        lines.append(
            f"- pool essay {pool_id}: tokens {m.sub_span[0]}..{m.sub_span[1]} of submission, "
            f"score {m.score:.1f}, identity {m.identity:.2f}"
        )
        lines.append("  Submitted                       | Pool")
        lines.append(f"  {sub_text}")
        lines.append(f"  | {pool_text}")
    return "\n".join(lines) + "\n"


def save_report(path, report, meta=None):
    obj = {
        "meta": meta or make_meta(),
        "submission_id": report.submission_id,
        "token_count": report.token_count,
        "covered_fraction": report.covered_fraction,
        "matches": [
            {
                "pool_essay_id": m.pool_essay_id,
                "sub_span": list(m.sub_span),
                "pool_span": list(m.pool_span),
                "matched_tokens": m.matched_tokens,
                "score": m.score,
                "identity": m.identity,
                "submission_excerpt": sub_text,
                "pool_excerpt": pool_text,
            }
            for m, (sub_text, _eid, pool_text) in zip(report.matches, report.excerpts)
        ],
    }
    write_json(path, obj)


def save_pool(path, pool, meta=None):
    obj = {
        "meta": meta or make_meta(),
        "prompt_id": pool.prompt_id,
        "k": pool.k,
        "essays": [
            {"id": e.essay_id, "tokens": list(e.tokens), "spans": [list(s) for s in e.spans], "text": e.text}
            for e in sorted(pool.entries.values(), key=lambda e: e.essay_id)
        ],
    }
    write_json(path, obj)


def load_pool(path):
    obj = read_json(path)
    try:
        k = int(obj["k"])
        entries = {}
        postings = {}
        for rec in obj["essays"]:
            entry = PoolEntry(
                essay_id=str(rec["id"]),
                tokens=tuple(rec["tokens"]),
                spans=tuple(tuple(s) for s in rec["spans"]),
                text=str(rec["text"]),
            )
            entries[entry.essay_id] = entry
            for pos, h in enumerate(kgram_hashes(entry.tokens, k)):
                postings.setdefault(h, []).append((entry.essay_id, pos))
        return PoolIndex(
            prompt_id=str(obj["prompt_id"]),
            k=k,
            entries=entries,
            postings={h: tuple(v) for h, v in postings.items()},
        )
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"{path}: not a valid pool index file ({exc})") from exc
