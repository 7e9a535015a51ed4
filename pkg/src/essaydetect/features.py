"""Perplexity-distribution features.

Each essay becomes 14 numbers: its overall perplexity plus the mean, median,
minimum, maximum, and 10th through 90th percentiles of its sentence-level
perplexity distribution. Percentiles use linear interpolation between
closest ranks: h = p*(n-1), x[floor(h)] + (h-floor(h))*(x[floor(h)+1]-x[floor(h)]).
"""

import math
from dataclasses import dataclass

from .errors import DataFormatError, InvalidInputError
from .fileio import read_csv, write_csv
from .reflm import perplexity, sentence_perplexities

FEATURE_NAMES = (
    "overall_ppl",
    "mean",
    "median",
    "min",
    "max",
    "p10",
    "p20",
    "p30",
    "p40",
    "p50",
    "p60",
    "p70",
    "p80",
    "p90",
)


@dataclass(frozen=True)
class PerplexityProfile:
    essay_id: str
    overall_ppl: float
    sentence_ppls: tuple


@dataclass(frozen=True)
class FeatureVector:
    essay_id: str
    values: tuple  # aligned with FEATURE_NAMES
    label: int | None = None


def profile(scored):
    """Whole-essay perplexity plus one perplexity per sentence slice."""
    return PerplexityProfile(
        essay_id=scored.essay_id,
        overall_ppl=perplexity(scored),
        sentence_ppls=tuple(sentence_perplexities(scored)),
    )


def percentile(sample, p):
    """Linear-interpolation percentile of a sample (sorted internally)."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"percentile fraction must be in [0, 1], got {p}")
    xs = sorted(sample)
    if not xs:
        raise InvalidInputError("empty sample")
    h = p * (len(xs) - 1)
    lo = math.floor(h)
    if lo == len(xs) - 1:
        return float(xs[lo])
    return xs[lo] + (h - lo) * (xs[lo + 1] - xs[lo])


def featurize(prof, label=None):
    s = prof.sentence_ppls
    if not s:
        raise InvalidInputError(f"essay {prof.essay_id}: no sentence perplexities")
    values = (
        float(prof.overall_ppl),
        sum(s) / len(s),
        percentile(s, 0.5),
        float(min(s)),
        float(max(s)),
        *(percentile(s, q / 100.0) for q in range(10, 100, 10)),
    )
    return FeatureVector(essay_id=prof.essay_id, values=values, label=label)


def features_for(scored, label=None):
    return featurize(profile(scored), label=label)


# ---------------------------------------------------------------------------
# feature table I/O

def save_feature_table(path, vectors, meta=None):
    header = ("essay_id", *FEATURE_NAMES, "label")
    rows = [(v.essay_id, *v.values, v.label) for v in vectors]
    write_csv(path, header, rows, meta=meta)


def load_feature_table(path):
    header, rows, meta = read_csv(path)
    expected = ("essay_id", *FEATURE_NAMES, "label")
    if tuple(header) != expected:
        raise DataFormatError(f"{path}: feature table header mismatch, expected {','.join(expected)}")
    vectors = []
    for i, row in enumerate(rows):
        try:
            values = tuple(float(x) for x in row[1:-1])
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {i + 1}: non-numeric feature value") from exc
        label_s = row[-1]
        label = None if label_s == "" else int(label_s)
        if label not in (None, 0, 1):
            raise DataFormatError(f"{path}: row {i + 1}: label must be 0, 1 or empty")
        vectors.append(FeatureVector(essay_id=row[0], values=values, label=label))
    return vectors, meta
