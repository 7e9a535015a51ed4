"""Threshold-free ranking metrics: AUC (rank form) and the ROC curve.

AUC uses the Mann-Whitney statistic with midranks, so ties get half credit
and auc(scores, labels) + auc(scores, 1 - labels) = 1 exactly. The ROC
curve's trapezoidal area equals the rank AUC to float precision.
"""

import numpy as np

from .errors import InsufficientDataError, InvalidInputError


def _check(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise InvalidInputError(f"scores and labels must be equal-length 1-d, got {s.shape} vs {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise InvalidInputError("labels must be binary (0/1)")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise InsufficientDataError("single-class input: need both labels to rank")
    return s, y.astype(np.int64), n_pos, n_neg


def _midranks(s):
    n = len(s)
    order = np.argsort(s, kind="mergesort")
    ss = s[order]
    new_group = np.r_[True, ss[1:] != ss[:-1]]
    start = np.nonzero(new_group)[0]
    end = np.r_[start[1:], n]
    mid = (start + end - 1) / 2.0 + 1.0  # average 1-based rank of each tie group
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(mid, end - start)
    return ranks


def auc(scores, labels):
    """P(random positive outranks random negative), ties counted half."""
    s, y, n_pos, n_neg = _check(scores, labels)
    r_pos = _midranks(s)[y == 1].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_curve(scores, labels):
    """(false positive rate, true positive rate) points from (0,0) to (1,1),
    one step per distinct score, descending."""
    s, y, n_pos, n_neg = _check(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    ss = s[order]
    yy = y[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = len(ss)
    while i < n:
        j = i
        while j < n and ss[j] == ss[i]:
            j += 1
        tp += int(yy[i:j].sum())
        fp += (j - i) - int(yy[i:j].sum())
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return points


def roc_area(points):
    area = 0.0
    for (x1, y1), (x2, y2) in zip(points, points[1:]):
        area += 0.5 * (y1 + y2) * (x2 - x1)
    return area
