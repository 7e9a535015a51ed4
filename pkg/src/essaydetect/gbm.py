"""Gradient-boosted decision trees for binary human/AI classification.

Logistic-loss boosting, written out in full: round m fits a depth-limited
regression tree to the residuals r_i = y_i - p_i, each leaf takes the
regularized Newton value sum(r) / (sum(p(1-p)) + lambda), and the model
score is F(x) = base + eta * sum(trees). Splits are exact greedy over
sorted unique feature values with midpoint thresholds; x < threshold goes
left. Training log-loss is checked to be non-increasing every round.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, InsufficientDataError, InvalidInputError
from .evaluation import auc
from .features import FEATURE_NAMES
from .fileio import make_meta, read_json, write_json
from .rng import SplitMix64

_GAIN_EPS = 1e-12
_LOSS_EPS = 1e-9


@dataclass(frozen=True)
class Hyperparams:
    n_rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    min_leaf: int = 2

    def to_dict(self):
        return {
            "n_rounds": self.n_rounds,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "reg_lambda": self.reg_lambda,
            "min_child_weight": self.min_child_weight,
            "min_leaf": self.min_leaf,
        }


# small stated default grid; override via cross_validate(grid=...)
DEFAULT_GRID = tuple(
    Hyperparams(n_rounds=r, max_depth=d, learning_rate=lr)
    for r in (100, 300)
    for d in (2, 3)
    for lr in (0.05, 0.1)
)


@dataclass
class BoostedModel:
    base_score: float
    learning_rate: float
    trees: list  # nested {"feature","threshold","left","right"} / {"leaf"} dicts
    hyperparams: Hyperparams
    feature_names: tuple
    cv_report: list | None = None
    loss_curve: tuple = ()
    seed: int = 0


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logloss(y, p):
    p = np.clip(p, 1e-15, 1.0 - 1e-15)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def to_matrix(vectors, require_labels=True):
    """Stack FeatureVectors into (X, y, ids); validates width, labels, finiteness."""
    if not vectors:
        raise InvalidInputError("no feature vectors")
    width = len(FEATURE_NAMES)
    for v in vectors:
        if len(v.values) != width:
            raise InvalidInputError(
                f"essay {v.essay_id}: feature width {len(v.values)}, expected {width}"
            )
    X = np.array([v.values for v in vectors], dtype=np.float64)
    if not np.isfinite(X).all():
        bad = [vectors[i].essay_id for i in np.nonzero(~np.isfinite(X).all(axis=1))[0][:3]]
        raise InvalidInputError(f"non-finite feature values (e.g. essay {bad[0]})")
    ids = [v.essay_id for v in vectors]
    if not require_labels:
        return X, None, ids
    if any(v.label is None for v in vectors):
        missing = next(v.essay_id for v in vectors if v.label is None)
        raise InvalidInputError(f"essay {missing}: missing label")
    y = np.array([v.label for v in vectors], dtype=np.float64)
    if y.min() == y.max():
        raise InsufficientDataError("single-class input: need both labels 0 and 1")
    return X, y, ids


def _fit_tree(X, idx, g, h, hp, depth):
    G = float(g[idx].sum())
    H = float(h[idx].sum())
    lam = hp.reg_lambda

    def leaf():
        return {"leaf": G / (H + lam)}

    if depth >= hp.max_depth or len(idx) < 2 * hp.min_leaf:
        return leaf()
    parent = G * G / (H + lam)
    best_gain, best_feature, best_threshold = -np.inf, -1, 0.0
    for f in range(X.shape[1]):
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        vs, gs, hs = v[order], g[idx][order], h[idx][order]
        cut = np.nonzero(vs[1:] > vs[:-1])[0]  # boundary between distinct values
        if len(cut) == 0:
            continue
        nl = cut + 1
        gl, hl = np.cumsum(gs)[cut], np.cumsum(hs)[cut]
        gr, hr = G - gl, H - hl
        valid = (
            (nl >= hp.min_leaf)
            & (len(idx) - nl >= hp.min_leaf)
            & (hl >= hp.min_child_weight)
            & (hr >= hp.min_child_weight)
        )
        if not valid.any():
            continue
        gain = np.where(valid, gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent, -np.inf)
        b = int(np.argmax(gain))  # first max: lowest threshold wins ties
        if gain[b] > best_gain + _GAIN_EPS:  # strict: lowest feature index wins ties
            best_gain = float(gain[b])
            best_feature = f
            best_threshold = 0.5 * (float(vs[cut[b]]) + float(vs[cut[b] + 1]))
    if best_feature < 0 or best_gain <= _GAIN_EPS:
        return leaf()
    mask = X[idx, best_feature] < best_threshold
    li, ri = idx[mask], idx[~mask]
    if len(li) < hp.min_leaf or len(ri) < hp.min_leaf:  # degenerate float midpoint
        return leaf()
    return {
        "feature": best_feature,
        "threshold": best_threshold,
        "left": _fit_tree(X, li, g, h, hp, depth + 1),
        "right": _fit_tree(X, ri, g, h, hp, depth + 1),
    }


def _eval_tree(node, X):
    out = np.empty(len(X), dtype=np.float64)
    stack = [(node, np.arange(len(X)))]
    while stack:
        nd, idx = stack.pop()
        if "leaf" in nd:
            out[idx] = nd["leaf"]
        else:
            mask = X[idx, nd["feature"]] < nd["threshold"]
            stack.append((nd["left"], idx[mask]))
            stack.append((nd["right"], idx[~mask]))
    return out


def _fit(X, y, hp, seed):
    prevalence = float(y.mean())
    base = math.log(prevalence / (1.0 - prevalence))
    F = np.full(len(y), base, dtype=np.float64)
    losses = [_logloss(y, _sigmoid(F))]
    trees = []
    for m in range(hp.n_rounds):
        p = _sigmoid(F)
        g = y - p
        h = p * (1.0 - p)
        tree = _fit_tree(X, np.arange(len(y)), g, h, hp, 0)
        F = F + hp.learning_rate * _eval_tree(tree, X)
        loss = _logloss(y, _sigmoid(F))
        if loss > losses[-1] + _LOSS_EPS:
            raise RuntimeError(f"training log-loss increased at round {m + 1}: {losses[-1]} -> {loss}")
        losses.append(loss)
        trees.append(tree)
    return BoostedModel(
        base_score=base,
        learning_rate=hp.learning_rate,
        trees=trees,
        hyperparams=hp,
        feature_names=FEATURE_NAMES,
        loss_curve=tuple(losses),
        seed=seed,
    )


def fit_boosted(vectors, hp=Hyperparams(), seed=0):
    """Train on labeled FeatureVectors. Deterministic; the seed is provenance only
    (there is no subsampling)."""
    X, y, _ = to_matrix(vectors)
    return _fit(X, y, hp, seed)


def raw_scores(model, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(model.feature_names):
        raise InvalidInputError(
            f"feature width mismatch: model expects {len(model.feature_names)}, got {X.shape[1]}"
        )
    F = np.full(len(X), model.base_score, dtype=np.float64)
    for tree in model.trees:
        F += model.learning_rate * _eval_tree(tree, X)
    return F


def predict(model, x):
    """Probability that the input is machine-generated; accepts one FeatureVector,
    one value tuple, or a matrix / list of either."""
    single = False
    if hasattr(x, "values") and hasattr(x, "essay_id"):
        X = np.array([x.values], dtype=np.float64)
        single = True
    elif isinstance(x, (list, tuple)) and x and hasattr(x[0], "values"):
        X = np.array([v.values for v in x], dtype=np.float64)
    else:
        X = np.asarray(x, dtype=np.float64)
        single = X.ndim == 1
    p = _sigmoid(raw_scores(model, X))
    return float(p[0]) if single else p


def stratified_folds(y, folds, seed):
    """Seeded fold assignment: per class in input order, shuffle then deal
    round-robin. Every fold must contain both classes."""
    if folds < 2:
        raise InvalidInputError(f"folds must be >= 2, got {folds}")
    rng = SplitMix64(seed)
    assign = np.empty(len(y), dtype=np.int64)
    for cls in (1, 0):
        idx = [i for i in range(len(y)) if y[i] == cls]
        rng.shuffle(idx)
        if len(idx) < folds:
            raise InsufficientDataError(
                f"class {cls} has {len(idx)} samples, cannot fill {folds} folds"
            )
        for pos, i in enumerate(idx):
            assign[i] = pos % folds
    return assign


def cross_validate(vectors, grid=DEFAULT_GRID, folds=4, seed=0):
    """Grid search by mean validation AUC over stratified folds.

    Ties break toward fewer trees, then shallower depth, then grid order.
    Returns (best hyperparams, report); the report lists per-fold AUCs for
    every configuration in grid order.
    """
    X, y, _ = to_matrix(vectors)
    assign = stratified_folds(y, folds, seed)
    report = []
    for hp in grid:
        fold_aucs = []
        for f in range(folds):
            tr = assign != f
            va = ~tr
            model = _fit(X[tr], y[tr], hp, seed)
            fold_aucs.append(auc(raw_scores(model, X[va]), y[va]))
        report.append(
            {
                "hyperparams": hp.to_dict(),
                "fold_aucs": fold_aucs,
                "mean_auc": float(np.mean(fold_aucs)),
            }
        )
    best_i = min(
        range(len(grid)),
        key=lambda i: (-report[i]["mean_auc"], grid[i].n_rounds, grid[i].max_depth, i),
    )
    return grid[best_i], report


def train_detector(vectors, grid=DEFAULT_GRID, folds=4, seed=0):
    """Cross-validate, then refit the winning configuration on all data."""
    best, report = cross_validate(vectors, grid=grid, folds=folds, seed=seed)
    X, y, _ = to_matrix(vectors)
    model = _fit(X, y, best, seed)
    model.cv_report = report
    return model


# ---------------------------------------------------------------------------
# serialization (round-trips exactly: floats stored with repr precision)

def save_model(path, model, meta=None):
    obj = {
        "meta": meta or make_meta(seed=model.seed),
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "hyperparams": model.hyperparams.to_dict(),
        "feature_names": list(model.feature_names),
        "cv_report": model.cv_report,
        "loss_curve": list(model.loss_curve),
        "seed": model.seed,
        "trees": model.trees,
    }
    write_json(path, obj)


def load_model(path):
    obj = read_json(path)
    try:
        return BoostedModel(
            base_score=float(obj["base_score"]),
            learning_rate=float(obj["learning_rate"]),
            trees=obj["trees"],
            hyperparams=Hyperparams(**obj["hyperparams"]),
            feature_names=tuple(obj["feature_names"]),
            cv_report=obj.get("cv_report"),
            loss_curve=tuple(obj.get("loss_curve", ())),
            seed=int(obj.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: not a valid detector model file ({exc})") from exc
