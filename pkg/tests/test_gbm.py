import math

import numpy as np
import pytest

from essaydetect.errors import InsufficientDataError, InvalidInputError
from essaydetect.evaluation import auc
from essaydetect.features import FeatureVector
from essaydetect.gbm import (
    Hyperparams,
    cross_validate,
    fit_boosted,
    load_model,
    predict,
    save_model,
    train_detector,
)


def fv(eid, x0, label, extra=None):
    values = [float(x0)] + [0.0] * 13
    if extra:
        for i, v in extra.items():
            values[i] = float(v)
    return FeatureVector(eid, tuple(values), label=label)


def separable_toy(n=40):
    # feature 0 > 5 iff label 1
    vectors = []
    for i in range(n):
        label = i % 2
        x0 = 6.0 + (i % 7) if label else 1.0 + (i % 5) * 0.8
        vectors.append(fv(f"e{i}", x0, label, extra={3: (i * 37) % 11}))
    return vectors


def test_hand_computed_single_stump():
    # 8 points, prevalence 0.5 so every residual is +-0.5 and every hessian 0.25;
    # min child weight 1.0 only admits the 4/4 split, whose Newton leaves are -+1
    vectors = [fv(f"e{i}", i + 1, y) for i, y in enumerate([0, 0, 0, 1, 0, 1, 1, 1])]
    model = fit_boosted(vectors, Hyperparams(n_rounds=1, max_depth=1, learning_rate=1.0, reg_lambda=0.0))
    assert model.base_score == 0.0
    tree = model.trees[0]
    assert tree["feature"] == 0
    assert tree["threshold"] == pytest.approx(4.5)
    assert tree["left"]["leaf"] == pytest.approx(-1.0, abs=1e-12)
    assert tree["right"]["leaf"] == pytest.approx(1.0, abs=1e-12)
    assert predict(model, (2.0,) + (0.0,) * 13) == pytest.approx(1 / (1 + math.e), abs=1e-12)
    assert predict(model, (7.0,) + (0.0,) * 13) == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-12)


def test_separable_toy_reaches_auc_one():
    vectors = separable_toy()
    model = fit_boosted(vectors, Hyperparams(n_rounds=50, max_depth=2, learning_rate=0.1))
    scores = predict(model, vectors)
    labels = [v.label for v in vectors]
    assert auc(scores, labels) == 1.0
    # monotone check: every class-1 prediction above every class-0 prediction
    hi = min(s for s, l in zip(scores, labels) if l == 1)
    lo = max(s for s, l in zip(scores, labels) if l == 0)
    assert hi > lo


def test_single_class_rejected():
    vectors = [fv(f"e{i}", i, 1) for i in range(8)]
    with pytest.raises(InsufficientDataError, match="single-class"):
        fit_boosted(vectors, Hyperparams(n_rounds=1))


def test_nan_feature_rejected():
    vectors = separable_toy(10)
    bad = FeatureVector("bad", (float("nan"),) + (0.0,) * 13, label=0)
    with pytest.raises(InvalidInputError, match="non-finite"):
        fit_boosted(vectors + [bad], Hyperparams(n_rounds=1))


def test_zero_trees_predicts_prevalence():
    vectors = separable_toy(40)[:10]  # 5 of each class
    model = fit_boosted(vectors, Hyperparams(n_rounds=0))
    assert predict(model, vectors[0]) == pytest.approx(0.5)
    skewed = [fv(f"s{i}", i, 1 if i < 3 else 0) for i in range(12)]
    model = fit_boosted(skewed, Hyperparams(n_rounds=0))
    assert predict(model, skewed[0]) == pytest.approx(3 / 12)


def test_predict_width_mismatch():
    model = fit_boosted(separable_toy(12), Hyperparams(n_rounds=2))
    with pytest.raises(InvalidInputError, match="width"):
        predict(model, (1.0, 2.0))


def test_training_logloss_non_increasing_random_datasets():
    rng = np.random.default_rng(31)
    for _ in range(12):
        n = int(rng.integers(20, 60))
        X = rng.normal(size=(n, 14))
        y = rng.integers(0, 2, size=n)
        y[:2] = [0, 1]
        vectors = [FeatureVector(f"e{i}", tuple(X[i]), label=int(y[i])) for i in range(n)]
        model = fit_boosted(vectors, Hyperparams(n_rounds=25, max_depth=3, learning_rate=0.1))
        curve = model.loss_curve
        assert all(b <= a + 1e-9 for a, b in zip(curve, curve[1:]))


def test_rank_transform_leaves_ranking_unchanged():
    # strictly monotone per-column transforms change thresholds but not splits,
    # so refit predictions induce the same ranking
    rng = np.random.default_rng(33)
    X = rng.normal(size=(60, 14))
    y = (X[:, 2] + 0.4 * rng.normal(size=60) > 0).astype(int)
    y[:2] = [0, 1]
    train = [FeatureVector(f"t{i}", tuple(X[i]), label=int(y[i])) for i in range(40)]
    test = [FeatureVector(f"v{i}", tuple(X[40 + i]), label=int(y[40 + i])) for i in range(20)]
    hp = Hyperparams(n_rounds=30, max_depth=2, learning_rate=0.1)

    def monotone(col):
        return np.exp(col / 3.0) + col  # strictly increasing

    Xt = monotone(X)
    train_t = [FeatureVector(f"t{i}", tuple(Xt[i]), label=int(y[i])) for i in range(40)]
    test_t = [FeatureVector(f"v{i}", tuple(Xt[40 + i]), label=int(y[40 + i])) for i in range(20)]

    labels = [v.label for v in test]
    if len(set(labels)) < 2:
        pytest.skip("degenerate draw")
    a1 = auc(predict(fit_boosted(train, hp), test), labels)
    a2 = auc(predict(fit_boosted(train_t, hp), test_t), labels)
    assert a2 == pytest.approx(a1, abs=1e-12)


def test_deterministic_serialization(tmp_path):
    vectors = separable_toy(30)
    p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
    save_model(p1, train_detector(vectors, grid=(Hyperparams(n_rounds=15),), folds=3, seed=9), meta={"m": 0})
    save_model(p2, train_detector(vectors, grid=(Hyperparams(n_rounds=15),), folds=3, seed=9), meta={"m": 0})
    assert p1.read_bytes() == p2.read_bytes()


def test_model_roundtrip(tmp_path):
    vectors = separable_toy(24)
    model = train_detector(vectors, grid=(Hyperparams(n_rounds=10),), folds=3, seed=2)
    path = tmp_path / "m.json"
    save_model(path, model)
    loaded = load_model(path)
    assert np.array_equal(predict(loaded, vectors), predict(model, vectors))
    assert loaded.cv_report == model.cv_report


def test_cross_validate_single_config():
    best, report = cross_validate(separable_toy(32), grid=(Hyperparams(n_rounds=8),), folds=4, seed=1)
    assert best == Hyperparams(n_rounds=8)
    assert len(report) == 1
    assert len(report[0]["fold_aucs"]) == 4


def test_cross_validate_tie_prefers_fewer_trees():
    vectors = separable_toy(32)  # easily separable: both configs hit AUC 1.0
    small = Hyperparams(n_rounds=10, max_depth=2)
    big = Hyperparams(n_rounds=80, max_depth=2)
    best, report = cross_validate(vectors, grid=(big, small), folds=4, seed=5)
    assert report[0]["mean_auc"] == report[1]["mean_auc"] == 1.0
    assert best == small


def test_cross_validate_tie_then_prefers_shallower():
    vectors = separable_toy(32)
    deep = Hyperparams(n_rounds=10, max_depth=3)
    shallow = Hyperparams(n_rounds=10, max_depth=2)
    best, report = cross_validate(vectors, grid=(deep, shallow), folds=4, seed=5)
    assert report[0]["mean_auc"] == report[1]["mean_auc"]
    assert best == shallow


def test_cross_validate_deterministic():
    vectors = separable_toy(28)
    grid = (Hyperparams(n_rounds=10), Hyperparams(n_rounds=20))
    r1 = cross_validate(vectors, grid=grid, folds=4, seed=12)
    r2 = cross_validate(vectors, grid=grid, folds=4, seed=12)
    assert r1 == r2


def test_fold_assignment_seeded():
    from essaydetect.gbm import stratified_folds

    y = np.array([0, 1] * 20)
    a = stratified_folds(y, 4, seed=12)
    assert np.array_equal(a, stratified_folds(y, 4, seed=12))
    assert not np.array_equal(a, stratified_folds(y, 4, seed=13))
    for fold in range(4):
        assert set(y[a == fold]) == {0, 1}


def test_cross_validate_fold_too_small():
    vectors = [fv(f"e{i}", i, 1 if i < 3 else 0) for i in range(10)]
    with pytest.raises(InsufficientDataError, match="fold"):
        cross_validate(vectors, grid=(Hyperparams(n_rounds=2),), folds=4, seed=0)
