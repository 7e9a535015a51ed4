"""Train the boosted-tree detector with cross-validated hyperparameters.

Four-fold stratified CV picks the configuration with the best mean
validation AUC (ties go to the smaller model), then the winner is refit on
all training data and applied to the held-out balanced test set.
"""

from essaydetect.corpus import SplitCounts, make_split
from essaydetect.evaluation import auc, roc_curve
from essaydetect.features import features_for
from essaydetect.gbm import Hyperparams, predict, train_detector
from essaydetect.reflm import score_essay
from essaydetect.synth import build_corpus, reference_model

essays = build_corpus(seed=42, essays_per_source=80)
ref = reference_model()
plan = make_split(essays, SplitCounts(20, 20, 40, 20), seed=7)
by_id = {e.id: e for e in essays}


def vectors(ids):
    out = []
    for eid in ids:
        e = by_id[eid]
        out.append(features_for(score_essay(ref, e), label=0 if e.source == "human" else 1))
    return out


source = "carroll"
split = plan.per_source[source]
train = vectors(list(split.train_ai) + list(split.train_human))
test = vectors(list(split.test_ai) + list(plan.universal_human_test))

grid = tuple(Hyperparams(n_rounds=r, max_depth=d, learning_rate=0.1) for r in (50, 150) for d in (2, 3))
model = train_detector(train, grid=grid, folds=4, seed=11)

print(f"detector for source \"{source}\" ({len(train)} training essays)")
for entry in model.cv_report:
    hp = entry["hyperparams"]
    print(
        f"  rounds={hp['n_rounds']:4d} depth={hp['max_depth']}  "
        f"fold AUCs {['%.3f' % a for a in entry['fold_aucs']]}  mean {entry['mean_auc']:.3f}"
    )
print(f"selected: rounds={model.hyperparams.n_rounds} depth={model.hyperparams.max_depth}")

scores = predict(model, test)
labels = [v.label for v in test]
print(f"\nheld-out test AUC: {auc(scores, labels):.3f}")
pts = roc_curve(scores, labels)
print(f"ROC curve has {len(pts)} points, from {pts[0]} to {pts[-1]}")
