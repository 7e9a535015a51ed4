"""Build the bundled synthetic corpus and carve out train/test splits.

The corpus mixes three n-gram generators (different orders, different
public-domain training texts) with held-out human passages. The split
follows the balanced-test protocol: one universal human test set shared by
every detector, a per-source balanced AI test set, and a shared human
training pool.
"""

from essaydetect.corpus import SplitCounts, corpus_stats, make_split
from essaydetect.synth import build_corpus

essays = build_corpus(seed=42, essays_per_source=100)
print(f"built {len(essays)} essays\n")

stats = corpus_stats(essays)
print(f"{'source':12s} {'essays':>6s} {'tokens/essay':>12s} {'sentences':>10s}")
for src in sorted(stats):
    row = stats[src]
    print(f"{src:12s} {row['count']:6d} {row['mean_tokens']:12.1f} {row['mean_sentences']:10.1f}")

counts = SplitCounts(n_human_test=25, n_ai_test=25, n_ai_train=50, n_human_train=25)
plan = make_split(essays, counts, seed=7)

print(f"\nuniversal human test set: {len(plan.universal_human_test)} essays")
for src, split in plan.per_source.items():
    print(
        f"  {src:10s} train: {len(split.train_ai)} AI + {len(split.train_human)} human   "
        f"test: {len(split.test_ai)} AI + {len(plan.universal_human_test)} human"
    )

first = sorted(plan.per_source)[0]
assert set(plan.per_source[first].train_ai).isdisjoint(plan.per_source[first].test_ai)
print("\ntrain and test sets are disjoint; same seed reproduces the same plan bit for bit")
