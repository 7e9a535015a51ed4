"""Pool-overlap scanning: find submission segments lifted from a prompt's
essay pool.

A pool of generated essays for one prompt is fingerprinted by hashed
8-gram shingles; a submission sharing enough fingerprints goes through
token-level local alignment, and matched spans map back to the original
text for a side-by-side report.
"""

from essaydetect.collider import build_pool, overlap_report, render_report, scan
from essaydetect.corpus import Essay
from essaydetect.reflm import split_sentences
from essaydetect.synth import build_corpus, bundled_text

pool_essays = [e for e in build_corpus(seed=42, essays_per_source=30) if e.source == "melville"]
pool_essays = [e for e in pool_essays if e.prompt_id == "p1"]
pool = build_pool(pool_essays, k=8)
print(f"pool: {len(pool.entries)} essays, {len(pool.postings)} distinct fingerprints")

# a "submission" that copies the middle of one pool essay into fresh human text
sentences = split_sentences(bundled_text("anthology"))
lifted = " ".join(pool_essays[3].text.split(" ")[20:90])
submission = Essay(
    id="suspect",
    prompt_id="p1",
    source="human",
    text=" ".join(sentences[100:104]) + " " + lifted + " " + " ".join(sentences[104:108]),
)

matches = scan(submission, pool)
report = overlap_report(matches, submission, pool)
print(f"\n{len(matches)} match(es); {report.covered_fraction:.0%} of submission tokens covered\n")
print(render_report(report))
