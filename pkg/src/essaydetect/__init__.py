"""essaydetect: toolkit for detecting machine-generated essays in writing assessments.

Library layout:

- ``corpus``     labeled essay records, validation, seeded train/test splits
- ``reflm``      tokenization, sentence segmentation, n-gram reference LM, perplexity
- ``features``   perplexity-distribution feature vectors
- ``gbm``        gradient-boosted decision trees with stratified cross-validation
- ``evaluation`` AUC/ROC and the cross-generator train/test matrix experiment
- ``watermark``  green-list generation bias and z-score detection
- ``collider``   per-prompt essay pools and overlap scanning
- ``synth``      deterministic synthetic corpora from bundled public-domain text
- ``cli``        command-line entry point wiring the pipelines together
"""

__version__ = "0.1.0"
