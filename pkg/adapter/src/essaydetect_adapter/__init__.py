"""Bridge from pretrained causal language models to the essaydetect toolkit.

Reads the Essay line format, scores every token with a transformer LM, and
writes the ScoredTokens line format (natural-log probabilities, sentence
break indices) that the toolkit's feature pipeline consumes. The two
packages share nothing but those file formats.
"""

from .adapter import AdapterConfig, score_corpus, score_essays

__version__ = "0.1.0"
__all__ = ["AdapterConfig", "score_corpus", "score_essays"]
