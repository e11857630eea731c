"""Character-level input adaptation for a frozen flow-matching TTS backbone.

The package trains a small embedding + ConvNeXt-1D adapter that feeds a
frozen synthesis model, merges bilingual embeddings for code-switched
text, and ships the evaluation tooling around it: word-level error
metrics, speaker-similarity statistics, and a blind listening-test
service.
"""

__version__ = "0.1.0"
