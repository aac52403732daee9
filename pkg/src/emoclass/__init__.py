"""Multi-label text emotion classification engine and analysis toolkit."""

from .base import BaseEstimator, NotFittedError
from .taxonomy import Corpus, EmotionTaxonomy, LabeledExample

__version__ = "0.1.0"

__all__ = [
    "BaseEstimator",
    "Corpus",
    "EmotionTaxonomy",
    "LabeledExample",
    "NotFittedError",
    "__version__",
]
