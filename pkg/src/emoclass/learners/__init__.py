"""Learners scoring feature vectors or embedding sequences against labels."""

from .forest import IncrementalRandomForest
from .logistic import SgdLogisticRegression, logistic_loss_and_grad
from .naive_bayes import MultinomialNaiveBayes
from .neural import (
    BiLstm,
    GradientCheckReport,
    PooledDnn,
    bce_loss,
    gradient_check,
)
from .training import AdamW, SequenceBatch, TrainResult, train

__all__ = [
    "AdamW",
    "BiLstm",
    "GradientCheckReport",
    "IncrementalRandomForest",
    "MultinomialNaiveBayes",
    "PooledDnn",
    "SequenceBatch",
    "SgdLogisticRegression",
    "TrainResult",
    "bce_loss",
    "gradient_check",
    "logistic_loss_and_grad",
    "train",
]
