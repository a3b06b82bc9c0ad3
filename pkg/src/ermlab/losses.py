"""Loss functions and empirical risk.

squared:   (y - h)^2
zero_one:  1 if y*h < 0 else 0
hinge:     max(0, 1 - y*h)
logistic:  log(1 + exp(-y*h)), computed overflow-free
svm_reg:   hinge + lambda * ||w||^2   (soft-margin objective per point)
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import LabeledDataset
from .errors import DomainError, SizeError
from .models import LinearModel, predict_many

_BINARY_KINDS = ("zero_one", "hinge", "logistic", "svm_reg")


@dataclass(frozen=True)
class LossKind:
    kind: str
    svm_lambda: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("squared",) + _BINARY_KINDS:
            raise DomainError(f"unknown loss {self.kind!r}")
        if self.kind == "svm_reg":
            if self.svm_lambda is None or self.svm_lambda <= 0.0:
                raise DomainError("svm_reg requires lambda > 0")

    @classmethod
    def squared(cls):
        return cls("squared")

    @classmethod
    def zero_one(cls):
        return cls("zero_one")

    @classmethod
    def hinge(cls):
        return cls("hinge")

    @classmethod
    def logistic(cls):
        return cls("logistic")

    @classmethod
    def svm_reg(cls, lam):
        return cls("svm_reg", svm_lambda=float(lam))


def softplus(t):
    """log(1 + exp(t)) without overflow."""
    t = np.asarray(t, dtype=float)
    return np.where(t > 0.0, t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def _check_binary(y):
    if not np.all(np.isin(np.asarray(y, dtype=float), (-1.0, 1.0))):
        raise DomainError("this loss needs labels in {-1, +1}")


def loss(kind: LossKind, y, h_value, w=None) -> float:
    """Loss of predicting ``h_value`` for a point with label ``y``."""
    y = float(y)
    h_value = float(h_value)
    if kind.kind == "squared":
        return (y - h_value) ** 2
    _check_binary(y)
    margin = y * h_value
    if kind.kind == "zero_one":
        return 1.0 if margin < 0.0 else 0.0
    if kind.kind == "hinge":
        return max(0.0, 1.0 - margin)
    if kind.kind == "logistic":
        return float(softplus(-margin))
    if w is None:
        raise DomainError("svm_reg loss requires the weight vector")
    w = np.asarray(w, dtype=float)
    return max(0.0, 1.0 - margin) + kind.svm_lambda * float(w @ w)


def losses_many(kind: LossKind, y, h, w=None) -> np.ndarray:
    """Vectorized per-point losses."""
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    if kind.kind == "squared":
        return (y - h) ** 2
    _check_binary(y)
    margin = y * h
    if kind.kind == "zero_one":
        return (margin < 0.0).astype(float)
    if kind.kind == "hinge":
        return np.maximum(0.0, 1.0 - margin)
    if kind.kind == "logistic":
        return softplus(-margin)
    if w is None:
        raise DomainError("svm_reg loss requires the weight vector")
    w = np.asarray(w, dtype=float)
    return np.maximum(0.0, 1.0 - margin) + kind.svm_lambda * float(w @ w)


def empirical_risk(kind: LossKind, model, d: LabeledDataset) -> float:
    """Average loss of a model over a labeled dataset.

    ``model`` may be any object supported by models.predict (or a callable
    mapping a feature vector to a predictor value).
    """
    if d.m < 1:
        raise SizeError("empirical risk of an empty dataset")
    if d.labels is None:
        raise DomainError("empirical risk needs labels")
    h = predict_many(model, d.features)
    w = model.weights if (kind.kind == "svm_reg"
                          and isinstance(model, LinearModel)) else None
    return float(losses_many(kind, d.labels, h, w).mean())
