"""Hypothesis spaces: linear predictors with feature maps, thresholded
classifiers, one-hidden-layer ANN forward evaluation, decision trees and
k-nearest-neighbour prediction."""

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .data import LabeledDataset
from .errors import DomainError, ShapeError, SizeError


# ---------------------------------------------------------------------------
# feature maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureMapSpec:
    """identity, polynomial powers (1, x, ..., x^degree) of a scalar, or a
    bank of Gaussian bumps exp(-(x - mu_j)^2 / (2 sigma^2))."""

    kind: str = "identity"
    degree: int = 0
    means: Optional[np.ndarray] = None
    variance: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "polynomial", "gaussian"):
            raise DomainError(f"unknown feature map kind {self.kind!r}")
        if self.kind == "polynomial" and self.degree < 0:
            raise DomainError("polynomial degree must be >= 0")
        if self.kind == "gaussian":
            if self.variance <= 0.0:
                raise DomainError("gaussian basis variance must be > 0")
            means = np.asarray(self.means, dtype=float)
            if means.ndim != 1 or means.size < 1 or not np.all(np.isfinite(means)):
                raise DomainError("gaussian basis needs a vector of finite means")
            object.__setattr__(self, "means", means)

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def polynomial(cls, degree):
        return cls("polynomial", degree=int(degree))

    @classmethod
    def gaussian(cls, means, variance):
        return cls("gaussian", means=np.asarray(means, dtype=float),
                   variance=float(variance))

    def output_dim(self, input_dim=1):
        if self.kind == "polynomial":
            return self.degree + 1
        if self.kind == "gaussian":
            return self.means.size
        return input_dim

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "polynomial":
            d["degree"] = self.degree
        elif self.kind == "gaussian":
            d["means"] = self.means.tolist()
            d["variance"] = self.variance
        return d

    @classmethod
    def from_dict(cls, d):
        if d["kind"] == "polynomial":
            return cls.polynomial(d["degree"])
        if d["kind"] == "gaussian":
            return cls.gaussian(d["means"], d["variance"])
        return cls.identity()


def apply_feature_map(spec: FeatureMapSpec, x):
    """Map a scalar input to its feature vector (identity passes vectors through)."""
    if spec.kind == "identity":
        return np.atleast_1d(np.asarray(x, dtype=float))
    x = float(np.asarray(x).reshape(()))
    if spec.kind == "polynomial":
        return x ** np.arange(spec.degree + 1, dtype=float)
    return np.exp(-((x - spec.means) ** 2) / (2.0 * spec.variance))


def apply_feature_map_many(spec: FeatureMapSpec, xs):
    """Vectorized feature map over a (m,) array of scalars or (m, n) features."""
    xs = np.asarray(xs, dtype=float)
    if spec.kind == "identity":
        return xs if xs.ndim == 2 else xs[:, None]
    flat = xs.reshape(xs.shape[0])
    if spec.kind == "polynomial":
        return flat[:, None] ** np.arange(spec.degree + 1, dtype=float)[None, :]
    return np.exp(-((flat[:, None] - spec.means[None, :]) ** 2)
                  / (2.0 * spec.variance))


# ---------------------------------------------------------------------------
# linear models
# ---------------------------------------------------------------------------


@dataclass
class LinearModel:
    """h(x) = w . phi(x); phi defaults to the identity."""

    weights: np.ndarray
    feature_map: FeatureMapSpec = field(default_factory=FeatureMapSpec.identity)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1:
            raise ShapeError("weights must be a vector")
        if not np.all(np.isfinite(self.weights)):
            raise DomainError("weights must be finite")

    def to_json(self) -> str:
        return json.dumps({
            "kind": "linear",
            "weights": self.weights.tolist(),
            "feature_map": self.feature_map.to_dict(),
        })

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(np.asarray(obj["weights"], dtype=float),
                   FeatureMapSpec.from_dict(obj["feature_map"]))


def predict_linear(model: LinearModel, x) -> float:
    phi = apply_feature_map(model.feature_map, x)
    if phi.shape != model.weights.shape:
        raise ShapeError(
            f"feature vector has shape {phi.shape}, weights {model.weights.shape}"
        )
    return float(model.weights @ phi)


def predict_linear_many(model: LinearModel, xs) -> np.ndarray:
    phi = apply_feature_map_many(model.feature_map, xs)
    if phi.shape[1] != model.weights.size:
        raise ShapeError(
            f"features have {phi.shape[1]} columns, weights length "
            f"{model.weights.size}"
        )
    return phi @ model.weights


def classify(h_value) -> float:
    """Threshold a predictor value at zero: +1 for h >= 0, else -1."""
    h_value = float(h_value)
    if not np.isfinite(h_value):
        raise DomainError("classify needs a finite predictor value")
    return 1.0 if h_value >= 0.0 else -1.0


# ---------------------------------------------------------------------------
# single-hidden-layer ANN (forward evaluation only)
# ---------------------------------------------------------------------------


@dataclass
class AnnSpec:
    """One hidden layer: output = sum_j w_out[j] * g(w_in[j] . x).

    Activations: "relu", "sigmoid", or "linear" with slope
    ``activation_scale`` (g(z) = scale * z).
    """

    weights_in: np.ndarray
    weights_out: np.ndarray
    activation: str = "relu"
    activation_scale: float = 1.0

    def __post_init__(self):
        self.weights_in = np.asarray(self.weights_in, dtype=float)
        self.weights_out = np.asarray(self.weights_out, dtype=float)
        if self.weights_in.ndim != 2:
            raise ShapeError("weights_in must be hidden x input")
        if self.weights_out.shape != (self.weights_in.shape[0],):
            raise ShapeError(
                f"weights_out must have length {self.weights_in.shape[0]}"
            )
        if self.activation not in ("relu", "sigmoid", "linear"):
            raise DomainError(f"unknown activation {self.activation!r}")
        if not (np.all(np.isfinite(self.weights_in))
                and np.all(np.isfinite(self.weights_out))):
            raise DomainError("ANN weights must be finite")

    @property
    def input_dim(self):
        return self.weights_in.shape[1]

    @property
    def hidden_dim(self):
        return self.weights_in.shape[0]


def _activate(spec: AnnSpec, z):
    if spec.activation == "relu":
        return np.maximum(z, 0.0)
    if spec.activation == "sigmoid":
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    return spec.activation_scale * z


def ann_forward(spec: AnnSpec, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (spec.input_dim,):
        raise ShapeError(f"input must have shape ({spec.input_dim},), got {x.shape}")
    return float(spec.weights_out @ _activate(spec, spec.weights_in @ x))


def triangle_ann(activation="relu", activation_scale=1.0) -> AnnSpec:
    """The three-unit network whose ReLU forward map is the unit triangle
    on [-1, 1]: h(x) = g(x+1) - 2 g(x) + g(x-1) with inputs (1, x)."""
    return AnnSpec(
        weights_in=np.array([[1.0, 1.0], [0.0, 1.0], [-1.0, 1.0]]),
        weights_out=np.array([1.0, -2.0, 1.0]),
        activation=activation,
        activation_scale=activation_scale,
    )


# ---------------------------------------------------------------------------
# decision trees
# ---------------------------------------------------------------------------


@dataclass
class Leaf:
    value: float


@dataclass
class Split:
    """Axis-aligned test x[feature] <= threshold; equality goes to ``yes``."""

    feature: int
    threshold: float
    yes: Union["Split", Leaf]
    no: Union["Split", Leaf]


@dataclass
class DecisionTree:
    root: Union[Split, Leaf]
    max_depth: int = 0

    def to_json(self) -> str:
        return json.dumps({"kind": "tree", "max_depth": self.max_depth,
                           "root": _node_to_dict(self.root)})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(_node_from_dict(obj["root"]), obj["max_depth"])


def _node_to_dict(node):
    if isinstance(node, Leaf):
        return {"leaf": node.value}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "yes": _node_to_dict(node.yes),
        "no": _node_to_dict(node.no),
    }


def _node_from_dict(d):
    if "leaf" in d:
        return Leaf(float(d["leaf"]))
    return Split(int(d["feature"]), float(d["threshold"]),
                 _node_from_dict(d["yes"]), _node_from_dict(d["no"]))


def tree_predict(tree: DecisionTree, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    node = tree.root
    while isinstance(node, Split):
        if node.feature >= x.size:
            raise ShapeError(
                f"tree tests feature {node.feature}, input has {x.size}"
            )
        node = node.yes if x[node.feature] <= node.threshold else node.no
    return float(node.value)


# ---------------------------------------------------------------------------
# k-nearest neighbours
# ---------------------------------------------------------------------------


@dataclass
class KnnModel:
    """Prediction by the k nearest training points (Euclidean metric)."""

    train: LabeledDataset
    k: int
    mode: str = "mean"

    def __post_init__(self):
        if self.mode not in ("mean", "majority"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if not 1 <= self.k <= self.train.m:
            raise SizeError(f"k must be in [1, {self.train.m}], got {self.k}")
        if self.train.labels is None:
            raise DomainError("k-NN needs a labeled dataset")


def knn_predict(train: LabeledDataset, k, x, mode="mean") -> float:
    """Mean (regression) or majority vote (classification) of the k nearest
    labels. Distance ties break towards the smaller data-point index,
    vote ties towards +1."""
    model = KnnModel(train, int(k), mode)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (train.n,):
        raise ShapeError(f"query must have shape ({train.n},), got {x.shape}")
    d2 = ((train.features - x) ** 2).sum(axis=1)
    order = np.argsort(d2, kind="stable")[: model.k]
    neigh = train.labels[order]
    if mode == "mean":
        return float(neigh.mean())
    plus = int((neigh > 0).sum())
    return 1.0 if plus >= model.k - plus else -1.0


# ---------------------------------------------------------------------------
# generic prediction
# ---------------------------------------------------------------------------


def predict(model, x) -> float:
    """Evaluate any supported model (or a plain callable) on one point."""
    if isinstance(model, LinearModel):
        return predict_linear(model, x)
    if isinstance(model, DecisionTree):
        return tree_predict(model, x)
    if isinstance(model, AnnSpec):
        return ann_forward(model, x)
    if isinstance(model, KnnModel):
        return knn_predict(model.train, model.k, x, model.mode)
    if callable(model):
        return float(model(np.atleast_1d(np.asarray(x, dtype=float))))
    raise DomainError(f"cannot predict with object of type {type(model).__name__}")


def predict_many(model, xs) -> np.ndarray:
    """Row-wise prediction; fast path for linear models."""
    if isinstance(model, LinearModel):
        return predict_linear_many(model, xs)
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    return np.array([predict(model, row) for row in xs])
