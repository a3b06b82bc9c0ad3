"""Datasets: CSV ingestion, scaling, normalization, splits, toy generator.

All randomness flows through numpy's seedable PCG64 generator
(``np.random.default_rng``), so every operation is reproducible per seed.
"""

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    ConstantFeatureError,
    DomainError,
    ParseError,
    SchemaError,
    ShapeError,
    SizeError,
)

LABEL_KINDS = ("real", "binary", "none")


@dataclass
class LabeledDataset:
    """m data points as rows of ``features``; optional labels.

    ``label_kind`` is "real", "binary" (labels in {-1, +1}) or "none".
    Datasets are treated as immutable after construction.
    """

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    label_kind: str = "none"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise ShapeError(
                f"features must be a 2-D array, got shape {self.features.shape}"
            )
        if self.features.shape[0] < 1:
            raise SizeError("dataset needs at least one data point")
        if not np.all(np.isfinite(self.features)):
            raise DomainError("features contain non-finite values")
        if self.label_kind not in LABEL_KINDS:
            raise DomainError(f"unknown label_kind {self.label_kind!r}")
        if self.label_kind == "none":
            self.labels = None
            return
        if self.labels is None:
            raise ShapeError(f"label_kind {self.label_kind!r} requires labels")
        self.labels = np.asarray(self.labels, dtype=float)
        if self.labels.shape != (self.features.shape[0],):
            raise ShapeError(
                f"labels must have shape ({self.features.shape[0]},), "
                f"got {self.labels.shape}"
            )
        if not np.all(np.isfinite(self.labels)):
            raise DomainError("labels contain non-finite values")
        if self.label_kind == "binary" and not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise DomainError("binary labels must lie in {-1, +1}")

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "LabeledDataset":
        labels = None if self.labels is None else self.labels[idx]
        return LabeledDataset(self.features[idx], labels, self.label_kind)


@dataclass
class SplitPair:
    train: LabeledDataset
    val: LabeledDataset
    split_seed: int
    train_fraction: float


@dataclass
class ToyModelSpec:
    """Linear-Gaussian generator: x ~ N(0, I), y = w_true.x + N(0, sigma^2)."""

    w_true: np.ndarray
    noise_variance: float
    sample_count: int
    seed: int = 0

    def __post_init__(self):
        self.w_true = np.asarray(self.w_true, dtype=float)
        if self.w_true.ndim != 1 or self.w_true.size < 1:
            raise ShapeError("w_true must be a non-empty vector")
        if self.noise_variance < 0.0:
            raise DomainError("noise variance must be >= 0")
        if self.sample_count < 1:
            raise SizeError("sample_count must be >= 1")

    @property
    def n(self) -> int:
        return self.w_true.size


@dataclass
class NormalizationParams:
    """Per-feature means and scale factors; applies the fitted transform."""

    means: np.ndarray
    sigmas: np.ndarray

    def apply(self, d: LabeledDataset) -> LabeledDataset:
        if d.n != self.means.size:
            raise ShapeError(
                f"dataset has {d.n} features, parameters describe {self.means.size}"
            )
        feats = (d.features - self.means) / self.sigmas
        return LabeledDataset(feats, d.labels, d.label_kind)

    def to_json(self) -> str:
        return json.dumps(
            {"means": self.means.tolist(), "sigmas": self.sigmas.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "NormalizationParams":
        obj = json.loads(text)
        return cls(
            means=np.asarray(obj["means"], dtype=float),
            sigmas=np.asarray(obj["sigmas"], dtype=float),
        )


def load_csv(path, feature_cols, label_col=None) -> LabeledDataset:
    """Read a comma-separated file with a header row into a dataset.

    Dialect: ',' separator, '.' decimal point, UTF-8, first row names the
    columns. Non-numeric cells raise ParseError with 1-based data row and
    column name; a missing column raises SchemaError. When ``label_col`` is
    given, the label kind is "binary" if every label is -1 or +1 and "real"
    otherwise.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected a header row")
        header = [h.strip() for h in header]
        wanted = list(feature_cols) + ([label_col] if label_col is not None else [])
        col_idx = {}
        for name in wanted:
            if name not in header:
                raise SchemaError(f"{path}: column {name!r} not found in header")
            col_idx[name] = header.index(name)

        rows = []
        for row_num, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            values = []
            for name in wanted:
                cell = row[col_idx[name]].strip() if col_idx[name] < len(row) else ""
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: cannot parse {cell!r} at (row {row_num}, "
                        f"col {name!r})",
                        row=row_num,
                        column=name,
                    )
            rows.append(values)

    if not rows:
        raise SizeError(f"{path}: no data rows")
    table = np.asarray(rows, dtype=float)
    n_feat = len(feature_cols)
    features = table[:, :n_feat]
    if label_col is None:
        return LabeledDataset(features, None, "none")
    labels = table[:, n_feat]
    kind = "binary" if np.all(np.isin(labels, (-1.0, 1.0))) else "real"
    return LabeledDataset(features, labels, kind)


def min_max_scale(values):
    """Divide by the maximum entry; requires a positive maximum."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 1:
        raise ShapeError("expected a non-empty vector")
    top = float(values.max())
    if top <= 0.0:
        raise DomainError(f"maximum must be positive to scale, got {top}")
    return values / top


def normalize(d: LabeledDataset):
    """Center each feature column, then scale it to unit mean square.

    The scale is the per-feature root mean square of the centered values
    (1/m normalization). Returns the transformed dataset together with
    NormalizationParams that replay the identical transform on new data.
    Raises ConstantFeatureError naming the first zero-variance column.
    """
    if d.m < 2:
        raise SizeError("normalization needs at least 2 data points")
    means = d.features.mean(axis=0)
    centered = d.features - means
    sigmas = np.sqrt((centered ** 2).mean(axis=0))
    scale = np.maximum(np.abs(d.features).max(axis=0), 1.0)
    bad = np.nonzero(sigmas <= 1e-13 * scale)[0]
    if bad.size:
        raise ConstantFeatureError(
            f"feature column {int(bad[0])} has zero empirical variance"
        )
    params = NormalizationParams(means=means, sigmas=sigmas)
    return LabeledDataset(centered / sigmas, d.labels, d.label_kind), params


def split(d: LabeledDataset, train_fraction, seed) -> SplitPair:
    """Uniformly shuffle indices and cut off the training prefix."""
    if not 0.0 < train_fraction < 1.0:
        raise DomainError(f"train_fraction must be in (0, 1), got {train_fraction}")
    m_train = int(d.m * train_fraction + 0.5)
    if m_train < 1 or d.m - m_train < 1:
        raise SizeError(
            f"fraction {train_fraction} leaves an empty partition for m={d.m}"
        )
    perm = np.random.default_rng(seed).permutation(d.m)
    return SplitPair(
        train=d.subset(perm[:m_train]),
        val=d.subset(perm[m_train:]),
        split_seed=int(seed),
        train_fraction=float(train_fraction),
    )


def generate_toy(spec: ToyModelSpec) -> LabeledDataset:
    """Draw a dataset from the linear-Gaussian toy model (deterministic per seed)."""
    rng = np.random.default_rng(spec.seed)
    x = rng.standard_normal((spec.sample_count, spec.n))
    eps = np.sqrt(spec.noise_variance) * rng.standard_normal(spec.sample_count)
    y = x @ spec.w_true + eps
    return LabeledDataset(x, y, "real")


def as_features(data) -> np.ndarray:
    """Accept a LabeledDataset or a 2-D array and return the feature matrix."""
    if isinstance(data, LabeledDataset):
        return data.features
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise ShapeError(f"expected 2-D features, got shape {arr.shape}")
    return arr
