"""PCA via eigendecomposition of the sample covariance, random projections,
and the PCA-then-regression pipeline."""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numerics
from .data import LabeledDataset, as_features
from .errors import DomainError, ShapeError
from .models import LinearModel, predict_linear_many


@dataclass
class PcaModel:
    """Rows of ``compression`` are the top-n eigenvectors of the sample
    covariance; ``spectrum`` holds all D eigenvalues in descending order.
    ``reconstruction_error`` is the trailing-eigenvalue sum."""

    compression: np.ndarray
    spectrum: np.ndarray
    n_components: int
    centered: bool
    center: Optional[np.ndarray]
    reconstruction_error: float

    def to_json(self) -> str:
        return json.dumps({
            "compression": self.compression.tolist(),
            "spectrum": self.spectrum.tolist(),
            "n_components": self.n_components,
            "centered": self.centered,
            "center": None if self.center is None else self.center.tolist(),
            "reconstruction_error": self.reconstruction_error,
        }, sort_keys=True)


def fit_pca(data, n_components, center=True) -> PcaModel:
    """Keep the ``n_components`` top eigenvectors of Q = (1/m) Z^T Z
    (computed on centered points by default)."""
    z = as_features(data)
    m, dim = z.shape
    n_components = int(n_components)
    if not 1 <= n_components <= dim:
        raise ShapeError(f"n_components must be in [1, {dim}], got {n_components}")
    mean = z.mean(axis=0) if center else None
    zc = z - mean if center else z
    q = zc.T @ zc / m
    evd = numerics.sym_evd(q)
    spectrum = np.maximum(evd.eigenvalues, 0.0)  # clip Jacobi round-off
    w = evd.eigenvectors[:, :n_components].T.copy()
    return PcaModel(
        compression=w,
        spectrum=spectrum,
        n_components=n_components,
        centered=bool(center),
        center=mean,
        reconstruction_error=float(spectrum[n_components:].sum()),
    )


def _shift(model, z, sign):
    if model.centered:
        return z + sign * model.center
    return z


def compress(model: PcaModel, z) -> np.ndarray:
    """x = W (z - center); accepts one point or a stack of rows."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    pts = np.atleast_2d(z)
    if pts.shape[1] != model.compression.shape[1]:
        raise ShapeError(
            f"points have {pts.shape[1]} coordinates, model expects "
            f"{model.compression.shape[1]}"
        )
    x = _shift(model, pts, -1.0) @ model.compression.T
    return x[0] if single else x


def reconstruct(model: PcaModel, x) -> np.ndarray:
    """z = W^T x + center (the optimal reconstruction for this W)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    feats = np.atleast_2d(x)
    if feats.shape[1] != model.n_components:
        raise ShapeError(
            f"features have {feats.shape[1]} components, model keeps "
            f"{model.n_components}"
        )
    z = feats @ model.compression
    z = _shift(model, z, 1.0)
    return z[0] if single else z


def reconstruction_error_direct(model: PcaModel, data) -> float:
    """(1/m) sum ||z - reconstruct(compress(z))||^2, straight from the data."""
    z = as_features(data)
    back = reconstruct(model, compress(model, z))
    return float(((z - back) ** 2).sum(axis=1).mean())


def random_projection(dim, n_components, dist="gaussian", seed=0) -> np.ndarray:
    """n x D compression matrix with i.i.d. entries scaled by 1/sqrt(n), so
    squared norms are preserved in expectation."""
    if n_components > dim:
        raise ShapeError(f"n_components {n_components} exceeds dimension {dim}")
    rng = np.random.default_rng(seed)
    if dist == "gaussian":
        w = rng.standard_normal((n_components, dim))
    elif dist == "bernoulli":
        w = rng.integers(0, 2, size=(n_components, dim)) * 2.0 - 1.0
    else:
        raise DomainError(f"unknown distribution {dist!r}")
    return w / np.sqrt(n_components)


@dataclass
class PcaRegressionModel:
    pca: PcaModel
    linear: LinearModel

    def predict(self, z):
        x = compress(self.pca, z)
        if np.asarray(z).ndim == 1:
            return float(predict_linear_many(self.linear, x[None, :])[0])
        return predict_linear_many(self.linear, x)


def pca_regression(d: LabeledDataset, n_components, ridge_lam=None
                   ) -> PcaRegressionModel:
    """Compress long feature vectors with (uncentered) PCA, then run linear
    (or ridge) regression on the compressed features.

    Requires n_components < m: compressing to fewer features than training
    points is what makes the downstream regression well-posed instead of
    overfitting.
    """
    from .learners import RidgeSpec, fit_linreg_closed, fit_ridge_closed

    if d.labels is None:
        raise DomainError("pca_regression needs labels")
    if n_components >= d.m:
        raise DomainError(
            f"n_components = {n_components} must stay below m = {d.m}: "
            "fitting as many compressed features as training points overfits"
        )
    pca = fit_pca(d.features, n_components, center=False)
    compressed = LabeledDataset(compress(pca, d.features), d.labels, d.label_kind)
    if ridge_lam is None:
        linear = fit_linreg_closed(compressed)
    else:
        linear = fit_ridge_closed(compressed, RidgeSpec(ridge_lam))
    return PcaRegressionModel(pca=pca, linear=linear)


def two_pc_scatter_csv(data, center=True) -> str:
    """CSV with the first two principal components of every data point."""
    z = as_features(data)
    model = fit_pca(z, min(2, z.shape[1]), center=center)
    x = compress(model, z)
    lines = ["pc1,pc2"]
    for row in np.atleast_2d(x):
        pc2 = row[1] if row.size > 1 else 0.0
        lines.append(f"{row[0]!r},{pc2!r}")
    return "\n".join(lines) + "\n"
