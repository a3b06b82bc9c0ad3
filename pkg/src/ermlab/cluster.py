"""Hard and soft clustering.

k-means is the fixed-point variant: deterministic min-index tie-breaking in
the assignment step, activity indicators so empty clusters keep their stale
mean, and a stopping rule on the decrease of the clustering error (mean
squared distance of each point to its assigned mean). EM soft clustering
fits a Gaussian mixture and monitors the negative log-likelihood.

Cluster indices are 0-based throughout.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _accel, numerics
from .data import as_features
from .errors import DomainError, ShapeError, SizeError

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class HardClustering:
    assignments: np.ndarray
    means: np.ndarray
    error: float
    iterations: int
    error_trace: np.ndarray

    @property
    def k(self):
        return self.means.shape[0]

    def assignments_csv(self) -> str:
        lines = ["point,cluster"]
        lines += [f"{i},{int(c)}" for i, c in enumerate(self.assignments)]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "means": self.means.tolist(),
            "error": self.error,
            "iterations": self.iterations,
            "error_trace": self.error_trace.tolist(),
        }, sort_keys=True)


@dataclass
class GmmParams:
    means: np.ndarray
    covariances: np.ndarray
    probabilities: np.ndarray

    @property
    def k(self):
        return self.means.shape[0]


@dataclass
class SoftClustering:
    degrees: np.ndarray
    params: GmmParams
    neg_log_likelihood_trace: np.ndarray
    iterations: int

    def degrees_csv(self) -> str:
        k = self.degrees.shape[1]
        lines = ["point," + ",".join(f"degree_{c}" for c in range(k))]
        for i, row in enumerate(self.degrees):
            lines.append(f"{i}," + ",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "means": self.params.means.tolist(),
            "covariances": self.params.covariances.tolist(),
            "probabilities": self.params.probabilities.tolist(),
            "neg_log_likelihood_trace": self.neg_log_likelihood_trace.tolist(),
            "iterations": self.iterations,
        }, sort_keys=True)


def clustering_error(x, means, assignments) -> float:
    """Mean squared distance of each point to its assigned cluster mean."""
    diff = x - means[assignments]
    return float((diff ** 2).sum(axis=1).mean())


def _child_seed(seed, idx):
    if isinstance(seed, (list, tuple, np.ndarray)):
        return [int(s) for s in seed] + [int(idx)]
    return [int(seed), int(idx)]


def _draw_gaussian(rng, mean, cov, count):
    # mean + L z with our own Cholesky factor (ridge the covariance if flat)
    n = mean.size
    c = cov + 1e-12 * (np.trace(cov) / max(n, 1) + 1.0) * np.eye(n)
    l = numerics.cholesky(c)
    return mean + rng.standard_normal((count, n)) @ l.T


def _init_means(x, k, init, seed):
    if isinstance(init, np.ndarray) or isinstance(init, (list, tuple)):
        means = np.asarray(init, dtype=float)
        if means.shape != (k, x.shape[1]):
            raise ShapeError(
                f"means must have shape ({k}, {x.shape[1]}), got {means.shape}"
            )
        return means.copy()
    rng = np.random.default_rng(seed)
    if init == "sample-points":
        idx = rng.choice(x.shape[0], size=k, replace=False)
        return x[idx].copy()
    if init == "random-normal":
        mu = x.mean(axis=0)
        xc = x - mu
        cov = xc.T @ xc / x.shape[0]
        return _draw_gaussian(rng, mu, cov, k)
    raise DomainError(f"unknown init strategy {init!r}")


def kmeans(data, k, init="sample-points", eps=0.0, seed=0, max_iters=1000
           ) -> HardClustering:
    """Fixed-point k-means.

    Alternates min-index nearest-mean assignments with mean updates applied
    to active clusters only, and stops once the clustering-error decrease is
    at most ``eps``. Terminates in finitely many iterations even for eps=0.
    """
    x = as_features(data)
    m = x.shape[0]
    if not 1 <= k <= m:
        raise SizeError(f"k must be in [1, {m}], got {k}")
    if eps < 0.0:
        raise DomainError("eps must be >= 0")
    means = _init_means(x, int(k), init, seed)
    labels, _ = _accel.assign_nearest(x, means)
    e_prev = clustering_error(x, means, labels)
    trace = [e_prev]
    iterations = 0
    for r in range(1, max_iters + 1):
        labels, _ = _accel.assign_nearest(x, means)
        counts = np.bincount(labels, minlength=k)
        for c in range(k):
            if counts[c] > 0:
                means[c] = x[labels == c].mean(axis=0)
        e = clustering_error(x, means, labels)
        trace.append(e)
        iterations = r
        if e_prev - e <= eps:
            break
        e_prev = e
    return HardClustering(
        assignments=labels,
        means=means,
        error=float(trace[-1]),
        iterations=iterations,
        error_trace=np.asarray(trace),
    )


def kmeans_multi_restart(data, k, restarts, eps=0.0, seed=0,
                         init="sample-points") -> HardClustering:
    """Best-by-error k-means over several seeded restarts (ties: first)."""
    if restarts < 1:
        raise DomainError("restarts must be >= 1")
    best = None
    for r in range(restarts):
        result = kmeans(data, k, init=init, eps=eps, seed=_child_seed(seed, r))
        if best is None or result.error < best.error:
            best = result
    return best


def _split_worst(x, prev: HardClustering):
    # warm start for k+1 clusters: previous means plus the worst-fit point
    d2 = ((x - prev.means[prev.assignments]) ** 2).sum(axis=1)
    extra = x[int(np.argmax(d2))]
    return np.vstack([prev.means, extra])


def elbow_sweep(data, k_max, restarts=5, eps=0.0, seed=0):
    """(k, best clustering error) for k = 1..k_max.

    Each k also tries a warm start built from the previous best result plus
    one extra mean at the worst-fit point, which makes the error sequence
    nonincreasing in k.
    """
    x = as_features(data)
    if k_max > x.shape[0]:
        raise SizeError(f"k_max must be at most m = {x.shape[0]}")
    out = []
    prev = None
    for k in range(1, int(k_max) + 1):
        best = kmeans_multi_restart(x, k, restarts, eps=eps,
                                    seed=_child_seed(seed, k))
        if prev is not None:
            warm = kmeans(x, k, init=_split_worst(x, prev), eps=eps)
            if warm.error < best.error:
                best = warm
        out.append((k, best.error))
        prev = best
    return out


# ---------------------------------------------------------------------------
# Gaussian mixtures via EM
# ---------------------------------------------------------------------------


def _regularize_cov(cov, floor):
    n = cov.shape[0]
    lam_min = float(numerics.sym_evd(cov).eigenvalues[-1])
    if lam_min < floor:
        ridge = 1e-6 * (np.trace(cov) / n) + floor - min(lam_min, 0.0)
        cov = cov + ridge * np.eye(n)
    return cov


def _log_gaussian(x, mean, cov):
    l = numerics.cholesky(cov)
    log_det = 2.0 * float(np.log(np.diagonal(l)).sum())
    maha = _accel.mahalanobis_sq(np.ascontiguousarray(x - mean), l)
    return -0.5 * (maha + log_det + x.shape[1] * _LOG_2PI)


def _degrees_from_log(log_joint):
    # row-wise softmax in log space; degenerate rows fall back to uniform
    top = log_joint.max(axis=1, keepdims=True)
    bad = ~np.isfinite(top[:, 0])
    top[bad] = 0.0
    w = np.exp(log_joint - top)
    norm = w.sum(axis=1, keepdims=True)
    degrees = np.where(bad[:, None], 1.0 / log_joint.shape[1], w / norm)
    log_marginal = (top[:, 0] + np.log(norm[:, 0]))
    log_marginal[bad] = -np.inf
    return degrees, log_marginal


def gmm_em(data, k, init="kmeans", max_iters=200, tol=1e-9, seed=0,
           cov_floor=1e-9) -> SoftClustering:
    """Soft clustering by EM on a Gaussian mixture.

    Alternates the a-posteriori degree update with the weighted parameter
    updates (cluster probability, mean, covariance). The negative
    log-likelihood is tracked per iteration and is nonincreasing up to a
    1e-9 slack; iteration stops once its decrease is at most ``tol``.
    Covariances are ridge-regularized whenever their smallest eigenvalue
    falls under ``cov_floor``, so collapse never crashes the run.

    ``init`` adds a "kmeans" strategy (the default) on top of the k-means
    initializers: means seeded by a short multi-restart k-means, which
    avoids the degenerate optimum where several components start inside
    the same mode.
    """
    x = as_features(data)
    m, n = x.shape
    if not 1 <= k <= m:
        raise SizeError(f"k must be in [1, {m}], got {k}")
    if cov_floor <= 0.0:
        raise DomainError("cov_floor must be > 0")
    if isinstance(init, str) and init == "kmeans":
        means = kmeans_multi_restart(x, int(k), restarts=5, seed=seed).means.copy()
    else:
        means = _init_means(x, int(k), init, seed)
    mu = x.mean(axis=0)
    xc = x - mu
    base_cov = _regularize_cov(xc.T @ xc / m, cov_floor)
    covs = np.repeat(base_cov[None, :, :], k, axis=0)
    probs = np.full(k, 1.0 / k)

    nll_prev = None
    trace = []
    degrees = np.full((m, k), 1.0 / k)
    iterations = 0
    for it in range(1, max_iters + 1):
        log_joint = np.empty((m, k))
        for c in range(k):
            with np.errstate(divide="ignore"):
                log_p = np.log(probs[c]) if probs[c] > 0.0 else -np.inf
            log_joint[:, c] = log_p + _log_gaussian(x, means[c], covs[c])
        degrees, log_marginal = _degrees_from_log(log_joint)
        nll = -float(log_marginal.sum())
        trace.append(nll)
        iterations = it
        if nll_prev is not None and nll_prev - nll <= tol:
            break
        nll_prev = nll

        counts, new_means, new_covs = _accel.weighted_moments(x, degrees)
        for c in range(k):
            if counts[c] <= 1e-12 * m:
                # dead cluster: keep its previous parameters
                new_means[c] = means[c]
                new_covs[c] = covs[c]
            else:
                new_covs[c] = _regularize_cov(new_covs[c], cov_floor)
        means = new_means
        covs = new_covs
        probs = counts / m

    params = GmmParams(means=means, covariances=covs, probabilities=probs)
    return SoftClustering(
        degrees=degrees,
        params=params,
        neg_log_likelihood_trace=np.asarray(trace),
        iterations=iterations,
    )


def gmm_hard_limit_check(data, k, sigma_sq, seed=0, init="sample-points",
                         max_iters=1000) -> HardClustering:
    """EM with covariances held fixed at sigma_sq * I, degrees rounded to
    the nearest cluster. For vanishing sigma_sq the rounded assignments
    coincide with k-means started from the same initial means."""
    x = as_features(data)
    m, n = x.shape
    if sigma_sq <= 0.0:
        raise DomainError("sigma_sq must be > 0")
    if not 1 <= k <= m:
        raise SizeError(f"k must be in [1, {m}], got {k}")
    means = _init_means(x, int(k), init, seed)
    probs = np.full(k, 1.0 / k)
    labels = None
    iterations = 0
    trace = []
    for it in range(1, max_iters + 1):
        d2 = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        log_joint = np.log(np.maximum(probs, 1e-300))[None, :] - d2 / (2.0 * sigma_sq)
        degrees, _ = _degrees_from_log(log_joint)
        new_labels = np.argmax(degrees, axis=1)
        counts = degrees.sum(axis=0)
        for c in range(k):
            if counts[c] > 1e-12 * m:
                means[c] = (degrees[:, c] @ x) / counts[c]
        probs = counts / m
        trace.append(clustering_error(x, means, new_labels))
        iterations = it
        if labels is not None and np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return HardClustering(
        assignments=labels,
        means=means,
        error=clustering_error(x, means, labels),
        iterations=iterations,
        error_trace=np.asarray(trace),
    )
