"""End-to-end estimators: closed-form and GD regression, ridge, logistic
regression, Bayes classifiers, Gaussian maximum likelihood, greedy decision
trees, and a subgradient SVM.

No estimator adds an implicit intercept; callers wanting one prepend a
constant-1 feature column (or use a feature map with a constant term).
"""

from dataclasses import dataclass

import numpy as np

from . import numerics
from .data import LabeledDataset, as_features
from .errors import (
    DegenerateLabelsError,
    DomainError,
    ShapeError,
    SingularMatrixError,
    SizeError,
)
from .models import DecisionTree, Leaf, LinearModel, Split
from .optimize import GdConfig, run_gd, sigmoid


@dataclass
class RidgeSpec:
    lam: float

    def __post_init__(self):
        if self.lam < 0.0:
            raise DomainError("lambda must be >= 0")


@dataclass
class GaussianClassParams:
    """Class-conditional Gaussian estimates behind a Bayes classifier."""

    mu_plus: np.ndarray
    mu_minus: np.ndarray
    sigma: np.ndarray
    m_plus: int
    m_minus: int


def _gram_rank_check(g, advice):
    evd = numerics.sym_evd(g)
    lam_max = float(evd.eigenvalues[0])
    lam_min = float(evd.eigenvalues[-1])
    if lam_max <= 0.0 or lam_min <= numerics.RANK_RTOL * lam_max:
        raise SingularMatrixError(advice)


def fit_linreg_closed(d: LabeledDataset) -> LinearModel:
    """Least squares via the normal equations X^T X w = X^T y.

    Raises SingularMatrixError when X^T X is rank deficient (e.g. fewer
    data points than features); use ridge regression or GD then.
    """
    if d.labels is None:
        raise DomainError("linear regression needs labels")
    g = d.features.T @ d.features
    _gram_rank_check(
        g,
        "X^T X is singular: the closed form is invalid; "
        "use ridge regression or gradient descent",
    )
    w = numerics.solve_spd(g, d.features.T @ d.labels)
    return LinearModel(w)


def fit_linreg_minnorm(d: LabeledDataset) -> LinearModel:
    """Minimum-norm least-squares solution w = X^T (X X^T)^-1 y.

    For m <= n with independent feature vectors this interpolates the
    training data exactly (zero training error). Complements
    fit_linreg_closed, whose normal-equations form is invalid there.
    """
    if d.labels is None:
        raise DomainError("linear regression needs labels")
    k = d.features @ d.features.T
    _gram_rank_check(k, "X X^T is singular: feature vectors are dependent")
    a = numerics.solve_spd(k, d.labels)
    return LinearModel(d.features.T @ a)


def fit_ridge_closed(d: LabeledDataset, spec: RidgeSpec) -> LinearModel:
    """Ridge solution w = ((1/m) X^T X + lam I)^-1 (1/m) X^T y.

    Valid for every dataset when lam > 0, including singular X^T X.
    """
    if d.labels is None:
        raise DomainError("ridge regression needs labels")
    if spec.lam <= 0.0:
        raise DomainError("the always-valid closed form needs lambda > 0")
    g = d.features.T @ d.features / d.m + spec.lam * np.eye(d.n)
    w = numerics.solve_spd(g, d.features.T @ d.labels / d.m)
    return LinearModel(w)


def _require_both_classes(d):
    if d.labels is None or not np.all(np.isin(d.labels, (-1.0, 1.0))):
        raise DomainError("binary labels in {-1, +1} required")
    if np.all(d.labels > 0) or np.all(d.labels < 0):
        raise DegenerateLabelsError("all labels belong to a single class")


def fit_logreg(d: LabeledDataset, config: GdConfig = None):
    """Logistic regression by gradient descent; returns (model, trace)."""
    _require_both_classes(d)
    trace = run_gd("logreg", d, config or GdConfig())
    return LinearModel(trace.weights), trace


def predict_proba(model: LinearModel, x) -> float:
    """p(y = +1 | x) = 1 / (1 + exp(-w.x)) for a logistic-regression model."""
    from .models import predict_linear

    return float(sigmoid(np.array(predict_linear(model, x))))


def gaussian_ml(points):
    """Maximum-likelihood mean and (1/m-normalized) covariance."""
    z = as_features(points)
    if z.shape[0] < 1:
        raise SizeError("need at least one point")
    mu = z.mean(axis=0)
    zc = z - mu
    cov = zc.T @ zc / z.shape[0]
    return mu, 0.5 * (cov + cov.T)


def fit_bayes(d: LabeledDataset, naive=False):
    """Bayes classifier h(x) = w.x with w = Sigma^-1 (mu_plus - mu_minus).

    Class means are per-class averages; the covariance is pooled around the
    global mean. ``naive=True`` keeps only its diagonal, which stays
    invertible even for m < n; the full estimate requires m >= n and raises
    SingularMatrixError (advising naive mode) when singular.
    """
    _require_both_classes(d)
    x = d.features
    y = d.labels
    plus = y > 0
    mu_plus = x[plus].mean(axis=0)
    mu_minus = x[~plus].mean(axis=0)
    mu_all = x.mean(axis=0)
    xc = x - mu_all
    sigma = xc.T @ xc / d.m
    sigma = 0.5 * (sigma + sigma.T)
    if naive:
        sigma = np.diag(np.diagonal(sigma).copy())
    else:
        try:
            _gram_rank_check(sigma, "")
        except SingularMatrixError:
            raise SingularMatrixError(
                "pooled covariance is singular (need m >= n data points); "
                "try the naive variant (diagonal covariance)"
            )
    w = numerics.solve_spd(sigma, mu_plus - mu_minus)
    params = GaussianClassParams(
        mu_plus=mu_plus,
        mu_minus=mu_minus,
        sigma=sigma,
        m_plus=int(plus.sum()),
        m_minus=int((~plus).sum()),
    )
    return LinearModel(w), params


# ---------------------------------------------------------------------------
# greedy decision trees
# ---------------------------------------------------------------------------


def default_thresholds(d: LabeledDataset):
    """Midpoints of sorted unique values, per feature."""
    out = []
    for j in range(d.n):
        vals = np.unique(d.features[:, j])
        out.append(0.5 * (vals[1:] + vals[:-1]) if vals.size > 1
                   else np.empty(0))
    return out


def _sse(labels):
    # sum of squared deviations from the mean (squared-loss cost of a leaf)
    if labels.size == 0:
        return 0.0
    mu = labels.mean()
    return float(((labels - mu) ** 2).sum())


class _GrowingLeaf:
    def __init__(self, idx, depth):
        self.idx = idx
        self.depth = depth


def grow_tree(d: LabeledDataset, max_depth, candidate_thresholds=None) -> DecisionTree:
    """Greedy tree ERM under squared loss.

    Starts from a single leaf (label mean) and repeatedly applies the
    (leaf, feature, threshold) expansion with the largest decrease of the
    training risk; stops when no expansion decreases the risk or every leaf
    is at ``max_depth``. For binary {-1,+1} labels the fitted leaf means are
    snapped to the majority label (ties to +1) after growing.
    """
    if d.labels is None:
        raise DomainError("tree growing needs labels")
    if max_depth < 0:
        raise DomainError("max_depth must be >= 0")
    thresholds = candidate_thresholds or default_thresholds(d)
    if len(thresholds) != d.n:
        raise ShapeError(f"need a threshold list for each of the {d.n} features")
    thresholds = [np.asarray(t, dtype=float) for t in thresholds]

    y = d.labels
    x = d.features
    root = _GrowingLeaf(np.arange(d.m), 0)
    leaves = [root]

    while True:
        best = None  # (decrease, leaf_pos, feature, threshold, yes_idx, no_idx)
        for pos, leaf in enumerate(leaves):
            if leaf.depth >= max_depth or leaf.idx.size < 2:
                continue
            base = _sse(y[leaf.idx])
            for j in range(d.n):
                for t in thresholds[j]:
                    mask = x[leaf.idx, j] <= t
                    yes_idx = leaf.idx[mask]
                    no_idx = leaf.idx[~mask]
                    if yes_idx.size == 0 or no_idx.size == 0:
                        continue
                    dec = base - _sse(y[yes_idx]) - _sse(y[no_idx])
                    if best is None or dec > best[0] + 1e-15:
                        best = (dec, pos, j, float(t), yes_idx, no_idx)
        if best is None or best[0] <= 1e-12 * max(1.0, _sse(y)):
            break
        dec, pos, j, t, yes_idx, no_idx = best
        leaf = leaves.pop(pos)
        yes_leaf = _GrowingLeaf(yes_idx, leaf.depth + 1)
        no_leaf = _GrowingLeaf(no_idx, leaf.depth + 1)
        leaf.split = (j, t, yes_leaf, no_leaf)
        leaves.extend([yes_leaf, no_leaf])

    binary = d.label_kind == "binary" or np.all(np.isin(y, (-1.0, 1.0)))

    def leaf_value(idx):
        mu = float(y[idx].mean())
        if binary:
            return 1.0 if mu >= 0.0 else -1.0
        return mu

    def build(node):
        if hasattr(node, "split"):
            j, t, yes_leaf, no_leaf = node.split
            return Split(j, t, build(yes_leaf), build(no_leaf))
        return Leaf(leaf_value(node.idx))

    return DecisionTree(root=build(root), max_depth=int(max_depth))


def fit_svm(d: LabeledDataset, lam, config: GdConfig = None):
    """Soft-margin SVM by decaying-step subgradient descent.

    Returns (model, trace); the model holds the best-objective iterate, not
    the last one (subgradient methods are not monotone).
    """
    _require_both_classes(d)
    if lam <= 0.0:
        raise DomainError("lambda must be > 0")
    config = config or GdConfig(step_size="decaying", max_iters=2000)
    trace = run_gd("svm", d, config, lam=lam)
    return LinearModel(trace.weights), trace
