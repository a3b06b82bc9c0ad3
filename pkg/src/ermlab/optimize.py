"""Gradient descent with provable step sizes, SGD, and hinge subgradients.

Objectives (all means over the dataset):

linreg:  f(w) = mean (y - w.x)^2
logreg:  f(w) = mean log(1 + exp(-y w.x))
ridge:   f(w) = mean (y - w.x)^2 + lam ||w||^2
svm:     f(w) = mean max(0, 1 - y w.x) + lam ||w||^2   (subgradient method)

The automatic step size is 1 / lambda_max(H) with H the objective's Hessian
(or a uniform upper bound on it), which guarantees a monotone objective and
convergence for the smooth convex objectives above.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .data import LabeledDataset
from .errors import (
    DivergenceError,
    DomainError,
    NumericError,
    ShapeError,
    SizeError,
)
from .losses import softplus
from .numerics import max_eigenvalue

GD_OBJECTIVES = ("linreg", "logreg", "ridge", "svm")


@dataclass
class GdConfig:
    """step_size: a positive float, "auto" (from the Hessian eigenvalue
    bound) or "decaying" (1/k)."""

    step_size: Union[float, str] = "auto"
    max_iters: int = 100_000
    stop_tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.step_size, str):
            if self.step_size not in ("auto", "decaying"):
                raise DomainError(f"unknown step size mode {self.step_size!r}")
        elif self.step_size <= 0.0:
            raise DomainError("step size must be > 0")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if self.stop_tol < 0.0:
            raise DomainError("stop_tol must be >= 0")


@dataclass
class GdTrace:
    """Objective values f(w^(0)), f(w^(1)), ... plus the final iterate."""

    objectives: np.ndarray
    weights: np.ndarray
    iterations_used: int
    converged: bool
    step_size: float = 0.0

    def to_csv(self) -> str:
        lines = ["iteration,objective"]
        lines += [f"{i},{v!r}" for i, v in enumerate(self.objectives)]
        return "\n".join(lines) + "\n"


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_dims(w, d):
    w = np.asarray(w, dtype=float)
    if w.shape != (d.n,):
        raise ShapeError(f"weights must have shape ({d.n},), got {w.shape}")
    if d.m < 1:
        raise SizeError("empty dataset")
    return w


def _check_binary(d):
    if d.labels is None or not np.all(np.isin(d.labels, (-1.0, 1.0))):
        raise DomainError("objective needs binary labels in {-1, +1}")


def gd_step(w, grad, alpha):
    """One gradient step w - alpha * grad."""
    w = np.asarray(w, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if w.shape != grad.shape:
        raise ShapeError(f"shape mismatch {w.shape} vs {grad.shape}")
    if alpha <= 0.0:
        raise DomainError("step size must be > 0")
    if not np.all(np.isfinite(grad)):
        raise NumericError("gradient contains non-finite entries")
    return w - alpha * grad


def linreg_risk(w, d: LabeledDataset) -> float:
    w = _check_dims(w, d)
    r = d.labels - d.features @ w
    return float((r ** 2).mean())


def linreg_gradient(w, d: LabeledDataset) -> np.ndarray:
    w = _check_dims(w, d)
    return (2.0 / d.m) * (d.features.T @ (d.features @ w - d.labels))


def logreg_risk(w, d: LabeledDataset) -> float:
    w = _check_dims(w, d)
    _check_binary(d)
    return float(softplus(-d.labels * (d.features @ w)).mean())


def logreg_gradient(w, d: LabeledDataset) -> np.ndarray:
    w = _check_dims(w, d)
    _check_binary(d)
    z = d.labels * (d.features @ w)
    factor = d.labels * sigmoid(-z)  # y / (1 + exp(y w.x))
    return -(1.0 / d.m) * (d.features.T @ factor)


def logreg_hessian_diag(w, d: LabeledDataset) -> np.ndarray:
    """Diagonal entries p(1-p), p = sigmoid(w.x); all lie in [0, 1/4]."""
    w = _check_dims(w, d)
    p = sigmoid(d.features @ w)
    return p * (1.0 - p)


def ridge_objective(w, d: LabeledDataset, lam) -> float:
    w = np.asarray(w, dtype=float)
    return linreg_risk(w, d) + lam * float(w @ w)


def ridge_gradient(w, d: LabeledDataset, lam) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return linreg_gradient(w, d) + 2.0 * lam * w


def svm_objective(w, d: LabeledDataset, lam) -> float:
    w = _check_dims(w, d)
    _check_binary(d)
    margins = d.labels * (d.features @ w)
    return float(np.maximum(0.0, 1.0 - margins).mean()) + lam * float(w @ w)


def hinge_subgradient(w, d: LabeledDataset, lam) -> np.ndarray:
    """Subgradient of the soft-margin objective; 0 data term at the kink."""
    w = _check_dims(w, d)
    _check_binary(d)
    margins = d.labels * (d.features @ w)
    active = margins < 1.0
    g = -(d.features.T @ (d.labels * active)) / d.m
    return g + 2.0 * lam * w


def gram_max_eigenvalue(d: LabeledDataset) -> float:
    """lambda_max of (1/m) X^T X."""
    q = d.features.T @ d.features / d.m
    return max_eigenvalue(q, tol=1e-12)


def auto_step_size(objective, d: LabeledDataset, lam=0.0) -> float:
    """Convergence-guaranteeing step size 1 / lambda_max(Hessian).

    linreg: Hessian (2/m) X^T X            -> 1 / (2 lambda_max(Q))
    ridge:  Hessian (2/m) X^T X + 2 lam I  -> 1 / (2 lambda_max(Q) + 2 lam)
    logreg: Hessian bound (1/(4m)) X^T X   -> 4 / lambda_max(Q)

    with Q = (1/m) X^T X. The logistic Hessian (1/m) X^T D X has diagonal
    entries d_i = p(1-p) <= 1/4, so the bound is uniform in w.
    """
    if d.m < 1:
        raise SizeError("empty dataset")
    lam_max = gram_max_eigenvalue(d)
    if lam_max <= 1e-300:
        raise DomainError("all-zero features: no curvature to derive a step size")
    if objective == "linreg":
        return 1.0 / (2.0 * lam_max)
    if objective == "ridge":
        return 1.0 / (2.0 * lam_max + 2.0 * lam)
    if objective == "logreg":
        return 4.0 / lam_max
    raise DomainError(f"no Hessian-based step size for objective {objective!r}")


def _objective_fns(objective, lam):
    if objective == "linreg":
        return linreg_risk, linreg_gradient
    if objective == "logreg":
        return logreg_risk, logreg_gradient
    if objective == "ridge":
        return (lambda w, d: ridge_objective(w, d, lam),
                lambda w, d: ridge_gradient(w, d, lam))
    if objective == "svm":
        return (lambda w, d: svm_objective(w, d, lam),
                lambda w, d: hinge_subgradient(w, d, lam))
    raise DomainError(f"unknown objective {objective!r}; use one of {GD_OBJECTIVES}")


def run_gd(objective, d: LabeledDataset, config: GdConfig = None, lam=0.0) -> GdTrace:
    """Gradient descent from w = 0 with objective tracking.

    Stops when the objective decrease drops to ``stop_tol`` or after
    ``max_iters`` steps; raises DivergenceError when the objective grows
    past ten times its initial value (step size too large).

    The non-smooth svm objective is run for the full iteration budget with
    no early stop and no divergence guard (subgradient steps are not
    monotone) and the best-objective iterate is returned. Its decaying
    schedule is 1 / (max(1, 2 lam) k): the plain 1/k steps, matched to the
    strong convexity of the ridge penalty once 2 lam exceeds 1.
    """
    config = config or GdConfig()
    risk_fn, grad_fn = _objective_fns(objective, lam)
    decay_scale = 1.0
    if config.step_size == "auto":
        alpha = auto_step_size(objective, d, lam)
    elif config.step_size == "decaying":
        alpha = None
        if objective == "svm":
            decay_scale = max(1.0, 2.0 * lam)
    else:
        alpha = float(config.step_size)

    w = np.zeros(d.n)
    f = risk_fn(w, d)
    f0 = f
    objectives = [f]
    best_f, best_w = f, w
    converged = False
    iterations = 0
    for k in range(1, config.max_iters + 1):
        step = alpha if alpha is not None else 1.0 / (decay_scale * k)
        w_new = gd_step(w, grad_fn(w, d), step)
        f_new = risk_fn(w_new, d)
        objectives.append(f_new)
        iterations = k
        if objective != "svm" and f0 > 0.0 and f_new > 10.0 * f0:
            raise DivergenceError(
                f"objective grew to {f_new:.3e} (over 10x its initial value "
                f"{f0:.3e}); try a smaller step size"
            )
        if f_new < best_f:
            best_f, best_w = f_new, w_new
        # a large increase is divergence-in-progress, not convergence
        if objective != "svm" and abs(f - f_new) <= config.stop_tol:
            w = w_new
            converged = True
            break
        w, f = w_new, f_new
    if objective == "svm":
        w = best_w
        converged = True
    return GdTrace(
        objectives=np.asarray(objectives),
        weights=w,
        iterations_used=iterations,
        converged=converged,
        step_size=float(alpha) if alpha is not None else 0.0,
    )


def single_sample_gradient(objective, w, d: LabeledDataset, i) -> np.ndarray:
    """Gradient of the loss at data point ``i`` alone (no 1/m factor)."""
    w = _check_dims(w, d)
    x = d.features[i]
    y = d.labels[i]
    if objective == "linreg":
        return -2.0 * (y - w @ x) * x
    if objective == "logreg":
        return -y * float(sigmoid(-(y * (w @ x)))) * x
    raise DomainError(f"no single-sample gradient for objective {objective!r}")


def sgd_step(w, d: LabeledDataset, k, seed, objective="linreg") -> np.ndarray:
    """One stochastic step: pick a uniform random sample index and move by
    -(1/k) times its single-sample gradient. Deterministic per (seed, k)."""
    if k < 1:
        raise DomainError("iteration counter k must be >= 1")
    w = _check_dims(w, d)
    rng = np.random.default_rng([int(seed), int(k)])
    i = int(rng.integers(d.m))
    return w - (1.0 / k) * single_sample_gradient(objective, w, d, i)
