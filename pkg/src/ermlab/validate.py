"""Training/validation errors, model selection, diagnosis rules, and the
Monte-Carlo laboratory for bias, variance and prediction error of (restricted
and ridge-regularized) linear regression on the linear-Gaussian toy model.

Experiment protocol: each trial draws a fresh training set from the toy
model, fits the estimator, and scores the squared prediction error on one
fresh test point. Empirical bias^2 is ||w_true - mean(w_hat)||^2, empirical
variance is mean ||w_hat - mean(w_hat)||^2. The reported standard errors
come from trial-level variances (delta method for the bias term), so
"within 3 standard errors" tests are well-defined.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .data import LabeledDataset, SplitPair, ToyModelSpec, split as split_data
from .errors import DomainError, ShapeError, SizeError
from .losses import LossKind, empirical_risk


# ---------------------------------------------------------------------------
# validation and model selection
# ---------------------------------------------------------------------------


def train_val_errors(model, split: SplitPair, loss: LossKind):
    """Empirical risks of one model on the two partitions of a split."""
    if split.train.m < 1 or split.val.m < 1:
        raise SizeError("both partitions must be nonempty")
    return (
        empirical_risk(loss, model, split.train),
        empirical_risk(loss, model, split.val),
    )


@dataclass
class CandidateResult:
    label: str
    train_error: float
    val_error: float
    failed: bool = False
    message: str = ""


@dataclass
class ModelSelectionReport:
    candidates: list
    chosen_index: int
    chosen_model: object = None

    def to_rows(self):
        return [
            {
                "label": c.label,
                "train_error": c.train_error,
                "val_error": c.val_error,
                "failed": c.failed,
            }
            for c in self.candidates
        ]


def select_model(candidates, d: LabeledDataset, train_fraction=0.8, seed=0,
                 loss: LossKind = None) -> ModelSelectionReport:
    """Fit every candidate on the training partition, evaluate on the
    validation partition, pick the smallest validation error (ties towards
    the smaller index).

    ``candidates`` is a list of (label, fit_fn) pairs with
    ``fit_fn(train_dataset) -> model``. Candidates whose fit raises are
    marked failed and excluded from the argmin.
    """
    from .errors import ErmlabError

    if not candidates:
        raise SizeError("need at least one candidate")
    loss = loss or LossKind.squared()
    sp = split_data(d, train_fraction, seed)
    results = []
    models = []
    for label, fit_fn in candidates:
        try:
            model = fit_fn(sp.train)
            tr, va = train_val_errors(model, sp, loss)
            results.append(CandidateResult(str(label), tr, va))
            models.append(model)
        except ErmlabError as exc:
            results.append(
                CandidateResult(str(label), math.inf, math.inf, True, str(exc))
            )
            models.append(None)
    valid = [i for i, c in enumerate(results) if not c.failed]
    if not valid:
        raise DomainError("every candidate failed to fit")
    chosen = min(valid, key=lambda i: results[i].val_error)
    return ModelSelectionReport(results, chosen, models[chosen])


def diagnose(train_error, val_error, target_e0):
    """Compare training and validation error against a tolerated error E0.

    satisfactory: both within a factor 1.5 of E0
    overfit:      val >= 5x train while train <= 1.5 E0
    solver_issue: train >= 5x val
    inconclusive: anything else
    """
    for v in (train_error, val_error, target_e0):
        if not np.isfinite(v) or v < 0.0:
            raise DomainError("errors and target must be finite and nonnegative")
    lo, hi = target_e0 / 1.5, target_e0 * 1.5
    if lo <= train_error <= hi and lo <= val_error <= hi:
        return "satisfactory"
    tiny = 1e-300
    if val_error / max(train_error, tiny) >= 5.0 and train_error <= hi:
        return "overfit"
    if train_error / max(val_error, tiny) >= 5.0:
        return "solver_issue"
    return "inconclusive"


# ---------------------------------------------------------------------------
# bias-variance laboratory
# ---------------------------------------------------------------------------


@dataclass
class BiasVarianceResult:
    """Empirical and closed-form bias^2 / variance / prediction error."""

    r: int
    trials: int
    empirical_bias_sq: float
    empirical_variance: float
    empirical_pred_error: float
    analytic_bias_sq: float
    analytic_variance: float
    analytic_pred_error: float
    se_bias_sq: float
    se_variance: float
    se_pred_error: float

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class RidgeBiasVarianceResult:
    """Same empirical protocol with the ridge estimator.

    The two candidate large-sample approximations differ in their exponent:
    the ``linear``-factor forms carry lam/(1+lam) and 1/(1+lam) once, the
    ``squared`` forms twice. The experiment exists to adjudicate them.
    """

    lam: float
    trials: int
    empirical_bias_sq: float
    empirical_variance: float
    empirical_pred_error: float
    approx_bias_sq_linear: float
    approx_bias_sq_squared: float
    approx_variance_linear: float
    approx_variance_squared: float
    se_bias_sq: float
    se_variance: float
    se_pred_error: float

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _toy_trials(spec: ToyModelSpec, trials):
    """Yield (features, labels, test_x, test_y) blocks, all freshly drawn."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    m = spec.sample_count
    sd = math.sqrt(spec.noise_variance)
    chunk = max(1, 2_500_000 // (m * n))  # cap block memory, not trial count
    left = trials
    while left > 0:
        t = min(chunk, left)
        xs = rng.standard_normal((t, m, n))
        ys = np.einsum("tmn,n->tm", xs, spec.w_true)
        if sd > 0.0:
            ys = ys + sd * rng.standard_normal((t, m))
        xts = rng.standard_normal((t, n))
        yts = xts @ spec.w_true
        if sd > 0.0:
            yts = yts + sd * rng.standard_normal(t)
        yield xs, ys, xts, yts
        left -= t


def _summarize(w_true, what_s, pe2_s):
    ws = np.concatenate(what_s, axis=0)
    pe2 = np.concatenate(pe2_s, axis=0)
    trials = ws.shape[0]
    wbar = ws.mean(axis=0)
    dev = ws - wbar
    v_t = (dev ** 2).sum(axis=1)

    bias_sq = float(((w_true - wbar) ** 2).sum())
    variance = float(v_t.mean())
    pred = float(pe2.mean())

    # delta-method SE for ||w_true - wbar||^2 plus its second-order term
    cov_bar = dev.T @ dev / max(trials - 1, 1) / trials
    q = w_true - wbar
    se_bias = math.sqrt(max(4.0 * float(q @ cov_bar @ q)
                            + 2.0 * float(np.trace(cov_bar @ cov_bar)), 0.0))
    se_var = float(v_t.std(ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
    se_pred = float(pe2.std(ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
    return trials, bias_sq, variance, pred, se_bias, se_var, se_pred


def bias_variance_experiment(spec: ToyModelSpec, r, trials) -> BiasVarianceResult:
    """Monte-Carlo bias/variance of least squares restricted to the first
    ``r`` features (weights zero-padded to full length for prediction).

    Closed forms: bias^2 = sum of the squared omitted true weights,
    variance = sigma^2 r / (m_t - r - 1) (inverse-Wishart expectation,
    valid for m_t > r + 1), prediction error = bias^2 + variance + sigma^2.
    """
    r = int(r)
    if not 1 <= r <= spec.n:
        raise ShapeError(f"r must be in [1, {spec.n}], got {r}")
    if spec.sample_count <= r + 1:
        raise DomainError(
            f"need m_t > r + 1 = {r + 1} for the inverse-Wishart expectation "
            f"to exist, got m_t = {spec.sample_count}"
        )
    if trials < 1:
        raise DomainError("trials must be >= 1")

    what_s, pe2_s = [], []
    for xs, ys, xts, yts in _toy_trials(spec, trials):
        ws, pe2, ok = _accel.ols_pad_trials(xs, ys, xts, yts, r)
        if not np.all(ok):
            keep = ok
            ws, pe2 = ws[keep], pe2[keep]
        what_s.append(ws)
        pe2_s.append(pe2)

    used, bias_sq, variance, pred, se_b, se_v, se_p = _summarize(
        spec.w_true, what_s, pe2_s
    )
    analytic_bias = float((spec.w_true[r:] ** 2).sum())
    analytic_var = spec.noise_variance * r / (spec.sample_count - r - 1)
    return BiasVarianceResult(
        r=r,
        trials=used,
        empirical_bias_sq=bias_sq,
        empirical_variance=variance,
        empirical_pred_error=pred,
        analytic_bias_sq=analytic_bias,
        analytic_variance=analytic_var,
        analytic_pred_error=analytic_bias + analytic_var + spec.noise_variance,
        se_bias_sq=se_b,
        se_variance=se_v,
        se_pred_error=se_p,
    )


def ridge_bias_variance_experiment(spec: ToyModelSpec, lam, trials
                                   ) -> RidgeBiasVarianceResult:
    """Monte-Carlo bias/variance of the full-dimension ridge estimator,
    reported next to both candidate large-sample approximations."""
    lam = float(lam)
    if lam < 0.0:
        raise DomainError("lambda must be >= 0")
    if trials < 1:
        raise DomainError("trials must be >= 1")

    what_s, pe2_s = [], []
    for xs, ys, xts, yts in _toy_trials(spec, trials):
        ws, pe2, ok = _accel.ridge_trials(xs, ys, xts, yts, lam)
        if not np.all(ok):
            keep = ok
            ws, pe2 = ws[keep], pe2[keep]
        what_s.append(ws)
        pe2_s.append(pe2)

    used, bias_sq, variance, pred, se_b, se_v, se_p = _summarize(
        spec.w_true, what_s, pe2_s
    )
    shrink = lam / (1.0 + lam)
    w_sq = float((spec.w_true ** 2).sum())
    base_var = spec.noise_variance * spec.n / spec.sample_count
    return RidgeBiasVarianceResult(
        lam=lam,
        trials=used,
        empirical_bias_sq=bias_sq,
        empirical_variance=variance,
        empirical_pred_error=pred,
        approx_bias_sq_linear=shrink * w_sq,
        approx_bias_sq_squared=shrink ** 2 * w_sq,
        approx_variance_linear=base_var / (1.0 + lam),
        approx_variance_squared=base_var / (1.0 + lam) ** 2,
        se_bias_sq=se_b,
        se_variance=se_v,
        se_pred_error=se_p,
    )
