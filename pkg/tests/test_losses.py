import math

import numpy as np
import pytest

from ermlab import losses, models
from ermlab.data import LabeledDataset
from ermlab.errors import DomainError


class TestPointwiseLosses:
    def test_squared(self):
        assert losses.loss(losses.LossKind.squared(), 3.0, 1.0) == 4.0

    def test_logistic_at_zero_margin(self):
        got = losses.loss(losses.LossKind.logistic(), 1.0, 0.0)
        assert got == pytest.approx(math.log(2.0), abs=1e-12)

    def test_hinge_and_zero_one(self):
        assert losses.loss(losses.LossKind.hinge(), 1.0, 2.0) == 0.0
        assert losses.loss(losses.LossKind.zero_one(), 1.0, -2.0) == 1.0
        # strict inequality: y*h = 0 incurs no 0/1 loss
        assert losses.loss(losses.LossKind.zero_one(), 1.0, 0.0) == 0.0

    def test_svm_reg_adds_penalty(self):
        kind = losses.LossKind.svm_reg(0.5)
        w = np.array([1.0, 1.0])
        got = losses.loss(kind, 1.0, 2.0, w)
        assert got == pytest.approx(0.0 + 0.5 * 2.0)
        with pytest.raises(DomainError):
            losses.loss(kind, 1.0, 2.0)

    def test_binary_losses_reject_other_labels(self):
        for kind in (losses.LossKind.zero_one(), losses.LossKind.hinge(),
                     losses.LossKind.logistic()):
            with pytest.raises(DomainError):
                losses.loss(kind, 0.5, 1.0)

    def test_logistic_stable_for_huge_margins(self):
        kind = losses.LossKind.logistic()
        assert losses.loss(kind, 1.0, 800.0) == pytest.approx(0.0, abs=1e-300)
        assert losses.loss(kind, 1.0, -800.0) == pytest.approx(800.0)


class TestLossShapeProperties:
    GRID = np.linspace(-5.0, 5.0, 81)

    def test_nonnegative_everywhere(self):
        kinds = [losses.LossKind.squared(), losses.LossKind.zero_one(),
                 losses.LossKind.hinge(), losses.LossKind.logistic()]
        for kind in kinds:
            for y in (-1.0, 1.0):
                vals = losses.losses_many(kind, np.full_like(self.GRID, y),
                                          self.GRID)
                assert np.all(vals >= 0.0)

    def test_hinge_dominates_zero_one(self):
        y = np.ones_like(self.GRID)
        hinge = losses.losses_many(losses.LossKind.hinge(), y, self.GRID)
        zo = losses.losses_many(losses.LossKind.zero_one(), y, self.GRID)
        assert np.all(hinge >= zo)

    def test_logistic_monotone_decreasing_in_margin(self):
        y = np.ones_like(self.GRID)
        logi = losses.losses_many(losses.LossKind.logistic(), y, self.GRID)
        assert np.all(np.diff(logi) < 0.0)
        hinge = losses.losses_many(losses.LossKind.hinge(), y, self.GRID)
        assert np.all(np.diff(hinge) <= 0.0)
        # both tend to zero for confident correct classifications
        assert logi[-1] < 1e-2 and hinge[-1] == 0.0

    def test_negative_label_curves_are_mirror_images(self):
        for kind in (losses.LossKind.zero_one(), losses.LossKind.hinge(),
                     losses.LossKind.logistic()):
            plus = losses.losses_many(kind, np.ones_like(self.GRID), self.GRID)
            minus = losses.losses_many(kind, -np.ones_like(self.GRID), -self.GRID)
            np.testing.assert_allclose(plus, minus, atol=1e-12)

    def test_squared_symmetric_in_residual_sign(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            y, r = rng.standard_normal(2)
            a = losses.loss(losses.LossKind.squared(), y, y - r)
            b = losses.loss(losses.LossKind.squared(), y, y + r)
            assert a == pytest.approx(b)


class TestEmpiricalRisk:
    def test_perfect_predictor(self):
        d = LabeledDataset(np.array([[1.0], [2.0]]), np.array([2.0, 4.0]), "real")
        model = models.LinearModel(np.array([2.0]))
        assert losses.empirical_risk(losses.LossKind.squared(), model, d) == 0.0

    def test_zero_one_is_misclassification_fraction(self):
        feats = np.array([[1.0], [2.0], [-1.0], [-3.0]])
        labels = np.array([1.0, -1.0, -1.0, -1.0])
        d = LabeledDataset(feats, labels, "binary")
        model = models.LinearModel(np.array([1.0]))  # predicts sign(x)
        got = losses.empirical_risk(losses.LossKind.zero_one(), model, d)
        assert got == pytest.approx(0.25)

    def test_monte_carlo_risk_approximates_error_probability(self):
        # 0/1 empirical risk on 10^4 i.i.d. points vs the analytic error
        # probability of a fixed linear classifier on a known Gaussian model
        rng = np.random.default_rng(1)
        m = 10_000
        y = rng.choice([-1.0, 1.0], size=m)
        x = y[:, None] + rng.standard_normal((m, 1))  # x ~ N(y, 1)
        d = LabeledDataset(x, y, "binary")
        model = models.LinearModel(np.array([1.0]))
        risk = losses.empirical_risk(losses.LossKind.zero_one(), model, d)
        # P(error) = P(N(1,1) < 0) = Phi(-1)
        p_err = 0.5 * (1.0 + math.erf(-1.0 / math.sqrt(2.0)))
        assert abs(risk - p_err) < 0.02
