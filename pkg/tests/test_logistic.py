import math

import numpy as np
import pytest

from eduvuln.errors import CollinearityError, DegenerateDataError
from eduvuln.models.logistic import (
    bernoulli_log_likelihood,
    bernoulli_score,
    fit_logistic,
    predict_logistic,
    predict_proba,
    significant_features,
)

from conftest import hand_logistic


def simulate(n, p, beta, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    eta = beta[0] + X @ beta[1:]
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    return X, y


class TestGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n, p = 80, 4
            X = rng.standard_normal((n, p))
            y = rng.integers(0, 2, n).astype(float)
            design = np.column_stack([np.ones(n), X])
            beta = rng.standard_normal(p + 1)
            analytic = bernoulli_score(design, y, beta)
            h = 1e-5
            for j in range(p + 1):
                e = np.zeros(p + 1)
                e[j] = h
                numeric = (bernoulli_log_likelihood(design, y, beta + e)
                           - bernoulli_log_likelihood(design, y, beta - e)) / (2 * h)
                denom = max(1.0, abs(numeric))
                assert abs(analytic[j] - numeric) / denom < 1e-4


class TestFit:
    def test_log_likelihood_nondecreasing_over_iterations(self):
        X, y = simulate(300, 3, np.array([0.5, 1.0, -2.0, 0.0]), seed=1)
        lls = [fit_logistic(X, y, max_iter=k).log_likelihood for k in range(1, 9)]
        for a, b in zip(lls, lls[1:]):
            assert b >= a - 1e-12

    def test_recovers_planted_coefficients(self):
        beta = np.array([0.3, 1.5, -1.0, 0.0])
        X, y = simulate(20_000, 3, beta, seed=2)
        m = fit_logistic(X, y)
        assert m.converged
        # original-unit coefficients approach the generating values
        assert np.allclose(m.coefficients, beta, atol=0.15)

    def test_duplicate_feature_raises_collinearity(self):
        X, y = simulate(200, 2, np.array([0.0, 1.0, -1.0]), seed=3)
        X3 = np.column_stack([X, X[:, 0]])
        with pytest.raises(CollinearityError, match="collinear"):
            fit_logistic(X3, y)

    def test_one_class_raises(self):
        X = np.random.default_rng(4).standard_normal((50, 2))
        with pytest.raises(DegenerateDataError):
            fit_logistic(X, np.zeros(50))

    def test_zero_variance_feature_raises(self):
        rng = np.random.default_rng(5)
        X = np.column_stack([rng.standard_normal(100), np.full(100, 3.0)])
        y = rng.integers(0, 2, 100).astype(float)
        with pytest.raises(DegenerateDataError, match="x1"):
            fit_logistic(X, y)

    def test_perfect_separation_flagged_not_fatal(self):
        x = np.linspace(-2, 2, 60)
        y = (x > 0).astype(float)
        m = fit_logistic(x[:, None], y)
        assert m.separation_suspected
        assert np.isfinite(m.coefficients_std).all()

    def test_null_feature_p_value_calibrated(self):
        # a feature independent of y should look insignificant in >=90% of runs
        hits = 0
        reps = 20
        for seed in range(reps):
            rng = np.random.default_rng(100 + seed)
            X = rng.standard_normal((2000, 2))
            eta = 1.2 * X[:, 0]
            y = (rng.random(2000) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
            m = fit_logistic(X, y, feature_names=("signal", "noise"))
            if m.p_values[2] > 0.05:
                hits += 1
        assert hits >= int(0.9 * reps)

    def test_standardized_and_original_predictions_agree(self):
        X, y = simulate(500, 3, np.array([0.2, 0.8, -0.5, 0.1]), seed=6)
        m = fit_logistic(X, y)
        rng = np.random.default_rng(7)
        for _ in range(20):
            x = rng.standard_normal(3)
            via_std = predict_logistic(m, x)
            eta = m.coefficients[0] + float(x @ m.coefficients[1:])
            via_orig = 1.0 / (1.0 + math.exp(-eta))
            assert via_std == pytest.approx(via_orig, abs=1e-9)


class TestPredict:
    def test_zero_coefficients_give_half(self):
        m = hand_logistic(("a", "b"), [0.0, 0.0, 0.0])
        assert predict_logistic(m, np.array([123.0, -5.0])) == 0.5

    def test_saturates_to_one(self):
        m = hand_logistic(("a",), [0.0, 1.0])
        assert predict_logistic(m, np.array([1e6])) == pytest.approx(1.0, abs=1e-12)

    def test_hand_model_closed_form(self):
        m = hand_logistic(("a",), [0.0, 1.0])
        expected = 1.0 / (1.0 + math.exp(-0.5))
        assert predict_logistic(m, np.array([0.5])) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.6225, abs=5e-5)

    def test_dimension_mismatch(self):
        m = hand_logistic(("a", "b"), [0.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            predict_logistic(m, np.array([1.0]))

    def test_batch_matches_single(self):
        X, y = simulate(200, 2, np.array([0.0, 1.0, -1.0]), seed=8)
        m = fit_logistic(X, y)
        batch = predict_proba(m, X[:5])
        singles = [predict_logistic(m, X[i]) for i in range(5)]
        assert np.allclose(batch, singles, atol=0)


class TestSignificantFeatures:
    def test_alpha_one_selects_all(self):
        X, y = simulate(300, 3, np.array([0.0, 1.0, 0.0, 0.0]), seed=9)
        m = fit_logistic(X, y, feature_names=("a", "b", "c"))
        assert significant_features(m, 1.0) == ("a", "b", "c")

    def test_alpha_zero_selects_none(self):
        X, y = simulate(300, 3, np.array([0.0, 1.0, 0.0, 0.0]), seed=10)
        m = fit_logistic(X, y)
        assert significant_features(m, 0.0) == ()

    def test_planted_feature_selected_alone(self):
        hits = 0
        reps = 20
        for seed in range(reps):
            rng = np.random.default_rng(200 + seed)
            X = rng.standard_normal((2000, 2))
            eta = 1.5 * X[:, 0]
            y = (rng.random(2000) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
            m = fit_logistic(X, y, feature_names=("planted", "noise"))
            if significant_features(m, 0.05) == ("planted",):
                hits += 1
        assert hits >= int(0.9 * reps)

    def test_intercept_never_included(self):
        X, y = simulate(300, 2, np.array([3.0, 0.0, 0.0]), seed=11)
        m = fit_logistic(X, y, feature_names=("a", "b"))
        assert "intercept" not in significant_features(m, 1.0)
