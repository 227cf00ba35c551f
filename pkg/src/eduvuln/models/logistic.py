"""Logistic regression fit by Newton-Raphson with Wald inference.

Features are z-scored internally for conditioning; coefficients, standard
errors, and p-values are reported in both standardized and original units
(original units via the affine back-transform of the coefficient vector
and its covariance). Class 1 is the at-risk class throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import CollinearityError, DegenerateDataError
from ..stats import normal_sf

MAX_ITER = 100
SCORE_TOL = 1e-8
# On z-scored features a coefficient magnitude this large means odds ratios
# beyond e^30 per standard deviation: treat as diverging (separation).
SEPARATION_COEF_BOUND = 30.0


def sigmoid(eta: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(eta, -500.0, 500.0)))


def bernoulli_log_likelihood(design: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    """Sum of y*eta - log(1 + exp(eta)), evaluated stably."""
    eta = design @ beta
    return float(y @ eta - np.logaddexp(0.0, eta).sum())


def bernoulli_score(design: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Gradient of the Bernoulli log-likelihood at beta."""
    return design.T @ (y - sigmoid(design @ beta))


@dataclass(frozen=True)
class Standardization:
    means: tuple[float, ...]
    stds: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(s <= 0.0 for s in self.stds):
            raise ValueError("standardization stds must be positive")

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - np.asarray(self.means)) / np.asarray(self.stds)


@dataclass
class LogisticModel:
    feature_names: tuple[str, ...]
    coefficients: np.ndarray        # original units, [intercept, features...]
    coefficients_std: np.ndarray    # standardized units
    standard_errors: np.ndarray     # original units
    standard_errors_std: np.ndarray
    p_values: np.ndarray            # two-sided Wald, [intercept, features...]
    standardization: Standardization
    converged: bool = True
    n_iter: int = 0
    separation_suspected: bool = False
    log_likelihood: float = field(default=float("nan"))

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def fit_logistic(X: np.ndarray, y: np.ndarray,
                 feature_names: tuple[str, ...] | None = None,
                 max_iter: int = MAX_ITER, tol: float = SCORE_TOL) -> LogisticModel:
    """Maximize the Bernoulli log-likelihood by Newton-Raphson.

    Convergence when the score vector's max absolute entry drops below tol.
    Step halving keeps the log-likelihood nondecreasing across iterations.
    Diverging coefficients are flagged as suspected separation and the fit
    is returned at the iteration cap instead of failing.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("X must be 2-D with at least one feature")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y lengths differ")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise ValueError("y must be binary 0/1")
    if classes.size < 2:
        raise DegenerateDataError("y contains a single class; cannot fit")

    p = X.shape[1]
    if feature_names is None:
        feature_names = tuple(f"x{i}" for i in range(p))
    if len(feature_names) != p:
        raise ValueError("feature_names length does not match X")

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    zero_var = [feature_names[i] for i in range(p) if stds[i] == 0.0]
    if zero_var:
        raise DegenerateDataError(f"zero-variance feature(s): {', '.join(zero_var)}")
    std = Standardization(tuple(means.tolist()), tuple(stds.tolist()))

    design = np.column_stack([np.ones(X.shape[0]), std.transform(X)])
    if np.linalg.matrix_rank(design) < p + 1:
        raise CollinearityError(
            "design matrix is rank deficient: collinearity among features "
            f"({', '.join(feature_names)})")

    beta = np.zeros(p + 1)
    ll = bernoulli_log_likelihood(design, y, beta)
    converged = False
    separation = False
    it = 0
    for it in range(1, max_iter + 1):
        score = bernoulli_score(design, y, beta)
        if np.max(np.abs(score)) < tol:
            converged = True
            it -= 1
            break
        w = sigmoid(design @ beta)
        w = w * (1.0 - w)
        hessian = design.T @ (design * w[:, None])
        try:
            step = np.linalg.solve(hessian, score)
        except np.linalg.LinAlgError:
            if separation:
                break
            raise CollinearityError("observed information is singular; "
                                    "collinear features") from None
        new_beta = beta + step
        new_ll = bernoulli_log_likelihood(design, y, new_beta)
        halvings = 0
        while new_ll < ll and halvings < 30:
            step /= 2.0
            new_beta = beta + step
            new_ll = bernoulli_log_likelihood(design, y, new_beta)
            halvings += 1
        beta, ll = new_beta, new_ll
        if np.max(np.abs(beta[1:])) > SEPARATION_COEF_BOUND:
            separation = True

    w = sigmoid(design @ beta)
    w = w * (1.0 - w)
    hessian = design.T @ (design * w[:, None])
    try:
        cov_std = np.linalg.inv(hessian)
    except np.linalg.LinAlgError:
        raise CollinearityError("observed information is singular at the "
                                "optimum; collinear features") from None
    se_std = np.sqrt(np.clip(np.diag(cov_std), 0.0, None))
    # Zero SE only occurs in pathological fits; report p=1 there rather than
    # claiming significance from an undefined statistic.
    z = np.divide(beta, se_std, out=np.zeros_like(beta), where=se_std > 0)
    p_values = np.array([2.0 * normal_sf(abs(v)) for v in z])

    # beta_orig = A @ beta_std, so cov_orig = A cov_std A^T.
    A = np.eye(p + 1)
    for j in range(1, p + 1):
        A[0, j] = -means[j - 1] / stds[j - 1]
        A[j, j] = 1.0 / stds[j - 1]
    beta_orig = A @ beta
    cov_orig = A @ cov_std @ A.T
    se_orig = np.sqrt(np.clip(np.diag(cov_orig), 0.0, None))

    return LogisticModel(
        feature_names=tuple(feature_names),
        coefficients=beta_orig,
        coefficients_std=beta,
        standard_errors=se_orig,
        standard_errors_std=se_std,
        p_values=p_values,
        standardization=std,
        converged=converged,
        n_iter=it,
        separation_suspected=separation,
        log_likelihood=ll,
    )


def predict_proba(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    """Positive-class probabilities for a batch of rows."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    z = model.standardization.transform(X)
    eta = model.coefficients_std[0] + z @ model.coefficients_std[1:]
    return sigmoid(eta)


def predict_logistic(model: LogisticModel, x: np.ndarray) -> float:
    """Probability of the positive (at-risk) class for one row."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict_logistic takes a single row; use predict_proba for batches")
    return float(predict_proba(model, x[None, :])[0])


def significant_features(model: LogisticModel, alpha: float) -> tuple[str, ...]:
    """Features (intercept excluded) with Wald p-value below alpha, in
    model order."""
    return tuple(name for name, p in zip(model.feature_names, model.p_values[1:])
                 if p < alpha)
