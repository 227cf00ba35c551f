import numpy as np
import pytest

from eduvuln import dataset, risk
from eduvuln.models.forest import ForestModel, TreeNode
from eduvuln.models.logistic import LogisticModel, Standardization


def planted_config(**overrides):
    """Generator settings with a strong internet/connectivity signal."""
    params = dict(
        n_municipalities=120,
        years=tuple(range(2014, 2020)),
        base_score=150.0,
        effect_internet=1.2,
        effect_connectivity=0.6,
        noise_scale=15.0,
    )
    params.update(overrides)
    return dataset.SynthConfig(**params)


@pytest.fixture(scope="session")
def planted_rows():
    return dataset.generate_synthetic(planted_config(), seed=42)


@pytest.fixture(scope="session")
def trained_bundle(planted_rows):
    config = risk.RiskConfig()
    train, val = dataset.split_by_year(planted_rows, config.train_years,
                                       config.validation_year)
    bundle = risk.train_bundle(train, config, seed=7)
    risk.evaluate(bundle, val)
    return bundle


def constant_forest(kind: str, value, n_features: int, depth_limit: int = 3) -> ForestModel:
    """Single-leaf forest that always predicts `value`."""
    leaf = TreeNode(value=value)
    return ForestModel(kind=kind, trees=[leaf], depth_limit=depth_limit, seed=0,
                       n_features=n_features,
                       target_range=(value, value) if kind == "regression" else None)


def hand_logistic(feature_names, coefficients) -> LogisticModel:
    """Identity-standardized model with hand-set coefficients
    [intercept, features...]; every feature marked significant."""
    p = len(feature_names)
    beta = np.asarray(coefficients, dtype=float)
    assert beta.shape[0] == p + 1
    return LogisticModel(
        feature_names=tuple(feature_names),
        coefficients=beta.copy(),
        coefficients_std=beta.copy(),
        standard_errors=np.ones(p + 1),
        standard_errors_std=np.ones(p + 1),
        p_values=np.zeros(p + 1),
        standardization=Standardization((0.0,) * p, (1.0,) * p),
    )


def logistic_only_bundle(feature_names, coefficients, tau=200.0, year=2018):
    """Bundle whose decision is carried by the logistic model alone: both
    forests are constants voting not-at-risk."""
    p = len(feature_names)
    return risk.RiskModelBundle(
        config=risk.RiskConfig(train_years=(year,), validation_year=year + 1),
        thresholds={year: tau},
        initial_features=tuple(feature_names),
        selected_features=tuple(feature_names),
        logistic=hand_logistic(feature_names, coefficients),
        forest_regression=constant_forest("regression", tau + 1000.0, p),
        forest_classifier=constant_forest("classification", (1.0, 0.0), p),
        seed=0,
    )


def make_row(code=10000, year=2019, internet=20.0, computer=30.0, ethnic=40.0,
             school=70.0, score=250.0, population=10_000, connectivity=25.0,
             rural=50.0, n_students=50, state=1):
    return dataset.MunicipalityYear(
        code=code, state_code=state, year=year, internet_pct=internet,
        computer_pct=computer, ethnic_pct=ethnic, school_public_pct=school,
        global_score_mean=score, population=population, connectivity=connectivity,
        rural_index=rural, n_students=n_students)
