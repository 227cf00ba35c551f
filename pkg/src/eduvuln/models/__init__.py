"""Supervised learners and evaluation metrics."""

from ._kernel import BACKEND as SPLIT_BACKEND
from .forest import (
    ForestConfig,
    ForestModel,
    TreeNode,
    fit_forest,
    predict_forest,
    predict_forest_many,
)
from .logistic import (
    LogisticModel,
    Standardization,
    fit_logistic,
    predict_logistic,
    predict_proba,
    significant_features,
)
from .metrics import RocCurve, confusion_by_level, roc_auc

__all__ = [
    "SPLIT_BACKEND",
    "ForestConfig", "ForestModel", "TreeNode",
    "fit_forest", "predict_forest", "predict_forest_many",
    "LogisticModel", "Standardization",
    "fit_logistic", "predict_logistic", "predict_proba", "significant_features",
    "RocCurve", "confusion_by_level", "roc_auc",
]
