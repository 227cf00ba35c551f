"""Risk thresholds, at-risk labeling, three-model training, ensemble voting,
vulnerability levels, evaluation, and state summaries.

The per-year risk threshold is the unweighted mean of municipality mean
scores minus k sample standard deviations; a municipality is at risk when
its mean score falls strictly below the threshold. Three models (logistic,
regression forest on the raw score, classification forest on the label)
each cast a vote; TOTAL_RISK is the vote count and maps to the levels
None/Low/Medium/Serious.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, TextIO

import numpy as np

from .dataset import INITIAL_COVARIABLES, MunicipalityYear, covariable_matrix
from .errors import ConfigError, DataError, DegenerateDataError
from .models.forest import ForestConfig, ForestModel, fit_forest, predict_forest_many
from .models.logistic import (
    LogisticModel,
    Standardization,
    fit_logistic,
    predict_proba,
    significant_features,
)
from .models.metrics import RocCurve, confusion_by_level, roc_auc

logger = logging.getLogger(__name__)

BUNDLE_FORMAT_VERSION = 1

MODEL_LOGISTIC = "logistic"
MODEL_FOREST_REGRESSION = "forest_regression"
MODEL_FOREST_CLASSIFIER = "forest_classifier"
MODEL_NAMES = (MODEL_LOGISTIC, MODEL_FOREST_REGRESSION, MODEL_FOREST_CLASSIFIER)

VOTE_CUTOFF = 0.5


class VulnerabilityLevel(enum.IntEnum):
    """TOTAL_RISK rendered as a level; the int value is the vote count."""

    NONE = 0
    LOW = 1
    MEDIUM = 2
    SERIOUS = 3

    @property
    def label(self) -> str:
        return _LEVEL_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "VulnerabilityLevel":
        try:
            return _LABEL_LEVELS[label]
        except KeyError:
            raise ValueError(f"unknown vulnerability level {label!r}") from None


_LEVEL_LABELS = {
    VulnerabilityLevel.NONE: "None",
    VulnerabilityLevel.LOW: "Low",
    VulnerabilityLevel.MEDIUM: "Medium",
    VulnerabilityLevel.SERIOUS: "Serious",
}
_LABEL_LEVELS = {v: k for k, v in _LEVEL_LABELS.items()}


def level_from_votes(votes: Sequence[bool]) -> VulnerabilityLevel:
    if len(votes) != 3:
        raise ValueError("exactly three model votes expected")
    return VulnerabilityLevel(sum(bool(v) for v in votes))


@dataclass(frozen=True)
class RiskConfig:
    """Training configuration; defaults follow the reference setup
    (k=1, forest depths 3, alpha=0.05, train 2014-2018, validate 2019)."""

    k: float = 1.0
    m: int = 3                     # regression-forest depth, must be > 2
    l: int = 3                     # classifier-forest depth
    alpha: float = 0.05
    train_years: tuple[int, ...] = (2014, 2015, 2016, 2017, 2018)
    validation_year: int = 2019
    n_trees: int = 100
    min_leaf: int = 2
    regression_target: str = "score"  # "score" (default) or "label"

    def __post_init__(self) -> None:
        if not 0.0 <= self.k <= 2.0:
            raise ConfigError(f"k must be in [0, 2], got {self.k}")
        if self.m <= 2:
            raise ConfigError(f"regression forest depth m must be > 2, got {self.m}")
        if self.l < 1:
            raise ConfigError(f"classifier forest depth l must be >= 1, got {self.l}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.train_years:
            raise ConfigError("train_years must be nonempty")
        if self.validation_year in self.train_years:
            raise ConfigError(f"validation year {self.validation_year} overlaps train_years")
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.regression_target not in ("score", "label"):
            raise ConfigError("regression_target must be 'score' or 'label'")

    def to_dict(self) -> dict:
        return {
            "k": self.k, "m": self.m, "l": self.l, "alpha": self.alpha,
            "train_years": list(self.train_years),
            "validation_year": self.validation_year,
            "n_trees": self.n_trees, "min_leaf": self.min_leaf,
            "regression_target": self.regression_target,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RiskConfig":
        return cls(k=d["k"], m=d["m"], l=d["l"], alpha=d["alpha"],
                   train_years=tuple(d["train_years"]),
                   validation_year=d["validation_year"],
                   n_trees=d["n_trees"], min_leaf=d["min_leaf"],
                   regression_target=d["regression_target"])


@dataclass(frozen=True)
class VulnerabilityAssessment:
    code: int
    year: int
    votes: tuple[bool, bool, bool]      # (logistic, regression forest, classifier forest)
    total_risk: int
    level: VulnerabilityLevel
    model_scores: tuple[float, float, float]  # oriented: higher = riskier

    def __post_init__(self) -> None:
        if self.total_risk != sum(self.votes):
            raise ValueError("total_risk must equal the vote count")
        if int(self.level) != self.total_risk:
            raise ValueError("level must match total_risk")


@dataclass
class EvalReport:
    auc_per_model: dict[str, float | None]
    roc_per_model: dict[str, RocCurve]
    confusion: np.ndarray               # 2x4 counts
    confusion_binarized: np.ndarray     # 2x2, at-risk means level >= Low
    n_validation: int
    notices: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "auc_per_model": self.auc_per_model,
            "roc_per_model": {
                name: {"points": [list(p) for p in curve.points],
                       "thresholds": list(curve.thresholds)}
                for name, curve in self.roc_per_model.items()
            },
            "confusion": self.confusion.tolist(),
            "confusion_binarized": self.confusion_binarized.tolist(),
            "n_validation": self.n_validation,
            "notices": self.notices,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            auc_per_model=dict(d["auc_per_model"]),
            roc_per_model={
                name: RocCurve(tuple(tuple(p) for p in c["points"]),
                               tuple(c["thresholds"]))
                for name, c in d["roc_per_model"].items()
            },
            confusion=np.array(d["confusion"], dtype=np.int64),
            confusion_binarized=np.array(d["confusion_binarized"], dtype=np.int64),
            n_validation=d["n_validation"],
            notices=list(d["notices"]),
        )


@dataclass
class RiskModelBundle:
    config: RiskConfig
    thresholds: dict[int, float]        # training year -> tau
    initial_features: tuple[str, ...]
    selected_features: tuple[str, ...]
    logistic: LogisticModel
    forest_regression: ForestModel
    forest_classifier: ForestModel
    seed: int
    warnings: list[str] = field(default_factory=list)
    eval: EvalReport | None = None

    def latest_training_year(self) -> int:
        return max(self.thresholds)

    def effective_threshold(self, year: int) -> float:
        """Threshold for any year: training years use their own tau, other
        years reuse the latest training-year tau (no validation leakage)."""
        if year in self.thresholds:
            return self.thresholds[year]
        return self.thresholds[self.latest_training_year()]


# ---------------------------------------------------------------------------
# Thresholds and labels
# ---------------------------------------------------------------------------

def compute_threshold(rows: Sequence[MunicipalityYear], year: int, k: float) -> float:
    """tau(year) = mean municipal score minus k sample standard deviations."""
    scores = np.array([r.global_score_mean for r in rows if r.year == year])
    if scores.size < 2:
        raise DataError(f"need at least 2 rows in year {year} to compute a threshold")
    return float(scores.mean() - k * scores.std(ddof=1))


def label_at_risk(rows: Sequence[MunicipalityYear],
                  thresholds: Mapping[int, float]) -> np.ndarray:
    """1 when the municipality mean score is strictly below tau(year);
    a score exactly at the threshold is not at risk."""
    labels = np.empty(len(rows), dtype=np.int64)
    for i, r in enumerate(rows):
        if r.year not in thresholds:
            raise DataError(f"no threshold for year {r.year}")
        labels[i] = 1 if r.global_score_mean < thresholds[r.year] else 0
    return labels


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def train_bundle(train_rows: Sequence[MunicipalityYear], config: RiskConfig,
                 seed: int, n_jobs: int = 1) -> RiskModelBundle:
    """Fit the three-model bundle on the training years.

    Steps: per-year thresholds, at-risk labels, logistic fit on the initial
    covariable set, Wald significance filter, then refit of the logistic
    and both forests on the surviving features. The eval field stays None
    until evaluate() runs on the validation split.
    """
    rows = sorted(train_rows, key=lambda r: (r.year, r.code))
    years = sorted({r.year for r in rows})
    missing = [y for y in config.train_years if y not in years]
    if len(missing) == len(config.train_years):
        raise DataError(f"no rows in any training year {list(config.train_years)}")
    rows = [r for r in rows if r.year in config.train_years]

    warnings: list[str] = []
    thresholds = {y: compute_threshold(rows, y, config.k)
                  for y in sorted({r.year for r in rows})}
    y = label_at_risk(rows, thresholds)
    if y.sum() == 0 or y.sum() == y.size:
        raise DegenerateDataError(
            "all training labels fall in one class; lower k to mark more "
            "municipalities at risk (or raise it for fewer)")
    per_year_pos = {yr: int(sum(lab for r, lab in zip(rows, y) if r.year == yr))
                    for yr in thresholds}
    for yr, pos in per_year_pos.items():
        if pos <= 1:
            warnings.append(f"year {yr}: only {pos} at-risk municipality; "
                            "labels are nearly degenerate")

    initial = tuple(INITIAL_COVARIABLES)
    X_init = covariable_matrix(rows, initial)
    logistic_initial = fit_logistic(X_init, y, feature_names=initial)
    selected = significant_features(logistic_initial, config.alpha)
    if not selected:
        warnings.append("no covariable passed the significance filter at "
                        f"alpha={config.alpha}; retaining the full initial set")
        selected = initial

    X_sel = covariable_matrix(rows, selected)
    logistic = fit_logistic(X_sel, y, feature_names=selected)
    if config.regression_target == "score":
        reg_target = np.array([r.global_score_mean for r in rows])
    else:
        reg_target = y.astype(np.float64)
    forest_cfg = ForestConfig(n_trees=config.n_trees, min_leaf=config.min_leaf,
                              n_jobs=n_jobs)
    # Disjoint per-tree seed ranges for the two forests.
    forest_regression = fit_forest(X_sel, reg_target, "regression", config.m,
                                   forest_cfg, seed=seed)
    forest_classifier = fit_forest(X_sel, y.astype(np.float64), "classification",
                                   config.l, forest_cfg, seed=seed + config.n_trees)
    for w in warnings:
        logger.warning("%s", w)
    return RiskModelBundle(
        config=config,
        thresholds=thresholds,
        initial_features=initial,
        selected_features=tuple(selected),
        logistic=logistic,
        forest_regression=forest_regression,
        forest_classifier=forest_classifier,
        seed=seed,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Assessment
# ---------------------------------------------------------------------------

def _model_scores(bundle: RiskModelBundle,
                  rows: Sequence[MunicipalityYear]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = covariable_matrix(rows, bundle.selected_features)
    p_lr = predict_proba(bundle.logistic, X)
    pred_reg = predict_forest_many(bundle.forest_regression, X)
    p_cls = predict_forest_many(bundle.forest_classifier, X)
    return p_lr, pred_reg, p_cls


def assess(bundle: RiskModelBundle,
           rows: Sequence[MunicipalityYear]) -> list[VulnerabilityAssessment]:
    """Vote all three models over each row and map TOTAL_RISK to a level.

    Probability votes trigger at >= 0.5 (a judgement of exactly 0.5 counts
    as at risk); the regression forest votes when its predicted score falls
    below the effective threshold for the row's year. Scores are oriented
    so that higher always means riskier, which negates the regression
    forest's predicted score.
    """
    p_lr, pred_reg, p_cls = _model_scores(bundle, rows)
    out = []
    for i, r in enumerate(rows):
        tau = bundle.effective_threshold(r.year)
        if bundle.config.regression_target == "score":
            vote_reg = bool(pred_reg[i] < tau)
            score_reg = -float(pred_reg[i])
        else:
            vote_reg = bool(pred_reg[i] >= VOTE_CUTOFF)
            score_reg = float(pred_reg[i])
        votes = (bool(p_lr[i] >= VOTE_CUTOFF), vote_reg, bool(p_cls[i] >= VOTE_CUTOFF))
        total = sum(votes)
        out.append(VulnerabilityAssessment(
            code=r.code, year=r.year, votes=votes, total_risk=total,
            level=VulnerabilityLevel(total),
            model_scores=(float(p_lr[i]), score_reg, float(p_cls[i])),
        ))
    return out


def evaluate(bundle: RiskModelBundle,
             validation_rows: Sequence[MunicipalityYear]) -> EvalReport:
    """AUC per model and the 2x4 confusion matrix on the validation split.

    Ground-truth labels use the effective thresholds (validation years
    reuse the latest training tau). With one-class validation labels the
    AUCs are reported as null with a notice; the confusion matrix is still
    produced. The report is stored into bundle.eval.
    """
    rows = sorted(validation_rows, key=lambda r: (r.year, r.code))
    if not rows:
        raise DataError("validation set is empty")
    thresholds = {yr: bundle.effective_threshold(yr) for yr in {r.year for r in rows}}
    y = label_at_risk(rows, thresholds)
    assessments = assess(bundle, rows)
    p_lr, pred_reg, p_cls = _model_scores(bundle, rows)
    oriented = {
        MODEL_LOGISTIC: p_lr,
        MODEL_FOREST_REGRESSION: (-pred_reg if bundle.config.regression_target == "score"
                                  else pred_reg),
        MODEL_FOREST_CLASSIFIER: p_cls,
    }
    notices: list[str] = []
    aucs: dict[str, float | None] = {}
    rocs: dict[str, RocCurve] = {}
    one_class = y.sum() in (0, y.size)
    for name, scores in oriented.items():
        if one_class:
            aucs[name] = None
        else:
            curve, auc = roc_auc(scores, y)
            aucs[name] = auc
            rocs[name] = curve
    if one_class:
        notices.append("validation labels contain a single class; AUC undefined")
    levels = np.array([a.total_risk for a in assessments])
    confusion = confusion_by_level(y, levels)
    binarized = np.array([
        [confusion[0, 0], confusion[0, 1:].sum()],
        [confusion[1, 0], confusion[1, 1:].sum()],
    ], dtype=np.int64)
    report = EvalReport(auc_per_model=aucs, roc_per_model=rocs, confusion=confusion,
                        confusion_binarized=binarized, n_validation=len(rows),
                        notices=notices)
    bundle.eval = report
    return report


# ---------------------------------------------------------------------------
# State summaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateSummary:
    state_code: int
    total: int
    counts: dict[str, int]
    fractions: dict[str, float]


def state_summary(assessments: Sequence[VulnerabilityAssessment],
                  code_to_state: Mapping[int, int]) -> list[StateSummary]:
    """Per-state counts and fractions at each vulnerability level."""
    unmapped = sorted({a.code for a in assessments if a.code not in code_to_state})
    if unmapped:
        raise DataError(f"codes with no state mapping: {unmapped}")
    by_state: dict[int, list[VulnerabilityAssessment]] = {}
    for a in assessments:
        by_state.setdefault(code_to_state[a.code], []).append(a)
    out = []
    labels = [lv.label for lv in VulnerabilityLevel]
    for state in sorted(by_state):
        members = by_state[state]
        counts = {lbl: 0 for lbl in labels}
        for a in members:
            counts[a.level.label] += 1
        n = len(members)
        out.append(StateSummary(
            state_code=state, total=n, counts=counts,
            fractions={lbl: counts[lbl] / n for lbl in labels},
        ))
    return out


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _logistic_to_dict(m: LogisticModel) -> dict:
    return {
        "feature_names": list(m.feature_names),
        "coefficients": m.coefficients.tolist(),
        "coefficients_std": m.coefficients_std.tolist(),
        "standard_errors": m.standard_errors.tolist(),
        "standard_errors_std": m.standard_errors_std.tolist(),
        "p_values": m.p_values.tolist(),
        "standardization": {"means": list(m.standardization.means),
                            "stds": list(m.standardization.stds)},
        "converged": m.converged,
        "n_iter": m.n_iter,
        "separation_suspected": m.separation_suspected,
        "log_likelihood": m.log_likelihood,
    }


def _logistic_from_dict(d: dict) -> LogisticModel:
    return LogisticModel(
        feature_names=tuple(d["feature_names"]),
        coefficients=np.array(d["coefficients"]),
        coefficients_std=np.array(d["coefficients_std"]),
        standard_errors=np.array(d["standard_errors"]),
        standard_errors_std=np.array(d["standard_errors_std"]),
        p_values=np.array(d["p_values"]),
        standardization=Standardization(tuple(d["standardization"]["means"]),
                                        tuple(d["standardization"]["stds"])),
        converged=d["converged"],
        n_iter=d["n_iter"],
        separation_suspected=d["separation_suspected"],
        log_likelihood=d["log_likelihood"],
    )


def bundle_to_dict(bundle: RiskModelBundle) -> dict:
    return {
        "format_version": BUNDLE_FORMAT_VERSION,
        "config": bundle.config.to_dict(),
        "thresholds": {str(y): t for y, t in sorted(bundle.thresholds.items())},
        "initial_features": list(bundle.initial_features),
        "selected_features": list(bundle.selected_features),
        "logistic": _logistic_to_dict(bundle.logistic),
        "forest_regression": bundle.forest_regression.to_dict(),
        "forest_classifier": bundle.forest_classifier.to_dict(),
        "seed": bundle.seed,
        "warnings": bundle.warnings,
        "eval": bundle.eval.to_dict() if bundle.eval is not None else None,
    }


def bundle_from_dict(d: dict) -> RiskModelBundle:
    if d.get("format_version") != BUNDLE_FORMAT_VERSION:
        raise DataError(f"unsupported bundle format version {d.get('format_version')!r}")
    return RiskModelBundle(
        config=RiskConfig.from_dict(d["config"]),
        thresholds={int(y): t for y, t in d["thresholds"].items()},
        initial_features=tuple(d["initial_features"]),
        selected_features=tuple(d["selected_features"]),
        logistic=_logistic_from_dict(d["logistic"]),
        forest_regression=ForestModel.from_dict(d["forest_regression"]),
        forest_classifier=ForestModel.from_dict(d["forest_classifier"]),
        seed=d["seed"],
        warnings=list(d["warnings"]),
        eval=EvalReport.from_dict(d["eval"]) if d.get("eval") else None,
    )


def dump_bundle_json(bundle: RiskModelBundle) -> str:
    """Canonical JSON text; byte-identical for identical bundles."""
    return json.dumps(bundle_to_dict(bundle), sort_keys=True, indent=2) + "\n"


def save_bundle(bundle: RiskModelBundle, path: str | Path) -> None:
    Path(path).write_text(dump_bundle_json(bundle), encoding="utf-8")


def load_bundle(path: str | Path) -> RiskModelBundle:
    return bundle_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

ASSESSMENT_CSV_HEADER = (
    "code", "state", "year", "vote_lr", "vote_rfr", "vote_rfc",
    "total_risk", "level", "score_lr", "score_rfr", "score_rfc",
)


def write_assessments_csv(assessments: Sequence[VulnerabilityAssessment],
                          code_to_state: Mapping[int, int], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(ASSESSMENT_CSV_HEADER)
    for a in assessments:
        w.writerow([
            a.code, code_to_state.get(a.code, ""), a.year,
            int(a.votes[0]), int(a.votes[1]), int(a.votes[2]),
            a.total_risk, a.level.label,
            repr(a.model_scores[0]), repr(a.model_scores[1]), repr(a.model_scores[2]),
        ])


def join_geojson(geojson: dict, assessments: Sequence[VulnerabilityAssessment],
                 code_property: str = "code") -> tuple[dict, list]:
    """Copy a FeatureCollection with total_risk/level injected into feature
    properties; returns (joined, unmatched_codes)."""
    if geojson.get("type") != "FeatureCollection" or "features" not in geojson:
        raise DataError("expected a GeoJSON FeatureCollection")
    by_code: dict[int, VulnerabilityAssessment] = {}
    for a in assessments:
        by_code[a.code] = a
    features = []
    unmatched = []
    for feat in geojson["features"]:
        props = dict(feat.get("properties") or {})
        raw = props.get(code_property)
        try:
            code = int(raw)
        except (TypeError, ValueError):
            code = None
        a = by_code.get(code) if code is not None else None
        if a is None:
            unmatched.append(raw)
        else:
            props["total_risk"] = a.total_risk
            props["level"] = a.level.label
        new_feat = dict(feat)
        new_feat["properties"] = props
        features.append(new_feat)
    joined = dict(geojson)
    joined["features"] = features
    return joined, unmatched
