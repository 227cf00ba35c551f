"""Descriptive statistics: Pearson correlations, vulnerability-group summaries,
Bonferroni-corrected pairwise Welch tests, and per-year trend tables.

The Student-t tail probability is evaluated via the regularized incomplete
beta function (modified Lentz continued fraction), accurate to about 1e-10,
so no statistical library is needed at runtime.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence, TextIO

import numpy as np

from .dataset import MunicipalityYear, covariable_matrix
from .errors import ConfigError, DataError

if TYPE_CHECKING:
    from .risk import VulnerabilityAssessment

PERCENTAGE_COVARIABLES = frozenset({"internet", "computer", "ethnic", "school", "rural_index"})
TREND_COVARIABLES = ("internet", "computer", "ethnic", "rural_index")


# ---------------------------------------------------------------------------
# Student-t tail probability
# ---------------------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    MAXIT, EPS, FPMIN = 300, 1e-15, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    # Use the continued fraction on whichever side converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with df degrees of freedom."""
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    half_two_sided = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x)
    return half_two_sided if t >= 0.0 else 1.0 - half_two_sided


def normal_sf(z: float) -> float:
    """P(Z > z) for a standard normal."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Correlation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationMatrix:
    covariable_names: tuple[str, ...]
    values: np.ndarray  # symmetric, unit diagonal

    def to_json_dict(self) -> dict:
        return {"v": 1, "covariables": list(self.covariable_names),
                "values": self.values.tolist()}


def correlation_matrix(rows: Sequence[MunicipalityYear],
                       covariables: Sequence[str]) -> CorrelationMatrix:
    """Sample Pearson coefficients between the selected covariables."""
    if len(rows) < 2:
        raise DataError("correlation needs at least 2 rows")
    X = covariable_matrix(rows, covariables)
    centered = X - X.mean(axis=0)
    norms = np.sqrt((centered ** 2).sum(axis=0))
    for name, nrm in zip(covariables, norms):
        if nrm == 0.0:
            raise DataError(f"covariable {name} has zero variance")
    Z = centered / norms
    m = Z.T @ Z
    m = (m + m.T) / 2.0
    np.fill_diagonal(m, 1.0)
    np.clip(m, -1.0, 1.0, out=m)
    return CorrelationMatrix(tuple(covariables), m)


# ---------------------------------------------------------------------------
# Group summaries and pairwise tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupSummary:
    level: str
    size: int
    mean_per_covariable: dict[str, float]


@dataclass(frozen=True)
class PairwiseTestResult:
    level_a: str
    level_b: str
    covariable: str
    t_statistic: float
    raw_p: float
    adjusted_alpha: float
    significant: bool


@dataclass
class BonferroniReport:
    results: list[PairwiseTestResult]
    notices: list[str]
    adjusted_alpha: float
    n_tests: int


def _group_by_level(rows: Sequence[MunicipalityYear],
                    assessments: Sequence["VulnerabilityAssessment"]):
    by_key = {(a.code, a.year): a for a in assessments}
    groups: dict[str, list[MunicipalityYear]] = {}
    order: list[str] = []
    for r in rows:
        a = by_key.get((r.code, r.year))
        if a is None:
            raise DataError(f"no assessment for (code={r.code}, year={r.year})")
        label = a.level.label
        if label not in groups:
            groups[label] = []
            order.append(label)
        groups[label].append(r)
    # Present levels in severity order.
    severity = {"None": 0, "Low": 1, "Medium": 2, "Serious": 3}
    order.sort(key=lambda lbl: severity[lbl])
    return groups, order


def group_means(rows: Sequence[MunicipalityYear],
                assessments: Sequence["VulnerabilityAssessment"],
                covariables: Sequence[str]) -> list[GroupSummary]:
    """Per-covariable means for every vulnerability level present."""
    groups, order = _group_by_level(rows, assessments)
    out = []
    for label in order:
        members = groups[label]
        X = covariable_matrix(members, covariables)
        means = X.mean(axis=0)
        out.append(GroupSummary(label, len(members),
                                {c: float(m) for c, m in zip(covariables, means)}))
    return out


def welch_t_test(a: np.ndarray, b: np.ndarray) -> tuple[float, float, float]:
    """Welch two-sample t-test; returns (t, df, two-sided p).

    With zero variance in both samples the statistic is undefined and
    (nan, nan, 1.0) is returned.
    """
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise DataError("each group needs at least 2 members")
    va = float(np.var(a, ddof=1))
    vb = float(np.var(b, ddof=1))
    se2 = va / na + vb / nb
    if se2 == 0.0:
        return math.nan, math.nan, 1.0
    t = (float(np.mean(a)) - float(np.mean(b))) / math.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = 2.0 * student_t_sf(abs(t), df)
    return t, df, min(p, 1.0)


def bonferroni_pairwise(rows: Sequence[MunicipalityYear],
                        assessments: Sequence["VulnerabilityAssessment"],
                        covariables: Sequence[str],
                        alpha: float = 0.05) -> BonferroniReport:
    """Welch t-tests for every level pair and covariable, Bonferroni-adjusted.

    The divisor counts only tests actually performed: pairs where a level
    has fewer than 2 members are skipped with a notice and do not shrink
    alpha for the rest.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    groups, order = _group_by_level(rows, assessments)
    notices: list[str] = []
    tested_pairs: list[tuple[str, str]] = []
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            a_lbl, b_lbl = order[i], order[j]
            if len(groups[a_lbl]) < 2 or len(groups[b_lbl]) < 2:
                notices.append(f"pair ({a_lbl}, {b_lbl}) skipped: a level has <2 members")
                continue
            tested_pairs.append((a_lbl, b_lbl))
    n_tests = len(tested_pairs) * len(covariables)
    adjusted = alpha / n_tests if n_tests else alpha
    results: list[PairwiseTestResult] = []
    for a_lbl, b_lbl in tested_pairs:
        Xa = covariable_matrix(groups[a_lbl], covariables)
        Xb = covariable_matrix(groups[b_lbl], covariables)
        for k, cov in enumerate(covariables):
            t, _, p = welch_t_test(Xa[:, k], Xb[:, k])
            if math.isnan(t):
                notices.append(f"({a_lbl}, {b_lbl}, {cov}): zero variance in both "
                               "groups, t undefined, reported not significant")
            results.append(PairwiseTestResult(
                level_a=a_lbl, level_b=b_lbl, covariable=cov,
                t_statistic=t, raw_p=p, adjusted_alpha=adjusted,
                significant=p < adjusted,
            ))
    return BonferroniReport(results, notices, adjusted, n_tests)


# ---------------------------------------------------------------------------
# Trends
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrendRow:
    year: int
    n_rows: int
    means: dict[str, float]


def trend_report(rows: Sequence[MunicipalityYear],
                 scope: str = "country",
                 members: Iterable[int] | None = None,
                 covariables: Sequence[str] = TREND_COVARIABLES) -> list[TrendRow]:
    """Per-year covariable means for the whole country, a state set, or a
    municipality set."""
    if not rows:
        raise DataError("trend_report needs at least one row")
    if scope == "country":
        selected = list(rows)
    elif scope in ("states", "municipalities"):
        if members is None:
            raise ConfigError(f"scope {scope!r} requires a member set")
        wanted = set(members)
        key = (lambda r: r.state_code) if scope == "states" else (lambda r: r.code)
        known = {key(r) for r in rows}
        unknown = wanted - known
        if unknown:
            raise DataError(f"unknown {scope} member(s): {sorted(unknown)}")
        selected = [r for r in rows if key(r) in wanted]
    else:
        raise ConfigError(f"unknown scope {scope!r}")
    out: list[TrendRow] = []
    for year in sorted({r.year for r in selected}):
        members_y = [r for r in selected if r.year == year]
        X = covariable_matrix(members_y, covariables)
        out.append(TrendRow(year, len(members_y),
                            {c: float(m) for c, m in zip(covariables, X.mean(axis=0))}))
    return out


# ---------------------------------------------------------------------------
# Report serialization (CSV + JSON)
# ---------------------------------------------------------------------------

def group_means_to_json(summaries: Sequence[GroupSummary]) -> dict:
    return {"v": 1, "groups": [
        {"level": g.level, "size": g.size, "means": g.mean_per_covariable}
        for g in summaries
    ]}


def group_means_to_csv(summaries: Sequence[GroupSummary], stream: TextIO) -> None:
    covariables = list(summaries[0].mean_per_covariable) if summaries else []
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["level", "size", *covariables])
    for g in summaries:
        w.writerow([g.level, g.size, *[repr(g.mean_per_covariable[c]) for c in covariables]])


def pairwise_to_json(report: BonferroniReport) -> dict:
    return {"v": 1, "adjusted_alpha": report.adjusted_alpha, "n_tests": report.n_tests,
            "notices": report.notices,
            "results": [
                {"level_a": r.level_a, "level_b": r.level_b, "covariable": r.covariable,
                 "t": None if math.isnan(r.t_statistic) else r.t_statistic,
                 "raw_p": r.raw_p, "significant": r.significant}
                for r in report.results
            ]}


def pairwise_to_csv(report: BonferroniReport, stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["level_a", "level_b", "covariable", "t", "raw_p", "adjusted_alpha", "significant"])
    for r in report.results:
        w.writerow([r.level_a, r.level_b, r.covariable,
                    "" if math.isnan(r.t_statistic) else repr(r.t_statistic),
                    repr(r.raw_p), repr(r.adjusted_alpha), int(r.significant)])


def trend_to_json(trend: Sequence[TrendRow]) -> dict:
    return {"v": 1, "years": [
        {"year": t.year, "n_rows": t.n_rows, "means": t.means} for t in trend
    ]}


def trend_to_csv(trend: Sequence[TrendRow], stream: TextIO) -> None:
    covariables = list(trend[0].means) if trend else []
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["year", "n_rows", *covariables])
    for t in trend:
        w.writerow([t.year, t.n_rows, *[repr(t.means[c]) for c in covariables]])


def correlation_to_json_text(matrix: CorrelationMatrix) -> str:
    """Heat-map payload for the UI: covariable names plus the raw matrix."""
    return json.dumps(matrix.to_json_dict(), sort_keys=True)
