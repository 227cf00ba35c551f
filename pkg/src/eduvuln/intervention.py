"""Counterfactual what-if evaluation and minimal-intervention search.

Deltas are additive: percentage points for internet/computer (clamped at
100) and absolute subscriber counts for connectivity (converted through
the municipality's population). The scan semantics are "first qualifying
delta in ascending order", not a global minimum, because forest responses
need not be monotone in the knob.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from .dataset import MunicipalityYear
from .errors import ConfigError
from .risk import RiskModelBundle, VulnerabilityAssessment, VulnerabilityLevel, assess

KNOB_INTERNET = "internet"
KNOB_COMPUTER = "computer"
KNOB_CONNECTIVITY = "connectivity"
KNOBS = (KNOB_INTERNET, KNOB_COMPUTER, KNOB_CONNECTIVITY)

# Scan defaults: 1 percentage point up to 100 points for the percentage
# knobs, 10 subscribers up to 10,000 for connectivity.
DEFAULT_STEP = {KNOB_INTERNET: 1.0, KNOB_COMPUTER: 1.0, KNOB_CONNECTIVITY: 10.0}
DEFAULT_MAX_DELTA = {KNOB_INTERNET: 100.0, KNOB_COMPUTER: 100.0, KNOB_CONNECTIVITY: 10_000.0}


@dataclass(frozen=True)
class InterventionDelta:
    d_internet: float = 0.0                 # percentage points
    d_computer: float = 0.0                 # percentage points
    d_connectivity_subscribers: float = 0.0  # absolute subscriptions

    def __post_init__(self) -> None:
        for name in ("d_internet", "d_computer", "d_connectivity_subscribers"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be >= 0")

    @classmethod
    def for_knob(cls, knob: str, value: float) -> "InterventionDelta":
        if knob == KNOB_INTERNET:
            return cls(d_internet=value)
        if knob == KNOB_COMPUTER:
            return cls(d_computer=value)
        if knob == KNOB_CONNECTIVITY:
            return cls(d_connectivity_subscribers=value)
        raise ConfigError(f"unknown knob {knob!r}; expected one of {KNOBS}")

    def knob_value(self, knob: str) -> float:
        if knob == KNOB_INTERNET:
            return self.d_internet
        if knob == KNOB_COMPUTER:
            return self.d_computer
        if knob == KNOB_CONNECTIVITY:
            return self.d_connectivity_subscribers
        raise ConfigError(f"unknown knob {knob!r}; expected one of {KNOBS}")

    def to_dict(self) -> dict:
        return {"d_internet": self.d_internet, "d_computer": self.d_computer,
                "d_connectivity_subscribers": self.d_connectivity_subscribers}


@dataclass
class InterventionResult:
    code: int
    year: int
    knob: str
    baseline_level: VulnerabilityLevel
    new_level: VulnerabilityLevel
    delta: InterventionDelta
    achieved: bool
    search_trace: list[tuple[float, VulnerabilityLevel]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "code": self.code, "year": self.year, "knob": self.knob,
            "baseline_level": self.baseline_level.label,
            "new_level": self.new_level.label,
            "delta": self.delta.to_dict(),
            "achieved": self.achieved,
            "search_trace": [[d, lv.label] for d, lv in self.search_trace],
        }


def apply_delta(row: MunicipalityYear, delta: InterventionDelta) -> MunicipalityYear:
    """Modified copy of a row; percentages clamp at 100 and connectivity is
    recomputed from the implied subscriber count."""
    new_conn = row.connectivity + 1000.0 * delta.d_connectivity_subscribers / row.population
    return replace(
        row,
        internet_pct=min(100.0, row.internet_pct + delta.d_internet),
        computer_pct=min(100.0, row.computer_pct + delta.d_computer),
        connectivity=new_conn,
    )


def whatif(bundle: RiskModelBundle, row: MunicipalityYear,
           delta: InterventionDelta) -> VulnerabilityAssessment:
    """Assess a hypothetical improved copy of the row; the original row is
    untouched."""
    return assess(bundle, [apply_delta(row, delta)])[0]


def minimal_intervention(bundle: RiskModelBundle, row: MunicipalityYear, knob: str,
                         target_level: VulnerabilityLevel,
                         step: float | None = None,
                         max_delta: float | None = None) -> InterventionResult:
    """Scan deltas 0, step, 2*step, ... up to max_delta and return the first
    one whose level is at or better than target_level.

    When no scanned delta qualifies, achieved is False and the result
    reports the best level found with the smallest delta attaining it.
    """
    if knob not in KNOBS:
        raise ConfigError(f"unknown knob {knob!r}; expected one of {KNOBS}")
    if step is None:
        step = DEFAULT_STEP[knob]
    if max_delta is None:
        max_delta = DEFAULT_MAX_DELTA[knob]
    if step <= 0.0:
        raise ConfigError("step must be positive")
    if max_delta < step:
        raise ConfigError("max_delta must be at least one step")

    trace: list[tuple[float, VulnerabilityLevel]] = []
    best_level: VulnerabilityLevel | None = None
    best_delta = 0.0
    n_steps = int(max_delta / step + 1e-9)
    baseline_level: VulnerabilityLevel | None = None
    for i in range(n_steps + 1):
        d = i * step
        level = whatif(bundle, row, InterventionDelta.for_knob(knob, d)).level
        trace.append((d, level))
        if baseline_level is None:
            baseline_level = level
        if best_level is None or level < best_level:
            best_level, best_delta = level, d
        if level <= target_level:
            return InterventionResult(
                code=row.code, year=row.year, knob=knob,
                baseline_level=baseline_level, new_level=level,
                delta=InterventionDelta.for_knob(knob, d),
                achieved=True, search_trace=trace,
            )
    assert baseline_level is not None and best_level is not None
    return InterventionResult(
        code=row.code, year=row.year, knob=knob,
        baseline_level=baseline_level, new_level=best_level,
        delta=InterventionDelta.for_knob(knob, best_delta),
        achieved=False, search_trace=trace,
    )


def batch_plan(bundle: RiskModelBundle, rows: Sequence[MunicipalityYear], knob: str,
               target_level: VulnerabilityLevel,
               step: float | None = None,
               max_delta: float | None = None) -> list[InterventionResult]:
    """minimal_intervention per row, ordered by (achieved first, smaller
    delta first, code ascending)."""
    results = [minimal_intervention(bundle, r, knob, target_level, step, max_delta)
               for r in rows]
    results.sort(key=lambda r: (not r.achieved, r.delta.knob_value(knob), r.code))
    return results


def whatif_state(bundle: RiskModelBundle, rows: Sequence[MunicipalityYear],
                 state_code: int, delta: InterventionDelta):
    """State-level scenario: apply the same delta to every municipality row
    of the state and re-summarize the level composition.

    Returns (assessments, summary) where summary is the state's
    StateSummary after the hypothetical improvement.
    """
    from .risk import state_summary

    members = [r for r in rows if r.state_code == state_code]
    if not members:
        raise ConfigError(f"no rows for state {state_code}")
    modified = [apply_delta(r, delta) for r in members]
    assessments = assess(bundle, modified)
    (summary,) = state_summary(assessments, {r.code: state_code for r in members})
    return assessments, summary
