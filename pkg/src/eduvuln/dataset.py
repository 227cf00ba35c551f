"""Source-table parsing, municipality-year aggregation, year splits, and synthetic fixtures.

The three source tables (students, connectivity, census) are joined on
(municipality code, year) and reduced to one covariable row per
municipality-year. Percentages are kept on the 0..100 scale everywhere.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import ConfigError, DataError, SchemaError

logger = logging.getLogger(__name__)

SUBJECTS = ("reading", "citizenship", "english", "writing", "quant")

STUDENTS_HEADER = (
    "code", "year", "reading", "citizenship", "english", "writing", "quant",
    "global", "internet", "computer", "ethnic", "public_school",
)
CONNECTIVITY_HEADER = ("code", "year", "subscribers")
CENSUS_HEADER = ("code", "year", "state", "population", "rural_population")
AGGREGATED_HEADER = (
    "code", "state", "year", "internet", "computer", "ethnic", "school",
    "global_score", "population", "connectivity", "rural_index", "n_students",
)

# Covariable name -> MunicipalityYear attribute. These names are the model
# feature vocabulary and the keys used in reports and the service API.
COVARIABLE_FIELDS = {
    "internet": "internet_pct",
    "computer": "computer_pct",
    "ethnic": "ethnic_pct",
    "school": "school_public_pct",
    "connectivity": "connectivity",
    "rural_index": "rural_index",
    "global_score": "global_score_mean",
    "population": "population",
}

# Candidate predictors fed to the first logistic fit before significance
# filtering. The outcome (global_score) and population are not predictors.
INITIAL_COVARIABLES = (
    "internet", "computer", "ethnic", "school", "connectivity", "rural_index",
)


@dataclass(frozen=True)
class StudentRecord:
    """One test-taker: scores plus self-reported household covariables."""

    municipality_code: int
    year: int
    subject_scores: tuple[float, float, float, float, float] | None
    global_score: float | None
    has_internet: bool
    has_computer: bool
    is_ethnic: bool
    school_public: bool

    def effective_global_score(self) -> float:
        """Global score, derived from the subject sum when only subjects are given."""
        if self.global_score is not None:
            return self.global_score
        assert self.subject_scores is not None
        return float(sum(self.subject_scores))


@dataclass(frozen=True)
class ConnectivityRecord:
    municipality_code: int
    year: int
    subscribers: int


@dataclass(frozen=True)
class CensusRecord:
    municipality_code: int
    year: int
    state_code: int
    population: int
    rural_population: int


@dataclass(frozen=True)
class MunicipalityYear:
    """Aggregated covariables for one municipality in one test year."""

    code: int
    state_code: int
    year: int
    internet_pct: float
    computer_pct: float
    ethnic_pct: float
    school_public_pct: float
    global_score_mean: float
    population: int
    connectivity: float
    rural_index: float
    n_students: int

    def __post_init__(self) -> None:
        for name in ("internet_pct", "computer_pct", "ethnic_pct",
                     "school_public_pct", "rural_index"):
            v = getattr(self, name)
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"{name}={v} outside [0, 100] for code {self.code}")
        if not 0.0 <= self.global_score_mean <= 500.0:
            raise ValueError(f"global_score_mean={self.global_score_mean} outside [0, 500]")
        if self.population <= 0:
            raise ValueError(f"population must be positive, got {self.population}")
        if self.connectivity < 0.0:
            raise ValueError(f"connectivity must be >= 0, got {self.connectivity}")
        if self.n_students < 1:
            raise ValueError(f"n_students must be >= 1, got {self.n_students}")


def covariable_values(row: MunicipalityYear, names: Sequence[str]) -> np.ndarray:
    return np.array([getattr(row, COVARIABLE_FIELDS[n]) for n in names], dtype=np.float64)


def covariable_matrix(rows: Sequence[MunicipalityYear], names: Sequence[str]) -> np.ndarray:
    attrs = [COVARIABLE_FIELDS[n] for n in names]
    return np.array([[getattr(r, a) for a in attrs] for r in rows], dtype=np.float64)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _check_header(reader: csv.DictReader, required: Sequence[str], what: str) -> None:
    got = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in required if c not in got]
    if missing:
        raise SchemaError(f"{what}: missing column(s) {', '.join(missing)}")


def _parse_bool(raw: str, column: str) -> bool:
    raw = raw.strip()
    if raw == "1":
        return True
    if raw == "0":
        return False
    raise ValueError(f"{column} must be 0 or 1, got {raw!r}")


def parse_students(stream: TextIO, strict: bool = False) -> tuple[list[StudentRecord], list[str]]:
    """Parse the students CSV.

    Returns (records, row_errors). Row-level problems (out-of-range score,
    inconsistent score forms, bad boolean) are collected with their line
    number and the row is skipped; with strict=True the first one raises
    DataError instead. A malformed header always raises SchemaError.
    """
    reader = csv.DictReader(stream)
    _check_header(reader, STUDENTS_HEADER, "students.csv")
    records: list[StudentRecord] = []
    errors: list[str] = []
    for lineno, row in enumerate(reader, start=2):
        try:
            records.append(_parse_student_row(row))
        except ValueError as exc:
            msg = f"line {lineno}: {exc}"
            if strict:
                raise DataError(f"students.csv {msg}") from exc
            errors.append(msg)
    return records, errors


def _parse_student_row(row: dict[str, str]) -> StudentRecord:
    code = int(row["code"])
    year = int(row["year"])
    if code <= 0:
        raise ValueError(f"code must be positive, got {code}")

    raw_subjects = [row[s].strip() for s in SUBJECTS]
    present = [s for s in raw_subjects if s != ""]
    if present and len(present) != len(SUBJECTS):
        raise ValueError("incomplete subject scores (all five or none)")
    subjects: tuple[float, ...] | None = None
    if present:
        vals = [float(s) for s in raw_subjects]
        for v in vals:
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"score out of range: subject score {v}")
        subjects = tuple(vals)

    raw_global = row["global"].strip()
    global_score: float | None = None
    if raw_global != "":
        global_score = float(raw_global)
        if not 0.0 <= global_score <= 500.0:
            raise ValueError(f"score out of range: global score {global_score}")

    if subjects is None and global_score is None:
        raise ValueError("row has neither subject scores nor a global score")
    if subjects is not None and global_score is not None:
        if abs(global_score - sum(subjects)) > 0.5:
            raise ValueError(
                f"global score {global_score} inconsistent with subject sum {sum(subjects)}"
            )

    return StudentRecord(
        municipality_code=code,
        year=year,
        subject_scores=subjects,  # type: ignore[arg-type]
        global_score=global_score,
        has_internet=_parse_bool(row["internet"], "internet"),
        has_computer=_parse_bool(row["computer"], "computer"),
        is_ethnic=_parse_bool(row["ethnic"], "ethnic"),
        school_public=_parse_bool(row["public_school"], "public_school"),
    )


def parse_connectivity(stream: TextIO, strict: bool = False) -> tuple[list[ConnectivityRecord], list[str]]:
    reader = csv.DictReader(stream)
    _check_header(reader, CONNECTIVITY_HEADER, "connectivity.csv")
    records: list[ConnectivityRecord] = []
    errors: list[str] = []
    for lineno, row in enumerate(reader, start=2):
        try:
            subs = int(row["subscribers"])
            if subs < 0:
                raise ValueError(f"subscribers must be >= 0, got {subs}")
            records.append(ConnectivityRecord(int(row["code"]), int(row["year"]), subs))
        except ValueError as exc:
            msg = f"line {lineno}: {exc}"
            if strict:
                raise DataError(f"connectivity.csv {msg}") from exc
            errors.append(msg)
    return records, errors


def parse_census(stream: TextIO, strict: bool = False) -> tuple[list[CensusRecord], list[str]]:
    reader = csv.DictReader(stream)
    _check_header(reader, CENSUS_HEADER, "census.csv")
    records: list[CensusRecord] = []
    errors: list[str] = []
    for lineno, row in enumerate(reader, start=2):
        try:
            pop = int(row["population"])
            rural = int(row["rural_population"])
            if pop <= 0:
                raise ValueError(f"population must be positive, got {pop}")
            if not 0 <= rural <= pop:
                raise ValueError(f"rural_population {rural} outside [0, population]")
            records.append(CensusRecord(int(row["code"]), int(row["year"]),
                                        int(row["state"]), pop, rural))
        except ValueError as exc:
            msg = f"line {lineno}: {exc}"
            if strict:
                raise DataError(f"census.csv {msg}") from exc
            errors.append(msg)
    return records, errors


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

@dataclass
class AggregationResult:
    rows: list[MunicipalityYear]
    warnings: list[str]


def _nearest_census(by_code: dict[int, list[CensusRecord]], code: int, year: int) -> CensusRecord:
    candidates = by_code.get(code)
    if not candidates:
        raise DataError(f"no census record for municipality {code}; cannot compute "
                        "connectivity or rural_index")
    # Nearest year, ties broken toward the earlier one.
    return min(candidates, key=lambda r: (abs(r.year - year), r.year))


def aggregate(
    students: Iterable[StudentRecord],
    connectivity: Iterable[ConnectivityRecord],
    census: Iterable[CensusRecord],
) -> AggregationResult:
    """Reduce student records to one covariable row per (code, year).

    Census population comes from the nearest census year; a missing
    connectivity record means zero subscribers (warned, not fatal).
    Output rows are sorted by (code, year), so the result does not depend
    on input ordering.
    """
    groups: dict[tuple[int, int], list[StudentRecord]] = {}
    for s in students:
        groups.setdefault((s.municipality_code, s.year), []).append(s)

    census_by_code: dict[int, list[CensusRecord]] = {}
    for c in census:
        census_by_code.setdefault(c.municipality_code, []).append(c)
    subscribers = {(c.municipality_code, c.year): c.subscribers for c in connectivity}

    rows: list[MunicipalityYear] = []
    warnings: list[str] = []
    for (code, year) in sorted(groups):
        members = groups[(code, year)]
        n = len(members)
        cen = _nearest_census(census_by_code, code, year)
        subs = subscribers.get((code, year))
        if subs is None:
            subs = 0
            warnings.append(f"no connectivity record for (code={code}, year={year}); "
                            "assuming 0 subscribers")
        # Scores are summed in sorted order so the mean is permutation-invariant
        # down to the last bit.
        scores = sorted(s.effective_global_score() for s in members)
        rows.append(MunicipalityYear(
            code=code,
            state_code=cen.state_code,
            year=year,
            internet_pct=100.0 * sum(s.has_internet for s in members) / n,
            computer_pct=100.0 * sum(s.has_computer for s in members) / n,
            ethnic_pct=100.0 * sum(s.is_ethnic for s in members) / n,
            school_public_pct=100.0 * sum(s.school_public for s in members) / n,
            global_score_mean=math.fsum(scores) / n,
            population=cen.population,
            connectivity=1000.0 * subs / cen.population,
            rural_index=100.0 * cen.rural_population / cen.population,
            n_students=n,
        ))
    for w in warnings:
        logger.warning("%s", w)
    return AggregationResult(rows=rows, warnings=warnings)


def split_by_year(
    rows: Sequence[MunicipalityYear],
    train_years: Sequence[int],
    validation_year: int,
) -> tuple[list[MunicipalityYear], list[MunicipalityYear]]:
    """Partition rows into training and validation years. Rows in neither
    set are dropped (count logged)."""
    train_set = set(train_years)
    if validation_year in train_set:
        raise ConfigError(f"validation year {validation_year} overlaps the training years")
    if not train_set:
        raise ConfigError("train_years must be nonempty")
    train = [r for r in rows if r.year in train_set]
    val = [r for r in rows if r.year == validation_year]
    if not train or not val:
        raise ConfigError(
            f"empty partition: {len(train)} training rows (years {sorted(train_set)}), "
            f"{len(val)} validation rows (year {validation_year})"
        )
    excluded = len(rows) - len(train) - len(val)
    if excluded:
        logger.info("split_by_year: %d rows outside selected years excluded", excluded)
    return train, val


# ---------------------------------------------------------------------------
# Aggregated CSV round trip
# ---------------------------------------------------------------------------

def write_aggregated_csv(rows: Sequence[MunicipalityYear], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(AGGREGATED_HEADER)
    for r in rows:
        writer.writerow([
            r.code, r.state_code, r.year,
            repr(r.internet_pct), repr(r.computer_pct), repr(r.ethnic_pct),
            repr(r.school_public_pct), repr(r.global_score_mean),
            r.population, repr(r.connectivity), repr(r.rural_index), r.n_students,
        ])


def read_aggregated_csv(stream: TextIO) -> list[MunicipalityYear]:
    reader = csv.DictReader(stream)
    _check_header(reader, AGGREGATED_HEADER, "aggregated csv")
    rows = []
    for row in reader:
        rows.append(MunicipalityYear(
            code=int(row["code"]),
            state_code=int(row["state"]),
            year=int(row["year"]),
            internet_pct=float(row["internet"]),
            computer_pct=float(row["computer"]),
            ethnic_pct=float(row["ethnic"]),
            school_public_pct=float(row["school"]),
            global_score_mean=float(row["global_score"]),
            population=int(row["population"]),
            connectivity=float(row["connectivity"]),
            rural_index=float(row["rural_index"]),
            n_students=int(row["n_students"]),
        ))
    return rows


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    """Planted-signal generator settings.

    Effects are score points per covariable unit; the mean score is
    base_score + sum(effect * covariable) + N(0, noise_scale), clamped to
    [0, 500]. internet_drift adds a deterministic per-year shift to the
    internet percentage.
    """

    n_municipalities: int
    years: tuple[int, ...]
    base_score: float = 250.0
    effect_internet: float = 0.0
    effect_connectivity: float = 0.0
    effect_ethnic: float = 0.0
    effect_rural: float = 0.0
    noise_scale: float = 20.0
    internet_drift: float = 0.0
    n_states: int = 8

    def __post_init__(self) -> None:
        if self.n_municipalities <= 0:
            raise ConfigError("n_municipalities must be positive")
        if not self.years:
            raise ConfigError("years must be nonempty")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be >= 0")
        if self.n_states <= 0:
            raise ConfigError("n_states must be positive")


def generate_synthetic(config: SynthConfig, seed: int) -> list[MunicipalityYear]:
    """Deterministic municipality-year rows with a planted linear signal."""
    rng = np.random.default_rng(seed)
    n = config.n_municipalities
    years = sorted(config.years)

    internet0 = rng.uniform(5.0, 85.0, n)
    computer0 = np.clip(0.75 * internet0 + rng.uniform(-15.0, 15.0, n), 0.0, 100.0)
    ethnic0 = rng.uniform(0.0, 95.0, n)
    school0 = rng.uniform(30.0, 100.0, n)
    rural0 = rng.uniform(0.0, 95.0, n)
    population = np.exp(rng.uniform(np.log(2_000.0), np.log(500_000.0), n)).astype(np.int64)
    connectivity0 = np.clip(0.6 * internet0 + rng.uniform(-10.0, 25.0, n), 0.0, 200.0)
    states = 1 + rng.integers(0, config.n_states, n)
    n_students = rng.integers(20, 400, size=(n, len(years)))
    noise = rng.standard_normal((n, len(years))) * config.noise_scale

    rows: list[MunicipalityYear] = []
    for i in range(n):
        for t, year in enumerate(years):
            internet = float(np.clip(internet0[i] + config.internet_drift * t, 0.0, 100.0))
            score = (config.base_score
                     + config.effect_internet * internet
                     + config.effect_connectivity * connectivity0[i]
                     + config.effect_ethnic * ethnic0[i]
                     + config.effect_rural * rural0[i]
                     + noise[i, t])
            rows.append(MunicipalityYear(
                code=10_000 + i,
                state_code=int(states[i]),
                year=year,
                internet_pct=internet,
                computer_pct=float(computer0[i]),
                ethnic_pct=float(ethnic0[i]),
                school_public_pct=float(school0[i]),
                global_score_mean=float(np.clip(score, 0.0, 500.0)),
                population=int(population[i]),
                connectivity=float(connectivity0[i]),
                rural_index=float(rural0[i]),
                n_students=int(n_students[i, t]),
            ))
    return rows


def synth_source_tables(
    rows: Sequence[MunicipalityYear], seed: int
) -> tuple[list[StudentRecord], list[ConnectivityRecord], list[CensusRecord]]:
    """Disaggregate municipality-year rows into raw fixture tables.

    Re-aggregating the output reproduces the input covariables up to the
    rounding of boolean counts (at most 100/(2*n_students) percentage
    points per covariable).
    """
    rng = np.random.default_rng(seed)
    students: list[StudentRecord] = []
    connectivity: list[ConnectivityRecord] = []
    census: list[CensusRecord] = []
    for r in rows:
        n = r.n_students
        flags = {}
        for name, pct in (("internet", r.internet_pct), ("computer", r.computer_pct),
                          ("ethnic", r.ethnic_pct), ("school", r.school_public_pct)):
            k = int(round(pct * n / 100.0))
            col = np.zeros(n, dtype=bool)
            col[:k] = True
            flags[name] = rng.permutation(col)
        # Zero-mean bounded spread around the target: after centering the
        # uniform draw stays within +-2a, which keeps every score in [0, 500].
        a = min(25.0, r.global_score_mean / 2.0, (500.0 - r.global_score_mean) / 2.0)
        eps = rng.uniform(-a, a, n)
        scores = r.global_score_mean + (eps - eps.mean())
        for j in range(n):
            students.append(StudentRecord(
                municipality_code=r.code, year=r.year,
                subject_scores=None, global_score=float(scores[j]),
                has_internet=bool(flags["internet"][j]),
                has_computer=bool(flags["computer"][j]),
                is_ethnic=bool(flags["ethnic"][j]),
                school_public=bool(flags["school"][j]),
            ))
        connectivity.append(ConnectivityRecord(
            r.code, r.year, int(round(r.connectivity * r.population / 1000.0))))
        census.append(CensusRecord(
            r.code, r.year, r.state_code, r.population,
            int(round(r.rural_index * r.population / 100.0))))
    return students, connectivity, census


def write_source_tables(
    students: Sequence[StudentRecord],
    connectivity: Sequence[ConnectivityRecord],
    census: Sequence[CensusRecord],
    students_stream: TextIO,
    connectivity_stream: TextIO,
    census_stream: TextIO,
) -> None:
    w = csv.writer(students_stream, lineterminator="\n")
    w.writerow(STUDENTS_HEADER)
    for s in students:
        subj = [repr(v) for v in s.subject_scores] if s.subject_scores else [""] * 5
        w.writerow([
            s.municipality_code, s.year, *subj,
            repr(s.global_score) if s.global_score is not None else "",
            int(s.has_internet), int(s.has_computer), int(s.is_ethnic), int(s.school_public),
        ])
    w = csv.writer(connectivity_stream, lineterminator="\n")
    w.writerow(CONNECTIVITY_HEADER)
    for c in connectivity:
        w.writerow([c.municipality_code, c.year, c.subscribers])
    w = csv.writer(census_stream, lineterminator="\n")
    w.writerow(CENSUS_HEADER)
    for c in census:
        w.writerow([c.municipality_code, c.year, c.state_code, c.population, c.rural_population])
