"""Read-only JSON facade over a trained bundle and an assessed dataset.

State is loaded once at startup and never mutated by request handling;
every endpoint is a pure function of (state, request). Responses carry a
schema version field "v": 1. Error bodies are {"error", "detail"}.
"""

from __future__ import annotations

import argparse
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import dataset, risk
from .errors import ConfigError
from .intervention import InterventionDelta, whatif

DEFAULT_PORT = 8080
LEVEL_LABELS = tuple(lv.label for lv in risk.VulnerabilityLevel)


@dataclass
class ServiceState:
    bundle: risk.RiskModelBundle
    rows: list[dataset.MunicipalityYear]
    assessments: list[risk.VulnerabilityAssessment]


def load_state(bundle_path: str | Path, data_path: str | Path) -> ServiceState:
    bundle = risk.load_bundle(bundle_path)
    with open(data_path, encoding="utf-8", newline="") as f:
        rows = dataset.read_aggregated_csv(f)
    rows = sorted(rows, key=lambda r: (r.code, r.year))
    return ServiceState(bundle=bundle, rows=rows,
                        assessments=risk.assess(bundle, rows))


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse({"error": error, "detail": detail}, status_code=status)


def _summary(row: dataset.MunicipalityYear, a: risk.VulnerabilityAssessment) -> dict:
    return {
        "code": row.code,
        "state": row.state_code,
        "year": row.year,
        "internet": row.internet_pct,
        "computer": row.computer_pct,
        "ethnic": row.ethnic_pct,
        "school": row.school_public_pct,
        "global_score": row.global_score_mean,
        "population": row.population,
        "connectivity": row.connectivity,
        "rural_index": row.rural_index,
        "n_students": row.n_students,
        "votes": {"logistic": a.votes[0], "forest_regression": a.votes[1],
                  "forest_classifier": a.votes[2]},
        "scores": {"logistic": a.model_scores[0], "forest_regression": a.model_scores[1],
                   "forest_classifier": a.model_scores[2]},
        "total_risk": a.total_risk,
        "level": a.level.label,
    }


def create_app(state: ServiceState, cors_origin: str | None = None) -> FastAPI:
    app = FastAPI(title="eduvuln service", docs_url=None, redoc_url=None)
    if cors_origin:
        app.add_middleware(CORSMiddleware, allow_origins=[cors_origin],
                           allow_methods=["*"], allow_headers=["*"])
    app.state.data = state
    pairs = list(zip(state.rows, state.assessments))
    by_key = {(r.code, r.year): (r, a) for r, a in pairs}

    @app.get("/api/municipalities")
    def municipalities(request: Request):
        params = request.query_params
        year = params.get("year")
        state_f = params.get("state")
        level = params.get("level")
        try:
            year_i = int(year) if year is not None else None
            state_i = int(state_f) if state_f is not None else None
        except ValueError:
            return _error(400, "invalid filter",
                          "year and state must be integers")
        if level is not None and level not in LEVEL_LABELS:
            return _error(400, "invalid filter",
                          f"level must be one of {', '.join(LEVEL_LABELS)}")
        items = []
        for r, a in pairs:
            if year_i is not None and r.year != year_i:
                continue
            if state_i is not None and r.state_code != state_i:
                continue
            if level is not None and a.level.label != level:
                continue
            items.append(_summary(r, a))
        items.sort(key=lambda s: (s["code"], s["year"]))
        return {"v": 1, "items": items}

    @app.get("/api/metrics")
    def metrics():
        report = state.bundle.eval
        if report is None:
            return _error(404, "no evaluation",
                          "the loaded bundle carries no evaluation report")
        return {"v": 1, **report.to_dict()}

    @app.post("/api/whatif")
    async def whatif_endpoint(request: Request):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error(400, "malformed body", "request body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "malformed body", "request body must be a JSON object")
        try:
            code = int(body["code"])
            year = int(body["year"])
            d_internet = float(body.get("d_internet", 0.0))
            d_computer = float(body.get("d_computer", 0.0))
            d_connectivity = float(body.get("d_connectivity", 0.0))
        except (KeyError, TypeError, ValueError):
            return _error(400, "malformed body",
                          "required: code, year (integers); optional numeric "
                          "d_internet, d_computer, d_connectivity")
        if min(d_internet, d_computer, d_connectivity) < 0.0:
            return _error(422, "invalid delta", "deltas must be >= 0")
        hit = by_key.get((code, year))
        if hit is None:
            return _error(404, "unknown municipality",
                          f"no row for code {code} in year {year}")
        row, baseline = hit
        delta = InterventionDelta(d_internet=d_internet, d_computer=d_computer,
                                  d_connectivity_subscribers=d_connectivity)
        result = whatif(state.bundle, row, delta)
        return {
            "v": 1,
            "code": code,
            "year": year,
            "delta": delta.to_dict(),
            "baseline_level": baseline.level.label,
            "baseline_total_risk": baseline.total_risk,
            "new_level": result.level.label,
            "new_total_risk": result.total_risk,
            "assessment": _summary(row, result) | {
                # covariables after the hypothetical improvement
                "internet": min(100.0, row.internet_pct + d_internet),
                "computer": min(100.0, row.computer_pct + d_computer),
                "connectivity": row.connectivity + 1000.0 * d_connectivity / row.population,
            },
        }

    return app


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="eduvuln-serve",
        description="Serve a trained bundle and assessed dataset over JSON HTTP")
    parser.add_argument("--bundle", required=True)
    parser.add_argument("--data", required=True, help="aggregated CSV")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int,
                        default=int(os.environ.get("RISK_PORT", DEFAULT_PORT)))
    parser.add_argument("--cors-origin", dest="cors_origin")
    args = parser.parse_args(argv)
    for name in ("bundle", "data"):
        if not Path(getattr(args, name)).exists():
            raise ConfigError(f"{name} file not found: {getattr(args, name)}")
    state = load_state(args.bundle, args.data)
    app = create_app(state, cors_origin=args.cors_origin)

    import uvicorn
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
