"""Pipeline command line: ingest, train, assess, whatif, synth.

Every subcommand is byte-reproducible for identical flags and seed; each
file-producing run also writes a manifest (resolved configuration, seed,
timestamp, sha256 checksums) next to its primary output. Exit codes:
0 success, 2 usage or input error, 3 data degeneracy.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import dataset, intervention, risk
from .errors import ConfigError, DataError, DegenerateDataError, EduvulnError, SchemaError

MODEL_TABLE_ROWS = (
    (risk.MODEL_LOGISTIC, "Logistic regression"),
    (risk.MODEL_FOREST_REGRESSION, "Regression random forest (depth {m})"),
    (risk.MODEL_FOREST_CLASSIFIER, "Classifier random forest (depth {l})"),
)


def _parse_years(text: str) -> tuple[int, ...]:
    """Accepts '2014-2018', '2014,2016,2018', or a single year."""
    text = text.strip()
    if "-" in text:
        lo, hi = text.split("-", 1)
        lo_i, hi_i = int(lo), int(hi)
        if hi_i < lo_i:
            raise ConfigError(f"bad year range {text!r}")
        return tuple(range(lo_i, hi_i + 1))
    return tuple(int(t) for t in text.split(",") if t.strip())


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_manifest(primary_output: Path, subcommand: str, config: dict,
                    inputs: dict[str, str], outputs: list[Path],
                    seed: int | None) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "inputs": inputs,
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "checksums": {str(p): _sha256(p) for p in outputs},
    }
    path = (primary_output / "manifest.json" if primary_output.is_dir()
            else primary_output.with_name(primary_output.name + ".manifest.json"))
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {p} must hold a JSON object")
    return data


def _resolve(args: argparse.Namespace, file_cfg: dict, key: str, default):
    """Flag beats config file beats default."""
    v = getattr(args, key, None)
    if v is not None:
        return v
    if key in file_cfg:
        return file_cfg[key]
    return default


def _threads(args: argparse.Namespace, file_cfg: dict) -> int:
    v = _resolve(args, file_cfg, "threads", None)
    if v is None:
        v = os.environ.get("RISK_THREADS", "1")
    n = int(v)
    if n < 1:
        raise ConfigError(f"--threads must be >= 1, got {n}")
    return n


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args: argparse.Namespace) -> int:
    strict = bool(args.strict)
    paths = {"students": args.students, "connectivity": args.connectivity,
             "census": args.census}
    for name, p in paths.items():
        if not Path(p).exists():
            raise DataError(f"{name} file not found: {p}")
    with open(args.students, encoding="utf-8", newline="") as f:
        students, student_errors = dataset.parse_students(f, strict=strict)
    with open(args.connectivity, encoding="utf-8", newline="") as f:
        connectivity, conn_errors = dataset.parse_connectivity(f, strict=strict)
    with open(args.census, encoding="utf-8", newline="") as f:
        census, census_errors = dataset.parse_census(f, strict=strict)
    result = dataset.aggregate(students, connectivity, census)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="") as f:
        dataset.write_aggregated_csv(result.rows, f)
    bad = len(student_errors) + len(conn_errors) + len(census_errors)
    print(f"aggregated {len(result.rows)} municipality-year rows "
          f"from {len(students)} students")
    if bad:
        print(f"rejected {bad} malformed row(s):")
        for src, errs in (("students", student_errors), ("connectivity", conn_errors),
                          ("census", census_errors)):
            for e in errs:
                print(f"  {src}: {e}")
    for w in result.warnings:
        print(f"warning: {w}")
    _write_manifest(out, "ingest", {"strict": strict}, paths, [out], None)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    data_path = Path(args.data)
    if not data_path.exists():
        raise DataError(f"data file not found: {data_path}")
    seed = int(_resolve(args, file_cfg, "seed", 0))
    train_years = _resolve(args, file_cfg, "train_years", "2014-2018")
    val_year = int(_resolve(args, file_cfg, "val_year", 2019))
    config = risk.RiskConfig(
        k=float(_resolve(args, file_cfg, "k", 1.0)),
        m=int(_resolve(args, file_cfg, "depth_m", 3)),
        l=int(_resolve(args, file_cfg, "depth_l", 3)),
        alpha=float(_resolve(args, file_cfg, "alpha", 0.05)),
        train_years=_parse_years(train_years) if isinstance(train_years, str)
        else tuple(train_years),
        validation_year=val_year,
        n_trees=int(_resolve(args, file_cfg, "n_trees", 100)),
    )
    with open(data_path, encoding="utf-8", newline="") as f:
        rows = dataset.read_aggregated_csv(f)
    train_rows, val_rows = dataset.split_by_year(rows, config.train_years,
                                                 config.validation_year)
    bundle = risk.train_bundle(train_rows, config, seed=seed,
                               n_jobs=_threads(args, file_cfg))
    report = risk.evaluate(bundle, val_rows)
    out = Path(args.out)
    risk.save_bundle(bundle, out)
    eval_out = Path(args.eval_out) if args.eval_out else out.with_name(out.stem + ".eval.json")
    eval_out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")

    print(f"trained on {len(train_rows)} rows "
          f"(years {config.train_years[0]}..{config.train_years[-1]}), "
          f"validated on {len(val_rows)} rows ({config.validation_year})")
    print(f"selected covariables: {', '.join(bundle.selected_features)}")
    for w in bundle.warnings:
        print(f"warning: {w}")
    print()
    print(f"{'MODEL':<42}AUC")
    for key, label in MODEL_TABLE_ROWS:
        auc = report.auc_per_model.get(key)
        shown = f"{auc:.4f}" if auc is not None else "undefined"
        print(f"{label.format(m=config.m, l=config.l):<42}{shown}")
    print()
    print("confusion (rows: actual safe/at-risk, columns: TOTAL_RISK 0..3):")
    for row in report.confusion.tolist():
        print("  " + "  ".join(f"{v:>6d}" for v in row))
    _write_manifest(out, "train", config.to_dict() | {"seed": seed},
                    {"data": str(data_path)}, [out, eval_out], seed)
    return 0


def _load_rows(path: str) -> list[dataset.MunicipalityYear]:
    p = Path(path)
    if not p.exists():
        raise DataError(f"data file not found: {p}")
    with open(p, encoding="utf-8", newline="") as f:
        return dataset.read_aggregated_csv(f)


def cmd_assess(args: argparse.Namespace) -> int:
    bundle_path = Path(args.bundle)
    if not bundle_path.exists():
        raise DataError(f"bundle file not found: {bundle_path}")
    bundle = risk.load_bundle(bundle_path)
    rows = _load_rows(args.data)
    if args.year is not None:
        rows = [r for r in rows if r.year == int(args.year)]
        if not rows:
            raise DataError(f"no rows for year {args.year}")
    rows = sorted(rows, key=lambda r: (r.year, r.code))
    missing = [f for f in bundle.selected_features
               if f not in dataset.COVARIABLE_FIELDS]
    if missing:
        raise DataError(f"bundle expects unknown covariables: {missing}")
    assessments = risk.assess(bundle, rows)
    code_to_state = {r.code: r.state_code for r in rows}
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="") as f:
        risk.write_assessments_csv(assessments, code_to_state, f)
    print(f"assessed {len(assessments)} municipality-year rows -> {out}")
    outputs = [out]
    if args.geojson:
        gj_path = Path(args.geojson)
        if not gj_path.exists():
            raise DataError(f"geojson file not found: {gj_path}")
        geojson = json.loads(gj_path.read_text(encoding="utf-8"))
        joined, unmatched = risk.join_geojson(geojson, assessments,
                                              code_property=args.geojson_code_property)
        gj_out = Path(args.geojson_out or out.with_suffix(".geojson"))
        gj_out.write_text(json.dumps(joined, sort_keys=True) + "\n", encoding="utf-8")
        outputs.append(gj_out)
        if unmatched:
            print(f"warning: {len(unmatched)} feature(s) had no assessment: "
                  f"{unmatched}")
        print(f"wrote joined geometry -> {gj_out}")
    _write_manifest(out, "assess", {"year": args.year},
                    {"bundle": str(bundle_path), "data": args.data}, outputs, None)
    return 0


def cmd_whatif(args: argparse.Namespace) -> int:
    bundle_path = Path(args.bundle)
    if not bundle_path.exists():
        raise DataError(f"bundle file not found: {bundle_path}")
    bundle = risk.load_bundle(bundle_path)
    rows = _load_rows(args.data)
    code, year = int(args.code), int(args.year)
    matches = [r for r in rows if r.code == code and r.year == year]
    if not matches:
        raise DataError(f"no row for municipality {code} in year {year}")
    try:
        target = risk.VulnerabilityLevel.from_label(args.target.capitalize())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = intervention.minimal_intervention(
        bundle, matches[0], args.knob, target,
        step=args.step, max_delta=args.max_delta)
    text = json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n"
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        _write_manifest(out, "whatif",
                        {"knob": args.knob, "target": target.label,
                         "step": args.step, "max_delta": args.max_delta},
                        {"bundle": str(bundle_path), "data": args.data,
                         "code": str(code), "year": str(year)},
                        [out], None)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = int(args.seed)
    config = dataset.SynthConfig(
        n_municipalities=int(args.municipalities),
        years=_parse_years(args.years),
        base_score=float(args.base_score),
        effect_internet=float(args.effect_internet),
        effect_connectivity=float(args.effect_connectivity),
        effect_ethnic=float(args.effect_ethnic),
        effect_rural=float(args.effect_rural),
        noise_scale=float(args.noise),
        internet_drift=float(args.internet_drift),
    )
    rows = dataset.generate_synthetic(config, seed)
    students, connectivity, census = dataset.synth_source_tables(rows, seed + 1)
    paths = {name: out_dir / f"{name}.csv"
             for name in ("students", "connectivity", "census")}
    with open(paths["students"], "w", encoding="utf-8", newline="") as fs, \
            open(paths["connectivity"], "w", encoding="utf-8", newline="") as fc, \
            open(paths["census"], "w", encoding="utf-8", newline="") as fx:
        dataset.write_source_tables(students, connectivity, census, fs, fc, fx)
    print(f"wrote {len(students)} students across {len(rows)} municipality-years "
          f"to {out_dir}")
    _write_manifest(out_dir, "synth",
                    {"municipalities": config.n_municipalities,
                     "years": list(config.years), "base_score": config.base_score,
                     "effect_internet": config.effect_internet,
                     "effect_connectivity": config.effect_connectivity,
                     "effect_ethnic": config.effect_ethnic,
                     "effect_rural": config.effect_rural,
                     "noise": config.noise_scale,
                     "internet_drift": config.internet_drift},
                    {}, list(paths.values()), seed)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eduvuln",
        description="Municipality academic-vulnerability pipeline")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ingest", help="aggregate the three source tables")
    p.add_argument("--students", required=True)
    p.add_argument("--connectivity", required=True)
    p.add_argument("--census", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true",
                   help="fail on the first malformed row instead of collecting")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train the three-model bundle")
    p.add_argument("--data", required=True, help="aggregated CSV")
    p.add_argument("--out", required=True, help="bundle JSON path")
    p.add_argument("--eval-out", dest="eval_out")
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--k", type=float)
    p.add_argument("--depth-m", dest="depth_m", type=int)
    p.add_argument("--depth-l", dest="depth_l", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--train-years", dest="train_years")
    p.add_argument("--val-year", dest="val_year", type=int)
    p.add_argument("--n-trees", dest="n_trees", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker threads (default RISK_THREADS or 1)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("assess", help="export per-municipality vulnerability levels")
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--year", type=int, help="restrict to one test year")
    p.add_argument("--geojson", help="join levels onto this FeatureCollection")
    p.add_argument("--geojson-out", dest="geojson_out")
    p.add_argument("--geojson-code-property", dest="geojson_code_property",
                   default="code")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("whatif", help="minimal-intervention search for one municipality")
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--code", required=True, type=int)
    p.add_argument("--year", required=True, type=int)
    p.add_argument("--knob", required=True, choices=list(intervention.KNOBS))
    p.add_argument("--target", required=True,
                   help="target level: None, Low, Medium, or Serious")
    p.add_argument("--step", type=float)
    p.add_argument("--max-delta", dest="max_delta", type=float)
    p.add_argument("--out", help="also write the result JSON here")
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("synth", help="generate a synthetic source-table triple")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--municipalities", required=True, type=int)
    p.add_argument("--years", default="2014-2019")
    p.add_argument("--seed", default=0, type=int)
    p.add_argument("--base-score", dest="base_score", default=250.0, type=float)
    p.add_argument("--effect-internet", dest="effect_internet", default=0.0, type=float)
    p.add_argument("--effect-connectivity", dest="effect_connectivity", default=0.0,
                   type=float)
    p.add_argument("--effect-ethnic", dest="effect_ethnic", default=0.0, type=float)
    p.add_argument("--effect-rural", dest="effect_rural", default=0.0, type=float)
    p.add_argument("--noise", default=20.0, type=float)
    p.add_argument("--internet-drift", dest="internet_drift", default=0.0, type=float)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (EduvulnError, SchemaError, ConfigError, DataError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
