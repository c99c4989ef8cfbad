"""CSV/JSON emitters for training traces, policy test results, and the
post-run report bundle."""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path

log = logging.getLogger(__name__)

TRACE_FIELDS = ["iter", "lower", "upper", "wall_ms", "cuts_total"]
TEST_FIELDS = ["scenario", "objective", "gen_storage_cost", "shortage_mwh"]


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.12g}"
    return str(value)


def write_trace_csv(path, rows) -> None:
    """One row per iteration: iter, lower, upper, wall_ms, cuts_total."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in TRACE_FIELDS])


def read_trace_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_test_csv(path, objectives, gen_storage_costs, shortages) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TEST_FIELDS)
        rows = zip(objectives, gen_storage_costs, shortages)
        for s, (obj, gen, short) in enumerate(rows):
            writer.writerow([s, _fmt(float(obj)), _fmt(float(gen)), _fmt(float(short))])


def write_series_columns(path, header, columns) -> None:
    """Write aligned per-stage columns (e.g. battery trajectories)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([_fmt(v) for v in row])

def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def emit_reports(run_dir, out_dir=None) -> list:
    """Assemble human-facing report files from a completed run directory.

    Produces a convergence-curve CSV, a per-scenario outcomes CSV with
    threshold-exceedance markers, a battery trajectory CSV for the first
    test scenario, and a one-row summary table. Missing inputs are logged
    and skipped rather than treated as fatal.
    """
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir / "report"
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    trace_path = run_dir / "trace.csv"
    if trace_path.exists():
        rows = read_trace_csv(trace_path)
        target = out_dir / "convergence.csv"
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "lower", "upper", "gap"])
            for row in rows:
                lower, upper = float(row["lower"]), float(row["upper"])
                gap = (upper - lower) / upper if upper > 0 else float("nan")
                writer.writerow([row["iter"], _fmt(lower), _fmt(upper), _fmt(gap)])
        written.append(target)
    else:
        log.warning("no trace.csv in %s; skipping convergence report", run_dir)

    threshold = None
    summary_path = run_dir / "summary.json"
    summary = read_json(summary_path) if summary_path.exists() else {}
    threshold = summary.get("shortage_threshold_mwh")

    test_path = run_dir / "test_results.csv"
    if test_path.exists():
        with open(test_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        target = out_dir / "scenario_outcomes.csv"
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "objective", "shortage_mwh", "exceeded_threshold"])
            for row in rows:
                short = float(row["shortage_mwh"])
                exceeded = "" if threshold is None else int(short > threshold)
                writer.writerow([row["scenario"], row["objective"], row["shortage_mwh"], exceeded])
        written.append(target)
    else:
        log.warning("no test_results.csv in %s; skipping scenario report", run_dir)

    battery_path = run_dir / "scenario0_series.csv"
    if battery_path.exists():
        target = out_dir / "battery_trajectory.csv"
        target.write_bytes(battery_path.read_bytes())
        written.append(target)

    if summary:
        target = out_dir / "summary_table.csv"
        keys = sorted(summary.keys())
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(keys)
            writer.writerow([_fmt(summary[k]) for k in keys])
        written.append(target)
    else:
        log.warning("no summary.json in %s; skipping summary table", run_dir)

    return written
