"""Command-line entry points: model fitting, training, policy testing,
extensive-form benchmarking, and the multi-variant comparison harness.

Exit codes: 0 success, 1 configuration/data error, 2 solver failure,
3 training finished without reaching the convergence tolerance.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
import scipy
from scipy.stats import ks_2samp

from . import __version__
from .config import MODEL_KINDS, SAMPLER_KINDS, ConfigError, ExperimentConfig, load_config
from .crossing import (
    SIGN_BELOW,
    FitError,
    extract_crossings,
    fit,
    fit_iid,
    load_model,
    save_model,
)
from .engine import SDDP, test_policy
from .grid import GridInstance, load_instance
from .oracle import OracleSizeError, oracle_value
from .reports import (
    emit_reports,
    write_json,
    write_series_columns,
    write_test_csv,
    write_trace_csv,
)
from .sampling import AggregationScheme, ImportanceSampler, NoSampler, StandardSampler
from .series import ForecastErrorSeries, OutcomeGrid, quantile_grid, read_series_csv, write_series_csv
from .solver import SolverError
from .synthetic import generate
from .vfa import RegularizationSchedule, ValueFunctionApprox

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_NO_CONVERGE = 3

COMPARE_VARIANTS = (
    ("iid", "standard"),
    ("crossing", "none"),
    ("crossing", "standard"),
    ("crossing", "importance"),
)


def _guarded(fn):
    """Map library exceptions to the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, FitError, OracleSizeError, FileNotFoundError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except SolverError as exc:
            click.echo(f"solver error: {exc}", err=True)
            sys.exit(EXIT_SOLVER)

    return wrapper


def _common_options(fn):
    fn = click.option("--instance", "instance", type=click.Path(), default=None,
                      help="Override the instance file from the config.")(fn)
    fn = click.option("--model", "model", type=click.Choice(MODEL_KINDS), default=None,
                      help="Override the wind-model kind.")(fn)
    fn = click.option("--sampler", "sampler", type=click.Choice(SAMPLER_KINDS), default=None,
                      help="Override the backward sampler kind.")(fn)
    fn = click.option("--epsilon", type=float, default=None,
                      help="Override the relative-gap tolerance.")(fn)
    fn = click.option("--max-iters", "max_iters", type=int, default=None,
                      help="Override the iteration cap.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the run seed.")(fn)
    fn = click.option("--out", required=True, type=click.Path(),
                      help="Output directory for run artifacts.")(fn)
    fn = click.option("--config", "config_path", required=True, type=click.Path(),
                      help="Experiment config JSON.")(fn)
    return fn


def _load_cfg(config_path, **overrides) -> ExperimentConfig:
    return load_config(config_path, overrides=overrides)


def _load_instance_for(cfg: ExperimentConfig) -> GridInstance:
    inst = load_instance(cfg.instance_path)
    if cfg.penalty_overrides:
        pen = dataclasses.replace(
            inst.penalties, **{k: float(v) for k, v in cfg.penalty_overrides.items()}
        )
        inst = dataclasses.replace(inst, penalties=pen)
    return inst


def _outcome_grid(cfg: ExperimentConfig, series: ForecastErrorSeries) -> OutcomeGrid:
    if cfg.grid:
        return OutcomeGrid(np.asarray(cfg.grid, dtype=float))
    return quantile_grid(series.errors, cfg.grid_points)


def _fit_models(cfg: ExperimentConfig, instance: GridInstance):
    series = read_series_csv(cfg.training_series_path)
    grid = _outcome_grid(cfg, series)
    crossing_model = fit(
        series, m=cfg.m, n=cfg.n, grid=grid,
        smoothing=cfg.smoothing, capacity_mw=instance.wind_capacity_mw,
    )
    iid_model = fit_iid(series, grid, smoothing=cfg.smoothing,
                        capacity_mw=instance.wind_capacity_mw)
    return crossing_model, iid_model


def _build_sampler(cfg: ExperimentConfig, kind: str, model, instance: GridInstance):
    if kind == "none":
        return NoSampler()
    if kind == "standard":
        return StandardSampler(cfg.samples_per_state)
    lo = float(sum(b.kappa_l for b in instance.storage))
    hi = float(sum(b.kappa_u for b in instance.storage))
    aggregation = AggregationScheme(lo, hi, cfg.aggregation_bins)
    return ImportanceSampler(model.grid, model.nominal, aggregation,
                             J=cfg.basis_count, a=cfg.stepsize_a,
                             m_per_state=cfg.samples_per_state)


def _config_digest(cfg: ExperimentConfig) -> str:
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _run_training(cfg: ExperimentConfig, out_dir: Path):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    instance = _load_instance_for(cfg)
    crossing_model, iid_model = _fit_models(cfg, instance)
    policy_model = crossing_model if cfg.model == "crossing" else iid_model

    manifest = {
        "command": "train",
        "config_sha256": _config_digest(cfg),
        "instance": str(cfg.instance_path),
        "model": cfg.model,
        "sampler": cfg.sampler,
        "seed": cfg.seed,
        "status": "running",
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "package": __version__,
        },
    }
    write_json(out_dir / "manifest.json", manifest)
    save_model(policy_model, out_dir / "model.json")
    # Test paths are always drawn from the richer fitted model, whichever
    # model the policy was trained with.
    save_model(crossing_model, out_dir / "truth_model.json")

    sampler = _build_sampler(cfg, cfg.sampler, policy_model, instance)
    schedule = RegularizationSchedule(cfg.rho0, cfg.decay)
    engine = SDDP(instance, policy_model, sampler,
                  schedule=schedule, seed=cfg.seed, cut_cap=cfg.cut_cap)
    result = engine.train(epsilon=cfg.epsilon, max_iters=cfg.max_iters)

    result.vfa.save(out_dir / "vfa.json")
    write_trace_csv(out_dir / "trace.csv", result.trace)
    write_json(out_dir / "timing.json", {
        "wall_ms": result.wall_ms,
        "backward_ms": result.backward_ms,
    })
    manifest.update(
        status="complete" if result.converged else "non-converged",
        converged=result.converged,
        iterations=result.iterations,
        lower_bound=result.lower_bounds[-1] if result.lower_bounds else None,
        cuts_total=result.vfa.n_cuts(),
        sampling_fraction=result.sampling_fraction,
    )
    write_json(out_dir / "manifest.json", manifest)
    if isinstance(sampler, ImportanceSampler):
        sampler.dump_diagnostics(out_dir / "sampler_weights.csv")
    return result


def _run_testing(cfg: ExperimentConfig, run_dir: Path):
    run_dir = Path(run_dir)
    instance = _load_instance_for(cfg)
    vfa = ValueFunctionApprox.load(run_dir / "vfa.json")
    policy_model = load_model(run_dir / "model.json")
    truth_path = run_dir / "truth_model.json"
    truth_model = load_model(truth_path) if truth_path.exists() else policy_model

    result = test_policy(vfa, instance, policy_model, truth_model,
                         cfg.test_scenarios, seed=cfg.seed, collect_series=True)
    write_test_csv(run_dir / "test_results.csv", result.objectives,
                   result.gen_storage_costs, result.shortages)
    summary = result.summary()
    summary["shortage_threshold_mwh"] = instance.penalties.threshold
    summary["exceed_count"] = int(np.sum(result.shortages > instance.penalties.threshold))
    write_json(run_dir / "summary.json", summary)

    if result.battery_series:
        batt = result.battery_series[0]
        short = result.shortage_series[0]
        header = (["stage"] + [f"battery_{b}_mwh" for b in range(batt.shape[1])]
                  + ["cumulative_shortage_mwh"])
        cols = ([list(range(batt.shape[0]))]
                + [batt[:, b] for b in range(batt.shape[1])] + [short])
        write_series_columns(run_dir / "scenario0_series.csv", header, cols)
    emit_reports(run_dir)
    return result


def _down_durations(errors: np.ndarray) -> np.ndarray:
    series = ForecastErrorSeries(errors=np.asarray(errors, dtype=float),
                                 forecasts=np.zeros(len(errors)))
    cx = extract_crossings(series)
    return np.asarray([r[1] for r in cx.runs if r[3] and r[2] == SIGN_BELOW], dtype=float)


def _duration_ks(train_durations: np.ndarray, model, n_paths: int, length: int, seed: int) -> float:
    """Two-sample KS distance between training and simulated below-run durations."""
    forecasts = np.zeros(length + 1)
    sims = []
    for p in range(n_paths):
        errors, _ = model.sample_path(forecasts, length, np.random.default_rng([seed, p]))
        sims.append(_down_durations(errors))
    sim = np.concatenate(sims)
    if train_durations.size == 0 or sim.size == 0:
        return 1.0
    return float(ks_2samp(train_durations, sim).statistic)


@click.group()
@click.version_option(version=__version__, prog_name="gridsddp")
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Storage dispatch under wind uncertainty: training, testing, benchmarks."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command(name="fit-model")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@_guarded
def fit_model_cmd(config_path, out) -> None:
    """Fit the crossing-state and baseline wind models and save them."""
    cfg = _load_cfg(config_path)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    instance = _load_instance_for(cfg)
    crossing_model, iid_model = _fit_models(cfg, instance)
    save_model(crossing_model, out_dir / "crossing_model.json")
    save_model(iid_model, out_dir / "iid_model.json")
    series = read_series_csv(cfg.training_series_path)
    cx = extract_crossings(series)
    write_json(out_dir / "fit_report.json", {
        "series_length": int(series.errors.size),
        "completed_runs": int(sum(1 for r in cx.runs if r[3])),
        "duration_bins": cfg.m,
        "error_bins": cfg.n,
        "information_states": crossing_model.n_info_states,
        "grid_points": crossing_model.grid.points.tolist(),
    })
    click.echo(f"fitted {crossing_model.n_info_states}-state model; artifacts in {out_dir}")


@main.command(name="validate-crossings")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--paths", type=int, default=100, help="Simulated paths per model.")
@_guarded
def validate_crossings_cmd(config_path, out, seed, paths) -> None:
    """Compare below-run duration distributions: fitted models vs training data."""
    cfg = _load_cfg(config_path, seed=seed)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    instance = _load_instance_for(cfg)
    crossing_model, iid_model = _fit_models(cfg, instance)
    series = read_series_csv(cfg.training_series_path)
    train_durations = _down_durations(series.errors)
    length = min(int(series.errors.size) - 1, 2000)
    ks_crossing = _duration_ks(train_durations, crossing_model, paths, length, cfg.seed)
    ks_iid = _duration_ks(train_durations, iid_model, paths, length, cfg.seed)
    report = {
        "training_below_runs": int(train_durations.size),
        "paths": paths,
        "path_length": length,
        "ks_crossing": ks_crossing,
        "ks_iid": ks_iid,
    }
    write_json(out_dir / "crossing_validation.json", report)
    click.echo(f"KS below-run durations: crossing {ks_crossing:.4f}, iid {ks_iid:.4f}")


@main.command(name="gen-synthetic")
@click.option("--mode", type=click.Choice(["persistence", "semi-markov"]),
              default="semi-markov")
@click.option("--length", type=int, default=10000)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, type=click.Path())
@_guarded
def gen_synthetic_cmd(mode, length, seed, out) -> None:
    """Generate a synthetic forecast-error series and write it as CSV."""
    series = generate(mode, length, seed)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    write_series_csv(out, series)
    click.echo(f"wrote {length}-step {mode} series to {out}")


@main.command(name="train")
@_common_options
@_guarded
def train_cmd(config_path, out, seed, max_iters, epsilon, sampler, model, instance) -> None:
    """Train a dispatch policy and write run artifacts to --out."""
    cfg = _load_cfg(config_path, seed=seed, max_iters=max_iters, epsilon=epsilon,
                    sampler=sampler, model=model, instance=instance)
    result = _run_training(cfg, Path(out))
    final_lower = result.lower_bounds[-1] if result.lower_bounds else float("nan")
    click.echo(
        f"lower bound {final_lower:.6g} after {result.iterations} iterations; "
        f"converged={result.converged}"
    )
    if not result.converged:
        sys.exit(EXIT_NO_CONVERGE)


@main.command(name="test")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(),
              help="Run directory produced by `train`.")
@click.option("--seed", type=int, default=None)
@_guarded
def test_cmd(config_path, out, seed) -> None:
    """Evaluate the trained policy on out-of-sample paths."""
    cfg = _load_cfg(config_path, seed=seed)
    result = _run_testing(cfg, Path(out))
    summary = result.summary()
    click.echo(
        f"{summary['scenarios']} scenarios: mean objective {summary['objective_mean']:.4f}, "
        f"mean shortage {summary['shortage_mean']:.4f} MWh"
    )


@main.command(name="oracle")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--model", "model", type=click.Choice(MODEL_KINDS), default=None)
@click.option("--instance", "instance", type=click.Path(), default=None)
@_guarded
def oracle_cmd(config_path, out, model, instance) -> None:
    """Solve the exact extensive-form benchmark over the scenario tree."""
    cfg = _load_cfg(config_path, model=model, instance=instance)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    inst = _load_instance_for(cfg)
    crossing_model, iid_model = _fit_models(cfg, inst)
    chosen = crossing_model if cfg.model == "crossing" else iid_model
    result, tree = oracle_value(inst, chosen)
    write_json(out_dir / "oracle.json", {
        "value": result.value,
        "n_nodes": result.n_nodes,
        "n_leaves": result.n_leaves,
        "depth_probability_sums": {str(k): v for k, v in result.depth_probability_sums.items()},
    })
    click.echo(f"exact value {result.value:.6f} over {result.n_nodes} tree nodes")


@main.command(name="compare")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--max-iters", "max_iters", type=int, default=None)
@click.option("--epsilon", type=float, default=None)
@_guarded
def compare_cmd(config_path, out, max_iters, epsilon) -> None:
    """Train and test every model/sampler variant across the config's seeds."""
    cfg = _load_cfg(config_path, max_iters=max_iters, epsilon=epsilon)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for model_kind, sampler_kind in COMPARE_VARIANTS:
        for seed in cfg.seeds:
            sub = out_dir / f"{model_kind}-{sampler_kind}" / f"seed{seed}"
            run_cfg = dataclasses.replace(
                cfg, model=model_kind, sampler=sampler_kind, seed=int(seed)
            )
            train_result = _run_training(run_cfg, sub)
            if not train_result.converged:
                click.echo(
                    f"warning: {model_kind}/{sampler_kind} seed {seed} "
                    "stopped at the iteration cap before converging", err=True,
                )
            test_result = _run_testing(run_cfg, sub)
            summary = test_result.summary()
            rows.append({
                "model": model_kind,
                "sampler": sampler_kind,
                "seed": int(seed),
                "converged": int(train_result.converged),
                "iterations": train_result.iterations,
                "lower_bound": train_result.lower_bounds[-1],
                "objective_mean": summary["objective_mean"],
                "objective_sd": summary["objective_sd"],
                "objective_worst": summary["objective_worst"],
                "shortage_mean": summary["shortage_mean"],
                "shortage_worst": summary["shortage_worst"],
                "wall_ms": train_result.wall_ms,
            })
    import csv as _csv

    with open(out_dir / "compare_summary.csv", "w", newline="") as fh:
        writer = _csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    click.echo(f"wrote {len(rows)} runs to {out_dir / 'compare_summary.csv'}")


if __name__ == "__main__":
    main()
