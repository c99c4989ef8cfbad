"""Session fixtures: packaged instances, fitted models, and a registry of
the training runs the acceptance criteria share.

Medium-instance training is expensive (tens of seconds per run), so every
run is materialized at most once per session and reused by whichever
criteria need it; per-run wall times are recorded at materialization so
budget assertions stay honest regardless of which test triggered the run.
"""

from __future__ import annotations

import dataclasses
import json
import time
from pathlib import Path

import numpy as np
import pytest

from gridsddp.classic import ClassicSDDP
from gridsddp.crossing import fit, fit_iid
from gridsddp.engine import SDDP, test_policy
from gridsddp.grid import load_instance
from gridsddp.oracle import oracle_value
from gridsddp.sampling import (
    AggregationScheme,
    ImportanceSampler,
    NoSampler,
    StandardSampler,
)
from gridsddp.series import OutcomeGrid, quantile_grid, read_series_csv
from gridsddp.vfa import RegularizationSchedule

ROOT = Path(__file__).resolve().parents[1]
INSTANCES = ROOT / "instances"

RISK_VARIANTS = (("crossing", "imp"), ("crossing", "std"), ("iid", "imp"))
RISK_SEEDS = (0, 1, 2)
RISK_ITERS = 40
RISK_SCENARIOS = 30


# --------------------------------------------------------------------------
# tiny instance


@pytest.fixture(scope="session")
def tiny_config():
    return json.loads((INSTANCES / "tiny" / "config.json").read_text())


@pytest.fixture(scope="session")
def tiny_instance():
    return load_instance(INSTANCES / "tiny" / "instance.json")


@pytest.fixture(scope="session")
def tiny_series():
    return read_series_csv(INSTANCES / "tiny" / "train.csv")


@pytest.fixture(scope="session")
def tiny_grid(tiny_config):
    return OutcomeGrid(np.asarray(tiny_config["grid"], dtype=float))


@pytest.fixture(scope="session")
def tiny_model(tiny_config, tiny_instance, tiny_series, tiny_grid):
    return fit(
        tiny_series,
        tiny_config["m"],
        tiny_config["n"],
        tiny_grid,
        capacity_mw=tiny_instance.wind_capacity_mw,
    )


@pytest.fixture(scope="session")
def tiny_iid(tiny_instance, tiny_series, tiny_grid):
    return fit_iid(tiny_series, tiny_grid, capacity_mw=tiny_instance.wind_capacity_mw)


@pytest.fixture(scope="session")
def tiny_oracle(tiny_instance, tiny_model):
    """(OracleResult, ScenarioTree) for the full tiny horizon."""
    return oracle_value(tiny_instance, tiny_model)


# --------------------------------------------------------------------------
# medium instance


@pytest.fixture(scope="session")
def medium_config():
    return json.loads((INSTANCES / "medium" / "config.json").read_text())


@pytest.fixture(scope="session")
def medium_instance():
    return load_instance(INSTANCES / "medium" / "instance.json")


@pytest.fixture(scope="session")
def medium_series():
    return read_series_csv(INSTANCES / "medium" / "train.csv")


@pytest.fixture(scope="session")
def medium_grid(medium_config, medium_series):
    return quantile_grid(medium_series.errors, medium_config["grid_points"])


@pytest.fixture(scope="session")
def medium_crossing(medium_config, medium_instance, medium_series, medium_grid):
    return fit(
        medium_series,
        medium_config["m"],
        medium_config["n"],
        medium_grid,
        capacity_mw=medium_instance.wind_capacity_mw,
    )


@pytest.fixture(scope="session")
def medium_iid(medium_instance, medium_series, medium_grid):
    return fit_iid(
        medium_series, medium_grid, capacity_mw=medium_instance.wind_capacity_mw
    )


# --------------------------------------------------------------------------
# shared acceptance runs


class AcceptanceRuns:
    """Lazy cache of the training/testing runs the criteria reuse."""

    def __init__(self, tiny, medium, config):
        self.tiny = tiny
        self.medium = medium
        self.config = config
        self._cache = {}

    def _memo(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    # -- tiny runs -----------------------------------------------------

    def tiny_exact(self):
        """Exhaustive-backward run against the oracle gap target."""

        def build():
            algo = SDDP(
                self.tiny["instance"],
                self.tiny["model"],
                NoSampler(),
                schedule=RegularizationSchedule(1.0, 0.95),
                seed=0,
            )
            start = time.perf_counter()
            result = algo.train(epsilon=0.005, max_iters=200)
            return {"result": result, "seconds": time.perf_counter() - start}

        return self._memo("tiny-exact", build)

    def classic_pair(self, iters=8):
        """Engine under IID + no sampling + zero regularization, next to
        the standalone single-information-state implementation."""

        def build():
            engine = SDDP(
                self.tiny["instance"],
                self.tiny["iid"],
                NoSampler(),
                schedule=RegularizationSchedule(0.0, 0.95),
                seed=0,
            )
            res = engine.train(epsilon=-1e9, max_iters=iters)
            classic = ClassicSDDP(self.tiny["instance"], self.tiny["iid"], seed=0)
            cres = classic.train(max_iters=iters)
            return {"engine": res, "classic": cres}

        return self._memo(f"classic-{iters}", build)

    # -- medium runs ---------------------------------------------------

    def _sampler(self, kind, model, m_per_state):
        if kind == "none":
            return NoSampler()
        if kind == "std":
            return StandardSampler(m_per_state)
        agg = AggregationScheme(
            0.0,
            sum(g.kappa_u for g in self.medium["instance"].generators)
            * (self.medium["instance"].horizon + 1),
            self.config["aggregation_bins"],
        )
        return ImportanceSampler(
            model.grid,
            model.nominal,
            agg,
            J=self.config["basis_count"],
            a=self.config["stepsize_a"],
            m_per_state=m_per_state,
        )

    def _train_medium(self, model_key, sampler_key, seed, iters, m_per_state,
                      instance=None):
        inst = instance if instance is not None else self.medium["instance"]
        model = self.medium[model_key]
        sampler = self._sampler(sampler_key, model, m_per_state)
        algo = SDDP(
            inst, model, sampler, schedule=RegularizationSchedule(1.0, 0.95), seed=seed
        )
        return algo.train(epsilon=-1e9, max_iters=iters)

    def speed_pair(self, iters=10):
        """Exhaustive vs importance-sampled backward passes, same budget."""

        def build():
            exhaustive = self._train_medium("crossing", "none", 0, iters, 1)
            sampled = self._train_medium("crossing", "imp", 0, iters, 1)
            return {"exhaustive": exhaustive, "sampled": sampled}

        return self._memo(f"speed-{iters}", build)

    def risk_run(self, model_key, sampler_key, seed):
        """One policy variant trained and tested against the crossing truth."""

        def build():
            start = time.perf_counter()
            train = self._train_medium(
                model_key, sampler_key, seed, RISK_ITERS,
                self.config["samples_per_state"],
            )
            test = test_policy(
                train.vfa,
                self.medium["instance"],
                self.medium[model_key],
                self.medium["crossing"],
                RISK_SCENARIOS,
                seed=seed,
            )
            return {
                "train": train,
                "test": test,
                "seconds": time.perf_counter() - start,
            }

        return self._memo(f"risk-{model_key}-{sampler_key}-{seed}", build)

    def threshold_run(self, threshold):
        """Crossing + importance sampling, seed 0, custom shortage threshold."""
        base = self.medium["instance"]
        if threshold == base.penalties.threshold:
            return self.risk_run("crossing", "imp", 0)

        def build():
            inst = dataclasses.replace(
                base,
                penalties=dataclasses.replace(base.penalties, threshold=threshold),
            )
            start = time.perf_counter()
            train = self._train_medium(
                "crossing", "imp", 0, RISK_ITERS,
                self.config["samples_per_state"], instance=inst,
            )
            test = test_policy(
                train.vfa, inst, self.medium["crossing"], self.medium["crossing"],
                RISK_SCENARIOS, seed=0,
            )
            return {
                "train": train,
                "test": test,
                "seconds": time.perf_counter() - start,
            }

        return self._memo(f"threshold-{threshold}", build)

    # -- cross-criterion views -----------------------------------------

    def all_lower_bound_series(self):
        """(name, lower bounds) for every training run any criterion uses."""
        series = [
            ("tiny-exact", self.tiny_exact()["result"].lower_bounds),
            ("tiny-classic-reduction", self.classic_pair()["engine"].lower_bounds),
        ]
        pair = self.speed_pair()
        series.append(("medium-speed-exhaustive", pair["exhaustive"].lower_bounds))
        series.append(("medium-speed-sampled", pair["sampled"].lower_bounds))
        for model_key, sampler_key in RISK_VARIANTS:
            for seed in RISK_SEEDS:
                run = self.risk_run(model_key, sampler_key, seed)
                series.append(
                    (
                        f"medium-{model_key}-{sampler_key}-seed{seed}",
                        run["train"].lower_bounds,
                    )
                )
        series.append(
            ("medium-threshold-x5", self.threshold_run(40.0)["train"].lower_bounds)
        )
        return series


@pytest.fixture(scope="session")
def runs(tiny_instance, tiny_model, tiny_iid, medium_config, medium_instance,
         medium_grid, medium_crossing, medium_iid):
    tiny = {"instance": tiny_instance, "model": tiny_model, "iid": tiny_iid}
    medium = {
        "instance": medium_instance,
        "grid": medium_grid,
        "crossing": medium_crossing,
        "iid": medium_iid,
    }
    return AcceptanceRuns(tiny, medium, medium_config)
