"""Training and testing loops for SDDP with hidden-Markov information states.

Each iteration runs a forward pass along one simulated wind path (myopic at
iteration 0, regularized otherwise), then a backward pass that, per stage,
solves the stage problem at sampled outcomes, assembles one cut per
information state from likelihood-ratio-weighted values and duals, and
feeds downstream-impact observations to an adaptive sampler. The lower
bound is the stage-0 problem's value under the initial beliefs; the upper
bound is a rolling mean of recent forward-pass costs.
"""

from __future__ import annotations

import logging
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from .grid import GridInstance
from .sampling import AggregationScheme, SamplerDraw, cut_weights, observe_vhat
from .stage import build_stage
from .vfa import Cut, RegularizationSchedule, ValueFunctionApprox

__all__ = ["SDDP", "TrainResult", "TestResult", "test_policy", "substream"]

log = logging.getLogger(__name__)

UPPER_WINDOW = 10


def substream(seed: int, tag: str) -> np.random.Generator:
    """Named, independent random substream for one run component."""
    return np.random.default_rng([int(seed), zlib.crc32(tag.encode())])


@dataclass
class TrainResult:
    vfa: ValueFunctionApprox
    trace: list
    converged: bool
    iterations: int
    lower_bounds: list
    forward_costs: list
    backward_ms: list
    sampling_fraction: float | None
    wall_ms: float


@dataclass
class TestResult:
    """Per-scenario outcomes of a frozen policy."""

    objectives: np.ndarray
    shortages: np.ndarray
    gen_storage_costs: np.ndarray
    battery_series: list = field(default_factory=list)   # per scenario: (T+1, B)
    shortage_series: list = field(default_factory=list)  # per scenario: (T+1,)

    def summary(self) -> dict:
        return {
            "scenarios": int(self.objectives.size),
            "objective_mean": float(np.mean(self.objectives)),
            "objective_sd": float(np.std(self.objectives)),
            "objective_worst": float(np.max(self.objectives)),
            "shortage_mean": float(np.mean(self.shortages)),
            "shortage_sd": float(np.std(self.shortages)),
            "shortage_worst": float(np.max(self.shortages)),
            "gen_storage_mean": float(np.mean(self.gen_storage_costs)),
        }


class SDDP:
    """One training run: an instance, an error model, and a sampling strategy."""

    def __init__(
        self,
        instance: GridInstance,
        model,
        sampler,
        schedule: RegularizationSchedule = RegularizationSchedule(),
        seed: int = 0,
        cut_cap: int | None = None,
    ):
        self.instance = instance
        self.model = model
        self.sampler = sampler
        self.schedule = schedule
        self.cut_cap = cut_cap
        self.vfa = ValueFunctionApprox(instance.horizon, model.n_info_states)
        self.q_resource = RegularizationSchedule.q_diag(instance.battery_span())
        self.rng_forward = substream(seed, "forward")
        self.rng_sampler = substream(seed, "sampler")
        self.w0 = model.grid.snap(instance.initial_error_mw)
        self.incumbent = None
        self.aggregation = getattr(sampler, "aggregation", None) or AggregationScheme(
            lo=float(sum(b.kappa_l for b in instance.storage)),
            hi=float(sum(b.kappa_u for b in instance.storage)),
        )
        # Posterior over information states given a single outcome, per grid point.
        self._posterior = {}
        self._fraction_num = 0.0
        self._fraction_den = 0

    # ----- pieces ------------------------------------------------------

    def posterior(self, widx: int) -> np.ndarray:
        if widx not in self._posterior:
            w = float(self.model.grid.points[widx])
            self._posterior[widx] = self.model.posterior_info_probs(w)
        return self._posterior[widx]

    def eval_downstream(self, t: int, i: int, r: np.ndarray) -> float:
        """VFA value at (t, i, r): analytic threshold penalty at the horizon,
        max-of-cuts otherwise, with no-cuts treated as a zero baseline."""
        if t == self.instance.horizon:
            pen = self.instance.penalties
            return pen.terminal * max(0.0, float(r[-1]) - pen.threshold)
        v = self.vfa.evaluate(t, i, r)
        return 0.0 if v == -np.inf else v

    def forward_pass(self, k: int, errors: np.ndarray):
        """Follow the current policy along one path; returns post-decision
        resource vectors for t = 0..T and the realized total cost."""
        instance, model = self.instance, self.model
        T = instance.horizon
        knowledge = model.init_knowledge(float(errors[0]))
        r_in = instance.initial_resource().as_vector()
        rho = self.schedule.rho(k) if k >= 1 else 0.0
        posts, total = [], 0.0
        for t in range(T + 1):
            weights = model.info_weights(knowledge) if k >= 1 else None
            reg = rho if (k >= 1 and t < T) else 0.0
            sp = build_stage(
                instance, t, r_in, float(errors[t]),
                weights=weights,
                vfa=self.vfa if k >= 1 else None,
                rho=reg,
                incumbent=self.incumbent[t] if reg > 0.0 else None,
                q_resource=self.q_resource,
            )
            sol = sp.solve()
            post = sp.post_resource(sol.x)
            total += sp.realized_cost(sol.x)
            posts.append(post)
            r_in = post
            if t < T:
                knowledge = model.knowledge_update(knowledge, float(errors[t + 1]))
        return posts, total

    def backward_pass(self, k: int, posts: list) -> None:
        """Refresh cuts at stages T..1 using this iteration's resource points."""
        instance, model = self.instance, self.model
        T = instance.horizon
        nominal = model.nominal
        points = model.grid.points
        n_batt = instance.n_storage
        omega_size = int(np.count_nonzero(nominal.mean(axis=0) > 0.0))
        for t in range(T, 0, -1):
            r_in = posts[t - 1]
            r_bin = self.aggregation.bin_of(float(np.sum(np.abs(r_in[:n_batt]))))
            draw = self.sampler.draw(t, r_bin, nominal, self.rng_sampler)
            values = np.empty(draw.outcomes.size)
            betas = np.empty((draw.outcomes.size, n_batt + 1))
            post_weights = []
            for j, widx in enumerate(draw.outcomes):
                weights = self.posterior(int(widx))
                sp = build_stage(instance, t, r_in, float(points[widx]),
                                 weights=weights, vfa=self.vfa)
                sol = sp.solve()
                values[j] = sol.objective
                betas[j] = sol.coupling_duals
                post_weights.append(weights)
            weight_mat = cut_weights(nominal, draw)
            for i in range(model.n_info_states):
                if not np.any(weight_mat[i] > 0.0):
                    log.warning("no sampled outcome carries mass for state %d at t=%d; "
                                "cut skipped", i, t)
                    continue
                if self.cut_cap is not None and len(self.vfa.cuts(t - 1, i)) >= self.cut_cap:
                    log.warning("cut cap reached at (t=%d, i=%d)", t - 1, i)
                    continue
                alpha = float(weight_mat[i] @ values)
                beta = weight_mat[i] @ betas
                self.vfa.add_cut(t - 1, i, Cut(alpha, beta, r_in.copy(), k))
            if self.sampler.adaptive:
                vhats = np.empty(draw.outcomes.size)
                for j in range(draw.outcomes.size):
                    downstream = float(sum(
                        post_weights[j][i] * self.eval_downstream(t, i, r_in)
                        for i in range(model.n_info_states)
                        if post_weights[j][i] > 0.0
                    ))
                    vhats[j] = observe_vhat(values[j], downstream)
                self.sampler.update(t, r_bin, draw, vhats)
            self._fraction_num += draw.total / omega_size
            self._fraction_den += 1

    def lower_bound(self) -> float:
        """Value of the unregularized stage-0 problem under initial beliefs."""
        instance, model = self.instance, self.model
        knowledge = model.init_knowledge(self.w0)
        sp = build_stage(
            instance, 0, instance.initial_resource().as_vector(), self.w0,
            weights=model.info_weights(knowledge), vfa=self.vfa,
        )
        return sp.solve().objective

    # ----- loops -------------------------------------------------------

    def train(self, epsilon: float = 0.02, max_iters: int = 200) -> TrainResult:
        instance = self.instance
        start = time.perf_counter()
        trace, lower_bounds, forward_costs, backward_ms = [], [], [], []
        converged = False
        iterations = 0
        for k in range(max_iters):
            iterations = k + 1
            errors, _ = self.model.sample_path(
                instance.wind_forecast, instance.horizon, self.rng_forward, w0=self.w0
            )
            posts, total = self.forward_pass(k, errors)
            b0 = time.perf_counter()
            if instance.horizon >= 1:
                self.backward_pass(k, posts)
            backward_ms.append((time.perf_counter() - b0) * 1000.0)
            lower = self.lower_bound()
            lower_bounds.append(lower)
            if k >= 1:
                forward_costs.append(total)
            upper = float(np.mean(forward_costs[-UPPER_WINDOW:])) if forward_costs else float("nan")
            self.incumbent = posts
            trace.append({
                "iter": k,
                "lower": lower,
                "upper": upper,
                "wall_ms": (time.perf_counter() - start) * 1000.0,
                "cuts_total": self.vfa.n_cuts(),
            })
            if forward_costs and upper > 0.0 and (upper - lower) / upper <= epsilon:
                converged = True
                break
        fraction = self._fraction_num / self._fraction_den if self._fraction_den else None
        return TrainResult(
            vfa=self.vfa,
            trace=trace,
            converged=converged,
            iterations=iterations,
            lower_bounds=lower_bounds,
            forward_costs=forward_costs,
            backward_ms=backward_ms,
            sampling_fraction=fraction,
            wall_ms=(time.perf_counter() - start) * 1000.0,
        )


def test_policy(
    vfa: ValueFunctionApprox,
    instance: GridInstance,
    policy_model,
    truth_model,
    scenarios: int,
    seed: int = 0,
    collect_series: bool = False,
) -> TestResult:
    """Evaluate a frozen policy (no regularization, fixed cuts) on paths
    simulated from ``truth_model``; knowledge filtering uses the policy's
    own model, as it would in operation."""
    T = instance.horizon
    rng = substream(seed, "test")
    w0 = truth_model.grid.snap(instance.initial_error_mw)
    objectives, shortages, gen_costs = [], [], []
    battery_series, shortage_series = [], []
    for _ in range(scenarios):
        errors, _ = truth_model.sample_path(instance.wind_forecast, T, rng, w0=w0)
        knowledge = policy_model.init_knowledge(float(errors[0]))
        r_in = instance.initial_resource().as_vector()
        total = 0.0
        gen_total = 0.0
        batt_rows, short_rows = [], []
        for t in range(T + 1):
            sp = build_stage(
                instance, t, r_in, float(errors[t]),
                weights=policy_model.info_weights(knowledge), vfa=vfa,
            )
            sol = sp.solve()
            breakdown = sp.cost_breakdown(sol.x)
            total += breakdown.total
            gen_total += breakdown.generation
            r_in = sp.post_resource(sol.x)
            if collect_series:
                batt_rows.append(r_in[:-1].copy())
                short_rows.append(float(r_in[-1]))
            if t < T:
                knowledge = policy_model.knowledge_update(knowledge, float(errors[t + 1]))
        objectives.append(total)
        shortages.append(float(r_in[-1]))
        gen_costs.append(gen_total)
        if collect_series:
            battery_series.append(np.asarray(batt_rows))
            shortage_series.append(np.asarray(short_rows))
    return TestResult(
        objectives=np.asarray(objectives),
        shortages=np.asarray(shortages),
        gen_storage_costs=np.asarray(gen_costs),
        battery_series=battery_series,
        shortage_series=shortage_series,
    )
