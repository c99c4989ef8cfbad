"""Classic SDDP under stagewise independence: a single information state,
exact-expectation cuts, no regularization.

Kept as its own loop (rather than a configuration of the hidden-Markov
engine) so the two can be compared cut-for-cut as an equivalence check.
Stage subproblem assembly and the LP solver are shared; everything above
them -- forward/backward control flow, cut expectations, bookkeeping -- is
independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import substream
from .grid import GridInstance
from .stage import build_stage
from .vfa import Cut, ValueFunctionApprox

__all__ = ["ClassicResult", "ClassicSDDP"]


@dataclass
class ClassicResult:
    vfa: ValueFunctionApprox
    lower_bounds: list
    forward_costs: list
    iterations: int


class ClassicSDDP:
    """Algorithm of the stagewise-independent base case."""

    def __init__(self, instance: GridInstance, model, seed: int = 0):
        if model.n_info_states != 1:
            raise ValueError("classic SDDP requires a single information state")
        self.instance = instance
        self.model = model
        self.vfa = ValueFunctionApprox(instance.horizon, 1)
        self.rng = substream(seed, "forward")
        self.w0 = model.grid.snap(instance.initial_error_mw)
        self._ones = np.ones(1)

    def _forward(self, k: int, errors: np.ndarray):
        instance = self.instance
        r_in = instance.initial_resource().as_vector()
        posts, total = [], 0.0
        for t in range(instance.horizon + 1):
            sp = build_stage(
                instance, t, r_in, float(errors[t]),
                weights=self._ones if k >= 1 else None,
                vfa=self.vfa if k >= 1 else None,
            )
            sol = sp.solve()
            r_in = sp.post_resource(sol.x)
            total += sp.realized_cost(sol.x)
            posts.append(r_in)
        return posts, total

    def _backward(self, k: int, posts: list) -> None:
        instance = self.instance
        dist = self.model.nominal[0]
        support = np.nonzero(dist > 0.0)[0]
        points = self.model.grid.points
        for t in range(instance.horizon, 0, -1):
            r_in = posts[t - 1]
            alpha = 0.0
            beta = np.zeros(instance.n_storage + 1)
            for widx in support:
                sp = build_stage(instance, t, r_in, float(points[widx]),
                                 weights=self._ones, vfa=self.vfa)
                sol = sp.solve()
                alpha += dist[widx] * sol.objective
                beta += dist[widx] * sol.coupling_duals
            self.vfa.add_cut(t - 1, 0, Cut(alpha, beta, r_in.copy(), k))

    def _lower_bound(self) -> float:
        instance = self.instance
        sp = build_stage(
            instance, 0, instance.initial_resource().as_vector(), self.w0,
            weights=self._ones, vfa=self.vfa,
        )
        return sp.solve().objective

    def train(self, max_iters: int) -> ClassicResult:
        lower_bounds, forward_costs = [], []
        for k in range(max_iters):
            errors, _ = self.model.sample_path(
                self.instance.wind_forecast, self.instance.horizon, self.rng, w0=self.w0
            )
            posts, total = self._forward(k, errors)
            if self.instance.horizon >= 1:
                self._backward(k, posts)
            lower_bounds.append(self._lower_bound())
            if k >= 1:
                forward_costs.append(total)
        return ClassicResult(
            vfa=self.vfa,
            lower_bounds=lower_bounds,
            forward_costs=forward_costs,
            iterations=max_iters,
        )
