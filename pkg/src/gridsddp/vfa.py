"""Post-decision value function approximations: Benders cuts per stage and
information state, plus the diminishing quadratic-regularization schedule."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Cut", "ValueFunctionApprox", "RegularizationSchedule"]


@dataclass(frozen=True)
class Cut:
    """Affine lower bound v(R) >= alpha + beta . (R - anchor)."""

    alpha: float
    beta: np.ndarray
    anchor: np.ndarray
    iteration: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))

    def value(self, r: np.ndarray) -> float:
        return self.alpha + float(self.beta @ (np.asarray(r) - self.anchor))

    @property
    def intercept(self) -> float:
        """Constant term when written as intercept + beta . R."""
        return self.alpha - float(self.beta @ self.anchor)


class ValueFunctionApprox:
    """Cut collections indexed by (stage, information state).

    Cuts live on post-decision states: ``cuts(t, i)`` bounds the expected
    cost from stage t+1 onward given post-decision resources at stage t and
    information state i. Evaluating an empty collection returns -inf (no
    lower bound yet), which callers treat as a zero downstream estimate.
    """

    def __init__(self, horizon: int, n_info_states: int):
        self.horizon = horizon
        self.n_info_states = n_info_states
        self._cuts = [[[] for _ in range(n_info_states)] for _ in range(horizon + 1)]

    def cuts(self, t: int, i: int) -> list:
        return self._cuts[t][i]

    def add_cut(self, t: int, i: int, cut: Cut) -> None:
        self._cuts[t][i].append(cut)

    def n_cuts(self, t: int | None = None) -> int:
        if t is None:
            return sum(self.n_cuts(s) for s in range(self.horizon + 1))
        return sum(len(c) for c in self._cuts[t])

    def evaluate(self, t: int, i: int, r: np.ndarray) -> float:
        """Max over cuts at (t, i); -inf when no cut exists yet."""
        cs = self._cuts[t][i]
        if not cs:
            return -np.inf
        return max(c.value(r) for c in cs)

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "n_info_states": self.n_info_states,
            "cuts": [
                [
                    [
                        {
                            "alpha": c.alpha,
                            "beta": c.beta.tolist(),
                            "anchor": c.anchor.tolist(),
                            "iteration": c.iteration,
                        }
                        for c in per_state
                    ]
                    for per_state in per_stage
                ]
                for per_stage in self._cuts
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ValueFunctionApprox":
        vfa = cls(int(d["horizon"]), int(d["n_info_states"]))
        for t, per_stage in enumerate(d["cuts"]):
            for i, per_state in enumerate(per_stage):
                for c in per_state:
                    vfa.add_cut(t, i, Cut(c["alpha"], c["beta"], c["anchor"], c["iteration"]))
        return vfa

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "ValueFunctionApprox":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class RegularizationSchedule:
    """Diminishing proximal term (rho_k/2)(R - incumbent)' Q (R - incumbent).

    rho_k = rho0 * decay^k. ``q_diag(spans)`` builds the scale-normalizing
    diagonal: 1/span^2 per battery dimension and exactly zero in the
    shortage dimension, so the proximal term never discourages recording
    shortages.
    """

    rho0: float = 1.0
    decay: float = 0.95

    def __post_init__(self) -> None:
        if self.rho0 < 0 or not 0 < self.decay <= 1:
            raise ValueError("need rho0 >= 0 and decay in (0, 1]")

    def rho(self, k: int) -> float:
        return self.rho0 * self.decay**k

    @staticmethod
    def q_diag(battery_spans: np.ndarray) -> np.ndarray:
        spans = np.asarray(battery_spans, dtype=float)
        if np.any(spans <= 0):
            raise ValueError("battery spans must be positive")
        return np.concatenate((1.0 / spans**2, [0.0]))
