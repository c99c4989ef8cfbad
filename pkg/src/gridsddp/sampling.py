"""Backward-pass outcome sampling: none (exact expectation), standard
(nominal per-state draws), and adaptive risk-directed importance sampling.

Importance sampling learns, per (stage, aggregated storage level,
information state), mixture weights over a fixed basis of distributions so
that outcomes with large observed downstream impact are drawn more often;
likelihood ratios against the overall mixture keep cut expectations
unbiased.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .series import OutcomeGrid

__all__ = [
    "AggregationScheme",
    "build_basis",
    "SamplerDraw",
    "cut_weights",
    "observe_vhat",
    "update_weights",
    "stepsize",
    "NoSampler",
    "StandardSampler",
    "ImportanceSampler",
    "make_sampler",
]

log = logging.getLogger(__name__)

BASIS_FLOOR = 1e-12
MAX_BASIS = 6


@dataclass(frozen=True)
class AggregationScheme:
    """Equal-width bins over the reachable range of ‖battery post-state‖₁.

    The same partition applies at every stage (battery capacity bounds are
    time-invariant here). Values at or beyond the ends clamp into the
    outermost bins, so every feasible aggregate maps to exactly one bin.
    """

    lo: float
    hi: float
    bins: int = 5

    def __post_init__(self) -> None:
        if self.hi <= self.lo or self.bins < 1:
            raise ValueError("need hi > lo and at least one bin")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.bins + 1)

    def bin_of(self, l1_norm: float) -> int:
        frac = (l1_norm - self.lo) / (self.hi - self.lo)
        return int(np.clip(np.floor(frac * self.bins), 0, self.bins - 1))


def build_basis(grid: OutcomeGrid, nominal: np.ndarray, J: int = 6) -> np.ndarray:
    """Basis distributions over the grid: nominal plus normal/half-normal bumps.

    phi_0 is the nominal conditional itself; the rest are densities
    discretized on the nominal's support (two normals flanking the center,
    one tight central normal, and half-normals anchored at the support
    endpoints to target the tails). Every phi shares the nominal's support
    exactly, summing to 1, with a small floor so no supported point has
    zero sampling mass.
    """
    if J < 2:
        raise ValueError("need at least two basis distributions")
    if J > MAX_BASIS:
        raise ValueError(f"J={J} exceeds the supported basis cap {MAX_BASIS}")
    nominal = np.asarray(nominal, dtype=float)
    support = nominal > 0.0
    pts = grid.points[support]
    lo, hi = float(pts.min()), float(pts.max())
    span = hi - lo
    center = 0.5 * (lo + hi)

    def bump(mean: float, sd: float) -> np.ndarray:
        out = np.zeros(grid.size)
        if sd <= 0.0:
            return nominal.copy()
        out[support] = np.exp(-0.5 * ((pts - mean) / sd) ** 2)
        total = out.sum()
        return out / total if total > 0 else nominal.copy()

    shapes = [
        bump(center - span / 4.0, span / 4.0),
        bump(center + span / 4.0, span / 4.0),
        bump(center, span / 8.0),
        bump(lo, span / 3.0),
        bump(hi, span / 3.0),
    ]
    basis = [nominal.copy()] + shapes[: J - 1]
    out = np.stack(basis)
    out[:, support] = np.maximum(out[:, support], BASIS_FLOOR)
    out /= out.sum(axis=1, keepdims=True)
    return out


@dataclass(frozen=True)
class SamplerDraw:
    """One backward stage's outcome set.

    ``counts is None`` marks exact full-support integration; otherwise
    ``counts[j]`` draws landed on ``outcomes[j]`` and ``total`` is the
    number of draws taken. ``qbar`` is the overall sampling mixture over
    the full grid, the denominator of every likelihood ratio.
    """

    outcomes: np.ndarray
    counts: np.ndarray | None
    qbar: np.ndarray
    total: int


def cut_weights(probs: np.ndarray, draw: SamplerDraw) -> np.ndarray:
    """Per-(state, outcome) expectation weights for cut assembly.

    Exact mode integrates the estimator over the sampling measure itself,
    Σ_w Q(w)·[·]·P(w|i)/Q(w); sampled mode weights each outcome by its
    empirical frequency times the likelihood ratio P(w|i)/Q̄(w). Both make
    Σ_j weight·V̲(w_j) an unbiased (exact, in the first case) estimate of
    Σ_w P(w|i)·V̲(w).
    """
    q = draw.qbar[draw.outcomes]
    p = probs[:, draw.outcomes]
    if draw.counts is None:
        return p * q / q
    freq = draw.counts / draw.total
    raw = p * freq / q
    # Self-normalize per state: the raw ratio estimator is unbiased but its
    # scale noise compounds through the stagewise recursion (a max over
    # noisy overestimates drifts upward); normalizing makes every sampled
    # cut a convex combination of observed recourse values.
    totals = raw.sum(axis=1, keepdims=True)
    safe = np.where(totals > 0.0, totals, 1.0)
    return raw / safe


def observe_vhat(v_lower: float, downstream: float) -> float:
    """Downstream-impact observation: max{0, V̲ − belief-weighted VFA}."""
    return max(0.0, v_lower - downstream)


def stepsize(a: float, n: int) -> float:
    """Diminishing stepsize a/(a+n); slower decay than 1/n to favor recency."""
    if a <= 0 or n < 0:
        raise ValueError("need a > 0 and n >= 0")
    return a / (a + n)


def update_weights(
    theta: np.ndarray,
    phi: np.ndarray,
    vhats: np.ndarray,
    p_i: np.ndarray,
    qbar: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Projected recursive-least-squares step toward |v̂|·P targets.

    ``phi`` is the L×J matrix of basis evaluations at the sampled outcomes;
    the residual for sample ℓ is (θᵀφ_ℓ − |v̂_ℓ|·P(w_ℓ|i))/Q̄(w_ℓ).
    The update keeps θ entrywise nonnegative.
    """
    resid = (phi @ theta - np.abs(vhats) * p_i) / qbar
    return np.maximum(0.0, theta - gamma * (phi.T @ resid))


class NoSampler:
    """Exact expectations: every supported outcome enters every cut."""

    name = "none"
    adaptive = False

    def draw(self, t: int, r: int, nominal: np.ndarray, rng) -> SamplerDraw:
        qbar = nominal.mean(axis=0)
        outcomes = np.nonzero(qbar > 0.0)[0]
        return SamplerDraw(outcomes=outcomes, counts=None, qbar=qbar, total=outcomes.size)


class StandardSampler:
    """One draw per information state from its nominal conditional."""

    name = "standard"
    adaptive = False

    def __init__(self, m_per_state: int = 1):
        if m_per_state < 1:
            raise ValueError("need at least one draw per state")
        self.m_per_state = m_per_state

    def draw(self, t: int, r: int, nominal: np.ndarray, rng) -> SamplerDraw:
        n_states, n_points = nominal.shape
        drawn = []
        for i in range(n_states):
            drawn.extend(rng.choice(n_points, size=self.m_per_state, p=nominal[i]).tolist())
        outcomes, counts = np.unique(np.asarray(drawn), return_counts=True)
        qbar = nominal.mean(axis=0)
        return SamplerDraw(outcomes=outcomes, counts=counts, qbar=qbar, total=len(drawn))


class ImportanceSampler:
    """Adaptive risk-directed sampling with per-(t, r, i) mixture weights.

    Weights start at zero (uniform mixture over the basis) and move toward
    the shape of |v̂|·P(w|i) via projected recursive updates. The basis per
    information state is built once from its nominal conditional; it does
    not vary with t or r because the conditionals are time-invariant.
    """

    name = "importance"
    adaptive = True

    def __init__(
        self,
        grid: OutcomeGrid,
        nominal: np.ndarray,
        aggregation: AggregationScheme,
        J: int = 6,
        a: float = 10.0,
        m_per_state: int = 1,
    ):
        if m_per_state < 1:
            raise ValueError("need at least one draw per state")
        self.grid = grid
        self.nominal = np.asarray(nominal, dtype=float)
        self.aggregation = aggregation
        self.J = J
        self.a = float(a)
        self.m_per_state = m_per_state
        self.n_states = self.nominal.shape[0]
        self.basis = np.stack([build_basis(grid, self.nominal[i], J) for i in range(self.n_states)])
        self.theta = {}       # (t, r, i) -> (J,) weights
        self.visits = {}      # (t, r) -> update call count

    def _theta(self, t: int, r: int, i: int) -> np.ndarray:
        return self.theta.get((t, r, i), np.zeros(self.J))

    def conditional_dist(self, t: int, r: int, i: int) -> np.ndarray:
        """Q(w|i) = Σ_j θ_j φ_j(w) / Σ_j θ_j; uniform mixture while θ = 0."""
        th = self._theta(t, r, i)
        total = th.sum()
        if total <= 0.0:
            return self.basis[i].mean(axis=0)
        return (th @ self.basis[i]) / total

    def draw(self, t: int, r: int, nominal: np.ndarray, rng) -> SamplerDraw:
        conds = np.stack([self.conditional_dist(t, r, i) for i in range(self.n_states)])
        drawn = []
        for i in range(self.n_states):
            drawn.extend(rng.choice(self.grid.size, size=self.m_per_state, p=conds[i]).tolist())
        outcomes, counts = np.unique(np.asarray(drawn), return_counts=True)
        qbar = conds.mean(axis=0)
        assert np.all(qbar[outcomes] > 0.0), "drawn outcome with zero sampling mass"
        return SamplerDraw(outcomes=outcomes, counts=counts, qbar=qbar, total=len(drawn))

    def update(self, t: int, r: int, draw: SamplerDraw, vhat_by_outcome: np.ndarray) -> None:
        """Fold one stage's v̂ observations into every state's weights.

        Each call per state counts one visit of (t, r); the stepsize uses
        the count before its own increment.
        """
        samples = np.repeat(draw.outcomes, draw.counts)
        vhats = np.repeat(vhat_by_outcome, draw.counts)
        q = draw.qbar[samples]
        for i in range(self.n_states):
            n = self.visits.get((t, r), 0)
            gamma = stepsize(self.a, n)
            self.visits[(t, r)] = n + 1
            phi = self.basis[i][:, samples].T
            p_i = self.nominal[i, samples]
            self.theta[(t, r, i)] = update_weights(
                self._theta(t, r, i), phi, vhats, p_i, q, gamma
            )

    def dump_diagnostics(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "r", "i", "j", "theta"])
            for (t, r, i), th in sorted(self.theta.items()):
                for j, val in enumerate(th):
                    writer.writerow([t, r, i, j, f"{val:.12g}"])


def make_sampler(
    kind: str,
    grid: OutcomeGrid,
    nominal: np.ndarray,
    aggregation: AggregationScheme,
    J: int = 6,
    a: float = 10.0,
    m_per_state: int = 1,
):
    if kind == "none":
        return NoSampler()
    if kind == "standard":
        return StandardSampler(m_per_state)
    if kind == "importance":
        return ImportanceSampler(grid, nominal, aggregation, J=J, a=a, m_per_state=m_per_state)
    raise ValueError(f"unknown sampler kind: {kind}")
