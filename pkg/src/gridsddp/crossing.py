"""Hidden semi-Markov crossing-state model of wind forecast errors.

The error process W_t = actual - forecast is segmented into runs of
consecutive steps strictly above the forecast (W > 0) or at-or-below it
(W <= 0; zero counts as below). A completed run is a "crossing"; its length
is assigned to one of m empirical-quantile duration bins. The crossing state
is the pair (sign, duration bin) -- the duration bin of the ongoing run is
hidden until the run completes. Together with the quantile bin of the latest
error (n bins per crossing state) it forms the information state on which
value-function cuts are indexed.

A fitted model supports exact forward filtering of beliefs over the hidden
duration bin, next-step error prediction, and path simulation. An IID model
with a single information state is provided behind the same interface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .series import ForecastErrorSeries, OutcomeGrid

__all__ = [
    "SIGN_BELOW",
    "SIGN_ABOVE",
    "sign_of",
    "Crossings",
    "extract_crossings",
    "KnowledgeState",
    "CrossingStateModel",
    "IidErrorModel",
    "fit",
    "fit_iid",
    "FitError",
    "DegenerateObservationError",
    "save_model",
    "load_model",
]

SIGN_BELOW = 0
SIGN_ABOVE = 1

MODEL_SCHEMA_VERSION = 1


def sign_of(w: float) -> int:
    """Sign class of an error: above forecast iff strictly positive."""
    return SIGN_ABOVE if w > 0.0 else SIGN_BELOW


class FitError(ValueError):
    """Raised when the training data cannot support the requested model."""


class DegenerateObservationError(RuntimeError):
    """Raised when an observation has zero likelihood under every hypothesis."""


@dataclass(frozen=True)
class Crossings:
    """Completed crossing durations and the indices where the sign flips.

    ``up_indices`` holds positions t where the error moves from at-or-below
    to strictly above forecast; ``down_indices`` the reverse. ``up_times``
    are the lengths of completed above-forecast runs (ended by a down flip),
    ``down_times`` of completed below-forecast runs. ``runs`` lists every
    maximal same-sign segment as (start, length, sign, completed); the final
    run is never complete.
    """

    up_times: np.ndarray
    down_times: np.ndarray
    up_indices: np.ndarray
    down_indices: np.ndarray
    runs: tuple


def extract_crossings(series: ForecastErrorSeries) -> Crossings:
    """Segment an error series into runs and collect completed crossing times."""
    w = series.errors
    classes = (w > 0.0).astype(int)
    flips = np.nonzero(np.diff(classes) != 0)[0] + 1  # first index of each new run
    starts = np.concatenate(([0], flips))
    lengths = np.diff(np.concatenate((starts, [w.size])))
    runs = []
    for j, (s, ell) in enumerate(zip(starts, lengths)):
        runs.append((int(s), int(ell), int(classes[s]), j < len(starts) - 1))
    up_idx = flips[classes[flips] == SIGN_ABOVE]
    down_idx = flips[classes[flips] == SIGN_BELOW]
    up_times = np.array([ell for (_, ell, sgn, done) in runs if done and sgn == SIGN_ABOVE], dtype=int)
    down_times = np.array([ell for (_, ell, sgn, done) in runs if done and sgn == SIGN_BELOW], dtype=int)
    return Crossings(up_times, down_times, up_idx, down_idx, tuple(runs))


def _quantile_bin_edges(values: np.ndarray, bins: int) -> np.ndarray:
    """Split values into quantile bins; returns the bins-1 split points.

    A value v belongs to bin #{edges : v > edge}. Values tied with a split
    point fall in the lower bin, which keeps binning deterministic when
    duplicates straddle a quantile edge.
    """
    srt = np.sort(values)
    count = srt.size
    idx = [int(np.ceil(b * count / bins)) - 1 for b in range(1, bins)]
    return srt[idx].astype(float)


def _bin_of(value: float, edges: np.ndarray) -> int:
    return int(np.sum(value > edges))


def _smooth(dist: np.ndarray, mask: np.ndarray, eps: float) -> np.ndarray:
    """Add eps mass on masked support and renormalize."""
    out = dist.copy()
    out[mask] += eps
    return out / out.sum()


@dataclass(frozen=True)
class KnowledgeState:
    """Filtered belief over crossing states plus observable run context.

    ``beliefs[i]`` is the probability that the ongoing run belongs to
    crossing state i; only states matching the sign of ``last_error`` can
    carry mass. ``elapsed`` counts the observations in the ongoing run
    (>= 1), and ``last_error`` is the latest observed error (MW).
    """

    beliefs: np.ndarray
    elapsed: int
    last_error: float

    def __post_init__(self) -> None:
        beliefs = np.asarray(self.beliefs, dtype=float)
        object.__setattr__(self, "beliefs", beliefs)
        if abs(beliefs.sum() - 1.0) > 1e-12 or np.any(beliefs < 0):
            raise ValueError("beliefs must be a probability vector")
        if self.elapsed < 1:
            raise ValueError("elapsed run length must be >= 1")


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class CrossingStateModel:
    """Fitted crossing-state model over a discrete outcome grid.

    Crossing states are indexed i = sign * m + duration_bin for
    sign in {0: below, 1: above}; information states are
    i * n + error_bin. All error distributions are probability vectors
    over ``grid.points``.
    """

    m: int
    n: int
    grid: OutcomeGrid
    exit_probs: tuple               # per crossing state: hazard(tau) for tau = 1..tau_max
    duration_edges: np.ndarray      # (2, m-1) pooled duration split points per sign
    trans_flip: np.ndarray          # (2m, 2m), crossing-boundary transitions, zero diagonal
    trans_compact: np.ndarray       # (2m, 2m), all-step transitions, self loops allowed
    cont_dists: np.ndarray          # (2m, n, P) next-error dists within a run
    entry_dists: np.ndarray         # (2m, P) first-error dists of a new run
    error_edges: np.ndarray         # (2m, n-1) per-state error-bin split points
    max_crossing_time: np.ndarray   # (2m,) largest observed duration per state
    capacity_mw: float | None = None
    nominal: np.ndarray = field(default=None, repr=False)  # (2mn, P) info-state error dists

    def __post_init__(self) -> None:
        if self.nominal is None:
            nom = np.stack([self._compact_dist_raw(i) for i in range(self.n_info_states)])
            object.__setattr__(self, "nominal", nom)

    # ----- indexing ---------------------------------------------------

    @property
    def n_crossing_states(self) -> int:
        return 2 * self.m

    @property
    def n_info_states(self) -> int:
        return 2 * self.m * self.n

    def crossing_index(self, sign: int, dbin: int) -> int:
        return sign * self.m + dbin

    def state_sign(self, i: int) -> int:
        return i // self.m

    def info_index(self, crossing: int, ebin: int) -> int:
        return crossing * self.n + ebin

    def split_info(self, info: int) -> tuple[int, int]:
        return divmod(info, self.n)

    def duration_bin(self, sign: int, tau: int) -> int:
        return _bin_of(float(tau), self.duration_edges[sign])

    def error_bin(self, i: int, w: float) -> int:
        return _bin_of(w, self.error_edges[i])

    def exit_prob(self, i: int, tau: int) -> float:
        """Probability a state-i run ends at this step given it has lasted
        tau steps (the empirical duration hazard; 1 at the state's maximum
        observed duration, so runs always terminate)."""
        if tau < 1:
            return 0.0
        hazard = self.exit_probs[i]
        return 1.0 if tau > len(hazard) else float(hazard[tau - 1])

    # ----- distributions ----------------------------------------------

    def duration_transition(self, i: int, tau: int) -> np.ndarray:
        """Crossing-state transition mass after tau elapsed steps in state i."""
        f = self.exit_prob(i, tau)
        out = f * self.trans_flip[i]
        out[i] += 1.0 - f
        return out

    def full_state_error_dist(self, i: int, tau: int, ebin: int) -> np.ndarray:
        """Next-error distribution given crossing state, elapsed time, error bin."""
        f = self.exit_prob(i, tau)
        entry_mix = self.trans_flip[i] @ self.entry_dists
        return (1.0 - f) * self.cont_dists[i, ebin] + f * entry_mix

    def _compact_dist_raw(self, info: int) -> np.ndarray:
        i, b = self.split_info(info)
        stay = self.trans_compact[i, i]
        row = self.trans_compact[i].copy()
        row[i] = 0.0
        return stay * self.cont_dists[i, b] + row @ self.entry_dists

    def compact_error_dist(self, info: int) -> np.ndarray:
        """Next-error distribution given only the compact information state."""
        return self.nominal[info]

    def posterior_crossing_probs(self, w: float) -> np.ndarray:
        """P(crossing state | single error observation), elapsed time unknown."""
        widx = self.grid.index_of(w)
        num = np.empty(self.n_crossing_states)
        for i in range(self.n_crossing_states):
            stay = self.trans_compact[i, i] * self.cont_dists[i, :, widx].sum()
            col = self.trans_compact[:, i].copy()
            col[i] = 0.0
            num[i] = stay + col.sum() * self.entry_dists[i, widx]
        total = num.sum()
        if total <= 0.0:
            raise DegenerateObservationError(
                f"observation {w} has zero likelihood under every crossing state"
            )
        return num / total

    def posterior_info_probs(self, w: float) -> np.ndarray:
        """P(information state | single error observation).

        The crossing-state posterior lands entirely on the one error bin that
        w occupies for each state; sign-incompatible states get zero.
        """
        cprobs = self.posterior_crossing_probs(w)
        out = np.zeros(self.n_info_states)
        for i in range(self.n_crossing_states):
            out[self.info_index(i, self.error_bin(i, w))] = cprobs[i]
        return out

    def info_weights(self, k: KnowledgeState) -> np.ndarray:
        """P(information state | knowledge state): beliefs placed at the
        error bin of the latest observation for each crossing state."""
        out = np.zeros(self.n_info_states)
        for i in range(self.n_crossing_states):
            if k.beliefs[i] > 0.0:
                out[self.info_index(i, self.error_bin(i, k.last_error))] = k.beliefs[i]
        return out

    def predict_next_error(self, k: KnowledgeState) -> np.ndarray:
        """Belief-weighted next-error distribution."""
        out = np.zeros(self.grid.size)
        for i in range(self.n_crossing_states):
            if k.beliefs[i] > 0.0:
                ebin = self.error_bin(i, k.last_error)
                out += k.beliefs[i] * self.full_state_error_dist(i, k.elapsed, ebin)
        return out

    # ----- filtering --------------------------------------------------

    def init_knowledge(self, w0: float) -> KnowledgeState:
        """Uniform beliefs over the sign-compatible crossing states."""
        beliefs = np.zeros(self.n_crossing_states)
        sign = sign_of(w0)
        beliefs[sign * self.m:(sign + 1) * self.m] = 1.0 / self.m
        return KnowledgeState(beliefs, 1, float(w0))

    def knowledge_update(self, k: KnowledgeState, w_next: float) -> KnowledgeState:
        """Bayesian belief update after observing the next error.

        Same sign: the run continues; each surviving state i is reweighted by
        its probability of not having ended after ``k.elapsed`` observations
        times the in-run likelihood of the new error. Sign flip: the
        completed duration identifies the finished crossing state exactly, so
        the new beliefs follow the flip-transition row into the new sign.
        """
        widx = self.grid.index_of(w_next)
        if sign_of(w_next) == sign_of(k.last_error):
            num = np.zeros(self.n_crossing_states)
            for i in range(self.n_crossing_states):
                if k.beliefs[i] <= 0.0:
                    continue
                survive = 1.0 - self.exit_prob(i, k.elapsed)
                ebin = self.error_bin(i, k.last_error)
                num[i] = k.beliefs[i] * survive * self.cont_dists[i, ebin, widx]
            total = num.sum()
            if total <= 0.0:
                raise DegenerateObservationError(
                    f"zero posterior mass continuing a run: elapsed={k.elapsed}, "
                    f"last_error={k.last_error}, next={w_next}"
                )
            return KnowledgeState(num / total, k.elapsed + 1, float(w_next))

        old_sign = sign_of(k.last_error)
        i_star = self.crossing_index(old_sign, self.duration_bin(old_sign, k.elapsed))
        num = self.trans_flip[i_star] * self.entry_dists[:, widx]
        total = num.sum()
        if total <= 0.0:
            raise DegenerateObservationError(
                f"zero posterior mass after a sign flip: completed state {i_star}, next={w_next}"
            )
        return KnowledgeState(num / total, 1, float(w_next))

    # ----- simulation -------------------------------------------------

    def sample_path(self, forecasts, T: int, seed, w0: float | None = None):
        """Simulate T+1 errors (and actual outputs) from the hidden process.

        The hidden crossing state advances via the duration-dependent
        transition mass; errors are drawn from the in-run or new-run
        conditional of the hidden state. Deterministic given the seed.
        Actual output is forecast + error, clamped to [0, capacity] when a
        capacity is set.
        """
        rng = _as_rng(seed)
        forecasts = np.asarray(forecasts, dtype=float)
        if forecasts.size < T + 1:
            raise ValueError("need a forecast for every step 0..T")
        points = self.grid.points
        if w0 is None:
            state = int(rng.integers(self.n_crossing_states))
            w = float(points[rng.choice(points.size, p=self.entry_dists[state])])
        else:
            sign = sign_of(w0)
            state = self.crossing_index(sign, int(rng.integers(self.m)))
            w = float(w0)
        tau = 1
        errors = [w]
        for _ in range(T):
            if rng.random() < self.exit_prob(state, tau):
                state = int(rng.choice(self.n_crossing_states, p=self.trans_flip[state]))
                w = float(points[rng.choice(points.size, p=self.entry_dists[state])])
                tau = 1
            else:
                ebin = self.error_bin(state, w)
                w = float(points[rng.choice(points.size, p=self.cont_dists[state, ebin])])
                tau += 1
            errors.append(w)
        errors = np.asarray(errors)
        actuals = forecasts[:T + 1] + errors
        if self.capacity_mw is not None:
            actuals = np.clip(actuals, 0.0, self.capacity_mw)
        return errors, actuals

    # ----- serialization ----------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "kind": "crossing",
            "m": self.m,
            "n": self.n,
            "grid_points": self.grid.points.tolist(),
            "duration_exit_probs": [np.asarray(c).tolist() for c in self.exit_probs],
            "duration_edges": self.duration_edges.tolist(),
            "trans_flip": self.trans_flip.tolist(),
            "trans_compact": self.trans_compact.tolist(),
            "cont_dists": self.cont_dists.tolist(),
            "entry_dists": self.entry_dists.tolist(),
            "error_edges": self.error_edges.tolist(),
            "max_crossing_time": self.max_crossing_time.tolist(),
            "capacity_mw": self.capacity_mw,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrossingStateModel":
        if d.get("schema_version") != MODEL_SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema: {d.get('schema_version')}")
        return cls(
            m=int(d["m"]),
            n=int(d["n"]),
            grid=OutcomeGrid(np.asarray(d["grid_points"])),
            exit_probs=tuple(np.asarray(c) for c in d["duration_exit_probs"]),
            duration_edges=np.asarray(d["duration_edges"]),
            trans_flip=np.asarray(d["trans_flip"]),
            trans_compact=np.asarray(d["trans_compact"]),
            cont_dists=np.asarray(d["cont_dists"]),
            entry_dists=np.asarray(d["entry_dists"]),
            error_edges=np.asarray(d["error_edges"]),
            max_crossing_time=np.asarray(d["max_crossing_time"], dtype=int),
            capacity_mw=d.get("capacity_mw"),
        )


def fit(
    series: ForecastErrorSeries,
    m: int,
    n: int,
    grid: OutcomeGrid,
    smoothing: float = 1e-6,
    capacity_mw: float | None = None,
) -> CrossingStateModel:
    """Fit the crossing-state model from a training series.

    Durations and per-state errors are quantile-binned; flip transitions are
    counted over run boundaries only, compact transitions over every
    consecutive labeled pair. Empirical error histograms are projected onto
    the outcome grid and smoothed with ``smoothing`` mass on sign-compatible
    points so no compatible observation gets exactly zero likelihood.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    cx = extract_crossings(series)
    completed = [r for r in cx.runs if r[3]]
    if len(completed) < 2:
        raise FitError("series too short: fewer than two completed crossings")

    durations = {SIGN_BELOW: cx.down_times, SIGN_ABOVE: cx.up_times}
    for sign, durs in durations.items():
        if durs.size == 0:
            missing = [(sign, d) for d in range(m)]
            raise FitError(f"unobserved crossing states: {missing}")
        if np.unique(durs).size < m:
            raise ValueError(
                f"m={m} exceeds the {np.unique(durs).size} distinct durations for sign {sign}"
            )

    duration_edges = np.stack([
        _quantile_bin_edges(durations[s], m) if m > 1 else np.empty(0)
        for s in (SIGN_BELOW, SIGN_ABOVE)
    ]) if m > 1 else np.empty((2, 0))

    def dbin(sign: int, d: int) -> int:
        return _bin_of(float(d), duration_edges[sign]) if m > 1 else 0

    n_states = 2 * m
    w = series.errors
    # Label every step of a completed run with the state known in hindsight.
    labels = np.full(w.size, -1, dtype=int)
    run_states = []
    for start, length, sign, done in cx.runs:
        if not done:
            run_states.append(-1)
            continue
        state = sign * m + dbin(sign, length)
        run_states.append(state)
        labels[start:start + length] = state

    observed = sorted(set(s for s in run_states if s >= 0))
    missing = [s for s in range(n_states) if s not in observed]
    if missing:
        raise FitError(
            "unobserved crossing states: "
            + str([(s // m, s % m) for s in missing])
        )

    state_durations = [[] for _ in range(n_states)]
    for (start, length, sign, done), state in zip(cx.runs, run_states):
        if state >= 0:
            state_durations[state].append(length)
    exit_probs = []
    max_crossing_time = np.zeros(n_states, dtype=int)
    for i in range(n_states):
        durs = np.sort(np.asarray(state_durations[i]))
        tmax = int(durs[-1])
        max_crossing_time[i] = tmax
        # Empirical hazard: P(run ends at tau | lasted >= tau). Simulating
        # with this per-step exit probability reproduces the within-state
        # duration distribution exactly; it is 1 at tau = tmax by design.
        count_le = np.searchsorted(durs, np.arange(0, tmax + 1), side="right")
        at_least = durs.size - count_le[:-1]
        exactly = np.diff(count_le)
        exit_probs.append(exactly / at_least)

    trans_flip = np.zeros((n_states, n_states))
    for a, b in zip(run_states[:-1], run_states[1:]):
        if a >= 0 and b >= 0:
            trans_flip[a, b] += 1.0
    trans_compact = np.zeros((n_states, n_states))
    for t in range(w.size - 1):
        a, b = labels[t], labels[t + 1]
        if a >= 0 and b >= 0:
            trans_compact[a, b] += 1.0
    for name, mat in (("flip", trans_flip), ("compact", trans_compact)):
        sums = mat.sum(axis=1)
        if np.any(sums == 0.0):
            bad = np.nonzero(sums == 0.0)[0].tolist()
            raise FitError(f"no outgoing {name} transitions observed for states {bad}")
        mat /= sums[:, None]

    error_edges = np.zeros((n_states, n - 1))
    for i in range(n_states):
        vals = w[labels == i]
        if np.unique(vals).size < n:
            raise ValueError(
                f"n={n} exceeds the {np.unique(vals).size} distinct errors for state {i}"
            )
        if n > 1:
            error_edges[i] = _quantile_bin_edges(vals, n)

    sign_masks = [grid.sign_mask(SIGN_BELOW), grid.sign_mask(SIGN_ABOVE)]
    for sign in (SIGN_BELOW, SIGN_ABOVE):
        if not sign_masks[sign].any():
            raise FitError(f"outcome grid has no points for sign {sign}")

    cont_dists = np.zeros((n_states, n, grid.size))
    entry_dists = np.zeros((n_states, grid.size))
    cont_samples = [[[] for _ in range(n)] for _ in range(n_states)]
    entry_samples = [[] for _ in range(n_states)]
    for (start, length, sign, done), state in zip(cx.runs, run_states):
        if state < 0:
            continue
        entry_samples[state].append(w[start])
        for t in range(start, start + length - 1):
            b = _bin_of(w[t], error_edges[state]) if n > 1 else 0
            cont_samples[state][b].append(w[t + 1])
    for i in range(n_states):
        mask = sign_masks[i // m]
        entry_dists[i] = _smooth(grid.project(entry_samples[i], mask), mask, smoothing)
        for b in range(n):
            if cont_samples[i][b]:
                base = grid.project(cont_samples[i][b], mask)
            else:
                # No in-run successor observed for this bin: fall back to a
                # uniform distribution over the sign-compatible support.
                base = mask / mask.sum()
            cont_dists[i, b] = _smooth(base, mask, smoothing)

    return CrossingStateModel(
        m=m,
        n=n,
        grid=grid,
        exit_probs=tuple(exit_probs),
        duration_edges=duration_edges,
        trans_flip=trans_flip,
        trans_compact=trans_compact,
        cont_dists=cont_dists,
        entry_dists=entry_dists,
        error_edges=error_edges,
        max_crossing_time=max_crossing_time,
        capacity_mw=capacity_mw,
    )


@dataclass(frozen=True)
class IidErrorModel:
    """Stage-independent error model with a single information state."""

    grid: OutcomeGrid
    dist: np.ndarray
    capacity_mw: float | None = None

    @property
    def m(self) -> int:
        return 1

    @property
    def n(self) -> int:
        return 1

    @property
    def n_crossing_states(self) -> int:
        return 1

    @property
    def n_info_states(self) -> int:
        return 1

    @property
    def nominal(self) -> np.ndarray:
        return self.dist[None, :]

    def compact_error_dist(self, info: int) -> np.ndarray:
        return self.dist

    def full_state_error_dist(self, i: int, tau: int, ebin: int) -> np.ndarray:
        return self.dist

    def posterior_info_probs(self, w: float) -> np.ndarray:
        return np.ones(1)

    def info_weights(self, k: KnowledgeState) -> np.ndarray:
        return np.ones(1)

    def predict_next_error(self, k: KnowledgeState) -> np.ndarray:
        return self.dist

    def init_knowledge(self, w0: float) -> KnowledgeState:
        return KnowledgeState(np.ones(1), 1, float(w0))

    def knowledge_update(self, k: KnowledgeState, w_next: float) -> KnowledgeState:
        return KnowledgeState(np.ones(1), 1, float(w_next))

    def sample_path(self, forecasts, T: int, seed, w0: float | None = None):
        rng = _as_rng(seed)
        forecasts = np.asarray(forecasts, dtype=float)
        if forecasts.size < T + 1:
            raise ValueError("need a forecast for every step 0..T")
        points = self.grid.points
        draws = points[rng.choice(points.size, size=T + 1, p=self.dist)]
        if w0 is not None:
            draws[0] = w0
        actuals = forecasts[:T + 1] + draws
        if self.capacity_mw is not None:
            actuals = np.clip(actuals, 0.0, self.capacity_mw)
        return draws, actuals

    def to_dict(self) -> dict:
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "kind": "iid",
            "grid_points": self.grid.points.tolist(),
            "dist": self.dist.tolist(),
            "capacity_mw": self.capacity_mw,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IidErrorModel":
        if d.get("schema_version") != MODEL_SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema: {d.get('schema_version')}")
        return cls(
            grid=OutcomeGrid(np.asarray(d["grid_points"])),
            dist=np.asarray(d["dist"]),
            capacity_mw=d.get("capacity_mw"),
        )


def fit_iid(
    series: ForecastErrorSeries,
    grid: OutcomeGrid,
    smoothing: float = 1e-6,
    capacity_mw: float | None = None,
) -> IidErrorModel:
    """Fit the single-state baseline: the marginal error histogram."""
    dist = _smooth(grid.project(series.errors), np.ones(grid.size, dtype=bool), smoothing)
    return IidErrorModel(grid=grid, dist=dist, capacity_mw=capacity_mw)


def save_model(model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=1)


def load_model(path):
    with open(path) as fh:
        d = json.load(fh)
    kind = d.get("kind")
    if kind == "crossing":
        return CrossingStateModel.from_dict(d)
    if kind == "iid":
        return IidErrorModel.from_dict(d)
    raise ValueError(f"unknown model kind: {kind}")
