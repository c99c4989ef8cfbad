"""Grid instance data model: topology, fleets, demand, wind, penalties.

An instance is a JSON file with sections ``nodes, edges, generators,
storage, demand_profile, wind, penalties, commitment_schedule, horizon``;
demand and wind forecasts live in side CSV files referenced by relative
path. Instances are immutable after load.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Edge",
    "Generator",
    "StorageDevice",
    "Penalties",
    "GridInstance",
    "ResourceState",
    "Decision",
    "CostBreakdown",
    "load_instance",
    "nodal_injection",
    "transition_post",
    "stage_cost",
    "effective_gen_bounds",
    "wind_injection",
]


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    susceptance: float
    capacity_mw: float

    def __post_init__(self) -> None:
        if self.u == self.v:
            raise ValueError("self-loop edge")
        if self.susceptance <= 0 or self.capacity_mw <= 0:
            raise ValueError("susceptance and capacity must be positive")


@dataclass(frozen=True)
class Generator:
    node: int
    kappa_l: float
    kappa_u: float
    cost_mwh: float

    def __post_init__(self) -> None:
        if not 0 <= self.kappa_l <= self.kappa_u:
            raise ValueError("need 0 <= kappa_l <= kappa_u")


@dataclass(frozen=True)
class StorageDevice:
    node: int
    kappa_l: float           # MWh
    kappa_u: float           # MWh
    eta_charge: float        # MWh stored per MW charged
    eta_discharge: float     # MWh depleted per MW discharged
    cost_mwh: float
    max_charge_mw: float
    max_discharge_mw: float
    initial_mwh: float

    def __post_init__(self) -> None:
        if not 0 <= self.kappa_l < self.kappa_u:
            raise ValueError("need 0 <= kappa_l < kappa_u")
        for eta in (self.eta_charge, self.eta_discharge):
            if not 0 < eta <= 1:
                raise ValueError("efficiencies must lie in (0, 1]")
        if not self.kappa_l <= self.initial_mwh <= self.kappa_u:
            raise ValueError("initial level outside capacity bounds")


@dataclass(frozen=True)
class Penalties:
    shortage: float    # $/MWh per stage
    excess: float      # $/MWh per stage
    overflow: float    # $/MWh per stage
    terminal: float    # $/MWh on final shortage beyond the threshold
    threshold: float   # MWh

    def __post_init__(self) -> None:
        vals = (self.shortage, self.excess, self.overflow, self.terminal, self.threshold)
        if any(v < 0 for v in vals):
            raise ValueError("penalty parameters must be nonnegative")


@dataclass(frozen=True)
class GridInstance:
    name: str
    horizon: int                   # decisions at t = 0..horizon
    n_nodes: int
    reference_node: int
    angle_bound: float
    edges: tuple
    generators: tuple
    storage: tuple
    demand: np.ndarray             # (horizon+1, n_nodes) MW
    commitment: np.ndarray         # (horizon+1, n_generators) bool
    wind_node: int
    wind_forecast: np.ndarray      # (horizon+1,) MW
    wind_capacity_mw: float
    initial_error_mw: float
    penalties: Penalties

    def __post_init__(self) -> None:
        for e in self.edges:
            if not (0 <= e.u < self.n_nodes and 0 <= e.v < self.n_nodes):
                raise ValueError(f"edge ({e.u},{e.v}) references a missing node")
        for g in self.generators:
            if not 0 <= g.node < self.n_nodes:
                raise ValueError("generator on a missing node")
        for b in self.storage:
            if not 0 <= b.node < self.n_nodes:
                raise ValueError("storage on a missing node")
        if not 0 <= self.wind_node < self.n_nodes:
            raise ValueError("wind on a missing node")
        if self.demand.shape != (self.horizon + 1, self.n_nodes):
            raise ValueError(f"demand shape {self.demand.shape} does not match instance")
        if self.commitment.shape != (self.horizon + 1, len(self.generators)):
            raise ValueError("commitment schedule shape mismatch")
        if self.wind_forecast.shape != (self.horizon + 1,):
            raise ValueError("wind forecast length mismatch")

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    @property
    def n_storage(self) -> int:
        return len(self.storage)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def initial_resource(self) -> "ResourceState":
        return ResourceState(
            battery=np.array([b.initial_mwh for b in self.storage]),
            shortage=0.0,
        )

    def battery_span(self) -> np.ndarray:
        return np.array([b.kappa_u - b.kappa_l for b in self.storage])


@dataclass(frozen=True)
class ResourceState:
    """Battery charge levels (MWh) plus cumulative shortage (MWh)."""

    battery: np.ndarray
    shortage: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "battery", np.asarray(self.battery, dtype=float))
        if self.shortage < -1e-9:
            raise ValueError("cumulative shortage cannot be negative")

    def as_vector(self) -> np.ndarray:
        """Stacked [battery..., shortage] vector used by cuts and sampling."""
        return np.concatenate((self.battery, [self.shortage]))

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "ResourceState":
        vec = np.asarray(vec, dtype=float)
        return cls(battery=vec[:-1], shortage=float(vec[-1]))


@dataclass(frozen=True)
class Decision:
    """One stage's dispatch: generation, storage, flows, angles, slacks."""

    gen: np.ndarray         # (G,) MW
    discharge: np.ndarray   # (B,) MW
    charge: np.ndarray      # (B,) MW
    flow: np.ndarray        # (E,) MW, signed along each edge's (u, v) direction
    angle: np.ndarray       # (N,) rad
    shortage: np.ndarray    # (N,) MW slack
    excess: np.ndarray      # (N,) MW slack
    overflow: np.ndarray    # (E,) MW slack

    def flow_between(self, instance: GridInstance, i: int, j: int) -> float:
        """Signed flow from node i to node j (antisymmetric by construction)."""
        for e, edge in enumerate(instance.edges):
            if (edge.u, edge.v) == (i, j):
                return float(self.flow[e])
            if (edge.u, edge.v) == (j, i):
                return -float(self.flow[e])
        raise KeyError(f"no edge between {i} and {j}")

    def inflow(self, instance: GridInstance) -> np.ndarray:
        """Net imported power y per node: sum of flows into minus out of it."""
        y = np.zeros(instance.n_nodes)
        for e, edge in enumerate(instance.edges):
            y[edge.v] += self.flow[e]
            y[edge.u] -= self.flow[e]
        return y


@dataclass(frozen=True)
class CostBreakdown:
    generation: float
    shortage: float
    excess: float
    overflow: float
    terminal: float

    @property
    def total(self) -> float:
        return self.generation + self.shortage + self.excess + self.overflow + self.terminal


def wind_injection(instance: GridInstance, t: int, error_mw: float) -> float:
    """Physical wind power at stage t: forecast + error clamped to [0, capacity]."""
    return float(np.clip(instance.wind_forecast[t] + error_mw, 0.0, instance.wind_capacity_mw))


def nodal_injection(instance: GridInstance, decision: Decision, wind_mw: float) -> np.ndarray:
    """Per-node generated power p: generation + net storage + wind."""
    p = np.zeros(instance.n_nodes)
    for g, gen in enumerate(instance.generators):
        p[gen.node] += decision.gen[g]
    for b, dev in enumerate(instance.storage):
        p[dev.node] += decision.discharge[b] - decision.charge[b]
    p[instance.wind_node] += wind_mw
    return p


def effective_gen_bounds(instance: GridInstance, t: int, g: int) -> tuple:
    """Dispatch bounds for generator g at stage t under its commitment.

    Offline: (0, 0). First committed stage (t = 0 or rising edge): the unit
    must start at its minimum, so both bounds equal kappa_l. Otherwise the
    full (kappa_l, kappa_u) range.
    """
    gen = instance.generators[g]
    if not instance.commitment[t, g]:
        return 0.0, 0.0
    rising = t == 0 or not instance.commitment[t - 1, g]
    if rising:
        return gen.kappa_l, gen.kappa_l
    return gen.kappa_l, gen.kappa_u


def transition_post(
    instance: GridInstance, state: ResourceState, decision: Decision, atol: float = 1e-9
) -> ResourceState:
    """Post-decision resource state: battery flows applied, shortage accumulated."""
    eta_c = np.array([b.eta_charge for b in instance.storage])
    eta_d = np.array([b.eta_discharge for b in instance.storage])
    battery = state.battery + eta_c * decision.charge - eta_d * decision.discharge
    lo = np.array([b.kappa_l for b in instance.storage])
    hi = np.array([b.kappa_u for b in instance.storage])
    if np.any(battery < lo - atol) or np.any(battery > hi + atol):
        raise ValueError(f"post-decision battery state {battery} violates capacity bounds")
    shortage = state.shortage + float(np.sum(decision.shortage))
    return ResourceState(battery=np.clip(battery, lo, hi), shortage=max(shortage, 0.0))


def stage_cost(
    instance: GridInstance,
    t: int,
    decision: Decision,
    post_shortage: float,
) -> CostBreakdown:
    """Cost components for one stage.

    Generation cost charges dispatched power plus net discharged storage.
    The terminal component applies only at the final stage, on the
    post-decision cumulative shortage beyond the acceptable threshold.
    """
    pen = instance.penalties
    cg = sum(g.cost_mwh * decision.gen[i] for i, g in enumerate(instance.generators))
    cg += sum(
        b.cost_mwh * (decision.discharge[i] - decision.charge[i])
        for i, b in enumerate(instance.storage)
    )
    cs = pen.shortage * float(np.sum(decision.shortage))
    ce = pen.excess * float(np.sum(decision.excess))
    cl = pen.overflow * float(np.sum(decision.overflow))
    cp = 0.0
    if t == instance.horizon:
        cp = pen.terminal * max(0.0, post_shortage - pen.threshold)
    return CostBreakdown(float(cg), cs, ce, cl, cp)


def _read_demand_csv(path: Path, horizon: int, n_nodes: int) -> np.ndarray:
    demand = np.full((horizon + 1, n_nodes), np.nan)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            demand[int(row["t"]), int(row["node_id"])] = float(row["demand_mw"])
    if np.isnan(demand).any():
        raise ValueError(f"demand profile {path} does not cover every (t, node)")
    return demand


def _read_forecast_csv(path: Path, horizon: int) -> np.ndarray:
    forecast = np.full(horizon + 1, np.nan)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            t = int(row["t"])
            if t <= horizon:
                forecast[t] = float(row["forecast_mw"])
    if np.isnan(forecast).any():
        raise ValueError(f"wind forecast {path} does not cover t = 0..{horizon}")
    return forecast


def load_instance(path) -> GridInstance:
    """Load an instance JSON plus its demand and wind-forecast CSVs."""
    path = Path(path)
    with open(path) as fh:
        raw = json.load(fh)
    base = path.parent
    horizon = int(raw["horizon"])
    n_nodes = int(raw["nodes"])
    edges = tuple(
        Edge(int(e["u"]), int(e["v"]), float(e["susceptance"]), float(e["capacity_mw"]))
        for e in raw["edges"]
    )
    generators = tuple(
        Generator(int(g["node"]), float(g["kappa_l"]), float(g["kappa_u"]), float(g["cost_mwh"]))
        for g in raw["generators"]
    )
    storage = tuple(
        StorageDevice(
            node=int(b["node"]),
            kappa_l=float(b["kappa_l"]),
            kappa_u=float(b["kappa_u"]),
            eta_charge=float(b["eta_charge"]),
            eta_discharge=float(b["eta_discharge"]),
            cost_mwh=float(b["cost_mwh"]),
            max_charge_mw=float(b["max_charge_mw"]),
            max_discharge_mw=float(b["max_discharge_mw"]),
            initial_mwh=float(b["initial_mwh"]),
        )
        for b in raw["storage"]
    )
    commitment = np.asarray(raw["commitment_schedule"], dtype=bool)
    if commitment.ndim == 1:  # one row shared across the horizon
        commitment = np.tile(commitment, (horizon + 1, 1))
    wind = raw["wind"]
    pen = raw["penalties"]
    return GridInstance(
        name=str(raw.get("name", path.stem)),
        horizon=horizon,
        n_nodes=n_nodes,
        reference_node=int(raw.get("reference_node", 0)),
        angle_bound=float(raw.get("angle_bound", 0.6)),
        edges=edges,
        generators=generators,
        storage=storage,
        demand=_read_demand_csv(base / raw["demand_profile"], horizon, n_nodes),
        commitment=commitment,
        wind_node=int(wind["node"]),
        wind_forecast=_read_forecast_csv(base / wind["forecast_file"], horizon),
        wind_capacity_mw=float(wind["capacity_mw"]),
        initial_error_mw=float(wind.get("initial_error_mw", 0.0)),
        penalties=Penalties(
            shortage=float(pen["shortage"]),
            excess=float(pen["excess"]),
            overflow=float(pen["overflow"]),
            terminal=float(pen["terminal"]),
            threshold=float(pen["threshold"]),
        ),
    )
