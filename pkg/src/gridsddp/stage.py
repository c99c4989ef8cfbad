"""Stage subproblem assembly: one convex program per (stage, wind outcome).

Variables, in order: generator dispatch, storage discharge/charge, edge
flows, phase angles, per-node shortage and excess slacks, per-edge overflow
slacks, post-decision battery levels, post-decision cumulative shortage,
one epigraph variable per active information state (interior stages), and a
terminal threshold-excess slack (final stage).

The battery and shortage post-state definition rows carry the incoming
resource state on their right-hand sides; their duals are the subgradients
used to assemble cuts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Decision, GridInstance, effective_gen_bounds, stage_cost, wind_injection
from .solver import ConvexSubproblem, SubproblemSolution, solve
from .vfa import ValueFunctionApprox

__all__ = ["StageIndex", "StageProblem", "build_stage", "ACTIVE_WEIGHT_TOL"]

ACTIVE_WEIGHT_TOL = 1e-15  # info states below this weight get no epigraph variable


@dataclass(frozen=True)
class StageIndex:
    """Variable layout of one stage subproblem."""

    gen: slice
    dis: slice
    chg: slice
    flow: slice
    ang: slice
    sht: slice
    exc: slice
    ovf: slice
    rb: slice
    rs: int
    nu: dict            # info state -> variable index
    sp: int | None      # terminal threshold-excess slack
    n_vars: int


@dataclass(frozen=True)
class StageProblem:
    """A built subproblem plus the layout needed to decode its solution."""

    problem: ConvexSubproblem
    index: StageIndex
    instance: GridInstance
    t: int
    wind_mw: float
    weights: np.ndarray | None

    def solve(self) -> SubproblemSolution:
        return solve(self.problem)

    def decision(self, x: np.ndarray) -> Decision:
        ix = self.index
        return Decision(
            gen=x[ix.gen].copy(),
            discharge=x[ix.dis].copy(),
            charge=x[ix.chg].copy(),
            flow=x[ix.flow].copy(),
            angle=x[ix.ang].copy(),
            shortage=x[ix.sht].copy(),
            excess=x[ix.exc].copy(),
            overflow=x[ix.ovf].copy(),
        )

    def post_resource(self, x: np.ndarray) -> np.ndarray:
        """Post-decision [battery..., shortage] read off the state variables."""
        return np.concatenate((x[self.index.rb], [x[self.index.rs]]))

    def downstream_value(self, x: np.ndarray) -> float:
        """Weighted epigraph term Σ_i P(i)·ν_i at a solution."""
        if not self.index.nu:
            return 0.0
        return float(sum(self.weights[i] * x[j] for i, j in self.index.nu.items()))

    def cost_breakdown(self, x: np.ndarray):
        """Stage cost components of the decoded decision (threshold penalty at t = T)."""
        dec = self.decision(x)
        return stage_cost(self.instance, self.t, dec, float(x[self.index.rs]))

    def realized_cost(self, x: np.ndarray) -> float:
        """Stage cost of the decoded decision (threshold penalty at t = T)."""
        return self.cost_breakdown(x).total


def build_stage(
    instance: GridInstance,
    t: int,
    resource_in: np.ndarray,
    wind_error_mw: float,
    weights: np.ndarray | None = None,
    vfa: ValueFunctionApprox | None = None,
    rho: float = 0.0,
    incumbent: np.ndarray | None = None,
    q_resource: np.ndarray | None = None,
) -> StageProblem:
    """Assemble the stage-t subproblem for one wind outcome.

    ``resource_in`` is the incoming [battery..., shortage] vector.
    ``weights`` are P(information state | history or outcome); with ``vfa``
    they add one epigraph variable per state that both carries weight and
    has cuts. ``rho > 0`` with an ``incumbent`` adds the proximal term on
    battery post-states (never at the final stage).
    """
    G, B, E, N = instance.n_generators, instance.n_storage, instance.n_edges, instance.n_nodes
    terminal = t == instance.horizon

    active = []
    if not terminal and vfa is not None and weights is not None:
        for i in range(vfa.n_info_states):
            if weights[i] > ACTIVE_WEIGHT_TOL and vfa.cuts(t, i):
                active.append(i)

    pos = 0

    def take(count: int) -> slice:
        nonlocal pos
        s = slice(pos, pos + count)
        pos += count
        return s

    gen_s, dis_s, chg_s = take(G), take(B), take(B)
    flow_s, ang_s = take(E), take(N)
    sht_s, exc_s, ovf_s = take(N), take(N), take(E)
    rb_s = take(B)
    rs_i = pos
    pos += 1
    nu = {}
    for i in active:
        nu[i] = pos
        pos += 1
    sp_i = None
    if terminal:
        sp_i = pos
        pos += 1
    n = pos
    index = StageIndex(gen_s, dis_s, chg_s, flow_s, ang_s, sht_s, exc_s, ovf_s,
                       rb_s, rs_i, nu, sp_i, n)

    bounds = [None] * n
    for g in range(G):
        bounds[gen_s.start + g] = effective_gen_bounds(instance, t, g)
    for b, dev in enumerate(instance.storage):
        bounds[dis_s.start + b] = (0.0, dev.max_discharge_mw)
        bounds[chg_s.start + b] = (0.0, dev.max_charge_mw)
    for e in range(E):
        bounds[flow_s.start + e] = (None, None)
    for v in range(N):
        if v == instance.reference_node:
            bounds[ang_s.start + v] = (0.0, 0.0)
        else:
            bounds[ang_s.start + v] = (-instance.angle_bound, instance.angle_bound)
    for v in range(N):
        bounds[sht_s.start + v] = (0.0, None)
        bounds[exc_s.start + v] = (0.0, None)
    for e in range(E):
        bounds[ovf_s.start + e] = (0.0, None)
    for b, dev in enumerate(instance.storage):
        bounds[rb_s.start + b] = (dev.kappa_l, dev.kappa_u)
    bounds[rs_i] = (0.0, None)
    for j in nu.values():
        bounds[j] = (None, None)
    if sp_i is not None:
        bounds[sp_i] = (0.0, None)

    wind_mw = wind_injection(instance, t, wind_error_mw)

    n_eq = E + N + B + 1
    A_eq = np.zeros((n_eq, n))
    b_eq = np.zeros(n_eq)
    row = 0
    # Flow definition: f_e - B_e(phi_u - phi_v) = 0.
    for e, edge in enumerate(instance.edges):
        A_eq[row, flow_s.start + e] = 1.0
        A_eq[row, ang_s.start + edge.u] = -edge.susceptance
        A_eq[row, ang_s.start + edge.v] = edge.susceptance
        row += 1
    # Nodal balance: p_v + y_v + sht_v - exc_v = d_v (wind folded into rhs).
    for v in range(N):
        for g, genr in enumerate(instance.generators):
            if genr.node == v:
                A_eq[row, gen_s.start + g] = 1.0
        for b, dev in enumerate(instance.storage):
            if dev.node == v:
                A_eq[row, dis_s.start + b] = 1.0
                A_eq[row, chg_s.start + b] = -1.0
        for e, edge in enumerate(instance.edges):
            if edge.v == v:
                A_eq[row, flow_s.start + e] = 1.0
            elif edge.u == v:
                A_eq[row, flow_s.start + e] = -1.0
        A_eq[row, sht_s.start + v] = 1.0
        A_eq[row, exc_s.start + v] = -1.0
        b_eq[row] = instance.demand[t, v] - (wind_mw if v == instance.wind_node else 0.0)
        row += 1
    # Battery post-state definition (coupling): rb - eta_c·chg + eta_d·dis = R_in.
    coupling = []
    for b, dev in enumerate(instance.storage):
        A_eq[row, rb_s.start + b] = 1.0
        A_eq[row, chg_s.start + b] = -dev.eta_charge
        A_eq[row, dis_s.start + b] = dev.eta_discharge
        b_eq[row] = resource_in[b]
        coupling.append(row)
        row += 1
    # Shortage post-state definition (coupling): rs - Σ sht = RS_in.
    A_eq[row, rs_i] = 1.0
    A_eq[row, sht_s] = -1.0
    b_eq[row] = resource_in[B]
    coupling.append(row)
    row += 1

    ub_rows, ub_rhs = [], []
    for e, edge in enumerate(instance.edges):
        for sign in (1.0, -1.0):
            r = np.zeros(n)
            r[flow_s.start + e] = sign
            r[ovf_s.start + e] = -1.0
            ub_rows.append(r)
            ub_rhs.append(edge.capacity_mw)
    for i in active:
        for cut in vfa.cuts(t, i):
            r = np.zeros(n)
            r[rb_s] = cut.beta[:B]
            r[rs_i] = cut.beta[B]
            r[nu[i]] = -1.0
            ub_rows.append(r)
            ub_rhs.append(float(cut.beta @ cut.anchor) - cut.alpha)
    if terminal:
        r = np.zeros(n)
        r[rs_i] = 1.0
        r[sp_i] = -1.0
        ub_rows.append(r)
        ub_rhs.append(instance.penalties.threshold)
    A_ub = np.vstack(ub_rows) if ub_rows else None
    b_ub = np.asarray(ub_rhs) if ub_rows else None

    c = np.zeros(n)
    for g, genr in enumerate(instance.generators):
        c[gen_s.start + g] = genr.cost_mwh
    for b, dev in enumerate(instance.storage):
        c[dis_s.start + b] += dev.cost_mwh
        c[chg_s.start + b] -= dev.cost_mwh
    c[sht_s] = instance.penalties.shortage
    c[exc_s] = instance.penalties.excess
    c[ovf_s] = instance.penalties.overflow
    for i, j in nu.items():
        c[j] = weights[i]
    if sp_i is not None:
        c[sp_i] = instance.penalties.terminal

    q_diag = None
    offset = 0.0
    if rho > 0.0 and not terminal:
        if incumbent is None or q_resource is None:
            raise ValueError("regularization needs an incumbent and resource weights")
        q_diag = np.zeros(n)
        for b in range(B):
            qb = rho * q_resource[b]
            q_diag[rb_s.start + b] = qb
            c[rb_s.start + b] -= qb * incumbent[b]
            offset += 0.5 * qb * incumbent[b] ** 2

    problem = ConvexSubproblem(
        c=c,
        bounds=tuple(bounds),
        A_eq=A_eq,
        b_eq=b_eq,
        A_ub=A_ub,
        b_ub=b_ub,
        q_diag=q_diag,
        obj_offset=offset,
        coupling_rows=tuple(coupling),
        name=f"stage{t}",
    )
    return StageProblem(problem=problem, index=index, instance=instance, t=t,
                        wind_mw=wind_mw, weights=weights)
