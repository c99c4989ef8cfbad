"""Extensive-form oracle: the deterministic-equivalent convex program over
the observation-history scenario tree.

Branch probabilities come from the exact hidden-state filter (knowledge
recursion per node), so the tree is the fully expanded information
structure of the fitted wind model. One decision vector lives at every
node; resource coupling links each node to its parent through shared
post-state variables, which makes nonanticipativity structural. Constraint
assembly here is deliberately independent of the stage-subproblem builder
so the two formulations cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import lil_matrix

from .grid import GridInstance, effective_gen_bounds, wind_injection
from .solver import SolverError

__all__ = [
    "OracleSizeError",
    "ScenarioTree",
    "OracleResult",
    "build_tree",
    "build_continuation_tree",
    "solve_tree",
    "oracle_value",
    "continuation_value",
    "evaluate_policy_on_tree",
    "point_mass_knowledge",
]

DEFAULT_LEAF_CAP = 100_000


class OracleSizeError(RuntimeError):
    """Scenario tree would exceed the configured size cap."""


@dataclass
class ScenarioTree:
    """Flat arrays over nodes, breadth-first; node 0 may be a real stage-0
    node (full tree) or absent (continuation forests start at depth t0+1)."""

    stage: np.ndarray          # stage index per node
    parent: np.ndarray         # -1 for roots
    error: np.ndarray          # observed wind error per node
    prob: np.ndarray           # unconditional probability of reaching the node
    knowledge: list            # filtered KnowledgeState per node
    horizon: int

    @property
    def n_nodes(self) -> int:
        return self.stage.size

    def children(self) -> list:
        out = [[] for _ in range(self.n_nodes)]
        for idx, par in enumerate(self.parent):
            if par >= 0:
                out[par].append(idx)
        return out

    def depth_probability_sums(self) -> dict:
        sums = {}
        for s in np.unique(self.stage):
            sums[int(s)] = float(self.prob[self.stage == s].sum())
        return sums

    def n_leaves(self) -> int:
        return int(np.sum(self.stage == self.horizon))


@dataclass
class OracleResult:
    value: float
    n_nodes: int
    n_leaves: int
    depth_probability_sums: dict


def _expand(model, frontier, stages_left: int, leaf_cap: int, tree_lists) -> None:
    """Breadth-first expansion; ``frontier`` holds (node_index, knowledge)."""
    stage_arr, parent_arr, error_arr, prob_arr, know_list = tree_lists
    points = model.grid.points
    for _ in range(stages_left):
        next_frontier = []
        for node_idx, knowledge in frontier:
            dist = model.predict_next_error(knowledge)
            for widx in np.nonzero(dist > 0.0)[0]:
                w = float(points[widx])
                child_know = model.knowledge_update(knowledge, w)
                stage_arr.append(stage_arr[node_idx] + 1)
                parent_arr.append(node_idx)
                error_arr.append(w)
                prob_arr.append(prob_arr[node_idx] * float(dist[widx]))
                know_list.append(child_know)
                next_frontier.append((len(stage_arr) - 1, child_know))
        if len(next_frontier) > leaf_cap:
            raise OracleSizeError(
                f"tree frontier reached {len(next_frontier)} nodes (cap {leaf_cap})"
            )
        frontier = next_frontier


def build_tree(instance: GridInstance, model, leaf_cap: int = DEFAULT_LEAF_CAP) -> ScenarioTree:
    """Full tree for stages 0..T rooted at the known initial error."""
    w0 = model.grid.snap(instance.initial_error_mw)
    k0 = model.init_knowledge(w0)
    stage_arr, parent_arr = [0], [-1]
    error_arr, prob_arr, know_list = [w0], [1.0], [k0]
    _expand(model, [(0, k0)], instance.horizon, leaf_cap,
            (stage_arr, parent_arr, error_arr, prob_arr, know_list))
    return ScenarioTree(
        stage=np.asarray(stage_arr),
        parent=np.asarray(parent_arr),
        error=np.asarray(error_arr),
        prob=np.asarray(prob_arr),
        knowledge=know_list,
        horizon=instance.horizon,
    )


def build_continuation_tree(
    instance: GridInstance, model, t0: int, knowledge, leaf_cap: int = DEFAULT_LEAF_CAP
) -> ScenarioTree:
    """Forest over stages t0+1..T given post-decision knowledge at t0.

    Roots are the possible next observations; their probabilities follow the
    knowledge-based predictive distribution.
    """
    if t0 >= instance.horizon:
        raise ValueError("continuation must start before the final stage")
    stage_arr, parent_arr, error_arr, prob_arr, know_list = [], [], [], [], []
    points = model.grid.points
    dist = model.predict_next_error(knowledge)
    frontier = []
    for widx in np.nonzero(dist > 0.0)[0]:
        w = float(points[widx])
        child_know = model.knowledge_update(knowledge, w)
        stage_arr.append(t0 + 1)
        parent_arr.append(-1)
        error_arr.append(w)
        prob_arr.append(float(dist[widx]))
        know_list.append(child_know)
        frontier.append((len(stage_arr) - 1, child_know))
    _expand(model, frontier, instance.horizon - t0 - 1, leaf_cap,
            (stage_arr, parent_arr, error_arr, prob_arr, know_list))
    return ScenarioTree(
        stage=np.asarray(stage_arr),
        parent=np.asarray(parent_arr),
        error=np.asarray(error_arr),
        prob=np.asarray(prob_arr),
        knowledge=know_list,
        horizon=instance.horizon,
    )


def point_mass_knowledge(model, crossing_state: int, error_bin: int):
    """Knowledge pinned to one information state: certain crossing state,
    elapsed time 1, last error = a representative grid point of the bin."""
    from .crossing import KnowledgeState

    sign = model.state_sign(crossing_state)
    mask = model.grid.sign_mask(sign)
    for widx in np.nonzero(mask)[0]:
        w = float(model.grid.points[widx])
        if model.error_bin(crossing_state, w) == error_bin:
            beliefs = np.zeros(model.n_crossing_states)
            beliefs[crossing_state] = 1.0
            return KnowledgeState(beliefs, 1, w)
    raise ValueError(
        f"no grid point falls in error bin {error_bin} of crossing state {crossing_state}"
    )


def solve_tree(
    instance: GridInstance,
    tree: ScenarioTree,
    root_resource: np.ndarray,
) -> tuple:
    """Assemble and solve the deterministic-equivalent LP over the tree.

    ``root_resource`` is the incoming [battery..., shortage] vector for
    every root node. Returns (optimal value, solution vector, per-node
    variable offsets).
    """
    G, B, E, N = instance.n_generators, instance.n_storage, instance.n_edges, instance.n_nodes
    n_nodes = tree.n_nodes
    per_node = G + 2 * B + E + N + N + N + E + B + 1
    offsets = np.zeros(n_nodes, dtype=int)
    total_vars = 0
    for idx in range(n_nodes):
        offsets[idx] = total_vars
        total_vars += per_node + (1 if tree.stage[idx] == instance.horizon else 0)

    # Per-node variable positions relative to its offset.
    o_gen, o_dis, o_chg = 0, G, G + B
    o_flow, o_ang = G + 2 * B, G + 2 * B + E
    o_sht = o_ang + N
    o_exc = o_sht + N
    o_ovf = o_exc + N
    o_rb = o_ovf + E
    o_rs = o_rb + B
    o_sp = o_rs + 1

    n_eq = n_nodes * (E + N + B + 1)
    n_ub = n_nodes * 2 * E + tree.n_leaves()
    A_eq = lil_matrix((n_eq, total_vars))
    b_eq = np.zeros(n_eq)
    A_ub = lil_matrix((n_ub, total_vars))
    b_ub = np.zeros(n_ub)
    c = np.zeros(total_vars)
    bounds = [(0.0, None)] * total_vars

    eq = 0
    ub = 0
    pen = instance.penalties
    for idx in range(n_nodes):
        base = offsets[idx]
        t = int(tree.stage[idx])
        par = int(tree.parent[idx])
        wind_mw = wind_injection(instance, t, float(tree.error[idx]))
        p_node = float(tree.prob[idx])

        for g in range(G):
            bounds[base + o_gen + g] = effective_gen_bounds(instance, t, g)
            c[base + o_gen + g] = p_node * instance.generators[g].cost_mwh
        for b, dev in enumerate(instance.storage):
            bounds[base + o_dis + b] = (0.0, dev.max_discharge_mw)
            bounds[base + o_chg + b] = (0.0, dev.max_charge_mw)
            c[base + o_dis + b] = p_node * dev.cost_mwh
            c[base + o_chg + b] = -p_node * dev.cost_mwh
            bounds[base + o_rb + b] = (dev.kappa_l, dev.kappa_u)
        for e in range(E):
            bounds[base + o_flow + e] = (None, None)
            c[base + o_ovf + e] = p_node * pen.overflow
        for v in range(N):
            if v == instance.reference_node:
                bounds[base + o_ang + v] = (0.0, 0.0)
            else:
                bounds[base + o_ang + v] = (-instance.angle_bound, instance.angle_bound)
            c[base + o_sht + v] = p_node * pen.shortage
            c[base + o_exc + v] = p_node * pen.excess

        for e, edge in enumerate(instance.edges):
            A_eq[eq, base + o_flow + e] = 1.0
            A_eq[eq, base + o_ang + edge.u] = -edge.susceptance
            A_eq[eq, base + o_ang + edge.v] = edge.susceptance
            eq += 1
        for v in range(N):
            for g, genr in enumerate(instance.generators):
                if genr.node == v:
                    A_eq[eq, base + o_gen + g] = 1.0
            for b, dev in enumerate(instance.storage):
                if dev.node == v:
                    A_eq[eq, base + o_dis + b] = 1.0
                    A_eq[eq, base + o_chg + b] = -1.0
            for e, edge in enumerate(instance.edges):
                if edge.v == v:
                    A_eq[eq, base + o_flow + e] = 1.0
                elif edge.u == v:
                    A_eq[eq, base + o_flow + e] = -1.0
            A_eq[eq, base + o_sht + v] = 1.0
            A_eq[eq, base + o_exc + v] = -1.0
            b_eq[eq] = instance.demand[t, v] - (wind_mw if v == instance.wind_node else 0.0)
            eq += 1
        for b, dev in enumerate(instance.storage):
            A_eq[eq, base + o_rb + b] = 1.0
            A_eq[eq, base + o_chg + b] = -dev.eta_charge
            A_eq[eq, base + o_dis + b] = dev.eta_discharge
            if par >= 0:
                A_eq[eq, offsets[par] + o_rb + b] = -1.0
            else:
                b_eq[eq] = root_resource[b]
            eq += 1
        A_eq[eq, base + o_rs] = 1.0
        for v in range(N):
            A_eq[eq, base + o_sht + v] = -1.0
        if par >= 0:
            A_eq[eq, offsets[par] + o_rs] = -1.0
        else:
            b_eq[eq] = root_resource[B]
        eq += 1

        for e, edge in enumerate(instance.edges):
            A_ub[ub, base + o_flow + e] = 1.0
            A_ub[ub, base + o_ovf + e] = -1.0
            b_ub[ub] = edge.capacity_mw
            ub += 1
            A_ub[ub, base + o_flow + e] = -1.0
            A_ub[ub, base + o_ovf + e] = -1.0
            b_ub[ub] = edge.capacity_mw
            ub += 1
        if t == instance.horizon:
            bounds[base + o_sp] = (0.0, None)
            c[base + o_sp] = p_node * pen.terminal
            A_ub[ub, base + o_rs] = 1.0
            A_ub[ub, base + o_sp] = -1.0
            b_ub[ub] = pen.threshold
            ub += 1

    res = linprog(
        c=c,
        A_ub=A_ub.tocsr(),
        b_ub=b_ub,
        A_eq=A_eq.tocsr(),
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
    )
    if res.status != 0:
        raise SolverError(f"extensive-form solve failed: {res.message}")
    return float(res.fun), np.asarray(res.x), offsets


def oracle_value(
    instance: GridInstance, model, leaf_cap: int = DEFAULT_LEAF_CAP
) -> tuple:
    """Exact optimum of the full-horizon problem; returns (result, tree)."""
    tree = build_tree(instance, model, leaf_cap)
    value, _, _ = solve_tree(instance, tree, instance.initial_resource().as_vector())
    return (
        OracleResult(
            value=value,
            n_nodes=tree.n_nodes,
            n_leaves=tree.n_leaves(),
            depth_probability_sums=tree.depth_probability_sums(),
        ),
        tree,
    )


def continuation_value(
    instance: GridInstance,
    model,
    t0: int,
    knowledge,
    post_resource: np.ndarray,
    leaf_cap: int = DEFAULT_LEAF_CAP,
) -> float:
    """Exact expected cost of stages t0+1..T from a post-decision state."""
    tree = build_continuation_tree(instance, model, t0, knowledge, leaf_cap)
    value, _, _ = solve_tree(instance, tree, np.asarray(post_resource, dtype=float))
    return value


def evaluate_policy_on_tree(vfa, instance: GridInstance, model, tree: ScenarioTree) -> float:
    """Expected cost of the frozen VFA policy evaluated exhaustively on the
    tree (probability-weighted stage costs along every path). Always an
    upper bound on the tree's optimal value."""
    from .stage import build_stage

    children = tree.children()
    roots = [idx for idx in range(tree.n_nodes) if tree.parent[idx] < 0]
    expected = 0.0
    # Depth-first with the policy's incoming resource carried along each path.
    stack = [(idx, instance.initial_resource().as_vector()) for idx in roots]
    while stack:
        idx, r_in = stack.pop()
        t = int(tree.stage[idx])
        weights = model.info_weights(tree.knowledge[idx])
        sp = build_stage(instance, t, r_in, float(tree.error[idx]),
                         weights=weights, vfa=vfa)
        sol = sp.solve()
        expected += float(tree.prob[idx]) * sp.realized_cost(sol.x)
        post = sp.post_resource(sol.x)
        for child in children[idx]:
            stack.append((child, post))
    return expected
