"""Stage subproblem solving: LPs and diagonal-quadratic QPs with duals.

Problems are expressed in a solver-neutral dense form with tagged coupling
rows (one equality per resource dimension). ``solve`` routes pure LPs
through HiGHS and regularized problems through a convex QP solver, and
returns the dual multipliers on the coupling rows in the
value-function-gradient convention: dual = d(optimal value)/d(rhs).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

__all__ = ["ConvexSubproblem", "SubproblemSolution", "SolverError", "solve", "write_mps"]

PRIMAL_TOL = 1e-7


class SolverError(RuntimeError):
    """Solve failed: infeasible, unbounded, or iteration/tolerance trouble."""


@dataclass(frozen=True)
class ConvexSubproblem:
    """min cᵀx + 0.5 xᵀdiag(q)x + offset  s.t.  A_eq x = b_eq, A_ub x ≤ b_ub, lo ≤ x ≤ hi.

    ``coupling_rows`` indexes the equality rows whose right-hand sides carry
    the incoming resource state; their duals become cut subgradients.
    """

    c: np.ndarray
    bounds: tuple                  # per-variable (lo, hi); None = unbounded side
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    q_diag: np.ndarray | None = None
    obj_offset: float = 0.0
    coupling_rows: tuple = ()
    name: str = ""

    def __post_init__(self) -> None:
        if self.q_diag is not None and np.any(np.asarray(self.q_diag) < 0):
            raise ValueError("quadratic diagonal must be nonnegative")
        n_rows = np.asarray(self.b_eq).size
        rows = tuple(self.coupling_rows)
        if len(set(rows)) != len(rows) or any(not 0 <= r < n_rows for r in rows):
            raise ValueError("coupling rows must be distinct equality-row indices")

    @property
    def n_vars(self) -> int:
        return np.asarray(self.c).size

    def is_quadratic(self) -> bool:
        return self.q_diag is not None and np.any(np.asarray(self.q_diag) > 0)


@dataclass(frozen=True)
class SubproblemSolution:
    x: np.ndarray
    objective: float
    coupling_duals: np.ndarray
    status: str = "optimal"


def _check_residuals(p: ConvexSubproblem, x: np.ndarray) -> float:
    res = 0.0
    if np.asarray(p.b_eq).size:
        res = max(res, float(np.max(np.abs(p.A_eq @ x - p.b_eq))))
    if p.A_ub is not None and np.asarray(p.b_ub).size:
        res = max(res, float(np.max(p.A_ub @ x - p.b_ub, initial=0.0)))
    for xi, (lo, hi) in zip(x, p.bounds):
        if lo is not None:
            res = max(res, lo - xi)
        if hi is not None:
            res = max(res, xi - hi)
    return res


def _solve_lp(p: ConvexSubproblem) -> SubproblemSolution:
    res = linprog(
        c=p.c,
        A_ub=p.A_ub,
        b_ub=p.b_ub,
        A_eq=p.A_eq,
        b_eq=p.b_eq,
        bounds=list(p.bounds),
        method="highs",
    )
    if res.status != 0:
        raise SolverError(f"LP '{p.name}' failed: {res.message}")
    x = np.asarray(res.x)
    violation = _check_residuals(p, x)
    if violation > PRIMAL_TOL:
        raise SolverError(f"LP '{p.name}' primal residual {violation:.2e} exceeds tolerance")
    duals = np.asarray(res.eqlin.marginals)[list(p.coupling_rows)] if p.coupling_rows else np.empty(0)
    return SubproblemSolution(x=x, objective=float(res.fun) + p.obj_offset, coupling_duals=duals)


def _solve_qp(p: ConvexSubproblem) -> SubproblemSolution:
    from cvxopt import matrix, solvers

    n = p.n_vars
    P = matrix(np.diag(np.asarray(p.q_diag, dtype=float)))
    q = matrix(np.asarray(p.c, dtype=float))
    g_rows, h_vals = [], []
    if p.A_ub is not None and np.asarray(p.b_ub).size:
        g_rows.append(np.asarray(p.A_ub, dtype=float))
        h_vals.append(np.asarray(p.b_ub, dtype=float))
    # Fixed bounds (lo == hi) must enter the equality system: as inequality
    # pairs they leave the cone without interior and the barrier stalls.
    eq_extra_rows, eq_extra_vals = [], []
    eye = np.eye(n)
    for i, (lo, hi) in enumerate(p.bounds):
        if lo is not None and hi is not None and lo == hi:
            eq_extra_rows.append(eye[i:i + 1])
            eq_extra_vals.append(np.array([lo]))
            continue
        if hi is not None:
            g_rows.append(eye[i:i + 1])
            h_vals.append(np.array([hi]))
        if lo is not None:
            g_rows.append(-eye[i:i + 1])
            h_vals.append(np.array([-lo]))
    G = matrix(np.vstack(g_rows)) if g_rows else matrix(np.zeros((0, n)))
    h = matrix(np.concatenate(h_vals)) if h_vals else matrix(np.zeros(0))
    a_eq = np.asarray(p.A_eq, dtype=float)
    b_eq = np.asarray(p.b_eq, dtype=float)
    if eq_extra_rows:
        a_eq = np.vstack([a_eq] + eq_extra_rows)
        b_eq = np.concatenate([b_eq, np.concatenate(eq_extra_vals)])
    A = matrix(a_eq)
    b = matrix(b_eq)
    opts = {"show_progress": False, "abstol": 1e-8, "reltol": 1e-8, "feastol": 1e-8}
    sol = solvers.qp(P, q, G, h, A, b, options=opts)
    if sol["status"] != "optimal":
        # The barrier sometimes stalls just short of the target tolerance;
        # the iterate is still usable if it is feasible with a closed gap.
        gap = sol.get("relative gap")
        if sol["x"] is None or gap is None or gap > 1e-6:
            raise SolverError(f"QP '{p.name}' failed: status {sol['status']}")
    x = np.asarray(sol["x"]).ravel()
    violation = _check_residuals(p, x)
    if violation > 1e-6:
        raise SolverError(f"QP '{p.name}' primal residual {violation:.2e} exceeds tolerance")
    # cvxopt's equality multipliers y satisfy dv/db = -y.
    y = np.asarray(sol["y"]).ravel()
    duals = -y[list(p.coupling_rows)] if p.coupling_rows else np.empty(0)
    objective = float(sol["primal objective"]) + p.obj_offset
    return SubproblemSolution(x=x, objective=objective, coupling_duals=duals)


def solve(p: ConvexSubproblem) -> SubproblemSolution:
    """Solve one stage subproblem; LP unless a positive quadratic term is set."""
    if p.is_quadratic():
        return _solve_qp(p)
    return _solve_lp(p)


def write_mps(p: ConvexSubproblem, path) -> None:
    """Dump the linear part of a subproblem in fixed MPS format.

    Debug aid for cross-checking against external solvers; the quadratic
    term (if any) is omitted, matching plain MPS.
    """
    n = p.n_vars
    lines = [f"NAME          {p.name or 'SUBPROBLEM'}", "ROWS", " N  COST"]
    for i in range(np.asarray(p.b_eq).size):
        lines.append(f" E  EQ{i}")
    n_ub = 0 if p.A_ub is None else np.asarray(p.b_ub).size
    for i in range(n_ub):
        lines.append(f" L  UB{i}")
    lines.append("COLUMNS")
    for j in range(n):
        if p.c[j] != 0.0:
            lines.append(f"    X{j}  COST  {p.c[j]:.12g}")
        for i in range(np.asarray(p.b_eq).size):
            if p.A_eq[i, j] != 0.0:
                lines.append(f"    X{j}  EQ{i}  {p.A_eq[i, j]:.12g}")
        for i in range(n_ub):
            if p.A_ub[i, j] != 0.0:
                lines.append(f"    X{j}  UB{i}  {p.A_ub[i, j]:.12g}")
    lines.append("RHS")
    for i in range(np.asarray(p.b_eq).size):
        if p.b_eq[i] != 0.0:
            lines.append(f"    RHS  EQ{i}  {p.b_eq[i]:.12g}")
    for i in range(n_ub):
        if p.b_ub[i] != 0.0:
            lines.append(f"    RHS  UB{i}  {p.b_ub[i]:.12g}")
    lines.append("BOUNDS")
    for j, (lo, hi) in enumerate(p.bounds):
        if lo is None:
            lines.append(f" MI BND  X{j}")
        elif lo != 0.0:
            lines.append(f" LO BND  X{j}  {lo:.12g}")
        if hi is not None:
            lines.append(f" UP BND  X{j}  {hi:.12g}")
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
