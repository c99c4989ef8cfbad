"""LP/QP subproblem solver against a brute-force vertex enumerator."""

import numpy as np
import pytest

from gridsddp.solver import ConvexSubproblem, SolverError, solve, write_mps

from oracles import vertex_lp_solve


def _random_lp(seed, n=5, n_eq=2, n_ub=3):
    """A bounded, feasible random LP (RHS built around an interior point)."""
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    bounds = tuple((0.0, float(rng.uniform(2.0, 6.0))) for _ in range(n))
    x0 = np.array([0.5 * (lo + hi) for lo, hi in bounds])
    A_eq = rng.normal(size=(n_eq, n))
    b_eq = A_eq @ x0
    A_ub = rng.normal(size=(n_ub, n))
    b_ub = A_ub @ x0 + rng.uniform(0.5, 2.0, size=n_ub)
    return ConvexSubproblem(
        c=c, bounds=bounds, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub,
        coupling_rows=tuple(range(n_eq)), name=f"rand-{seed}",
    )


@pytest.mark.parametrize("seed", range(8))
def test_lp_matches_vertex_enumeration(seed):
    p = _random_lp(seed)
    sol = solve(p)
    _, ref = vertex_lp_solve(p.c, p.bounds, p.A_eq, p.b_eq, p.A_ub, p.b_ub)
    assert sol.objective == pytest.approx(ref, rel=1e-7, abs=1e-7)


def test_lp_duals_match_vertex_finite_differences():
    p = _random_lp(4)
    sol = solve(p)
    h = 1e-5
    for row, dual in zip(p.coupling_rows, sol.coupling_duals):
        bp, bm = p.b_eq.copy(), p.b_eq.copy()
        bp[row] += h
        bm[row] -= h
        _, up = vertex_lp_solve(p.c, p.bounds, p.A_eq, bp, p.A_ub, p.b_ub)
        _, dn = vertex_lp_solve(p.c, p.bounds, p.A_eq, bm, p.A_ub, p.b_ub)
        fd = (up - dn) / (2 * h)
        assert dual == pytest.approx(fd, rel=1e-4, abs=1e-6)


def test_lp_objective_includes_offset():
    p = ConvexSubproblem(
        c=np.array([1.0]), bounds=((0.0, 2.0),),
        A_eq=np.array([[1.0]]), b_eq=np.array([1.5]),
        obj_offset=7.0, coupling_rows=(0,),
    )
    sol = solve(p)
    assert sol.objective == pytest.approx(8.5)
    assert sol.x[0] == pytest.approx(1.5)


def test_infeasible_lp_raises():
    p = ConvexSubproblem(
        c=np.array([1.0, 1.0]), bounds=((0.0, 1.0), (0.0, 1.0)),
        A_eq=np.array([[1.0, 1.0]]), b_eq=np.array([5.0]),
    )
    with pytest.raises(SolverError):
        solve(p)


def test_qp_reaches_unconstrained_minimum_inside_box():
    # min 0.5*2*x^2 - 2x on [0, 10]: x* = 1, value -1
    p = ConvexSubproblem(
        c=np.array([-2.0]), bounds=((0.0, 10.0),),
        A_eq=np.zeros((0, 1)), b_eq=np.zeros(0),
        q_diag=np.array([2.0]), obj_offset=3.0,
    )
    assert p.is_quadratic()
    sol = solve(p)
    assert sol.x[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.objective == pytest.approx(-1.0 + 3.0, abs=1e-6)


def test_qp_with_coupling_matches_hand_solution():
    # min 0.5*(x1^2 + x2^2) s.t. x1 + x2 = 1 -> x = (0.5, 0.5), dual = -0.5
    # (dual sign convention: derivative of the optimum w.r.t. the RHS)
    p = ConvexSubproblem(
        c=np.zeros(2), bounds=((-5.0, 5.0), (-5.0, 5.0)),
        A_eq=np.array([[1.0, 1.0]]), b_eq=np.array([1.0]),
        q_diag=np.ones(2), coupling_rows=(0,),
    )
    sol = solve(p)
    np.testing.assert_allclose(sol.x, [0.5, 0.5], atol=1e-6)
    assert sol.objective == pytest.approx(0.25, abs=1e-8)
    assert sol.coupling_duals[0] == pytest.approx(0.5, abs=1e-5)


def test_qp_honors_pinned_bounds():
    """lo == hi variables must be held exactly despite the interior-point
    solver's dislike of empty-interior inequality boxes."""
    p = ConvexSubproblem(
        c=np.array([0.0, -1.0]), bounds=((0.3, 0.3), (0.0, 1.0)),
        A_eq=np.zeros((0, 2)), b_eq=np.zeros(0),
        q_diag=np.array([1.0, 1.0]),
    )
    sol = solve(p)
    assert sol.x[0] == pytest.approx(0.3, abs=1e-7)
    # the free coordinate's optimum sits on its bound; interior-point gets
    # within its own tolerance of it, not machine precision
    assert sol.x[1] == pytest.approx(1.0, abs=1e-4)


def test_negative_curvature_rejected():
    with pytest.raises(ValueError):
        ConvexSubproblem(
            c=np.zeros(1), bounds=((0.0, 1.0),),
            A_eq=np.zeros((0, 1)), b_eq=np.zeros(0),
            q_diag=np.array([-1.0]),
        )


def test_coupling_rows_must_reference_equality_rows():
    with pytest.raises(ValueError):
        ConvexSubproblem(
            c=np.zeros(1), bounds=((0.0, 1.0),),
            A_eq=np.array([[1.0]]), b_eq=np.array([0.5]),
            coupling_rows=(3,),
        )


def test_write_mps_smoke(tmp_path):
    p = _random_lp(0)
    path = tmp_path / "prob.mps"
    write_mps(p, path)
    text = path.read_text()
    assert "ROWS" in text and "COLUMNS" in text
