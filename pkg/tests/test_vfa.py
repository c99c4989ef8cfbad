"""Cut collections, the regularization schedule, and the resource metric."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridsddp.vfa import Cut, RegularizationSchedule, ValueFunctionApprox


def test_cut_is_affine_in_the_resource():
    cut = Cut(alpha=5.0, beta=np.array([1.0, -2.0]), anchor=np.array([1.0, 1.0]),
              iteration=0)
    assert cut.value(np.array([1.0, 1.0])) == pytest.approx(5.0)
    assert cut.value(np.array([2.0, 0.0])) == pytest.approx(5.0 + 1.0 + 2.0)


def test_vfa_evaluates_max_of_cuts():
    vfa = ValueFunctionApprox(horizon=3, n_info_states=2)
    assert vfa.evaluate(1, 0, np.zeros(2)) == -np.inf
    vfa.add_cut(1, 0, Cut(1.0, np.array([1.0, 0.0]), np.zeros(2), 0))
    vfa.add_cut(1, 0, Cut(2.0, np.array([-1.0, 0.0]), np.zeros(2), 1))
    r = np.array([3.0, 0.0])
    assert vfa.evaluate(1, 0, r) == pytest.approx(4.0)
    r = np.array([-3.0, 0.0])
    assert vfa.evaluate(1, 0, r) == pytest.approx(5.0)
    # other (t, i) slots stay empty
    assert vfa.n_cuts() == 2
    assert vfa.n_cuts(1) == 2
    assert len(vfa.cuts(2, 0)) == 0


def test_adding_cuts_never_lowers_the_approximation():
    rng = np.random.default_rng(0)
    vfa = ValueFunctionApprox(horizon=2, n_info_states=1)
    points = rng.normal(size=(20, 3))
    prev = np.full(20, -np.inf)
    for it in range(10):
        cut = Cut(rng.normal(), rng.normal(size=3), rng.normal(size=3), it)
        vfa.add_cut(0, 0, cut)
        vals = np.array([vfa.evaluate(0, 0, p) for p in points])
        assert np.all(vals >= prev)
        prev = vals


def test_vfa_round_trips_through_json(tmp_path):
    vfa = ValueFunctionApprox(horizon=2, n_info_states=2)
    vfa.add_cut(0, 1, Cut(3.5, np.array([0.25, -1.0]), np.array([2.0, 0.0]), 4))
    path = tmp_path / "vfa.json"
    vfa.save(path)
    back = ValueFunctionApprox.load(path)
    assert back.horizon == 2 and back.n_info_states == 2
    assert back.n_cuts() == 1
    cut = back.cuts(0, 1)[0]
    assert cut.alpha == 3.5 and cut.iteration == 4
    np.testing.assert_allclose(cut.beta, [0.25, -1.0])
    r = np.array([1.0, 2.0])
    assert back.evaluate(0, 1, r) == pytest.approx(vfa.evaluate(0, 1, r))


def test_regularization_schedule_decays_geometrically():
    sched = RegularizationSchedule(rho0=2.0, decay=0.5)
    assert [sched.rho(k) for k in range(4)] == [2.0, 1.0, 0.5, 0.25]
    with pytest.raises(ValueError):
        RegularizationSchedule(rho0=-1.0, decay=0.5)
    with pytest.raises(ValueError):
        RegularizationSchedule(rho0=1.0, decay=1.5)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.5, 100.0), min_size=1, max_size=5))
def test_resource_metric_ignores_the_shortage_dimension(spans):
    q = RegularizationSchedule.q_diag(np.asarray(spans))
    assert q.shape == (len(spans) + 1,)
    assert q[-1] == 0.0
    np.testing.assert_allclose(q[:-1], 1.0 / np.asarray(spans) ** 2)
