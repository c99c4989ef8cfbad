"""Backward-pass samplers: draw mechanics, likelihood-ratio weights, and
the adaptive mixture updates."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridsddp.sampling import (
    AggregationScheme,
    ImportanceSampler,
    NoSampler,
    SamplerDraw,
    StandardSampler,
    build_basis,
    cut_weights,
    make_sampler,
    observe_vhat,
    stepsize,
    update_weights,
)
from gridsddp.series import OutcomeGrid

GRID = OutcomeGrid(np.linspace(-4.0, 4.0, 9))


def _nominal(seed=0, n_states=3, zeros=True):
    rng = np.random.default_rng(seed)
    nom = rng.uniform(0.1, 1.0, size=(n_states, GRID.size))
    if zeros:
        nom[:, 0] = 0.0  # shared hole in the support
        nom[1, -1] = 0.0
    return nom / nom.sum(axis=1, keepdims=True)


def test_aggregation_bins_partition_and_clamp():
    agg = AggregationScheme(0.0, 10.0, bins=5)
    assert agg.bin_of(0.0) == 0
    assert agg.bin_of(1.99) == 0
    assert agg.bin_of(2.0) == 1
    assert agg.bin_of(9.99) == 4
    assert agg.bin_of(10.0) == 4    # top edge clamps in
    assert agg.bin_of(-3.0) == 0    # below range clamps in
    assert agg.bin_of(50.0) == 4
    with pytest.raises(ValueError):
        AggregationScheme(1.0, 1.0, bins=5)


def test_no_sampler_returns_exact_full_support():
    nom = _nominal()
    draw = NoSampler().draw(0, 0, nom, np.random.default_rng(0))
    assert draw.counts is None
    qbar = nom.mean(axis=0)
    np.testing.assert_array_equal(draw.outcomes, np.nonzero(qbar > 0.0)[0])
    # index 0 has zero mass in every state and must be excluded
    assert 0 not in draw.outcomes


def test_standard_sampler_draws_m_per_state():
    nom = _nominal()
    sampler = StandardSampler(m_per_state=4)
    draw = sampler.draw(0, 0, nom, np.random.default_rng(1))
    assert draw.total == 4 * nom.shape[0]
    assert draw.counts.sum() == draw.total
    assert np.all(nom.mean(axis=0)[draw.outcomes] > 0.0)
    with pytest.raises(ValueError):
        StandardSampler(0)


def test_cut_weights_exact_mode_recovers_the_conditionals():
    nom = _nominal()
    draw = NoSampler().draw(0, 0, nom, np.random.default_rng(0))
    weights = cut_weights(nom, draw)
    np.testing.assert_allclose(weights, nom[:, draw.outcomes], atol=1e-15)


def test_cut_weights_sampled_mode_is_a_convex_combination():
    nom = _nominal()
    draw = StandardSampler(3).draw(0, 0, nom, np.random.default_rng(7))
    weights = cut_weights(nom, draw)
    assert np.all(weights >= 0.0)
    sums = weights.sum(axis=1)
    for i, s in enumerate(sums):
        if np.any(nom[i, draw.outcomes] > 0.0):
            assert s == pytest.approx(1.0, abs=1e-12)
        else:
            assert s == 0.0


def test_cut_weights_zero_support_row_stays_zero():
    nom = np.array([[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.5]])
    draw = SamplerDraw(
        outcomes=np.array([2, 3]), counts=np.array([1, 1]),
        qbar=np.array([0.25, 0.25, 0.25, 0.25]), total=2,
    )
    weights = cut_weights(nom, draw)
    np.testing.assert_array_equal(weights[0], [0.0, 0.0])
    assert weights[1].sum() == pytest.approx(1.0)


def test_observe_vhat_clamps_at_zero():
    assert observe_vhat(10.0, 4.0) == 6.0
    assert observe_vhat(3.0, 8.0) == 0.0


def test_stepsize_decays_like_a_over_a_plus_n():
    assert stepsize(10.0, 0) == 1.0
    assert stepsize(10.0, 10) == 0.5
    assert stepsize(10.0, 90) == 0.1
    with pytest.raises(ValueError):
        stepsize(0.0, 1)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=0, max_value=10_000),
    st.floats(min_value=1e-3, max_value=1e4),
)
def test_stepsize_lies_in_unit_interval_and_decreases(n, a):
    g = stepsize(a, n)
    assert 0.0 < g <= 1.0
    assert stepsize(a, n + 1) < g


def test_update_weights_stays_nonnegative_and_fits_targets():
    rng = np.random.default_rng(3)
    phi = rng.uniform(0.01, 1.0, size=(30, 4))
    theta = np.zeros(4)
    vhats = rng.uniform(0.0, 5.0, size=30)
    p = rng.uniform(0.01, 1.0, size=30)
    q = rng.uniform(0.01, 1.0, size=30)
    resid0 = np.linalg.norm((phi @ theta - vhats * p) / q)
    for k in range(200):
        theta = update_weights(theta, phi, vhats, p, q, stepsize(10.0, k) * 0.05)
        assert np.all(theta >= 0.0)
    resid = np.linalg.norm((phi @ theta - vhats * p) / q)
    assert resid < resid0  # the projected steps actually reduce the residual


def test_update_weights_zero_step_is_identity():
    theta = np.array([1.0, 2.0])
    out = update_weights(theta, np.ones((3, 2)), np.ones(3), np.ones(3), np.ones(3), 0.0)
    np.testing.assert_array_equal(out, theta)


def test_build_basis_shares_the_nominal_support():
    nom = _nominal()[1]
    basis = build_basis(GRID, nom, J=6)
    assert basis.shape == (6, GRID.size)
    np.testing.assert_allclose(basis.sum(axis=1), np.ones(6), atol=1e-12)
    support = nom > 0.0
    assert np.all(basis[:, ~support] == 0.0)
    assert np.all(basis[:, support] > 0.0)
    np.testing.assert_allclose(basis[0], nom)
    with pytest.raises(ValueError):
        build_basis(GRID, nom, J=1)
    with pytest.raises(ValueError):
        build_basis(GRID, nom, J=7)


@pytest.fixture
def importance():
    nom = _nominal()
    agg = AggregationScheme(0.0, 20.0, bins=4)
    return ImportanceSampler(GRID, nom, agg, J=4, a=10.0, m_per_state=2), nom


def test_importance_sampler_starts_from_the_basis_mean(importance):
    sampler, nom = importance
    for i in range(nom.shape[0]):
        cond = sampler.conditional_dist(0, 0, i)
        np.testing.assert_allclose(cond, sampler.basis[i].mean(axis=0), atol=1e-12)
        assert abs(cond.sum() - 1.0) < 1e-12
        assert np.all(cond[nom[i] == 0.0] == 0.0)


def test_importance_sampler_update_moves_mass_toward_observed_impact(importance):
    sampler, nom = importance
    rng = np.random.default_rng(5)
    target = GRID.size - 2  # pretend this outcome always hurts downstream
    for _ in range(30):
        draw = sampler.draw(2, 1, nom, rng)
        vhat = np.where(draw.outcomes == target, 50.0, 0.0)
        sampler.update(2, 1, draw, vhat)
    cond = sampler.conditional_dist(2, 1, 0)
    base = sampler.basis[0].mean(axis=0)
    assert cond[target] > base[target]
    # untouched (t, r) cells keep the uniform mixture
    np.testing.assert_allclose(
        sampler.conditional_dist(0, 0, 0), base, atol=1e-12
    )


def test_importance_sampler_visit_counting_is_per_cell(importance):
    sampler, nom = importance
    rng = np.random.default_rng(6)
    draw = sampler.draw(1, 2, nom, rng)
    sampler.update(1, 2, draw, np.zeros(draw.outcomes.size))
    # one update call advances the (t, r) visit count by one per state
    assert sampler.visits[(1, 2)] == nom.shape[0]
    assert (0, 0) not in sampler.visits


def test_make_sampler_dispatch():
    nom = _nominal()
    agg = AggregationScheme(0.0, 10.0)
    assert isinstance(make_sampler("none", GRID, nom, agg), NoSampler)
    assert isinstance(make_sampler("standard", GRID, nom, agg), StandardSampler)
    assert isinstance(make_sampler("importance", GRID, nom, agg), ImportanceSampler)
    with pytest.raises(ValueError):
        make_sampler("other", GRID, nom, agg)
