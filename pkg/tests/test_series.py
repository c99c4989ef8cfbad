"""Outcome grid and training-series plumbing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridsddp.series import (
    OutcomeGrid,
    ForecastErrorSeries,
    quantile_grid,
    read_series_csv,
    write_series_csv,
)

GRID = OutcomeGrid(np.array([-4.0, -2.0, -1.0, 1.0, 2.0, 5.0]))


def test_grid_points_sorted_unique_required():
    with pytest.raises(ValueError):
        OutcomeGrid(np.array([1.0, 1.0, 2.0]))
    with pytest.raises(ValueError):
        OutcomeGrid(np.array([2.0, 1.0]))


def test_nearest_index_midpoint_ties_go_down():
    # midpoint of (-2, -1) is -1.5; ties resolve to the lower point
    assert GRID.nearest_index(np.array([-1.5]))[0] == 1
    assert GRID.nearest_index(np.array([-1.49]))[0] == 2
    assert GRID.nearest_index(np.array([100.0]))[0] == GRID.size - 1
    assert GRID.nearest_index(np.array([-100.0]))[0] == 0


def test_snap_and_index_of_round_trip():
    for v in (-3.9, 0.2, 4.0):
        snapped = GRID.snap(v)
        assert snapped in GRID.points
        assert GRID.points[GRID.index_of(snapped)] == snapped
    with pytest.raises(ValueError):
        GRID.index_of(0.5)  # not a grid point


def test_sign_mask_puts_zero_below():
    g = OutcomeGrid(np.array([-1.0, 0.0, 1.0]))
    below = g.sign_mask(0)
    above = g.sign_mask(1)
    assert below.tolist() == [True, True, False]
    assert above.tolist() == [False, False, True]


def test_project_is_a_probability_vector():
    rng = np.random.default_rng(3)
    samples = rng.normal(0.0, 2.0, size=200)
    dist = GRID.project(samples)
    assert dist.shape == (GRID.size,)
    assert dist.min() >= 0.0
    assert abs(dist.sum() - 1.0) < 1e-12


def test_project_with_mask_keeps_mass_on_allowed_points():
    """Sign-restricted projection must not leak mass across zero, even for
    samples whose nearest grid point overall has the wrong sign."""
    mask = GRID.points <= 0.0
    samples = np.array([-0.01, 0.4, 3.0])  # all nearest to positive points
    dist = GRID.project(samples, mask)
    assert dist[~mask].sum() == 0.0
    assert dist[2] == 1.0  # everything snaps to -1, the closest allowed point


def test_project_empty_mask_rejected():
    with pytest.raises(ValueError):
        GRID.project(np.array([1.0]), np.zeros(GRID.size, dtype=bool))


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-100.0, 100.0), min_size=8, max_size=200),
    st.integers(min_value=2, max_value=25),
)
def test_quantile_grid_is_sorted_unique_and_in_range(values, n_points):
    errors = np.asarray(values)
    grid = quantile_grid(errors, n_points)
    pts = grid.points
    assert pts.size >= 1
    assert pts.size <= n_points
    assert np.all(np.diff(pts) > 0)
    assert pts.min() >= errors.min() - 1e-12
    assert pts.max() <= errors.max() + 1e-12


def test_quantile_grid_covers_both_signs_when_present():
    errors = np.concatenate([np.full(90, -3.0) + np.arange(90) * 0.01, [2.0, 2.5]])
    grid = quantile_grid(errors, 10)
    assert (grid.points <= 0.0).any()
    assert (grid.points > 0.0).any()


def test_series_csv_round_trip(tmp_path):
    series = ForecastErrorSeries(
        errors=np.array([0.5, -1.25, 2.0]),
        forecasts=np.array([10.0, 11.0, 12.5]),
        step_minutes=5,
    )
    path = tmp_path / "series.csv"
    write_series_csv(path, series)
    back = read_series_csv(path)
    np.testing.assert_allclose(back.errors, series.errors)
    np.testing.assert_allclose(back.forecasts, series.forecasts)
