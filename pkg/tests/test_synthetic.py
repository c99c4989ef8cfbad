"""Synthetic training-series generators."""

import numpy as np
import pytest

from gridsddp.synthetic import gen_persistence, gen_semi_markov, generate

from oracles import run_lengths


def test_semi_markov_respects_duration_supports():
    series = gen_semi_markov(
        4000, seed=1, duration_supports=((2, 3), (5, 6), (9, 11)), scale=4.0
    )
    assert series.errors.size == 4000
    below, above = run_lengths(series.errors)
    allowed = {2, 3, 5, 6, 9, 10, 11}
    assert set(above) <= allowed
    assert set(below) <= allowed
    assert len(below) > 50 and len(above) > 50


def test_semi_markov_asymmetric_sides_differ():
    series = gen_semi_markov(
        6000,
        seed=2,
        duration_supports=((2, 3), (5, 6), (9, 11)),
        scale=4.0,
        duration_supports_below=((3, 4), (8, 10), (14, 18)),
        scale_below=9.0,
    )
    below, above = run_lengths(series.errors)
    # longer, deeper excursions below the forecast
    assert np.mean(below) > np.mean(above)
    neg = series.errors[series.errors <= 0.0]
    pos = series.errors[series.errors > 0.0]
    assert np.abs(neg).mean() > np.abs(pos).mean()


def test_semi_markov_is_seed_deterministic():
    a = gen_semi_markov(300, seed=7)
    b = gen_semi_markov(300, seed=7)
    c = gen_semi_markov(300, seed=8)
    np.testing.assert_array_equal(a.errors, b.errors)
    assert not np.array_equal(a.errors, c.errors)


def test_persistence_mode_autocorrelates():
    series = gen_persistence(5000, seed=0)
    e = series.errors
    rho = np.corrcoef(e[:-1], e[1:])[0, 1]
    assert rho > 0.2  # clearly autocorrelated, unlike white noise


def test_generate_dispatch():
    s1 = generate("semi-markov", 200, 0)
    s2 = generate("semi_markov", 200, 0)
    np.testing.assert_array_equal(s1.errors, s2.errors)
    assert generate("persistence", 200, 0).errors.size == 200
    with pytest.raises(ValueError):
        generate("unknown", 100, 0)
