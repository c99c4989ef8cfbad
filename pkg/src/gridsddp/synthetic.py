"""Synthetic forecast-error series generators for validation studies.

Two generators: a persistence chain whose sign flips with tunable
probability, and a planted semi-Markov process with explicit duration
supports per regime -- the second is the ground truth a crossing-state fit
should recover.
"""

from __future__ import annotations

import numpy as np

from .series import ForecastErrorSeries

__all__ = ["gen_persistence", "gen_semi_markov", "generate"]


def gen_persistence(
    length: int,
    seed,
    persistence: float = 0.6,
    scale: float = 3.0,
    step_minutes: int = 5,
) -> ForecastErrorSeries:
    """Markov sign chain: keep the current sign w.p. 0.5 + 0.5*persistence.

    Error magnitudes are folded normals with the chosen sign. persistence=0
    gives independent fair-coin signs (geometric crossings, mean 2).
    """
    if not 0.0 <= persistence <= 1.0:
        raise ValueError("persistence must lie in [0, 1]")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    keep = 0.5 + 0.5 * persistence
    signs = np.empty(length, dtype=int)
    signs[0] = rng.integers(2)
    stay = rng.random(length - 1) < keep
    for t in range(1, length):
        signs[t] = signs[t - 1] if stay[t - 1] else 1 - signs[t - 1]
    mags = np.abs(rng.normal(0.0, scale, size=length)) + 1e-3
    errors = np.where(signs == 1, mags, -mags)
    forecasts = np.zeros(length)
    return ForecastErrorSeries(errors=errors, forecasts=forecasts, step_minutes=step_minutes)


def gen_semi_markov(
    length: int,
    seed,
    duration_supports=((1, 2), (4, 5), (8, 9)),
    scale: float = 3.0,
    step_minutes: int = 5,
    duration_supports_below=None,
    scale_below: float | None = None,
) -> ForecastErrorSeries:
    """Planted semi-Markov sign process with explicit per-regime durations.

    Each run picks a regime (cycling through ``duration_supports`` with a
    uniform random draw), then a duration uniformly from that regime's
    support. Adjacent two-point supports keep the duration law exactly
    representable by quantile-binned crossing fits. The below-forecast side
    can use its own supports and magnitude scale (wind droughts are longer
    and deeper than over-performance runs); both default to the shared
    values.
    """
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    above = [np.asarray(s, dtype=int) for s in duration_supports]
    below = [np.asarray(s, dtype=int) for s in (duration_supports_below or duration_supports)]
    scales = {1: scale, 0: scale if scale_below is None else scale_below}
    errors = []
    sign = int(rng.integers(2))
    while len(errors) < length:
        supports = above if sign == 1 else below
        regime = int(rng.integers(len(supports)))
        dur = int(rng.choice(supports[regime]))
        mags = np.abs(rng.normal(0.0, scales[sign], size=dur)) + 1e-3
        run = mags if sign == 1 else -mags
        errors.extend(run.tolist())
        sign = 1 - sign
    errors = np.asarray(errors[:length])
    forecasts = np.zeros(length)
    return ForecastErrorSeries(errors=errors, forecasts=forecasts, step_minutes=step_minutes)


def generate(mode: str, length: int, seed, **kwargs) -> ForecastErrorSeries:
    """Dispatch on generator mode: 'persistence' or 'semi-markov'."""
    mode = mode.replace("-", "_")
    if mode == "persistence":
        return gen_persistence(length, seed, **kwargs)
    if mode == "semi_markov":
        return gen_semi_markov(length, seed, **kwargs)
    raise ValueError(f"unknown synthetic mode: {mode}")
