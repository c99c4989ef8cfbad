"""Independent reference implementations used to cross-check the package.

Everything here is deliberately naive. The product-space filter enumerates
(crossing state, elapsed time) hypotheses jointly instead of using the
shortcut that the elapsed run length is observable; the LP solver
enumerates candidate active sets. Both are exponentially slower than the
real code, which is exactly what makes them useful as oracles.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def product_filter(model, errors):
    """Forward filter over the explicit (crossing state, elapsed) chain.

    Propagates joint mass through the generic hidden-Markov recursion
    (survive-or-exit transition times emission likelihood, then normalize)
    and only afterwards marginalizes out the elapsed time. Returns an
    array of crossing-state belief vectors, one per observation.
    """
    n_states = model.n_crossing_states
    sign0 = 1 if errors[0] > 0.0 else 0
    mass = {}
    for c in range(n_states):
        if c // model.m == sign0:
            mass[(c, 1)] = 1.0 / model.m
    beliefs = [_marginal(mass, n_states)]
    last = float(errors[0])
    for w in errors[1:]:
        widx = model.grid.index_of(w)
        nxt = {}
        for (c, tau), p in mass.items():
            h = model.exit_prob(c, tau)
            if h < 1.0:
                eb = model.error_bin(c, last)
                stay = p * (1.0 - h) * model.cont_dists[c, eb, widx]
                if stay > 0.0:
                    key = (c, tau + 1)
                    nxt[key] = nxt.get(key, 0.0) + stay
            if h > 0.0:
                for c2 in range(n_states):
                    hop = p * h * model.trans_flip[c, c2] * model.entry_dists[c2, widx]
                    if hop > 0.0:
                        key = (c2, 1)
                        nxt[key] = nxt.get(key, 0.0) + hop
        total = sum(nxt.values())
        if total <= 0.0:
            raise RuntimeError(f"product filter degenerated at observation {w}")
        mass = {k: v / total for k, v in nxt.items()}
        beliefs.append(_marginal(mass, n_states))
        last = float(w)
    return np.asarray(beliefs)


def _marginal(mass, n_states):
    out = np.zeros(n_states)
    for (c, _), p in mass.items():
        out[c] += p
    return out


def run_lengths(errors):
    """Completed run lengths of the above/below sign process.

    A step is "above" iff the error is strictly positive. Returns
    (below, above) duration lists; the trailing run is dropped because its
    length is censored.
    """
    signs = [1 if w > 0.0 else 0 for w in errors]
    below, above = [], []
    start = 0
    for k in range(1, len(signs)):
        if signs[k] != signs[k - 1]:
            (above if signs[k - 1] else below).append(k - start)
            start = k
    return below, above


def vertex_lp_solve(c, bounds, A_eq=None, b_eq=None, A_ub=None, b_ub=None,
                    tol=1e-9):
    """Solve a small dense LP by enumerating candidate active sets.

    Every equality row is forced active; the remaining n - n_eq active
    constraints are chosen from the inequality rows and finite variable
    bounds. Returns (x, objective) of the best feasible vertex. Only
    sensible for a handful of variables.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    rows = []
    if A_eq is not None:
        for a, b in zip(np.atleast_2d(A_eq), np.atleast_1d(b_eq)):
            rows.append((np.asarray(a, dtype=float), float(b), True))
    if A_ub is not None:
        for a, b in zip(np.atleast_2d(A_ub), np.atleast_1d(b_ub)):
            rows.append((np.asarray(a, dtype=float), float(b), False))
    for j, (lo, hi) in enumerate(bounds):
        e = np.zeros(n)
        e[j] = 1.0
        if lo is not None and np.isfinite(lo):
            rows.append((-e, -float(lo), False))
        if hi is not None and np.isfinite(hi):
            rows.append((e, float(hi), False))
    eq_idx = [i for i, r in enumerate(rows) if r[2]]
    ub_idx = [i for i, r in enumerate(rows) if not r[2]]
    need = n - len(eq_idx)
    if need < 0 or need > len(ub_idx):
        raise ValueError("constraint counts leave no candidate active sets")
    best_obj = np.inf
    best_x = None
    for extra in combinations(ub_idx, need):
        active = eq_idx + list(extra)
        A = np.array([rows[i][0] for i in active])
        b = np.array([rows[i][1] for i in active])
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            continue
        if not _feasible(x, rows, tol):
            continue
        obj = float(c @ x)
        if obj < best_obj:
            best_obj = obj
            best_x = x
    if best_x is None:
        raise RuntimeError("no feasible vertex found")
    return best_x, best_obj


def _feasible(x, rows, tol):
    for a, b, is_eq in rows:
        v = float(a @ x)
        slack = tol * max(1.0, abs(b))
        if is_eq:
            if abs(v - b) > slack:
                return False
        elif v > b + slack:
            return False
    return True
