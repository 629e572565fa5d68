"""Maximization over products of probability simplices.

A problem exposes ``blocks`` -- a list of ``(name, rows, k)`` -- meaning a
parameter ``name`` of shape ``(rows, k)`` whose rows are pmfs, and two
vectorized callables:

    stats(params) -> (B, m) array     params[name] has shape (B, rows, k)
    score(stats, lam) -> (B,) array   the quantity being maximized

Every chain carries its own weight ``lam`` so that all sweep directions and
restarts advance together through one batched evaluation.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_FD_STEP = 1e-7
_ETAS = np.array([0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0])
_FW_STEPS = np.array([1.0, 0.3, 0.1, 0.03, 0.01, 1e-3])
_CHUNK = 60_000


@dataclass(frozen=True)
class OptBudget:
    lambda_count: int = 65
    grid_res: int = 9
    restarts: int = 16
    tol: float = 1e-9
    max_iter: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.lambda_count < 2:
            raise ValueError("lambda_count must be >= 2")
        if self.grid_res < 2:
            raise ValueError("grid_res must be >= 2")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    @property
    def lambdas(self):
        return np.linspace(0.0, 1.0, self.lambda_count)


def thread_count():
    try:
        return max(1, int(os.environ.get("COOPCAST_THREADS", "1")))
    except ValueError:
        return 1


@lru_cache(maxsize=None)
def simplex_grid(k, res):
    """All points of the k-simplex with coordinates in {0, 1/(res-1), ..., 1}."""
    m = res - 1
    pts = []
    for bars in itertools.combinations(range(m + k - 1), k - 1):
        prev, counts = -1, []
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(m + k - 2 - prev)
        pts.append(counts)
    g = np.array(pts, dtype=float) / m
    g.setflags(write=False)
    return g


def uniform_params(blocks, n):
    return {name: np.full((n, rows, k), 1.0 / k) for name, rows, k in blocks}


def _take(params, idx):
    return {n: a[idx] for n, a in params.items()}


def _evaluate(problem, params, lam):
    """Score a batch, chunked to bound memory."""
    size = len(lam)
    if size <= _CHUNK:
        return problem.score(problem.stats(params), lam)
    out = np.empty(size)
    for lo in range(0, size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        out[sl] = problem.score(problem.stats({n: a[sl] for n, a in params.items()}), lam[sl])
    return out


def _with_row(params, name, r, rows_new):
    """Repeat every chain ``c`` times and overwrite row ``r`` of ``name``.

    ``rows_new`` has shape (C, c, k); the result holds C*c candidates.
    """
    C, c, k = rows_new.shape
    out = {n: np.repeat(a, c, axis=0) for n, a in params.items()}
    out[name] = out[name].copy()
    out[name][:, r, :] = rows_new.reshape(C * c, k)
    return out


def grid_seed(problem, lam, res):
    """One coordinate pass of exhaustive grid search over each pmf row."""
    n = len(lam)
    params = uniform_params(problem.blocks, n)
    cur = _evaluate(problem, params, lam)
    for name, rows, k in problem.blocks:
        grid = simplex_grid(k, res)
        G = len(grid)
        for r in range(rows):
            cand = np.broadcast_to(grid, (n, G, k))
            vals = _evaluate(problem, _with_row(params, name, r, cand),
                             np.repeat(lam, G)).reshape(n, G)
            best = np.argmax(vals, axis=1)
            better = vals[np.arange(n), best] > cur
            params[name][better, r, :] = grid[best[better]]
            cur = np.where(better, vals[np.arange(n), best], cur)
    return params, cur


def _row_step(problem, params, lam, cur, name, r, k):
    """One multiplicative / Frank-Wolfe update of row ``r`` for every chain."""
    C = len(lam)
    p = params[name][:, r, :]
    eye = np.eye(k)
    fd = p[:, None, :] + _FD_STEP * (eye[None, :, :] - p[:, None, :])
    f_fd = _evaluate(problem, _with_row(params, name, r, fd), np.repeat(lam, k)).reshape(C, k)
    g = (f_fd - cur[:, None]) / _FD_STEP
    gc = g - g.mean(axis=1, keepdims=True)
    scale = np.abs(gc).max(axis=1, keepdims=True)
    gn = np.divide(gc, scale, out=np.zeros_like(gc), where=scale > 0)

    mult = p[:, None, :] * np.exp(_ETAS[None, :, None] * gn[:, None, :])
    mult /= mult.sum(axis=2, keepdims=True)
    j = np.argmax(g, axis=1)
    vert = eye[j]
    fw = p[:, None, :] + _FW_STEPS[None, :, None] * (vert[:, None, :] - p[:, None, :])
    cand = np.concatenate([mult, fw], axis=1)
    nc = cand.shape[1]
    vals = _evaluate(problem, _with_row(params, name, r, cand), np.repeat(lam, nc)).reshape(C, nc)
    best = np.argmax(vals, axis=1)
    bval = vals[np.arange(C), best]
    better = bval > cur
    if np.any(better):
        newrow = cand[np.arange(C), best]
        newrow /= newrow.sum(axis=1, keepdims=True)
        params[name][better, r, :] = newrow[better]
        cur = np.where(better, bval, cur)
    return cur


def coordinate_ascent(problem, params, lam, tol=1e-9, max_iter=500):
    """Improve every chain until a full sweep gains less than ``tol``."""
    params = {n: np.array(a, dtype=float) for n, a in params.items()}
    cur = _evaluate(problem, params, lam)
    active = np.arange(len(lam))
    for _ in range(max_iter):
        if active.size == 0:
            break
        sub = _take(params, active)
        sl = lam[active]
        c = cur[active]
        before = c.copy()
        for name, rows, k in problem.blocks:
            for r in range(rows):
                c = _row_step(problem, sub, sl, c, name, r, k)
        for n in params:
            params[n][active] = sub[n]
        cur[active] = c
        active = active[(c - before) >= tol]
    return params, cur


def _flatten(blocks, params):
    return np.concatenate([params[name].ravel() for name, _, _ in blocks])


def _unflatten(blocks, z, n=None):
    """Rows clipped at 0 and renormalized; z is (D,) or (n, D)."""
    z = np.atleast_2d(z)
    out, i = {}, 0
    for name, rows, k in blocks:
        a = np.clip(z[:, i:i + rows * k], 0.0, None).reshape(len(z), rows, k)
        s = a.sum(axis=2, keepdims=True)
        out[name] = np.where(s > 0, a / np.where(s > 0, s, 1.0), 1.0 / k)
        i += rows * k
    return out


def polish(problem, params, lam, max_iter=200):
    """Refine one chain on the epigraph of its rate polytope.

    Coordinate steps stall on the kinks of min(...) objectives, where
    progress needs several rows to move together.  Problems that expose
    ``linear_caps(stats) -> (B, K, 3)`` rows ``(c1, c2, v)`` meaning
    ``c1*R1 + c2*R2 <= v`` get a joint SLSQP solve of
    max lam*R1 + (1-lam)*R2 over (params, R1, R2).  Returns the refined
    params (shape (rows, k) per block) or None if nothing improved.
    """
    from scipy.optimize import minimize

    blocks = problem.blocks
    single = {n: a[None] for n, a in params.items()}
    base = float(problem.score(problem.stats(single), np.array([lam]))[0])
    caps = problem.linear_caps(problem.stats(single))[0]
    z0 = _flatten(blocks, params)
    D = len(z0)
    r0 = _polytope_start(caps, lam)
    x0 = np.concatenate([z0, r0])

    def cons(x):
        p = _unflatten(blocks, x[:D])
        c = problem.linear_caps(problem.stats(p))[0]
        return c[:, 2] - c[:, 0] * x[D] - c[:, 1] * x[D + 1]

    def cons_jac(x):
        step = 1e-8
        pts = np.repeat(x[None, :D], D + 1, axis=0)
        idx = np.arange(D)
        pts[1 + idx, idx] += np.where(x[:D] + step > 1.0, -step, step)
        c = problem.linear_caps(problem.stats(_unflatten(blocks, pts)))
        v = c[:, :, 2]
        jz = ((v[1:] - v[0]) / np.where(x[:D] + step > 1.0, -step, step)[:, None]).T
        return np.hstack([jz, -c[0, :, :2]])

    eq = []
    i = 0
    for _, rows, k in blocks:
        for r in range(rows):
            sl = slice(i + r * k, i + (r + 1) * k)
            a = np.zeros(D + 2)
            a[sl] = 1.0
            eq.append({"type": "eq", "fun": lambda x, sl=sl: x[sl].sum() - 1.0,
                       "jac": lambda x, a=a: a})
        i += rows * k
    w = np.zeros(D + 2)
    w[D], w[D + 1] = -lam, -(1 - lam)
    res = minimize(lambda x: float(w @ x), x0, jac=lambda x: w, method="SLSQP",
                   bounds=[(0.0, 1.0)] * D + [(0.0, None)] * 2,
                   constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}] + eq,
                   options={"maxiter": max_iter, "ftol": 1e-13})
    cand = _unflatten(blocks, res.x[:D])
    val = float(problem.score(problem.stats(cand), np.array([lam]))[0])
    if val > base:
        return {n: a[0] for n, a in cand.items()}
    return None


def _polytope_start(caps, lam):
    """A feasible (R1, R2) for the cap rows, the LP optimum when cheap."""
    from scipy.optimize import linprog
    res = linprog([-lam, -(1 - lam)], A_ub=caps[:, :2], b_ub=caps[:, 2],
                  bounds=[(0, None), (0, None)], method="highs")
    return res.x if res.status == 0 else np.zeros(2)


def dirichlet_start(blocks, seed, key):
    rng = np.random.default_rng([seed, *key])
    return {name: rng.dirichlet(np.ones(k), size=rows) for name, rows, k in blocks}


def run(problem, lam, budget: OptBudget, extra_starts=None):
    """Grid-seeded multi-restart ascent for every weight in ``lam``.

    Returns ``(params, scores)`` with chains ordered (lambda index, restart).
    Restart 0 is the grid seed, restarts 1.. are Dirichlet(1) draws from the
    stream (seed, lambda index, restart index).  ``extra_starts`` is an
    optional list of parameter dicts of shape (L, rows, k) appended as
    further restarts.
    """
    lam = np.asarray(lam, dtype=float)
    L, R = len(lam), budget.restarts
    seed_params, _ = grid_seed(problem, lam, budget.grid_res)
    extra_starts = list(extra_starts or [])
    S = R + len(extra_starts)
    starts = {name: np.empty((L, S, rows, k)) for name, rows, k in problem.blocks}
    for name in starts:
        starts[name][:, 0] = seed_params[name]
        for e, ex in enumerate(extra_starts):
            starts[name][:, R + e] = ex[name]
    for li in range(L):
        for r in range(1, R):
            d = dirichlet_start(problem.blocks, budget.seed, (li, r))
            for name in starts:
                starts[name][li, r] = d[name]
    flat = {n: a.reshape((L * S,) + a.shape[2:]) for n, a in starts.items()}
    lam_rep = np.repeat(lam, S)

    nthreads = min(thread_count(), L)
    if nthreads <= 1:
        params, scores = coordinate_ascent(problem, flat, lam_rep, budget.tol, budget.max_iter)
    else:
        bounds = np.linspace(0, L, nthreads + 1).astype(int)
        pieces = [slice(bounds[i] * S, bounds[i + 1] * S) for i in range(nthreads)]
        with ThreadPoolExecutor(nthreads) as ex:
            results = list(ex.map(
                lambda sl: coordinate_ascent(problem, {n: a[sl] for n, a in flat.items()},
                                             lam_rep[sl], budget.tol, budget.max_iter),
                pieces))
        params = {n: np.concatenate([res[0][n] for res in results]) for n in flat}
        scores = np.concatenate([res[1] for res in results])
    if hasattr(problem, "linear_caps"):
        _polish_best(problem, params, scores, lam, S)
    return params, scores


def _polish_best(problem, params, scores, lam, S):
    """Polish the best chain of every weight in place."""
    for li, l in enumerate(lam):
        i = li * S + int(np.argmax(scores[li * S:(li + 1) * S]))
        if scores[i] < 0:
            continue
        new = polish(problem, {n: a[i] for n, a in params.items()}, float(l))
        if new is not None:
            for n in params:
                params[n][i] = new[n]
            scores[i] = problem.score(problem.stats({n: a[None] for n, a in new.items()}),
                                      np.array([l]))[0]


def maximize_scalar(problem, budget: OptBudget, extra_starts=None):
    """Single-objective version of :func:`run`; returns the best chain."""
    params, scores = run(problem, np.zeros(1), budget, extra_starts)
    i = int(np.argmax(scores))
    return {n: a[i] for n, a in params.items()}, float(scores[i])
