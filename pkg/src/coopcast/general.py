"""General DMBC with two-way conferencing: Marton-type inner bound and cut-set outer bound."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import optimize
from .degraded import _cap_rows
from .frontier import RateFrontier, build_frontier, polytope_vertex
from .prob import (H, BroadcastChannel, Factor, Kernel, Pmf, compose_chain,
                   constant_kernel, mutual_information)

FEAS_TOL = 1e-12


@dataclass(frozen=True)
class MartonWitness:
    """p(u,v,x) as a (|U|,|V|,|X|) table plus the relay kernels p(uh|y2), p(vh|y1)."""
    p_uvx: np.ndarray
    q_uhat: np.ndarray
    q_vhat: np.ndarray

    @classmethod
    def constant(cls, p_uvx, ch):
        return cls(np.asarray(p_uvx, float), constant_kernel(ch.ny2), constant_kernel(ch.ny1))

    def validate(self, ch):
        p = np.asarray(self.p_uvx)
        if p.ndim != 3 or p.shape[2] != ch.nx:
            raise ValueError(f"p(u,v,x) must have shape (|U|,|V|,{ch.nx}), got {p.shape}")
        qu, qv = np.asarray(self.q_uhat), np.asarray(self.q_vhat)
        if qu.ndim != 2 or qu.shape[0] != ch.ny2:
            raise ValueError(f"p(uh|y2) needs {ch.ny2} rows, got shape {qu.shape}")
        if qv.ndim != 2 or qv.shape[0] != ch.ny1:
            raise ValueError(f"p(vh|y1) needs {ch.ny1} rows, got shape {qv.shape}")
        if qu.shape[1] > ch.ny2 + 1:
            raise CardinalityError(f"|Uh|={qu.shape[1]} exceeds |Y2|+1={ch.ny2 + 1}")
        if qv.shape[1] > ch.ny1 + 1:
            raise CardinalityError(f"|Vh|={qv.shape[1]} exceeds |Y1|+1={ch.ny1 + 1}")

    def joint(self, ch):
        self.validate(ch)
        return compose_chain([Factor(self.p_uvx, ("U", "V", "X")), ch,
                              Kernel(self.q_uhat, "Uh", "Y2"),
                              Kernel(self.q_vhat, "Vh", "Y1")])


class CardinalityError(ValueError):
    pass


@dataclass(frozen=True)
class GeneralRatePoint:
    r_u: float
    r_v: float
    i_uv: float
    slack12: float
    slack21: float

    @property
    def feasible(self):
        return self.slack12 >= -FEAS_TOL and self.slack21 >= -FEAS_TOL

    @property
    def sum_cap(self):
        return self.r_u + self.r_v - self.i_uv


def marton_coop_point(w: MartonWitness, ch: BroadcastChannel) -> GeneralRatePoint:
    """Evaluate R(U) = I(U;Y1,Uh), R(V) = I(V;Y2,Vh), I(U;V) and link slacks."""
    j = w.joint(ch)
    mi = mutual_information
    return GeneralRatePoint(
        r_u=mi(j, "U", ("Y1", "Uh")),
        r_v=mi(j, "V", ("Y2", "Vh")),
        i_uv=mi(j, "U", "V"),
        slack12=ch.c12 - (mi(j, "Vh", "Y1") - mi(j, "Vh", "Y2")),
        slack21=ch.c21 - (mi(j, "Uh", "Y2") - mi(j, "Uh", "Y1")),
    )


def marton_point(p_uvx, ch):
    """Cooperation-free Marton rates (W constant): I(U;Y1), I(V;Y2), I(U;V)."""
    return marton_coop_point(MartonWitness.constant(p_uvx, ch), ch)


def partial_coop_r1_bound(w: MartonWitness, ch: BroadcastChannel) -> float:
    """I(U;Y1) + C21 - I(Uh;Y2|U,Y1)."""
    j = w.joint(ch)
    return (mutual_information(j, "U", "Y1") + ch.c21
            - mutual_information(j, "Uh", "Y2", ("U", "Y1")))


# ---------------------------------------------------------------------------
# batched objectives
# ---------------------------------------------------------------------------

def _mi3(pab):
    """I(A;B) for batched (N, A, B)."""
    return H(pab.sum(2), [1]) + H(pab.sum(1), [1]) - H(pab, [1, 2])


class MartonProblem:
    def __init__(self, ch, card_u, card_v, coop=True):
        self.ch, self.coop = ch, coop
        self.card_u, self.card_v = card_u, card_v
        self.nuh, self.nvh = ch.ny2 + 1, ch.ny1 + 1
        self.blocks = [("p_uvx", 1, card_u * card_v * ch.nx)]
        if coop:
            self.blocks += [("q_uhat", ch.ny2, self.nuh), ("q_vhat", ch.ny1, self.nvh)]
        self._w1, self._w2 = ch.w1, ch.w2

    def stats(self, params):
        ch = self.ch
        n = len(params["p_uvx"])
        p = params["p_uvx"].reshape(n, self.card_u, self.card_v, ch.nx)
        pux, pvx = p.sum(2), p.sum(1)
        i_uv = _mi3(p.sum(3))
        if not self.coop:
            r_u = _mi3(pux @ self._w1)
            r_v = _mi3(pvx @ self._w2)
            zero = np.zeros(n)
            out = np.stack([r_u, r_v, i_uv, zero + ch.c12, zero + ch.c21], axis=1)
            out[:, :3] = np.maximum(out[:, :3], 0.0)
            return out
        qu, qv = params["q_uhat"], params["q_vhat"]
        px = pux.sum(1)
        # p(y1, uh | x) and p(y2, vh | x)
        t1 = np.einsum("xab,nbc->nxac", ch.w, qu)
        t2 = np.einsum("xab,nac->nxbc", ch.w, qv)
        pu_y1_uh = np.einsum("nux,nxac->nuac", pux, t1).reshape(n, self.card_u, -1)
        pv_y2_vh = np.einsum("nvx,nxbc->nvbc", pvx, t2).reshape(n, self.card_v, -1)
        r_u = _mi3(pu_y1_uh)
        r_v = _mi3(pv_y2_vh)
        py1_uh = np.einsum("nx,nxac->nac", px, t1)
        py2_vh = np.einsum("nx,nxbc->nbc", px, t2)
        py2 = px @ self._w2
        py1 = px @ self._w1
        py2_uh = py2[:, :, None] * qu
        py1_vh = py1[:, :, None] * qv
        slack21 = ch.c21 - (_mi3(py2_uh) - _mi3(py1_uh))
        slack12 = ch.c12 - (_mi3(py1_vh) - _mi3(py2_vh))
        out = np.stack([r_u, r_v, i_uv, slack12, slack21], axis=1)
        out[:, :3] = np.maximum(out[:, :3], 0.0)
        return out

    @staticmethod
    def caps(stats):
        r_u, r_v, i_uv = stats[:, 0], stats[:, 1], stats[:, 2]
        return np.stack([r_u, r_v, r_u + r_v - i_uv], axis=1)

    @staticmethod
    def valid(stats):
        c = stats[:, 0] + stats[:, 1] - stats[:, 2]
        return (c >= 0) & (stats[:, 3] >= -FEAS_TOL) & (stats[:, 4] >= -FEAS_TOL)

    def linear_caps(self, stats):
        r_u, r_v, i_uv, s12, s21 = stats.T
        rows = [(1, 0, r_u), (0, 1, r_v), (1, 1, r_u + r_v - i_uv)]
        if self.coop:
            rows += [(0, 0, s12), (0, 0, s21)]
        return _cap_rows(rows)

    def score(self, stats, lam):
        caps = self.caps(stats)
        ok = self.valid(stats)
        val, _, _ = polytope_vertex(np.maximum(caps[:, 0], 0), np.maximum(caps[:, 1], 0),
                                    np.maximum(caps[:, 2], 0), lam)
        # infeasible witnesses only steer the search; they never enter a frontier
        guide = (np.minimum(caps[:, 2], 0) + np.minimum(stats[:, 3], 0)
                 + np.minimum(stats[:, 4], 0) - 1e-9)
        return np.where(ok, val, guide)


def _witness_arrays(prob, params):
    n = len(params["p_uvx"])
    out = {"p_uvx": params["p_uvx"][:, 0, :].reshape(n, prob.card_u, prob.card_v, prob.ch.nx)}
    if prob.coop:
        out["q_uhat"] = params["q_uhat"]
        out["q_vhat"] = params["q_vhat"]
    else:
        out["q_uhat"] = np.broadcast_to(constant_kernel(prob.ch.ny2), (n, prob.ch.ny2, 1))
        out["q_vhat"] = np.broadcast_to(constant_kernel(prob.ch.ny1), (n, prob.ch.ny1, 1))
    return out


def _cards(ch, card_u, card_v):
    card_u = card_u or ch.nx
    card_v = card_v or ch.nx
    if card_u < 1 or card_v < 1:
        raise ValueError("auxiliary cardinalities must be >= 1")
    return card_u, card_v


def _meta(ch, card_u, card_v, budget):
    return {"c12": ch.c12, "c21": ch.c21, "card_u": card_u, "card_v": card_v,
            "budget": budget}


def marton_nocoop_region(ch: BroadcastChannel, card_u=None, card_v=None, budget=None):
    budget = budget or optimize.OptBudget()
    card_u, card_v = _cards(ch, card_u, card_v)
    prob = MartonProblem(ch, card_u, card_v, coop=False)
    params, _ = optimize.run(prob, budget.lambdas, budget)
    stats = prob.stats(params)
    return build_frontier("marton", prob.caps(stats), prob.valid(stats),
                          _witness_arrays(prob, params), budget.lambdas,
                          _meta(ch, card_u, card_v, budget))


def marton_coop_region(ch: BroadcastChannel, card_u=None, card_v=None, budget=None):
    """Inner bound with conferencing; the cooperation-free sweep seeds the search.

    The candidate pool contains every cooperation-free endpoint (constant
    relay kernels are always feasible), so this frontier dominates the
    Marton baseline computed with the same budget.
    """
    budget = budget or optimize.OptBudget()
    card_u, card_v = _cards(ch, card_u, card_v)
    base = MartonProblem(ch, card_u, card_v, coop=False)
    lam = budget.lambdas
    L, R = len(lam), budget.restarts
    p0, _ = optimize.run(base, lam, budget)

    prob = MartonProblem(ch, card_u, card_v, coop=True)
    starts = {"p_uvx": p0["p_uvx"]}
    qu = np.empty((L * R, ch.ny2, prob.nuh))
    qv = np.empty((L * R, ch.ny1, prob.nvh))
    for li in range(L):
        for r in range(R):
            k = li * R + r
            if r == 0:
                qu[k] = 1.0 / prob.nuh
                qv[k] = 1.0 / prob.nvh
            else:
                d = optimize.dirichlet_start(prob.blocks[1:], budget.seed, (li, r, 1))
                qu[k], qv[k] = d["q_uhat"], d["q_vhat"]
    starts["q_uhat"], starts["q_vhat"] = qu, qv
    p1, _ = optimize.coordinate_ascent(prob, starts, np.repeat(lam, R),
                                       budget.tol, budget.max_iter)

    n0 = L * R
    pool = {
        "p_uvx": np.concatenate([p0["p_uvx"], p1["p_uvx"]]),
        "q_uhat": np.concatenate([np.broadcast_to(np.full((ch.ny2, prob.nuh), 1.0 / prob.nuh),
                                                  (n0, ch.ny2, prob.nuh)), p1["q_uhat"]]),
        "q_vhat": np.concatenate([np.broadcast_to(np.full((ch.ny1, prob.nvh), 1.0 / prob.nvh),
                                                  (n0, ch.ny1, prob.nvh)), p1["q_vhat"]]),
    }
    stats = prob.stats(pool)
    arrays = _witness_arrays(prob, pool)
    # cooperation-free entries are reported with truly constant relay kernels
    arrays["q_uhat"] = np.concatenate([np.broadcast_to(
        np.pad(constant_kernel(ch.ny2), ((0, 0), (0, prob.nuh - 1))), (n0, ch.ny2, prob.nuh)),
        p1["q_uhat"]])
    arrays["q_vhat"] = np.concatenate([np.broadcast_to(
        np.pad(constant_kernel(ch.ny1), ((0, 0), (0, prob.nvh - 1))), (n0, ch.ny1, prob.nvh)),
        p1["q_vhat"]])
    return build_frontier("marton-coop", prob.caps(stats), prob.valid(stats), arrays, lam,
                          _meta(ch, card_u, card_v, budget))


# ---------------------------------------------------------------------------
# cut-set bound
# ---------------------------------------------------------------------------

class CutsetProblem:
    def __init__(self, ch):
        self.ch = ch
        self.blocks = [("p_x", 1, ch.nx)]
        self._w1, self._w2 = ch.w1, ch.w2
        self._wflat = ch.w.reshape(ch.nx, -1)

    def stats(self, params):
        px = params["p_x"][:, 0, :]
        hx = H(px, [1])

        def mi(w):
            pxy = px[:, :, None] * w[None]
            return hx + H(pxy.sum(1), [1]) - H(pxy, [1, 2])
        out = np.stack([mi(self._w1), mi(self._w2), mi(self._wflat)], axis=1)
        return np.maximum(out, 0.0)

    def caps(self, stats):
        return np.stack([stats[:, 0] + self.ch.c21, stats[:, 1] + self.ch.c12, stats[:, 2]], axis=1)

    def linear_caps(self, stats):
        c = self.caps(stats)
        return _cap_rows([(1, 0, c[:, 0]), (0, 1, c[:, 1]), (1, 1, c[:, 2])])

    def score(self, stats, lam):
        c = self.caps(stats)
        return polytope_vertex(c[:, 0], c[:, 1], c[:, 2], lam)[0]


def cutset_point(p_x, ch: BroadcastChannel):
    """(I(X;Y1) + C21, I(X;Y2) + C12, I(X;Y1,Y2)) at one input law."""
    j = compose_chain([Pmf(p_x, "X"), ch])
    mi = mutual_information
    return (mi(j, "X", "Y1") + ch.c21, mi(j, "X", "Y2") + ch.c12, mi(j, "X", ("Y1", "Y2")))


BINARY_GRID_STEP = 1e-4


def binary_sup(f, step=BINARY_GRID_STEP):
    """Maximize f(p0) over [0,1]: exhaustive grid, then bounded refinement.

    ``f`` maps an array of p0 values to an array of objective values.
    Returns (p0, value).
    """
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    vals = f(grid)
    i = int(np.argmax(vals))
    best_p, best_v = float(grid[i]), float(vals[i])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda t: -float(f(np.array([t]))[0]), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-13})
    if -res.fun > best_v:
        best_p, best_v = float(res.x), float(-res.fun)
    return best_p, best_v


def cutset_bound(ch: BroadcastChannel, budget=None) -> RateFrontier:
    """Outer frontier: union over p(x) of {R1 <= I(X;Y1)+C21, R2 <= I(X;Y2)+C12,
    R1+R2 <= I(X;Y1,Y2)}."""
    budget = budget or optimize.OptBudget()
    prob = CutsetProblem(ch)
    lam = budget.lambdas
    params, _ = optimize.run(prob, lam, budget)
    pool = [params["p_x"][:, 0, :]]
    if ch.nx == 2:
        for l in lam:
            def f(p0, l=l):
                px = np.stack([p0, 1 - p0], axis=1)[:, None, :]
                return prob.score(prob.stats({"p_x": px}), np.full(len(p0), l))
            p0, _ = binary_sup(f)
            pool.append(np.array([[p0, 1 - p0]]))
    px = np.concatenate(pool)
    stats = prob.stats({"p_x": px[:, None, :]})
    return build_frontier("cutset", prob.caps(stats), np.ones(len(px), bool), {"p_x": px},
                          lam, {"c12": ch.c12, "c21": ch.c21, "budget": budget})
