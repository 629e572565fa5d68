"""Physically degraded BC with a one-way conference link Rx1 -> Rx2.

Rates are reported in the (R1, R0+R2) plane.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import optimize
from .frontier import RateFrontier, build_frontier
from .prob import (H, BroadcastChannel, Kernel, Pmf, binary_entropy, bconv,
                   compose_chain, is_physically_degraded, mutual_information,
                   row_entropy)

DEGRADED_TOL = 1e-9


class NotDegraded(ValueError):
    pass


class CardinalityError(ValueError):
    pass


@dataclass(frozen=True)
class DegradedPoint:
    r1: float
    r02: float
    i_u_y1: float
    i_u_y2: float
    i_x_y1: float


def card_bound(ch, coop=True):
    if coop:
        return min(ch.nx, ch.ny1)
    return min(ch.nx, ch.ny1, ch.ny2)


def _require_degraded(ch):
    res = is_physically_degraded(ch, DEGRADED_TOL)
    if not res.degraded:
        raise NotDegraded(f"channel is not physically degraded (residual {res.residual:.3g})")


def _point_measures(p_u, p_x_given_u, ch, coop):
    p_u = np.asarray(p_u, float)
    p_x_given_u = np.asarray(p_x_given_u, float)
    _require_degraded(ch)
    bound = card_bound(ch, coop)
    if len(p_u) > bound:
        raise CardinalityError(f"|U|={len(p_u)} exceeds bound {bound}")
    if p_x_given_u.shape != (len(p_u), ch.nx):
        raise ValueError(f"p(x|u) has shape {p_x_given_u.shape}, need {(len(p_u), ch.nx)}")
    j = compose_chain([Pmf(p_u, "U"), Kernel(p_x_given_u, "X", "U"), ch])
    return (mutual_information(j, "X", "Y1", "U"), mutual_information(j, "U", "Y1"),
            mutual_information(j, "U", "Y2"), mutual_information(j, "X", "Y1"))


def degraded_rate_point(p_u, p_x_given_u, ch: BroadcastChannel) -> DegradedPoint:
    """R1 = I(X;Y1|U), R0+R2 = min(I(U;Y1), I(U;Y2) + C12)."""
    r1, iu1, iu2, ix1 = _point_measures(p_u, p_x_given_u, ch, coop=True)
    return DegradedPoint(r1, min(iu1, iu2 + ch.c12), iu1, iu2, ix1)


def nocoop_rate_point(p_u, p_x_given_u, ch: BroadcastChannel) -> DegradedPoint:
    r1, iu1, iu2, ix1 = _point_measures(p_u, p_x_given_u, ch, coop=False)
    return DegradedPoint(r1, iu2, iu1, iu2, ix1)


def degraded_sum_rate_gain(p_u, p_x_given_u, ch: BroadcastChannel) -> float:
    """I(X;Y1) + min(0, C12 - (I(U;Y1) - I(U;Y2)))."""
    _, iu1, iu2, ix1 = _point_measures(p_u, p_x_given_u, ch, coop=True)
    return ix1 + min(0.0, ch.c12 - (iu1 - iu2))


class DegradedProblem:
    """Batched objective over (p(u), p(x|u))."""

    def __init__(self, ch, card_u, coop=True):
        self.ch = ch
        self.coop = coop
        self.card_u = card_u
        self.blocks = [("p_u", 1, card_u), ("p_x_given_u", card_u, ch.nx)]
        self._w1 = ch.w1
        self._w2 = ch.w2
        self._h1x = row_entropy(self._w1)

    def stats(self, params):
        pu = params["p_u"][:, 0, :]
        pux = pu[:, :, None] * params["p_x_given_u"]
        puy1 = pux @ self._w1
        puy2 = pux @ self._w2
        px = pux.sum(axis=1)
        hu = H(pu, [1])
        huy1 = H(puy1, [1, 2])
        r1 = huy1 - hu - px @ self._h1x
        iu1 = hu + H(puy1.sum(axis=1), [1]) - huy1
        iu2 = hu + H(puy2.sum(axis=1), [1]) - H(puy2, [1, 2])
        return np.maximum(np.stack([r1, iu1, iu2], axis=1), 0.0)

    def caps(self, stats):
        r1, iu1, iu2 = stats.T
        r02 = np.minimum(iu1, iu2 + self.ch.c12) if self.coop else iu2
        return np.stack([r1, r02, np.full_like(r1, np.inf)], axis=1)

    def linear_caps(self, stats):
        r1, iu1, iu2 = stats.T
        rows = [(1, 0, r1), (0, 1, iu2 + self.ch.c12 if self.coop else iu2)]
        if self.coop:
            rows.append((0, 1, iu1))
        return _cap_rows(rows)

    def score(self, stats, lam):
        caps = self.caps(stats)
        return lam * caps[:, 0] + (1 - lam) * caps[:, 1]


def _cap_rows(rows):
    """Stack (c1, c2, values) triples into a (B, K, 3) array."""
    vals = [np.asarray(v, float) for _, _, v in rows]
    B = max(v.size for v in vals)
    out = np.empty((B, len(rows), 3))
    for k, ((c1, c2, _), v) in enumerate(zip(rows, vals)):
        out[:, k, 0], out[:, k, 1], out[:, k, 2] = c1, c2, v
    return out


def _region(ch, budget, coop, kind, card_u=None):
    _require_degraded(ch)
    budget = budget or optimize.OptBudget()
    bound = card_bound(ch, coop)
    card_u = bound if card_u is None else int(card_u)
    if not 1 <= card_u <= bound:
        raise CardinalityError(f"|U|={card_u} outside [1, {bound}]")
    prob = DegradedProblem(ch, card_u, coop)
    lam = budget.lambdas
    params, _ = optimize.run(prob, lam, budget)
    stats = prob.stats(params)
    caps = prob.caps(stats)
    flat = {"p_u": params["p_u"][:, 0, :], "p_x_given_u": params["p_x_given_u"]}
    meta = {"c12": ch.c12, "card_u": card_u, "budget": budget}
    return build_frontier(kind, caps, np.ones(len(caps), bool), flat, lam, meta)


def degraded_region(ch: BroadcastChannel, budget=None, card_u=None) -> RateFrontier:
    """Trace of the cooperative capacity region in the (R1, R0+R2) plane.

    ``card_u`` defaults to the cardinality bound min(|X|, |Y1|).
    """
    return _region(ch, budget, True, "degraded", card_u)


def nocoop_degraded_region(ch: BroadcastChannel, budget=None, card_u=None) -> RateFrontier:
    return _region(ch, budget, False, "nocoop-degraded", card_u)


def bsbc_point(p1, p2, c12, alpha):
    """Closed-form (R1, R0+R2) for uniform U and X = U xor Bern(alpha)."""
    p12 = bconv(p1, p2)
    r1 = binary_entropy(bconv(alpha, p1)) - binary_entropy(p1)
    r02 = min(1 - binary_entropy(bconv(alpha, p1)),
              1 - binary_entropy(bconv(alpha, p12)) + c12)
    return r1, r02


def bsbc_region_closed_form(p1, p2, c12, alphas) -> RateFrontier:
    """Boundary of the degraded BSBC region traced over the superposition crossover.

    ``lambdas`` holds the crossover values alpha (not sweep weights).
    """
    for name, v in (("p1", p1), ("p2", p2)):
        if not 0.0 <= v <= 0.5:
            raise ValueError(f"{name}={v} outside [0, 1/2]")
    alphas = np.asarray(alphas, dtype=float)
    if np.any((alphas < 0) | (alphas > 1)):
        raise ValueError("crossover outside [0, 1]")
    pts = np.array([bsbc_point(p1, p2, c12, a) for a in alphas]).reshape(-1, 2)
    witnesses = [{"p_u": np.array([0.5, 0.5]),
                  "p_x_given_u": np.array([[1 - a, a], [a, 1 - a]])} for a in alphas]
    return RateFrontier("bsbc-closed-form", alphas, pts[:, 0], pts[:, 1],
                        np.full(len(alphas), np.nan), np.arange(len(alphas)), witnesses,
                        {"p1": p1, "p2": p2, "c12": c12})
