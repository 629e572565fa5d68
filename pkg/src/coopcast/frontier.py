"""Rate frontiers traced by weighted-sum sweeps over unions of polytopes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TIE_TOL = 1e-12


def polytope_vertex(a, b, c, lam):
    """Maximizer of lam*R1 + (1-lam)*R2 over {0<=R1<=a, 0<=R2<=b, R1+R2<=c}.

    Arguments broadcast; the region must be nonempty (a, b, c >= 0).  Returns
    ``(value, r1, r2)``.  Ties (within ``TIE_TOL``) between the two candidate
    corners go to the R1-first corner, so that re-evaluating a witness on a
    different numerical path picks the same corner.
    """
    a, b, c, lam = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, lam)))
    r1a = np.minimum(a, c)
    r2a = np.clip(np.minimum(b, c - r1a), 0.0, None)
    r2b = np.minimum(b, c)
    r1b = np.clip(np.minimum(a, c - r2b), 0.0, None)
    va = lam * r1a + (1 - lam) * r2a
    vb = lam * r1b + (1 - lam) * r2b
    pick_a = va >= vb - TIE_TOL
    return (np.where(pick_a, va, vb), np.where(pick_a, r1a, r1b),
            np.where(pick_a, r2a, r2b))


@dataclass
class RateFrontier:
    """Per-direction maximizers of lam*R1 + (1-lam)*R2.

    ``witnesses[i]`` maps parameter names to arrays; ``witness_ids[j]`` is the
    index of the witness achieving row ``j`` (-1 for the origin).
    """
    kind: str
    lambdas: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    support: np.ndarray
    witness_ids: np.ndarray
    witnesses: list
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.lambdas)

    @property
    def points(self):
        return list(zip(self.r1.tolist(), self.r2.tolist()))

    def support_at(self, lam):
        """Support value of the frontier's convex hull in direction lam."""
        return float(np.max(lam * self.r1 + (1 - lam) * self.r2))

    def max_sum_rate(self):
        return float(np.max(self.r1 + self.r2))

    def corner_r1(self):
        return float(self.r1[-1])

    def corner_r2(self):
        return float(self.r2[0])


def build_frontier(kind, caps, valid, params, lambdas, meta=None):
    """Select, for each direction, the best polytope among all candidates.

    ``caps`` is (P, 3) holding (a, b, c) per candidate witness; ``params`` maps
    names to (P, ...) arrays.  Taking the best over the whole pool (not just
    the chains run for that direction) is the time-sharing envelope.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    caps = np.asarray(caps, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    idx_valid = np.flatnonzero(valid)
    L = len(lambdas)
    r1 = np.zeros(L)
    r2 = np.zeros(L)
    sup = np.zeros(L)
    chosen = np.full(L, -1)
    if idx_valid.size:
        a, b, c = (caps[idx_valid, i][None, :] for i in range(3))
        val, v1, v2 = polytope_vertex(a, b, c, lambdas[:, None])
        best = np.argmax(val, axis=1)
        rows = np.arange(L)
        positive = val[rows, best] > 0.0
        sup = np.where(positive, val[rows, best], 0.0)
        r1 = np.where(positive, v1[rows, best], 0.0)
        r2 = np.where(positive, v2[rows, best], 0.0)
        chosen = np.where(positive, idx_valid[best], -1)
    # compact the witness list to referenced entries, in order of first use
    order = []
    remap = {}
    for w in chosen:
        if w >= 0 and w not in remap:
            remap[w] = len(order)
            order.append(int(w))
    ids = np.array([remap.get(w, -1) for w in chosen], dtype=int)
    witnesses = [{n: np.array(a[w]) for n, a in params.items()} for w in order]
    return RateFrontier(kind, lambdas, r1, r2, sup, ids, witnesses, dict(meta or {}))
