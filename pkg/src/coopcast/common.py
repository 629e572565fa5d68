"""Single common message to both receivers: one- and two-step conferencing."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import optimize
from .general import FEAS_TOL, CardinalityError, binary_sup
from .prob import (H, BroadcastChannel, Kernel, Pmf, binary_entropy,
                   compose_chain, conditional_entropy, constant_kernel,
                   identity_kernel, mutual_information)

SCHEMES = ("none", "single_step", "two_step_12", "two_step_21")


@dataclass(frozen=True)
class CommonWitness:
    p_x: np.ndarray
    q_uhat: np.ndarray
    q_vhat: np.ndarray

    @classmethod
    def constant(cls, p_x, ch):
        return cls(np.asarray(p_x, float), constant_kernel(ch.ny2), constant_kernel(ch.ny1))

    @classmethod
    def full(cls, p_x, ch):
        """Uh = Y2, Vh = Y1."""
        return cls(np.asarray(p_x, float), identity_kernel(ch.ny2), identity_kernel(ch.ny1))

    def joint(self, ch):
        qu, qv = np.asarray(self.q_uhat), np.asarray(self.q_vhat)
        if qu.shape[0] != ch.ny2 or qv.shape[0] != ch.ny1:
            raise ValueError("relay kernel rows must match the output alphabets")
        if qu.shape[1] > ch.ny2 + 1 or qv.shape[1] > ch.ny1 + 1:
            raise CardinalityError("relay alphabet exceeds |Y|+1")
        return compose_chain([Pmf(self.p_x, "X"), ch, Kernel(qu, "Uh", "Y2"),
                              Kernel(qv, "Vh", "Y1")])


@dataclass
class CommonRateReport:
    scheme: str
    rate: float
    witness: CommonWitness = field(repr=False)
    feasible: bool
    upper: float
    slack12: float = 0.0
    slack21: float = 0.0


def _upper_at(j, ch):
    mi = mutual_information
    return min(mi(j, "X", "Y1") + ch.c21, mi(j, "X", "Y2") + ch.c12, mi(j, "X", ("Y1", "Y2")))


def single_step_rate(w: CommonWitness, ch: BroadcastChannel) -> CommonRateReport:
    """min(I(X;Y1,Uh), I(X;Y2,Vh)) subject to both link constraints.

    A side whose link constraint fails falls back to a constant relay
    variable, which is always admissible.
    """
    j = w.joint(ch)
    mi = mutual_information
    s21 = ch.c21 - (mi(j, "Uh", "Y2") - mi(j, "Uh", "Y1"))
    s12 = ch.c12 - (mi(j, "Vh", "Y1") - mi(j, "Vh", "Y2"))
    ok21, ok12 = s21 >= -FEAS_TOL, s12 >= -FEAS_TOL
    r1 = mi(j, "X", ("Y1", "Uh")) if ok21 else mi(j, "X", "Y1")
    r2 = mi(j, "X", ("Y2", "Vh")) if ok12 else mi(j, "X", "Y2")
    scheme = "single_step" if (ok21 or ok12) else "none"
    return CommonRateReport(scheme, min(r1, r2), w, ok21 and ok12, _upper_at(j, ch), s12, s21)


def two_step_rate(w: CommonWitness, ch: BroadcastChannel, direction="12") -> CommonRateReport:
    """Rate when one receiver decodes first with help, then helps the other.

    direction "12": Rx1 compresses Y1 into Vh for Rx2, Rx2 decodes and
    returns a bin index.  Infeasible link budgets fall back to the same
    formula with a constant relay variable.
    """
    if direction not in ("12", "21"):
        raise ValueError(f"direction must be '12' or '21', got {direction!r}")
    j = w.joint(ch)
    mi = mutual_information
    ix1, ix2 = mi(j, "X", "Y1"), mi(j, "X", "Y2")
    if direction == "12":
        need = mi(j, "Vh", "Y1", ("Y2", "X"))
        slack = ch.c12 - need
        gain = conditional_entropy(j, "Vh", "Y2") - conditional_entropy(j, "Vh", "Y1")
        if slack >= -FEAS_TOL:
            rate = min(ix1 + ch.c21, ix2 - need + min(ch.c12, gain))
        else:
            rate = min(ix1 + ch.c21, ix2)
        s12, s21 = slack, ch.c21
    else:
        need = mi(j, "Uh", "Y2", ("Y1", "X"))
        slack = ch.c21 - need
        gain = conditional_entropy(j, "Uh", "Y1") - conditional_entropy(j, "Uh", "Y2")
        if slack >= -FEAS_TOL:
            rate = min(ix2 + ch.c12, ix1 - need + min(ch.c21, gain))
        else:
            rate = min(ix2 + ch.c12, ix1)
        s12, s21 = ch.c12, slack
    feasible = slack >= -FEAS_TOL
    scheme = f"two_step_{direction}" if feasible else "none"
    return CommonRateReport(scheme, rate, w, feasible, _upper_at(j, ch), s12, s21)


def best_two_step(w, ch):
    """max over directions; ties go to 12."""
    a, b = two_step_rate(w, ch, "12"), two_step_rate(w, ch, "21")
    return a if a.rate >= b.rate else b


# ---------------------------------------------------------------------------
# batched objectives over p(x) (and optionally the relay kernels)
# ---------------------------------------------------------------------------

def _mi3(pab):
    return H(pab.sum(2), [1]) + H(pab.sum(1), [1]) - H(pab, [1, 2])


class CommonProblem:
    """Scalar objectives for the common-message schemes.

    kind: 'nocoop', 'upper', 'single', 'two12', 'two21', 'corollary'.
    For 'corollary' the relay variables are pinned to Uh = Y2, Vh = Y1 and only
    p(x) is searched.
    """

    KINDS = ("nocoop", "upper", "single", "two12", "two21", "corollary")

    def __init__(self, ch, kind):
        if kind not in self.KINDS:
            raise ValueError(f"unknown objective {kind!r}")
        self.ch, self.kind = ch, kind
        self.blocks = [("p_x", 1, ch.nx)]
        if kind in ("single", "two21"):
            self.blocks.append(("q_uhat", ch.ny2, ch.ny2 + 1))
        if kind in ("single", "two12"):
            self.blocks.append(("q_vhat", ch.ny1, ch.ny1 + 1))
        w = ch.w
        self._w1, self._w2 = ch.w1, ch.w2
        self._wflat = w.reshape(ch.nx, -1)
        if kind in ("nocoop", "upper"):
            # pure min(...) objectives: let the optimizer polish on the epigraph
            self.linear_caps = self._linear_caps

    def _linear_caps(self, stats):
        # R1 is pinned to 0 and R2 is bounded by each term of the min
        n = len(stats)
        out = np.zeros((n, stats.shape[1], 3))
        out[:, 0, 0] = 1.0
        out[:, 1:, 1] = 1.0
        out[:, 1:, 2] = stats[:, 1:]
        return out

    def _base(self, px):
        hx = H(px, [1])

        def mi(w):
            pxy = px[:, :, None] * w[None]
            return hx + H(pxy.sum(1), [1]) - H(pxy, [1, 2])
        return mi(self._w1), mi(self._w2), mi(self._wflat)

    def terms(self, px):
        """I(X;Y1), I(X;Y2), I(X;Y1,Y2), H(Y1|Y2,X), H(Y2|Y1,X), H(Y1|Y2), H(Y2|Y1)."""
        ch = self.ch
        i1, i2, i12 = self._base(px)
        pxy = px[:, :, None, None] * ch.w[None]
        py = pxy.sum(1)
        hy12 = H(py, [1, 2])
        h_y1_y2x = H(pxy, [1, 2, 3]) - H(pxy.sum(2), [1, 2])
        h_y2_y1x = H(pxy, [1, 2, 3]) - H(pxy.sum(3), [1, 2])
        h_y1_y2 = hy12 - H(py.sum(1), [1])
        h_y2_y1 = hy12 - H(py.sum(2), [1])
        return i1, i2, i12, h_y1_y2x, h_y2_y1x, h_y1_y2, h_y2_y1

    def _relay(self, px, q, side):
        """Quantities for a relay kernel q on Y1 (side 1, Vh) or on Y2 (side 2, Uh).

        Returns I(X; Y_other, relay), I(relay; Y_own | Y_other, X),
        H(relay|Y_other) - H(relay|Y_own) and the single-step link demand
        I(relay;Y_own) - I(relay;Y_other).
        """
        ch = self.ch
        n = len(px)
        if side == 1:
            t = np.einsum("xab,nac->nxbc", ch.w, q)      # p(y2, vh | x)
            w_own = self._w1
        else:
            t = np.einsum("xab,nbc->nxac", ch.w, q)      # p(y1, uh | x)
            w_own = self._w2
        p_x_oth_r = px[:, :, None, None] * t
        i_x_oth_r = _mi3(p_x_oth_r.reshape(n, ch.nx, -1))
        p_oth_r = p_x_oth_r.sum(1)
        p_own = px @ w_own
        p_own_r = p_own[:, :, None] * q
        h_r_oth = H(p_oth_r, [1, 2]) - H(p_oth_r.sum(2), [1])
        h_r_own = H(p_own_r, [1, 2]) - H(p_own, [1])
        h_r_oth_x = H(p_x_oth_r, [1, 2, 3]) - H(p_x_oth_r.sum(3), [1, 2])
        # Markov relay - Y_own - (X, Y_other): H(r|Y_own, Y_other, X) = H(r|Y_own)
        need = h_r_oth_x - h_r_own
        gain = h_r_oth - h_r_own
        demand = _mi3(p_own_r) - _mi3(p_oth_r)
        return i_x_oth_r, need, gain, demand

    def stats(self, params):
        ch = self.ch
        px = params["p_x"][:, 0, :]
        i1, i2, i12 = self._base(px)
        k = self.kind
        if k == "nocoop":
            return np.stack([np.minimum(i1, i2), i1, i2], axis=1)
        if k == "upper":
            t = np.stack([i1 + ch.c21, i2 + ch.c12, i12], axis=1)
            return np.concatenate([t.min(1, keepdims=True), t], axis=1)
        if k == "corollary":
            _, _, _, a, b, c, d = self.terms(px)
            r12 = np.where(ch.c12 >= a - FEAS_TOL,
                           np.minimum(i1 + ch.c21, i2 - a + np.minimum(ch.c12, c)),
                           np.minimum(i1 + ch.c21, i2))
            r21 = np.where(ch.c21 >= b - FEAS_TOL,
                           np.minimum(i2 + ch.c12, i1 - b + np.minimum(ch.c21, d)),
                           np.minimum(i2 + ch.c12, i1))
            val = np.maximum(r12, r21)
        elif k == "two12":
            _, need, gain, _ = self._relay(px, params["q_vhat"], 1)
            ok = ch.c12 >= need - FEAS_TOL
            val = np.where(ok, np.minimum(i1 + ch.c21, i2 - need + np.minimum(ch.c12, gain)),
                           np.minimum(i1 + ch.c21, i2))
        elif k == "two21":
            _, need, gain, _ = self._relay(px, params["q_uhat"], 2)
            ok = ch.c21 >= need - FEAS_TOL
            val = np.where(ok, np.minimum(i2 + ch.c12, i1 - need + np.minimum(ch.c21, gain)),
                           np.minimum(i2 + ch.c12, i1))
        else:  # single
            ix2v, _, _, dem12 = self._relay(px, params["q_vhat"], 1)
            ix1u, _, _, dem21 = self._relay(px, params["q_uhat"], 2)
            r1 = np.where(ch.c21 >= dem21 - FEAS_TOL, ix1u, i1)
            r2 = np.where(ch.c12 >= dem12 - FEAS_TOL, ix2v, i2)
            val = np.minimum(r1, r2)
        return val[:, None]

    def score(self, stats, lam):
        return stats[:, 0]


def _sup(ch, kind, budget):
    """sup of a common-message objective; returns (params, value)."""
    budget = budget or optimize.OptBudget()
    prob = CommonProblem(ch, kind)
    best, val = optimize.maximize_scalar(prob, budget)
    if ch.nx == 2 and len(prob.blocks) == 1:
        def f(p0):
            px = np.stack([p0, 1 - p0], axis=1)[:, None, :]
            return prob.stats({"p_x": px})[:, 0]
        p0, v = binary_sup(f)
        if v > val:
            best, val = {"p_x": np.array([[p0, 1 - p0]])}, v
    return best, max(val, 0.0)


def nocoop_common_capacity(ch: BroadcastChannel, budget=None) -> float:
    """sup over p(x) of min(I(X;Y1), I(X;Y2))."""
    return _sup(ch, "nocoop", budget)[1]


def common_upper_bound(ch: BroadcastChannel, budget=None) -> float:
    """sup over p(x) of min(I(X;Y1)+C21, I(X;Y2)+C12, I(X;Y1,Y2))."""
    return _sup(ch, "upper", budget)[1]


def _witness_from(ch, params, kind):
    px = params["p_x"][0]
    qu = params["q_uhat"] if "q_uhat" in params else (
        identity_kernel(ch.ny2) if kind == "corollary" else constant_kernel(ch.ny2))
    qv = params["q_vhat"] if "q_vhat" in params else (
        identity_kernel(ch.ny1) if kind == "corollary" else constant_kernel(ch.ny1))
    return CommonWitness(px / px.sum(), np.asarray(qu), np.asarray(qv))


def optimize_common(ch: BroadcastChannel, scheme, budget=None) -> CommonRateReport:
    """Best rate of a scheme over p(x) and the relay kernels.

    scheme: 'none', 'single_step', 'two_step' (max over directions),
    'corollary' (Uh = Y2, Vh = Y1 fixed).
    """
    if scheme == "none":
        params, _ = _sup(ch, "nocoop", budget)
        w = _witness_from(ch, params, "nocoop")
        return single_step_rate(w, ch)
    if scheme == "single_step":
        params, _ = _sup(ch, "single", budget)
        return single_step_rate(_witness_from(ch, params, "single"), ch)
    if scheme == "two_step":
        p12, v12 = _sup(ch, "two12", budget)
        p21, v21 = _sup(ch, "two21", budget)
        if v12 >= v21:
            return two_step_rate(_witness_from(ch, p12, "two12"), ch, "12")
        return two_step_rate(_witness_from(ch, p21, "two21"), ch, "21")
    if scheme == "corollary":
        params, _ = _sup(ch, "corollary", budget)
        return best_two_step(_witness_from(ch, params, "corollary"), ch)
    raise ValueError(f"unknown scheme {scheme!r}")


def corollary_two_step_curve(ch: BroadcastChannel, c_grid, budget=None):
    """Rate with Uh = Y2, Vh = Y1 versus a symmetric link capacity C12 = C21 = C.

    Returns a list of (C, CommonRateReport).
    """
    out = []
    for c in c_grid:
        chc = ch.with_links(c, c)
        params, _ = _sup(chc, "corollary", budget)
        out.append((float(c), best_two_step(_witness_from(chc, params, "corollary"), chc)))
    return out


# ---------------------------------------------------------------------------
# two independent identical BSCs, closed form
# ---------------------------------------------------------------------------

def _bsbc2_entropies(p, p0):
    p0 = np.asarray(p0, dtype=float)
    q = 1 - p
    py = np.stack([q * p0 + p * (1 - p0), p * p0 + q * (1 - p0)])
    pyy = np.stack([q * q * p0 + p * p * (1 - p0),
                    np.full_like(p0, p * q), np.full_like(p0, p * q),
                    p * p * p0 + q * q * (1 - p0)])

    def ent(t):
        return -np.sum(np.where(t > 0, t * np.log2(np.where(t > 0, t, 1.0)), 0.0), axis=0)
    return ent(py), ent(pyy)


def bsbc2_rate_closed_form(p, c, p0):
    """min[H(Y1) - 2h(p) + C, H(Y1,Y2) - 2h(p)] at input bias p0 (valid for C >= h(p))."""
    hy1, hy12 = _bsbc2_entropies(p, p0)
    hp = binary_entropy(p)
    return np.minimum(hy1 - 2 * hp + c, hy12 - 2 * hp)


def bsbc2_curve_closed_form(p, c_grid):
    """sup over p0 of the closed form, for each C >= h(p); returns [(C, rate, p0)]."""
    hp = binary_entropy(p)
    out = []
    for c in c_grid:
        if c < hp - FEAS_TOL:
            raise ValueError(f"closed form needs C >= h(p) = {hp:.6f}, got {c}")
        p0, v = binary_sup(lambda t: bsbc2_rate_closed_form(p, c, t))
        out.append((float(c), v, p0))
    return out


# ---------------------------------------------------------------------------
# strong "more capable" condition
# ---------------------------------------------------------------------------

@dataclass
class MoreCapableReport:
    holds: bool
    min_margin: float
    samples: int
    capacity_if_holds: float | None
    window_ok: bool
    lower_equals_upper: bool
    p_x: np.ndarray | None = field(default=None, repr=False)


def strong_more_capable_check(ch: BroadcastChannel, budget=None) -> MoreCapableReport:
    """Check I(X;Y1) > I(X;Y2) + C12 - C21 + H(Y2|Y1,X) on a sample of inputs.

    ``holds`` means "not falsified over the sampled set": the grid over the
    input simplex (vertices included), Dirichlet draws and the optimizer's
    maximizer.  It cannot certify the condition for every p(x).
    """
    budget = budget or optimize.OptBudget()
    prob = CommonProblem(ch, "nocoop")
    if ch.nx == 2:
        g = np.linspace(0, 1, int(round(1 / 1e-4)) + 1)
        sample = np.stack([g, 1 - g], axis=1)
    else:
        sample = np.array(optimize.simplex_grid(ch.nx, max(budget.grid_res, 17)))
    rng = np.random.default_rng([budget.seed, 7])
    sample = np.concatenate([sample, rng.dirichlet(np.ones(ch.nx), size=1000)])

    def margin(px):
        i1, i2, _, _, h21x, _, _ = prob.terms(px)
        return i1 - (i2 + ch.c12 - ch.c21 + h21x)

    m = margin(sample)
    # capacity candidate: sup I(X;Y2) + C12
    cap_prob = _I2Problem(ch)
    best, val = optimize.maximize_scalar(cap_prob, budget)
    px_best = best["p_x"][0]
    if ch.nx == 2:
        p0, v = binary_sup(lambda t: cap_prob.stats(
            {"p_x": np.stack([t, 1 - t], axis=1)[:, None, :]})[:, 0])
        if v > val:
            val, px_best = v, np.array([p0, 1 - p0])
    m = np.concatenate([m, margin(px_best[None])])
    holds = bool(np.min(m) > 0)
    _, _, _, h12x, h21x, h12, h21 = (float(t[0]) for t in prob.terms(px_best[None]))
    window = (h21x < ch.c21 < h21) and (h12x < ch.c12 < h12)
    cap = val + ch.c12 if holds else None
    return MoreCapableReport(holds, float(np.min(m)), len(m), cap, bool(window),
                             holds and window, px_best)


class _I2Problem:
    def __init__(self, ch):
        self.ch = ch
        self.blocks = [("p_x", 1, ch.nx)]

    def stats(self, params):
        px = params["p_x"][:, 0, :]
        pxy = px[:, :, None] * self.ch.w2[None]
        return (H(px, [1]) + H(pxy.sum(1), [1]) - H(pxy, [1, 2]))[:, None]

    def score(self, stats, lam):
        return stats[:, 0]
