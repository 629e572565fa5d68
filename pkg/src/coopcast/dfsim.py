"""Monte Carlo simulation of block-Markov decode-and-forward over a degraded BC.

Rx1 decodes both messages and forwards the bin index of its estimate of w2
over the conference link; Rx2 resolves its message from the bin and a list
built from its own output in the previous block.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .degraded import NotDegraded
from .prob import (BroadcastChannel, Kernel, Pmf, check_rows, compose_chain,
                   is_physically_degraded, mutual_information)

MAX_CODEWORDS = 2 ** 20


class CodeTooLarge(ValueError):
    pass


def book_size(n, rate):
    """ceil(2^{n r}), with the exponent rounded so that exact powers stay exact."""
    if rate < 0:
        raise ValueError(f"rate must be nonnegative, got {rate}")
    e = round(n * rate, 9)
    return int(math.ceil(2.0 ** e))


@dataclass(frozen=True)
class DfCode:
    n: int
    r1: float
    r2: float
    c12: float
    m_r: int
    p_u: np.ndarray = field(repr=False)
    p_x_given_u: np.ndarray = field(repr=False)
    u_book: np.ndarray = field(repr=False)    # (m_r, m2, n)
    x_book: np.ndarray = field(repr=False)    # (m_r, m2, m1, n)
    bins: np.ndarray = field(repr=False)      # (m2,) bin of each w2
    notes: tuple = ()

    @property
    def m1(self):
        return self.x_book.shape[2]

    @property
    def m2(self):
        return self.u_book.shape[1]

    def realized_rates(self):
        """log2(size)/n for w1, w2 and the bin index."""
        return (math.log2(self.m1) / self.n, math.log2(self.m2) / self.n,
                math.log2(self.m_r) / self.n)


def generate_code(p_u, p_x_given_u, n, r1, r2, c12, seed=0, max_codewords=MAX_CODEWORDS,
                  stream=()):
    """Draw superposition codebooks and a uniform random binning of w2.

    The draw uses the PRNG stream (seed, n, *stream).
    """
    p_u = np.asarray(p_u, float)
    p_x_given_u = np.asarray(p_x_given_u, float)
    check_rows(p_u[None], what="p(u)")
    check_rows(p_x_given_u, what="p(x|u)")
    if p_x_given_u.shape[0] != len(p_u):
        raise ValueError("p(x|u) must have one row per u symbol")
    if n < 1:
        raise ValueError("blocklength must be positive")
    m1, m2, m_r = book_size(n, r1), book_size(n, r2), book_size(n, c12)
    total = m_r * m2 * (1 + m1)
    if total > max_codewords:
        raise CodeTooLarge(f"{total} codewords exceed the cap of {max_codewords}")
    notes = []
    for name, r, m in (("r1", r1, m1), ("r2", r2, m2), ("c12", c12, m_r)):
        if not math.isclose(math.log2(m), n * r, abs_tol=1e-9):
            msg = f"2^(n*{name}) = {2 ** (n * r):.4g} ceiled to {m}"
            notes.append(msg)
            warnings.warn(msg, stacklevel=2)
    rng = np.random.default_rng([seed, n, *stream])
    nx = p_x_given_u.shape[1]
    u_book = rng.choice(len(p_u), size=(m_r, m2, n), p=p_u)
    # x | u by inverse CDF on the row selected by each u symbol
    cdf = np.cumsum(p_x_given_u, axis=1)
    cdf[:, -1] = 1.0
    v = rng.random((m_r, m2, m1, n))
    rows = cdf[u_book][:, :, None, :, :]                      # (m_r, m2, 1, n, nx)
    x_book = np.minimum((v[..., None] >= rows).sum(-1), nx - 1)
    bins = rng.integers(0, m_r, size=m2)
    for a in (u_book, x_book, bins):
        a.setflags(write=False)
    return DfCode(n, r1, r2, c12, m_r, p_u, p_x_given_u, u_book, x_book, bins, tuple(notes))


@dataclass(frozen=True)
class SimConfig:
    blocks: int = 3
    trials: int = 1000
    seed: int = 0
    decoder: str = "ml"
    epsilon: float = 0.05
    n_grid: tuple = (4, 8, 12, 16)
    strict: bool = False
    ensemble: bool = False

    def __post_init__(self):
        if self.blocks < 2:
            raise ValueError("need at least 2 blocks")
        if self.trials < 1:
            raise ValueError("need at least 1 trial")
        if self.decoder not in ("ml", "typicality"):
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.decoder == "typicality" and not self.epsilon > 0:
            raise ValueError("typicality decoder needs epsilon > 0")


def sample_outputs(ch: BroadcastChannel, x, rng):
    """Draw (y1, y2) for an array of input symbols."""
    x = np.asarray(x)
    flat = ch.w.reshape(ch.nx, -1)
    cdf = np.cumsum(flat, axis=1)
    cdf[:, -1] = 1.0
    v = rng.random(x.shape)
    idx = np.minimum((v[..., None] >= cdf[x]).sum(-1), flat.shape[1] - 1)
    return np.divmod(idx, ch.ny2)


def wilson(k, n):
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _log2(a):
    with np.errstate(divide="ignore"):
        return np.log2(a)


class _Decoders:
    """Per-code lookup tables shared by every trial."""

    def __init__(self, code, ch, cfg):
        self.code, self.ch, self.cfg = code, ch, cfg
        self.lw1 = _log2(ch.w1)                                   # (x, y1)
        w_u2 = code.p_x_given_u @ ch.w2                           # p(y2|u)
        self.lw_u2 = _log2(w_u2)
        p_u = code.p_u
        p_y2 = p_u @ w_u2
        p_uy2 = p_u[:, None] * w_u2
        self.targets = {
            "u": -_sum_ent(p_u), "y": -_sum_ent(p_y2), "uy": -_sum_ent(p_uy2.ravel()),
        }
        self.lp_u, self.lp_y2, self.lp_uy2 = _log2(p_u), _log2(p_y2), _log2(p_uy2)
        self.bin_members = [np.flatnonzero(code.bins == s) for s in range(code.m_r)]

    def rx1(self, s_hat, y1):
        xb = self.code.x_book[s_hat]                              # (m2, m1, n)
        ll = self.lw1[xb, y1].sum(-1)
        w2, w1 = np.unravel_index(int(np.argmax(ll)), ll.shape)
        return int(w1), int(w2)

    def typical_list(self, s_prev, y2):
        """w2 with (u(w2|s_prev), y2) weakly typical in every nonempty subset."""
        ub = self.code.u_book[s_prev]                             # (m2, n)
        n, eps = self.code.n, self.cfg.epsilon
        t = self.targets
        ok = np.abs(self.lp_u[ub].sum(-1) / n - t["u"]) <= eps
        ok &= np.abs(self.lp_uy2[ub, y2].sum(-1) / n - t["uy"]) <= eps
        if abs(self.lp_y2[y2].sum() / n - t["y"]) > eps:
            ok[:] = False
        return np.flatnonzero(ok)

    def rx2(self, s_prev, s_now, y2):
        """Decision for w2 sent in the previous block, and the list size (or -1)."""
        cand = self.bin_members[s_now]
        size = -1
        if self.cfg.decoder == "typicality":
            lst = self.typical_list(s_prev, y2)
            size = len(lst)
            cand = np.intersect1d(cand, lst)
        if len(cand) == 0:
            return -1, size
        if len(cand) == 1:
            return int(cand[0]), size
        ll = self.lw_u2[self.code.u_book[s_prev][cand], y2].sum(-1)
        best = np.flatnonzero(ll == ll.max())
        if self.cfg.strict and (self.cfg.decoder == "typicality" or len(best) > 1):
            return -1, size
        return int(cand[best[0]]), size


def _sum_ent(p):
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


@dataclass
class TrialRecord:
    w1: np.ndarray
    w2: np.ndarray
    w1_hat: np.ndarray
    w2_hat_rx1: np.ndarray
    w2_hat_rx2: np.ndarray
    list_sizes: np.ndarray


def simulate_trial(code: DfCode, ch: BroadcastChannel, cfg: SimConfig, trial: int,
                   tables=None) -> TrialRecord:
    """One transmission of B-1 message pairs.

    Block i = 0..B-2 carries (w1_i, w2_i) on the cloud indexed by the true bin
    s_i of w2_{i-1} (s_0 = 0).  The bin of w2_{B-2} reaches Rx2 over the link
    during the final block, which carries no payload and is not simulated.
    """
    tb = tables or _Decoders(code, ch, cfg)
    rng = np.random.default_rng([cfg.seed, 1, code.n, trial])
    k = cfg.blocks - 1
    w1 = rng.integers(0, code.m1, size=k)
    w2 = rng.integers(0, code.m2, size=k)
    s = np.concatenate([[0], code.bins[w2]])                     # true bins, length k+1
    x = code.x_book[s[:k], w2, w1]                                # (k, n)
    y1, y2 = sample_outputs(ch, x, rng)

    w1_hat = np.empty(k, int)
    w2_rx1 = np.empty(k, int)
    w2_rx2 = np.empty(k, int)
    sizes = np.empty(k, int)
    s_hat = np.zeros(k + 1, int)                                  # bins as relayed by Rx1
    for i in range(k):
        w1_hat[i], w2_rx1[i] = tb.rx1(s_hat[i], y1[i])
        s_hat[i + 1] = code.bins[w2_rx1[i]]
    for i in range(k):
        w2_rx2[i], sizes[i] = tb.rx2(s_hat[i], s_hat[i + 1], y2[i])
    return TrialRecord(w1, w2, w1_hat, w2_rx1, w2_rx2, sizes)


@dataclass
class DfSimEntry:
    n: int
    r1: float
    r2: float
    c12: float
    realized: tuple
    trials: int
    errors1: int
    errors2: int
    errors: int
    pe1: float
    pe2: float
    pe: float
    ci1: tuple
    ci2: tuple
    ci: tuple
    mean_list: float
    list_bound: float
    notes: tuple = ()

    def sandwich_ok(self):
        return max(self.errors1, self.errors2) <= self.errors <= self.errors1 + self.errors2


@dataclass
class DfSimReport:
    config: SimConfig
    entries: list

    def pe(self):
        return np.array([e.pe for e in self.entries])

    def sandwich_ok(self):
        return all(e.sandwich_ok() for e in self.entries)


def _require_degraded(ch):
    res = is_physically_degraded(ch)
    if not res.degraded:
        raise NotDegraded(f"simulator needs a physically degraded channel "
                          f"(residual {res.residual:.3g})")


def list_bound(code, ch, epsilon):
    """1 + 2^{n(R2 - I(U;Y2) + 3 eps)}, clipped at the codebook size."""
    j = compose_chain([Pmf(code.p_u, "U"), Kernel(code.p_x_given_u, "X", "U"), ch])
    i_uy2 = mutual_information(j, "U", "Y2")
    r2 = code.realized_rates()[1]
    return float(min(1.0 + 2.0 ** (code.n * (r2 - i_uy2 + 3 * epsilon)), code.m2))


def _run(codes, ch, cfg, n, r1, r2, c12):
    """Tally errors over trials; ``codes(t)`` returns (code, tables) for trial t."""
    e1 = e2 = e = 0
    list_total, list_count, bound_total = 0, 0, 0.0
    realized = np.zeros(3)
    notes = set()
    for t in range(cfg.trials):
        code, tb = codes(t)
        rec = simulate_trial(code, ch, cfg, t, tb)
        bad1 = bool(np.any(rec.w1_hat != rec.w1))
        bad2 = bool(np.any(rec.w2_hat_rx2 != rec.w2))
        e1 += bad1
        e2 += bad2
        e += bad1 or bad2
        if cfg.decoder == "typicality":
            list_total += int(rec.list_sizes.sum())
            list_count += len(rec.list_sizes)
        if t == 0:
            realized = code.realized_rates()
            notes.update(code.notes)
            if cfg.decoder == "typicality":
                bound_total = list_bound(code, ch, cfg.epsilon)
    T = cfg.trials
    mean_list = list_total / list_count if list_count else float("nan")
    bound = bound_total if cfg.decoder == "typicality" else float("nan")
    return DfSimEntry(n, r1, r2, c12, tuple(realized), T,
                      e1, e2, e, e1 / T, e2 / T, e / T, wilson(e1, T), wilson(e2, T),
                      wilson(e, T), mean_list, bound, tuple(sorted(notes)))


def run_df(code: DfCode, ch: BroadcastChannel, cfg: SimConfig) -> DfSimEntry:
    """Simulate ``cfg.trials`` independent transmissions of one fixed code.

    A trial is in error for receiver k if any of its B-1 messages is decoded
    wrongly; P_e counts trials where either receiver errs.
    """
    _require_degraded(ch)
    tb = _Decoders(code, ch, cfg)
    return _run(lambda t: (code, tb), ch, cfg, code.n, code.r1, code.r2, code.c12)


def run_df_ensemble(p_u, p_x_given_u, ch, n, r1, r2, cfg: SimConfig) -> DfSimEntry:
    """Like :func:`run_df`, but every trial draws its own code.

    This estimates the error probability averaged over the random-code
    ensemble rather than that of one particular code.
    """
    _require_degraded(ch)

    def codes(t):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            code = generate_code(p_u, p_x_given_u, n, r1, r2, ch.c12, cfg.seed,
                                 stream=(0, t))
        return code, _Decoders(code, ch, cfg)
    return _run(codes, ch, cfg, n, r1, r2, ch.c12)


def simulate(p_u, p_x_given_u, ch: BroadcastChannel, r1, r2, cfg: SimConfig) -> DfSimReport:
    """Run the simulator at every blocklength of ``cfg.n_grid``."""
    _require_degraded(ch)
    entries = []
    for n in cfg.n_grid:
        if cfg.ensemble:
            entries.append(run_df_ensemble(p_u, p_x_given_u, ch, n, r1, r2, cfg))
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            code = generate_code(p_u, p_x_given_u, n, r1, r2, ch.c12, cfg.seed)
        entries.append(run_df(code, ch, cfg))
    return DfSimReport(cfg, entries)


def list_size_diagnostic(code: DfCode, ch: BroadcastChannel, cfg: SimConfig):
    """(empirical mean list size, analytic bound) under the typicality decoder."""
    if cfg.decoder != "typicality":
        raise ValueError("list-size diagnostic needs the typicality decoder")
    entry = run_df(code, ch, cfg)
    return entry.mean_list, entry.list_bound

