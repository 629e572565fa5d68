"""Finite-alphabet distributions and information measures (bits)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import entr

PMF_TOL = 1e-12
MAX_CELLS = 10**7
_LN2 = np.log(2.0)


class InvalidDistribution(ValueError):
    """Raised when a probability table violates its invariants.

    ``location`` carries the offending index (row of a kernel, input symbol of
    a channel) when one can be named.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


def check_rows(table, tol=PMF_TOL, what="distribution"):
    """Validate that ``table`` sums to one along its last axis."""
    table = np.asarray(table, dtype=float)
    if table.ndim == 0 or table.shape[-1] < 1:
        raise InvalidDistribution(f"{what}: empty alphabet")
    if not np.all(np.isfinite(table)):
        raise InvalidDistribution(f"{what}: non-finite entry")
    neg = np.argwhere(table < 0)
    if len(neg):
        idx = tuple(int(i) for i in neg[0])
        raise InvalidDistribution(f"{what}: negative entry at {idx}", idx)
    sums = table.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > tol)
    if len(bad):
        idx = tuple(int(i) for i in bad[0])
        raise InvalidDistribution(
            f"{what}: row {idx} sums to {float(sums[tuple(idx)])!r}", idx)
    return table


def binary_entropy(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def bconv(a, b):
    """Binary convolution a*b = a(1-b) + b(1-a)."""
    return a * (1 - b) + b * (1 - a)


# ---------------------------------------------------------------------------
# joint pmfs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointPmf:
    names: tuple
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        names = tuple(self.names)
        if probs.ndim != len(names):
            raise ValueError(f"{len(names)} names for a {probs.ndim}-d tensor")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names: {names}")
        if probs.size > MAX_CELLS:
            raise ValueError(f"joint has {probs.size} cells (cap {MAX_CELLS})")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise InvalidDistribution("joint pmf has negative or non-finite mass")
        if abs(probs.sum() - 1.0) > PMF_TOL:
            raise InvalidDistribution(f"joint pmf mass {probs.sum()!r} != 1")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "probs", probs)

    @property
    def sizes(self):
        return dict(zip(self.names, self.probs.shape))

    def axes(self, vars):
        out = []
        for v in vars:
            if v not in self.names:
                raise KeyError(f"unknown variable {v!r}; have {self.names}")
            out.append(self.names.index(v))
        return out


def _as_vars(vars):
    if isinstance(vars, str):
        return (vars,)
    return tuple(vars)


def marginalize(j: JointPmf, keep) -> JointPmf:
    keep = _as_vars(keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    axes = j.axes(keep)
    drop = tuple(i for i in range(len(j.names)) if i not in axes)
    m = j.probs.sum(axis=drop) if drop else j.probs
    # remaining axes are in original order; permute to requested order
    remaining = [i for i in range(len(j.names)) if i in axes]
    perm = [remaining.index(a) for a in axes]
    return JointPmf(keep, np.transpose(m, perm))


def _entropy_bits(p):
    return float(entr(p).sum() / _LN2)


def entropy(j: JointPmf, vars) -> float:
    vars = _as_vars(vars)
    if not vars:
        raise ValueError("entropy of an empty variable set")
    return _entropy_bits(marginalize(j, vars).probs)


def _joint_entropy(j, vars):
    return entropy(j, vars) if vars else 0.0


def mutual_information(j: JointPmf, a, b, given=()) -> float:
    """I(A;B|given) in bits."""
    a, b, given = _as_vars(a), _as_vars(b), _as_vars(given)
    if not a or not b:
        raise ValueError("mutual information needs nonempty A and B")
    sa, sb, sg = set(a), set(b), set(given)
    if (sa & sb) or (sa & sg) or (sb & sg) or len(sa) != len(a) or len(sb) != len(b):
        raise ValueError(f"overlapping variable sets {a}, {b}, {given}")
    j.axes(a + b + given)
    val = (_joint_entropy(j, a + given) + _joint_entropy(j, b + given)
           - _joint_entropy(j, a + b + given) - _joint_entropy(j, given))
    return max(val, 0.0)


def conditional_entropy(j: JointPmf, a, given=()) -> float:
    a, given = _as_vars(a), _as_vars(given)
    return max(_joint_entropy(j, a + given) - _joint_entropy(j, given), 0.0)


# ---------------------------------------------------------------------------
# factors and composition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Factor:
    """Conditional table p(out | given) with shape (*given_sizes, *out_sizes)."""
    table: np.ndarray = field(repr=False)
    out: tuple
    given: tuple = ()

    def __post_init__(self):
        out, given = _as_vars(self.out), _as_vars(self.given)
        table = np.asarray(self.table, dtype=float)
        if table.ndim != len(out) + len(given):
            raise ValueError(
                f"factor p({','.join(out)}|{','.join(given)}) has {table.ndim}-d table")
        if set(out) & set(given):
            raise ValueError("variable both conditioned on and produced")
        flat = table.reshape(table.shape[:len(given)] + (-1,))
        check_rows(flat, what=f"p({','.join(out)}|{','.join(given)})")
        object.__setattr__(self, "out", out)
        object.__setattr__(self, "given", given)
        object.__setattr__(self, "table", table)


def Pmf(probs, name) -> Factor:
    return Factor(np.asarray(probs, dtype=float), (name,))


def Kernel(rows, out, given) -> Factor:
    return Factor(np.asarray(rows, dtype=float), (out,), (given,))


def identity_kernel(k):
    return np.eye(k)


def constant_kernel(rows, k=1):
    """Kernel mapping everything to symbol 0 of a size-k alphabet."""
    t = np.zeros((rows, k))
    t[:, 0] = 1.0
    return t


def compose_chain(parts: Sequence) -> JointPmf:
    """Multiply factors left to right into a dense joint.

    Each element is a :class:`Factor` or a :class:`BroadcastChannel` (which is
    expanded with its default variable names X, Y1, Y2).
    """
    names: list = []
    joint = np.ones(())
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    for part in parts:
        if isinstance(part, BroadcastChannel):
            part = part.factor()
        missing = [g for g in part.given if g not in names]
        if missing:
            raise ValueError(f"dangling conditioning variable(s) {missing}")
        clash = [o for o in part.out if o in names]
        if clash:
            raise ValueError(f"variable(s) {clash} produced twice")
        for g, size in zip(part.given, part.table.shape):
            if joint.shape[names.index(g)] != size:
                raise ValueError(
                    f"dimension mismatch on {g}: {joint.shape[names.index(g)]} vs {size}")
        new = names + list(part.out)
        if len(new) > len(letters):
            raise ValueError("too many variables")
        sub_j = letters[:len(names)]
        sub_f = "".join(letters[names.index(g)] for g in part.given) + \
            letters[len(names):len(new)]
        ncells = joint.size * int(np.prod(part.table.shape[len(part.given):]))
        if ncells > MAX_CELLS:
            raise ValueError(f"joint would have {ncells} cells (cap {MAX_CELLS})")
        joint = np.einsum(f"{sub_j},{sub_f}->{letters[:len(new)]}", joint, part.table)
        names = new
    return JointPmf(tuple(names), joint)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BroadcastChannel:
    """p(y1, y2 | x) with conference capacities c12 (Rx1->Rx2), c21 (Rx2->Rx1)."""
    w: np.ndarray = field(repr=False)
    c12: float = 0.0
    c21: float = 0.0
    name: str = ""

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 3:
            raise ValueError(f"transition tensor must be 3-d [x][y1][y2], got {w.ndim}-d")
        flat = w.reshape(w.shape[0], -1)
        try:
            check_rows(flat, what="p(y1,y2|x)")
        except InvalidDistribution as e:
            loc = e.location
            if loc is not None and len(loc) == 2:
                loc = (loc[0],) + tuple(int(i) for i in np.unravel_index(loc[1], w.shape[1:]))
            raise InvalidDistribution(str(e), loc) from None
        if not (self.c12 >= 0 and self.c21 >= 0):
            raise ValueError(f"conference capacities must be >= 0: {self.c12}, {self.c21}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "c12", float(self.c12))
        object.__setattr__(self, "c21", float(self.c21))

    @property
    def nx(self):
        return self.w.shape[0]

    @property
    def ny1(self):
        return self.w.shape[1]

    @property
    def ny2(self):
        return self.w.shape[2]

    @property
    def w1(self):
        """p(y1|x)."""
        return self.w.sum(axis=2)

    @property
    def w2(self):
        """p(y2|x)."""
        return self.w.sum(axis=1)

    def factor(self, x="X", y1="Y1", y2="Y2") -> Factor:
        return Factor(self.w, (y1, y2), (x,))

    def with_links(self, c12=None, c21=None) -> "BroadcastChannel":
        return BroadcastChannel(self.w, self.c12 if c12 is None else c12,
                                self.c21 if c21 is None else c21, self.name)


@dataclass(frozen=True)
class Degradedness:
    degraded: bool
    kernel: np.ndarray | None
    residual: float


def is_physically_degraded(ch: BroadcastChannel, tol=1e-9) -> Degradedness:
    """Test whether p(y2|y1,x) is the same kernel q(y2|y1) for every admissible x.

    The fitted q is the average of p(y2|y1,x) weighted by p(y1|x) (that is,
    by p(x|y1) under a uniform input) over inputs with p(y1|x) > tol.
    """
    w1 = ch.w1
    admissible = w1 > tol
    cond = np.divide(ch.w, w1[:, :, None], out=np.zeros_like(ch.w),
                     where=admissible[:, :, None])
    weights = np.where(admissible, w1, 0.0)
    totals = weights.sum(axis=0)
    q = np.full((ch.ny1, ch.ny2), 1.0 / ch.ny2)
    seen = totals > 0
    q[seen] = (weights[:, seen, None] * cond[:, seen, :]).sum(axis=0) / totals[seen, None]
    dev = np.abs(cond - q[None, :, :])
    dev = np.where(admissible[:, :, None], dev, 0.0)
    resid = float(dev.max()) if dev.size else 0.0
    ok = resid <= tol
    return Degradedness(ok, q if ok else None, resid)


# ---------------------------------------------------------------------------
# batched kernels for the optimizers
# ---------------------------------------------------------------------------

def H(p, axes: Iterable[int]):
    """Entropy (bits) of batched tables, summing ``entr`` over ``axes``."""
    return entr(p).sum(axis=tuple(axes)) / _LN2


def row_entropy(table):
    """Entropy of each row along the last axis."""
    return entr(np.asarray(table, dtype=float)).sum(axis=-1) / _LN2
