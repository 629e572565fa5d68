"""Channel constructors used by the CLI builtins and the tests."""
import numpy as np

from .prob import BroadcastChannel


def bsc(p, k=2):
    """Symmetric channel: keep with prob 1-p, otherwise uniform over the others."""
    m = np.full((k, k), p / (k - 1))
    np.fill_diagonal(m, 1 - p)
    return m


def cascade(w1, w_deg, c12=0.0, c21=0.0, name=""):
    """Physically degraded channel p(y1|x) p(y2|y1)."""
    w1, w_deg = np.asarray(w1, float), np.asarray(w_deg, float)
    return BroadcastChannel(w1[:, :, None] * w_deg[None, :, :], c12, c21, name)


def product(w1, w2, c12=0.0, c21=0.0, name=""):
    """Outputs conditionally independent given x: p(y1|x) p(y2|x)."""
    w1, w2 = np.asarray(w1, float), np.asarray(w2, float)
    return BroadcastChannel(w1[:, :, None] * w2[:, None, :], c12, c21, name)


def bsbc(p1, p2, c12=0.0, c21=0.0):
    """Degraded binary symmetric BC: Y1 = X+N1, Y2 = Y1+N2 (mod 2)."""
    return cascade(bsc(p1), bsc(p2), c12, c21, f"bsbc(p1={p1},p2={p2})")


def bsbc2(p, c12=0.0, c21=0.0):
    """Two independent identical BSCs: Y1 = X+N1, Y2 = X+N2."""
    return product(bsc(p), bsc(p), c12, c21, f"bsbc2(p={p})")


def deterministic(f1, f2, c12=0.0, c21=0.0, ny1=None, ny2=None):
    f1, f2 = np.asarray(f1, int), np.asarray(f2, int)
    ny1 = ny1 or int(f1.max()) + 1
    ny2 = ny2 or int(f2.max()) + 1
    w = np.zeros((len(f1), ny1, ny2))
    w[np.arange(len(f1)), f1, f2] = 1.0
    return BroadcastChannel(w, c12, c21, "deterministic")


def noiseless(k, c12=0.0, c21=0.0):
    """Y1 = Y2 = X."""
    return deterministic(np.arange(k), np.arange(k), c12, c21)


def random_channel(rng, nx=2, ny1=2, ny2=2, c12=0.0, c21=0.0):
    """Channel with each p(.,.|x) drawn from a flat Dirichlet."""
    w = rng.dirichlet(np.ones(ny1 * ny2), size=nx).reshape(nx, ny1, ny2)
    # renormalize in float to keep rows within the validity tolerance
    w /= w.sum(axis=(1, 2), keepdims=True)
    return BroadcastChannel(w, c12, c21, "random")
