"""Reference computations that share no code with the package.

Everything here loops over tensor cells in plain Python and uses math.log2,
except entropy_rows, a vectorized helper for brute-force grid sweeps.
The constants were produced by these formulas and frozen.
"""
import itertools
import math

import numpy as np

# closed forms, evaluated once with the helpers below
H_01 = 0.4689955935892812            # h(0.1)
H_018 = 0.6800770457282798           # h(0.18) = h(0.1 * 0.1)
H_026 = 0.8267463724926178           # h(0.26) = h(0.2 * 0.1)
CAP_01 = 0.5310044064107188          # 1 - h(0.1)
CAP_018 = 0.31992295427172024        # 1 - h(0.18)
THRESHOLD = 0.21108145213899854      # h(0.18) - h(0.1)
DEG_R1 = 0.3577507789033366          # h(0.26) - h(0.1)
DEG_IU1 = 0.17325362750738216        # 1 - h(0.26)
DEG_IU2 = 0.10914870339655591        # 1 - h(0.2 * 0.18) = 1 - h(0.308)
DEG_GAP = 0.06410492411082624        # DEG_IU1 - DEG_IU2
AXIS_C01 = 0.4199229542717202        # 1 - h(0.18) + 0.1
H_Y1Y2 = 1.6800770457282796          # H(Y1,Y2), two independent BSC(0.1), uniform X
I_X_Y1Y2 = 0.7420858585497172        # H(Y1,Y2) - 2 h(0.1)
H_Y1_GIVEN_Y2 = 0.6800770457282796   # H(Y1,Y2) - 1
TWO_STEP_055 = 0.6120088128214376    # 1 - 2 h(0.1) + 0.55
MARTON_SUMCAP = -0.14907263931756098  # (1-h(.1)) + (1-h(.18)) - 1
SMC_CAP = 0.16870910076930729        # 1 - h(0.3) + 0.05


def h(p):
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def conv(a, b):
    return a * (1 - b) + b * (1 - a)


def _cells(probs):
    shape = probs.shape
    for idx in itertools.product(*(range(s) for s in shape)):
        yield idx, float(probs[idx])


def entropy(probs, names, keep):
    """H(keep) by accumulating the marginal cell by cell."""
    pos = [names.index(k) for k in keep]
    acc = {}
    for idx, p in _cells(probs):
        key = tuple(idx[i] for i in pos)
        acc[key] = acc.get(key, 0.0) + p
    total = 0.0
    for p in acc.values():
        if p > 0:
            total -= p * math.log2(p)
    return total


def mutual_information(probs, names, a, b, given=()):
    a, b, given = list(a), list(b), list(given)
    hg = entropy(probs, names, given) if given else 0.0
    return (entropy(probs, names, a + given) + entropy(probs, names, b + given)
            - entropy(probs, names, a + b + given) - hg)


def entropy_rows(p):
    """Row entropies of a (N, K) array; the one vectorized helper, for grid sweeps."""
    p = np.asarray(p, float).reshape(len(p), -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log2(p), 0.0)
    return t.sum(1)
