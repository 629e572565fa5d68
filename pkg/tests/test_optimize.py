import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopcast import optimize
from coopcast.frontier import build_frontier, polytope_vertex
from coopcast.optimize import OptBudget


class Quadratic:
    """Concave toy objective on one simplex row: -|p - target|^2."""

    def __init__(self, target):
        self.target = np.asarray(target)
        self.blocks = [("p", 1, len(target))]

    def stats(self, params):
        d = params["p"][:, 0, :] - self.target
        return -(d * d).sum(1)[:, None]

    def score(self, stats, lam):
        return stats[:, 0]


def test_simplex_grid_counts():
    g = optimize.simplex_grid(3, 5)
    assert len(g) == math.comb(4 + 2, 2)
    assert np.allclose(g.sum(1), 1.0)
    assert np.all(g >= 0)


def test_budget_validation():
    with pytest.raises(ValueError):
        OptBudget(lambda_count=1)
    with pytest.raises(ValueError):
        OptBudget(restarts=0)
    assert len(OptBudget().lambdas) == 65


def test_maximize_interior_target():
    prob = Quadratic([0.13, 0.52, 0.35])
    best, val = optimize.maximize_scalar(prob, OptBudget(restarts=4))
    assert val == pytest.approx(0.0, abs=1e-6)
    assert np.allclose(best["p"][0], prob.target, atol=1e-3)


def test_run_is_deterministic():
    prob = Quadratic([0.2, 0.8])
    b = OptBudget(restarts=3, seed=7)
    p1, s1 = optimize.run(prob, np.array([0.0, 1.0]), b)
    p2, s2 = optimize.run(prob, np.array([0.0, 1.0]), b)
    assert np.array_equal(p1["p"], p2["p"]) and np.array_equal(s1, s2)


def test_thread_count_does_not_change_result(monkeypatch):
    prob = Quadratic([0.3, 0.3, 0.4])
    lam = np.linspace(0, 1, 6)
    b = OptBudget(restarts=2)
    monkeypatch.setenv("COOPCAST_THREADS", "1")
    p1, s1 = optimize.run(prob, lam, b)
    monkeypatch.setenv("COOPCAST_THREADS", "3")
    p3, s3 = optimize.run(prob, lam, b)
    assert np.array_equal(p1["p"], p3["p"]) and np.array_equal(s1, s3)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0, 3), b=st.floats(0, 3), c=st.floats(0, 5), lam=st.floats(0, 1))
def test_polytope_vertex_is_lp_optimum(a, b, c, lam):
    val, r1, r2 = polytope_vertex(a, b, c, lam)
    assert 0 <= r1 <= a + 1e-12 and 0 <= r2 <= b + 1e-12 and r1 + r2 <= c + 1e-12
    # brute force over a fine grid of the polytope
    g1 = np.linspace(0, min(a, c), 101)
    g2 = np.clip(np.minimum(b, c - g1), 0, None)
    assert val >= np.max(lam * g1 + (1 - lam) * g2) - 1e-12


def test_build_frontier_takes_best_over_pool():
    caps = np.array([[1.0, 0.0, np.inf], [0.0, 1.0, np.inf], [0.6, 0.6, np.inf]])
    params = {"w": np.arange(3)}
    fr = build_frontier("toy", caps, np.ones(3, bool), params, [0.0, 0.5, 1.0])
    assert fr.points == [(0.0, 1.0), (0.6, 0.6), (1.0, 0.0)]
    assert [int(fr.witnesses[i]["w"]) for i in fr.witness_ids] == [1, 2, 0]


def test_build_frontier_skips_invalid_and_reports_origin():
    caps = np.array([[5.0, 5.0, 10.0]])
    fr = build_frontier("toy", caps, np.zeros(1, bool), {"w": np.zeros(1)}, [0.5])
    assert fr.points == [(0.0, 0.0)] and fr.witness_ids[0] == -1
