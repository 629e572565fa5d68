import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from coopcast import channels
from coopcast.prob import (BroadcastChannel, InvalidDistribution, JointPmf, Kernel, Pmf,
                           binary_entropy, bconv, compose_chain, conditional_entropy,
                           entropy, identity_kernel, is_physically_degraded, marginalize,
                           mutual_information)


def random_joint(rng, nvars=None):
    nvars = nvars or int(rng.integers(1, 4))
    shape = tuple(int(s) for s in rng.integers(1, 4, size=nvars))
    p = rng.dirichlet(np.full(int(np.prod(shape)), 0.5)).reshape(shape)
    # exact zeros exercise the 0 log 0 convention
    p[p < 0.02] = 0.0
    p /= p.sum()
    return JointPmf(tuple("ABC"[:nvars]), p)


@st.composite
def joints(draw, nvars=3):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_joint(np.random.default_rng(seed), nvars)


# ---- entropy ---------------------------------------------------------------

def test_entropy_uniform_pair():
    j = JointPmf(("A", "B"), np.full((2, 2), 0.25))
    assert entropy(j, "A") == pytest.approx(1.0, abs=1e-15)


def test_entropy_point_mass():
    p = np.zeros((3, 2))
    p[1, 0] = 1.0
    assert entropy(JointPmf(("A", "B"), p), ("A", "B")) == 0.0


def test_entropy_bernoulli():
    j = JointPmf(("A",), [0.1, 0.9])
    assert entropy(j, "A") == pytest.approx(oracle.H_01, abs=1e-15)


def test_entropy_unknown_variable():
    j = JointPmf(("A",), [0.5, 0.5])
    with pytest.raises(KeyError):
        entropy(j, "Z")


# ---- binary entropy ----------------------------------------------------------

@pytest.mark.parametrize("p, expected", [(0.5, 1.0), (0.0, 0.0), (1.0, 0.0),
                                         (0.18, oracle.H_018), (0.1, oracle.H_01)])
def test_binary_entropy_values(p, expected):
    assert binary_entropy(p) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
def test_binary_entropy_rejects_outside_unit_interval(p):
    with pytest.raises(ValueError):
        binary_entropy(p)


def test_bconv():
    assert bconv(0.2, 0.1) == pytest.approx(0.26, abs=1e-15)
    assert bconv(0.0, 0.3) == pytest.approx(0.3)


# ---- mutual information -------------------------------------------------------

def test_mi_independent():
    p = np.outer([0.3, 0.7], [0.2, 0.5, 0.3])
    assert mutual_information(JointPmf(("A", "B"), p), "A", "B") == pytest.approx(0, abs=1e-15)


def test_mi_identical_bits():
    j = JointPmf(("A", "B"), np.diag([0.5, 0.5]))
    assert mutual_information(j, "A", "B") == pytest.approx(1.0, abs=1e-15)


def test_mi_bsc():
    j = compose_chain([Pmf([0.5, 0.5], "X"), Kernel(channels.bsc(0.1), "Y", "X")])
    assert mutual_information(j, "X", "Y") == pytest.approx(oracle.CAP_01, abs=1e-15)


def test_mi_rejects_overlap_and_unknown():
    j = JointPmf(("A", "B", "C"), np.full((2, 2, 2), 0.125))
    with pytest.raises(ValueError):
        mutual_information(j, "A", ("A", "B"))
    with pytest.raises(ValueError):
        mutual_information(j, "A", "B", "A")
    with pytest.raises(KeyError):
        mutual_information(j, "A", "Q")


# ---- compose / marginalize -------------------------------------------------------

def test_compose_mass_and_identity():
    j = compose_chain([Pmf([0.3, 0.7], "U"), Kernel(identity_kernel(2), "X", "U"),
                       channels.bsbc(0.1, 0.2)])
    assert j.names == ("U", "X", "Y1", "Y2")
    assert j.probs.sum() == pytest.approx(1.0, abs=1e-15)
    ux = marginalize(j, ("U", "X")).probs
    assert np.allclose(ux, np.diag([0.3, 0.7]), atol=0)


def test_compose_superposition_example():
    j = compose_chain([Pmf([0.5, 0.5], "U"), Kernel(channels.bsc(0.2), "X", "U"),
                       channels.bsbc(0.1, 0.1)])
    assert mutual_information(j, "U", "Y1") == pytest.approx(oracle.DEG_IU1, abs=1e-12)
    assert np.allclose(marginalize(j, "Y1").probs, [0.5, 0.5], atol=1e-15)


def test_compose_errors():
    with pytest.raises(ValueError, match="dangling"):
        compose_chain([Kernel(channels.bsc(0.1), "X", "U")])
    with pytest.raises(ValueError, match="mismatch"):
        compose_chain([Pmf([0.2, 0.3, 0.5], "U"), Kernel(channels.bsc(0.1), "X", "U")])
    with pytest.raises(ValueError, match="twice"):
        compose_chain([Pmf([0.5, 0.5], "U"), Pmf([0.5, 0.5], "U")])


def test_marginalize_keep_all_and_product():
    a, b = np.array([0.2, 0.8]), np.array([0.1, 0.6, 0.3])
    j = JointPmf(("A", "B"), np.outer(a, b))
    assert np.array_equal(marginalize(j, ("A", "B")).probs, j.probs)
    assert np.allclose(marginalize(j, "B").probs, b, atol=1e-15)
    assert np.allclose(marginalize(j, ("B", "A")).probs, np.outer(a, b).T, atol=0)
    with pytest.raises(KeyError):
        marginalize(j, "Z")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_compose_recovers_factors(seed):
    rng = np.random.default_rng(seed)
    pu = rng.dirichlet(np.ones(3))
    k = rng.dirichlet(np.ones(2), size=3)
    ch = channels.random_channel(rng, 2, 3, 2)
    j = compose_chain([Pmf(pu, "U"), Kernel(k, "X", "U"), ch])
    assert np.allclose(marginalize(j, "U").probs, pu, atol=1e-12)
    ux = marginalize(j, ("U", "X")).probs
    assert np.allclose(ux / ux.sum(1, keepdims=True), k, atol=1e-12)
    xy = marginalize(j, ("X", "Y1", "Y2")).probs
    px = xy.sum((1, 2))
    assert np.allclose(xy / px[:, None, None], ch.w, atol=1e-12)


# ---- validation -----------------------------------------------------------------

def test_invalid_pmf_rejected():
    with pytest.raises(InvalidDistribution):
        Pmf([0.5, 0.4999], "X")
    with pytest.raises(InvalidDistribution):
        Pmf([1.2, -0.2], "X")
    with pytest.raises(InvalidDistribution):
        JointPmf(("A",), [0.6, 0.6])


def test_channel_row_error_has_location():
    w = np.full((2, 2, 2), 0.25)
    w[1, 1, 1] = 0.2
    with pytest.raises(InvalidDistribution) as e:
        BroadcastChannel(w)
    assert e.value.location[0] == 1


def test_negative_link_rejected():
    with pytest.raises(ValueError):
        BroadcastChannel(np.full((2, 2, 2), 0.25), c12=-0.1)


# ---- degradedness -------------------------------------------------------------------

def test_cascade_is_degraded_with_fitted_kernel():
    res = is_physically_degraded(channels.bsbc(0.1, 0.2))
    assert res.degraded
    assert np.allclose(res.kernel, channels.bsc(0.2), atol=1e-12)


def test_clean_first_output_is_degraded():
    ch = channels.cascade(np.eye(2), channels.bsc(0.3))
    assert is_physically_degraded(ch).degraded


def test_independent_noises_not_degraded():
    assert not is_physically_degraded(channels.bsbc2(0.1)).degraded


# ---- oracle agreement and inequalities ---------------------------------------------------

def test_measures_match_bruteforce_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        j = random_joint(rng, 3)
        p = j.probs
        names = list(j.names)
        for keep in (("A",), ("B", "C"), ("A", "B", "C")):
            assert entropy(j, keep) == pytest.approx(
                oracle.entropy(p, names, keep), abs=1e-12)
        assert mutual_information(j, "A", "B", "C") == pytest.approx(
            max(oracle.mutual_information(p, names, "A", "B", "C"), 0.0), abs=1e-12)
        assert mutual_information(j, ("A", "C"), "B") == pytest.approx(
            max(oracle.mutual_information(p, names, "AC", "B"), 0.0), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(j=joints())
def test_chain_rule_and_bounds(j):
    i_a_bc = mutual_information(j, "A", ("B", "C"))
    i_ab = mutual_information(j, "A", "B")
    i_ac_b = mutual_information(j, "A", "C", "B")
    assert i_a_bc == pytest.approx(i_ab + i_ac_b, abs=1e-9)
    assert i_ab >= 0 and i_ac_b >= 0
    assert i_ab <= min(entropy(j, "A"), entropy(j, "B")) + 1e-12
    assert conditional_entropy(j, "A", "B") >= 0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_data_processing_on_degraded_chain(seed):
    rng = np.random.default_rng(seed)
    ch = channels.cascade(rng.dirichlet(np.ones(3), size=2), rng.dirichlet(np.ones(2), size=3))
    j = compose_chain([Pmf(rng.dirichlet(np.ones(2)), "U"),
                       Kernel(rng.dirichlet(np.ones(2), size=2), "X", "U"), ch])
    assert mutual_information(j, "U", "Y2") <= mutual_information(j, "U", "Y1") + 1e-9
