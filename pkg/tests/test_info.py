import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infocut.diffusion import PriorKind, build_kernel, make_prior
from infocut.errors import DegenerateBisection, EmptyCluster, InvalidInput
from infocut.graph import sample_connected_sbm, solve_sbm_spec
from infocut.info import (
    JointYZ,
    cluster_entropy,
    h_correlation,
    ib_functional,
    information_residual,
    iota_bisection,
    iota_chi2,
    iota_kpartition,
    iota_short_time,
    joint_yz,
    relevance_information,
    xlog1p_terms,
)
from infocut.mixing import error_e1
from infocut.partition import Bisection, Partition, quadratic_forms
from oracles import (
    brute_chi2_iota,
    brute_information,
    brute_joint,
    graphs,
    k4,
    p3,
    random_bisection_labels,
    random_connected_graph,
)

K4_SPLIT = Partition(2, [0, 0, 1, 1])


def kernel(g, kind):
    return build_kernel(g, make_prior(g, kind))


def test_series_matches_direct_form():
    eta = np.array([-0.0199, -0.005, 1e-6, 0.003, 0.0199])
    full, cubic = xlog1p_terms(eta)
    mpmath.mp.dps = 50
    for e, f, c in zip(eta, full, cubic):
        e = mpmath.mpf(float(e))
        exact = (1 + e) * mpmath.log1p(e) - e
        assert f == pytest.approx(float(exact), rel=1e-14)
        assert c == pytest.approx(float(exact - e**2 / 2), rel=1e-12)
    # across the series cutoff the two branches join smoothly
    lo, hi = xlog1p_terms(np.array([0.02 - 1e-12, 0.02 + 1e-12]))
    assert lo[1] == pytest.approx(lo[0], rel=1e-9)
    assert xlog1p_terms(np.array([-1.0]))[0][0] == 1.0


def test_joint_at_zero_and_late_times():
    k = kernel(p3(), "degree")
    p = Partition(2, [0, 1, 1])
    j = joint_yz(k, p, 0.0)
    assert np.allclose(j.joint, p.Q.T * k.prior.p[:, None], atol=1e-15)
    j = joint_yz(k, p, 100 * k.tau)
    assert np.allclose(j.joint, np.outer(k.prior.p, j.pz), atol=1e-8)
    j = joint_yz(k, Partition(1, [0, 0, 0]), 0.4)
    assert np.array_equal(j.joint[:, 0], k.prior.p)
    with pytest.raises(InvalidInput):
        joint_yz(k, p, -0.1)
    with pytest.raises(EmptyCluster):
        joint_yz(k, Partition(3, [0, 1, 1]), 0.1)


@pytest.mark.parametrize("kind", list(PriorKind))
def test_joint_is_a_distribution(kind):
    g = random_connected_graph(np.random.default_rng(3), 8)
    k = kernel(g, kind)
    p = Partition(3, [0, 1, 2, 0, 1, 2, 0, 0])
    for t in (0.01, k.tau, 4 * k.tau):
        j = joint_yz(k, p, t)
        assert np.all(j.joint >= 0)
        assert j.joint.sum() == pytest.approx(1, abs=1e-10)
        assert np.allclose(j.joint.sum(axis=1), k.prior.p, atol=1e-10)
        assert np.allclose(j.joint.sum(axis=0), p.Q @ k.prior.p, atol=1e-10)
        assert np.allclose(j.joint, brute_joint(g, k.prior.p, p.assignment, 3, t), atol=1e-12)


def test_information_examples():
    k = kernel(k4(), "uniform")
    assert relevance_information(joint_yz(k, K4_SPLIT, 0.0)) == pytest.approx(math.log(2), abs=1e-15)
    assert relevance_information(joint_yz(k, K4_SPLIT, 100 * k.tau)) < 1e-7


@pytest.mark.parametrize("seed", range(3))
def test_information_matches_triple_sum(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, 6)
    labels = random_bisection_labels(rng, 6)
    for kind in PriorKind:
        k = kernel(g, kind)
        t = 0.3 * k.tau
        info = relevance_information(joint_yz(k, Partition(2, labels), t))
        assert info == pytest.approx(brute_information(g, k.prior.p, labels, 2, t), abs=1e-12)


def test_information_bounds():
    g = random_connected_graph(np.random.default_rng(8), 9)
    k = kernel(g, "degree")
    p = Partition(3, [0, 0, 0, 1, 1, 1, 2, 2, 2])
    h_z = cluster_entropy(p, k.prior)
    for t in (0.0, 0.1, 1.0):
        info = relevance_information(joint_yz(k, p, t))
        assert -1e-15 <= info <= min(math.log(3), h_z) + 1e-12


def test_iota_kpartition_examples():
    g = random_connected_graph(np.random.default_rng(1), 6)
    k = kernel(g, "uniform")
    assert iota_kpartition(k, Partition(1, [0] * 6), 0.3) == 0.0
    labels = np.array([0, 1, 0, 1, 1, 0])
    assert abs(iota_kpartition(k, Partition(2, labels), 100 * k.tau)) < 1e-7
    for t in (0.0, 0.2 * k.tau, k.tau):
        expected = brute_chi2_iota(g, k.prior.p, labels, 2, t)
        assert iota_kpartition(k, Partition(2, labels), t) == pytest.approx(expected, abs=1e-12)


def test_h_correlation_examples():
    k = kernel(k4(), "uniform")
    b = Bisection.from_partition(K4_SPLIT)
    assert h_correlation(k, b, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert h_correlation(k, b, 100 * k.tau) == pytest.approx(b.mean**2, abs=1e-8)
    t = 1e-4
    hLh = quadratic_forms(k4(), b).hLh
    assert 1 - h_correlation(k, b, t) == pytest.approx(2 * t * hLh, rel=0.05)


def test_iota_bisection_examples():
    k = kernel(p3(), "degree")
    b = Bisection.from_partition(Partition(2, [0, 1, 1]))
    assert iota_bisection(k, b, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert iota_bisection(k, b, 100 * k.tau) < 1e-7
    t = 0.2 * k.tau
    assert iota_bisection(k, b, t) == pytest.approx(iota_kpartition(k, b.to_partition(), t), abs=1e-12)


@given(graphs(min_n=3, max_n=9, connected=True), st.data())
@settings(max_examples=50, deadline=None)
def test_bisection_and_kpartition_iota_agree(g, data):
    labels = data.draw(st.lists(st.integers(0, 1), min_size=g.n, max_size=g.n))
    b = Bisection.from_labels(labels)
    if b.is_one_sided():
        return
    kind = data.draw(st.sampled_from(list(PriorKind)))
    k = kernel(g, kind)
    t = data.draw(st.floats(0, 3)) * k.tau
    assert iota_bisection(k, b, t) == pytest.approx(iota_kpartition(k, b.to_partition(), t), abs=1e-12)
    j = joint_yz(k, b.to_partition(), t)
    assert iota_chi2(j) == pytest.approx(iota_kpartition(k, b.to_partition(), t), abs=1e-12)


def test_iota_short_time_slopes():
    g = k4()
    b = Bisection.from_partition(K4_SPLIT)
    for kind in PriorKind:
        prior = make_prior(g, kind)
        assert iota_short_time(g, b, prior, 0.0) == 0.5
        slope = iota_short_time(g, b, prior, 1.0) - iota_short_time(g, b, prior, 0.0)
        assert slope == pytest.approx(-16.0, abs=1e-12)
    with pytest.raises(DegenerateBisection):
        iota_short_time(g, Bisection(np.ones(4)), make_prior(g, "uniform"), 0.1)


def test_ib_functional_examples():
    k = kernel(k4(), "uniform")
    assert ib_functional(k, K4_SPLIT, 0.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    t = 0.03
    info = relevance_information(joint_yz(k, K4_SPLIT, t))
    assert ib_functional(k, K4_SPLIT, t, 0.0) == -info
    assert ib_functional(k, Partition(1, [0] * 4), t, 2.5) == 0.0
    with pytest.raises(InvalidInput):
        ib_functional(k, K4_SPLIT, t, -1.0)


@given(graphs(min_n=3, max_n=10, connected=True), st.data())
@settings(max_examples=30, deadline=None)
def test_information_never_increases_with_time(g, data):
    labels = data.draw(st.lists(st.integers(0, 2), min_size=g.n, max_size=g.n))
    p = Partition(3, labels)
    if np.any(p.counts == 0):
        return
    k = kernel(g, data.draw(st.sampled_from(list(PriorKind))))
    ts = np.geomspace(1e-3, 10, 20) * k.tau
    infos = [relevance_information(joint_yz(k, p, t)) for t in ts]
    assert np.all(np.diff(infos) <= 1e-9)


def test_residual_is_accurate_when_nearly_mixed():
    # with every dependence tiny, I - iota is third order and must not be rounding noise
    k = kernel(k4(), "uniform")
    j = joint_yz(k, K4_SPLIT, 2.0)
    eta, w = j.dependence()
    expected = float(np.sum(w * (-(eta**3) / 6 + eta**4 / 12)))
    assert information_residual(j) == pytest.approx(expected, rel=1e-6)


def test_joint_from_plain_matrix():
    joint = np.array([[0.3, 0.1], [0.2, 0.4]])
    j = JointYZ.from_joint(joint)
    direct = sum(joint[y, z] * math.log(joint[y, z] / (j.py[y] * j.pz[z])) for y in range(2) for z in range(2))
    assert relevance_information(j) == pytest.approx(direct, abs=1e-15)


def test_well_mixed_error_shrinks_on_sbm_graphs():
    for seed in range(10):
        spec = solve_sbm_spec(16, 0.02, seed=seed)
        g, _ = sample_connected_sbm(spec)
        for kind in PriorKind:
            k = kernel(g, kind)
            p = Partition(2, spec.block_assignment)
            late = error_e1(k, p, 5 * k.tau)
            assert late < 0.05
            assert late < error_e1(k, p, 0.05 * k.tau)
