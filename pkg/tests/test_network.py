import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fogshield.network import (BETA1, BETA2, D0, PHI, Behavior, DeploymentConfig, EnergyParams,
                               SensorNode, average_energy, deploy, distance, neighbor_set,
                               node_total_energy, relay_probability, rx_energy, select_relays,
                               tx_energy)

P = EnergyParams()


def line_graph(xs, d0=D0):
    cfg = DeploymentConfig(sensor_count=len(xs), threshold_distance=d0, sensor_range=d0,
                           relay_range=2 * d0)
    return deploy(cfg, positions=[(x, 100.0) for x in xs])


def test_distance_examples():
    assert distance((0, 0), (0, 0)) == 0
    assert distance((0, 0), (3, 4)) == 5.0
    assert distance((1, 1), (1, 5)) == 4.0


def test_default_constants():
    assert D0 == pytest.approx(87.7, abs=0.05)
    assert BETA1 * D0 ** 2 == pytest.approx(BETA2 * D0 ** 4, rel=1e-6)
    assert P.crossover_distance == pytest.approx(D0)


def test_config_validation():
    with pytest.raises(ValueError):
        DeploymentConfig(area_width=0)
    with pytest.raises(ValueError):
        DeploymentConfig(sensor_count=1)
    with pytest.raises(ValueError):
        DeploymentConfig(relay_range=10.0, sensor_range=20.0)
    with pytest.raises(ValueError):
        DeploymentConfig(relay_fraction=1.0)


def test_two_nodes_50m_apart_share_an_edge():
    g = line_graph([0.0, 50.0])
    assert g.edges == {(0, 1)}


def test_empty_mix_is_all_honest_and_deploy_is_deterministic():
    cfg = DeploymentConfig(sensor_count=50, seed=3)
    a, b = deploy(cfg), deploy(cfg)
    assert all(n.behavior is Behavior.HONEST for n in a.nodes)
    assert np.array_equal(a.positions, b.positions)
    assert a.edges == b.edges


def test_attacker_counts_and_initial_energy():
    cfg = DeploymentConfig(sensor_count=200)
    mix = {"Flooding": 0.1, "BlackHole": 0.05, "GrayHole": 0.123}
    g = deploy(cfg, attack_mix=mix)
    counts = {b: sum(n.behavior is b for n in g.nodes) for b in Behavior}
    assert counts[Behavior.FLOODING] == 20
    assert counts[Behavior.BLACK_HOLE] == 10
    assert counts[Behavior.GRAY_HOLE] == round(0.123 * 200)
    for n in g.nodes:
        assert n.e_init == (0.75 if n.behavior.is_attacker else 0.5)


def test_deploy_rejects_bad_mix():
    with pytest.raises(ValueError):
        deploy(DeploymentConfig(), attack_mix={"Flooding": 0.7, "GrayHole": 0.5})


def test_topology_independent_of_attack_mix():
    cfg = DeploymentConfig(sensor_count=40, seed=9)
    assert np.array_equal(deploy(cfg).positions, deploy(cfg, attack_mix={"Flooding": 0.5}).positions)


def test_neighbor_sets():
    g = line_graph([0.0, D0 / 2, D0])
    assert neighbor_set(g, 1) == {0, 2}
    iso = line_graph([0.0, 150.0])
    assert neighbor_set(iso, 0) == set()
    with pytest.raises(KeyError):
        neighbor_set(g, 99)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 120), st.integers(0, 2 ** 31))
def test_edges_match_brute_force(l, seed):
    g = deploy(DeploymentConfig(sensor_count=l, seed=seed))
    pos = g.positions
    brute = {(i, j) for i in range(l) for j in range(i + 1, l)
             if math.dist(pos[i], pos[j]) <= D0}
    assert g.edges == brute
    for i in range(l):
        for j in g.neighbor_sets[i]:
            assert i in g.neighbor_sets[j]


def test_edges_brute_force_500_nodes():
    g = deploy(DeploymentConfig(sensor_count=500, seed=1))
    pos = g.positions
    d = np.sqrt(((pos[:, None] - pos[None]) ** 2).sum(-1))
    brute = {(i, j) for i, j in zip(*np.nonzero(np.triu(d <= D0, 1)))}
    assert g.edges == brute


def test_laplacian():
    g = deploy(DeploymentConfig(sensor_count=60, seed=2))
    L = g.laplacian()
    assert np.array_equal(L, L.T)
    assert np.all(L.sum(axis=1) == 0)
    for i in range(60):
        for j in range(60):
            if i != j:
                assert L[i, j] == (-1 if (min(i, j), max(i, j)) in g.edges else 0)


def test_fog_ids_disjoint_from_sensors():
    g = deploy(DeploymentConfig(sensor_count=30, fog_count=3))
    assert {f.fog_id for f in g.fogs}.isdisjoint({n.id for n in g.nodes})


def test_tx_energy_examples():
    assert tx_energy(1, 0, P, D0) == pytest.approx(5.0e-8, rel=1e-12)
    assert tx_energy(4000, 50, P, D0) == pytest.approx(3.0e-4, rel=1e-12)
    near = 1 * (PHI + BETA1 * D0 ** 2)
    assert tx_energy(1, D0, P, D0) == pytest.approx(near, rel=1e-6)
    with pytest.raises(ValueError):
        tx_energy(-1, 10, P, D0)
    with pytest.raises(ValueError):
        tx_energy(10, -1, P, D0)


def test_tx_energy_boundary_uses_far_branch():
    far = 4000 * (PHI + BETA2 * D0 ** 4)
    assert tx_energy(4000, D0, P, D0) == far


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 300), st.floats(0, 300), st.integers(1, 10000))
def test_tx_energy_monotone(d1, d2, q):
    lo, hi = sorted((d1, d2))
    assert tx_energy(q, lo, P, D0) <= tx_energy(q, hi, P, D0) * (1 + 1e-9)
    assert tx_energy(q, lo, P, D0) < tx_energy(q + 1, lo, P, D0)
    if lo >= D0:
        assert q * (PHI + BETA2 * lo ** 4) >= q * (PHI + BETA1 * lo ** 2) * (1 - 1e-12)


def test_rx_energy():
    assert rx_energy(4000, P) == pytest.approx(2.0e-4, rel=1e-12)
    assert rx_energy(1, P) == PHI
    with pytest.raises(ValueError):
        rx_energy(0, P)


def test_node_total_energy():
    assert node_total_energy([], [], P, D0) == 0
    assert node_total_energy([(4000, 50)], [4000], P, D0) == pytest.approx(5.0e-4, rel=1e-12)
    a = ([(100, 10)], [200])
    b = ([(4000, 120)], [50])
    whole = node_total_energy(a[0] + b[0], a[1] + b[1], P, D0)
    assert whole == pytest.approx(node_total_energy(*a, P, D0) + node_total_energy(*b, P, D0))


def test_average_energy():
    assert average_energy([1, 2, 3]) == 2
    assert average_energy([0.37]) == 0.37
    assert average_energy([0, 0]) == 0
    with pytest.raises(ValueError):
        average_energy([])


def test_relay_probability():
    honest = SensorNode(0, (0, 0))
    attacker = SensorNode(1, (0, 0), Behavior.FLOODING)
    p0 = EnergyParams(malicious_boost=0.0)
    assert relay_probability(attacker, 0.3, 0.4, p0) == relay_probability(honest, 0.3, 0.4, p0)
    p1 = EnergyParams(malicious_boost=1.0, p_opt=0.1)
    assert relay_probability(attacker, 0.5, 0.5, p1) == pytest.approx(0.05)
    assert relay_probability(honest, 20.0, 1.0, EnergyParams(p_opt=0.1)) == 1.0
    with pytest.raises(ZeroDivisionError):
        relay_probability(honest, 1.0, 0.0, P)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 5), st.floats(1e-3, 5), st.floats(0.01, 3))
def test_attacker_never_more_likely(e, avg, a):
    p = EnergyParams(malicious_boost=a)
    h = relay_probability(SensorNode(0, (0, 0)), e, avg, p)
    m = relay_probability(SensorNode(1, (0, 0), Behavior.GRAY_HOLE), e, avg, p)
    assert m <= h


def test_select_relays_extremes():
    g = deploy(DeploymentConfig(sensor_count=20))
    res = np.full(20, 0.5)
    res[3] = 0.0
    rng = np.random.default_rng(0)
    assert select_relays(g, res, P, rng, probabilities=0.0) == set()
    chosen = select_relays(g, res, P, rng, probabilities=1.0)
    assert chosen == set(range(20)) - {3}
    assert g.nodes[5].is_relay and not g.nodes[3].is_relay
    with pytest.raises(ValueError):
        select_relays(g, np.zeros(20), P, rng)


def test_select_relays_bernoulli_mean():
    g = deploy(DeploymentConfig(sensor_count=100))
    res = np.full(100, 0.5)
    rng = np.random.default_rng(11)
    fracs = [len(select_relays(g, res, P, rng, probabilities=0.1)) / 100 for _ in range(10_000)]
    assert 0.09 <= np.mean(fracs) <= 0.11


def test_select_relays_deterministic():
    g = deploy(DeploymentConfig(sensor_count=50, seed=4))
    res = np.linspace(0.1, 0.5, 50)
    a = select_relays(g, res, P, np.random.default_rng(5))
    b = select_relays(g, res, P, np.random.default_rng(5))
    assert a == b
