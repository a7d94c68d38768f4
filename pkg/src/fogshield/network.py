"""Static network structure, first-order radio energy model and relay election."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Behavior(str, Enum):
    HONEST = "Honest"
    FLOODING = "Flooding"
    BLACK_HOLE = "BlackHole"
    SELECTIVE_FORWARDING = "SelectiveForwarding"
    GRAY_HOLE = "GrayHole"

    @property
    def is_attacker(self) -> bool:
        return self is not Behavior.HONEST


PHI = 50e-9
BETA1 = 10e-12
BETA2 = 0.0013e-12
D0 = math.sqrt(BETA1 / BETA2)


@dataclass(frozen=True)
class DeploymentConfig:
    area_width: float = 200.0
    area_height: float = 200.0
    sensor_count: int = 200
    fog_count: int = 4
    relay_fraction: float = 0.1
    sensor_range: float = D0
    relay_range: float = 2 * D0
    threshold_distance: float = D0
    packet_bits: int = 4000
    control_bits: int = 64
    rounds: int = 2000
    ms_per_round: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.area_width <= 0 or self.area_height <= 0:
            raise ValueError("deployment area must be non-empty")
        if self.sensor_count < 2:
            raise ValueError("need at least 2 sensor nodes")
        if self.fog_count < 1:
            raise ValueError("need at least 1 fog node")
        if not 0 < self.relay_fraction < 1:
            raise ValueError("relay_fraction must lie in (0, 1)")
        if self.sensor_range <= 0:
            raise ValueError("sensor_range must be positive")
        if self.relay_range < self.sensor_range:
            raise ValueError("relay_range must be >= sensor_range")
        if self.threshold_distance <= 0:
            raise ValueError("threshold_distance must be positive")
        if self.packet_bits <= 0 or self.control_bits <= 0:
            raise ValueError("packet sizes must be positive")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.ms_per_round <= 0:
            raise ValueError("ms_per_round must be positive")


@dataclass(frozen=True)
class EnergyParams:
    phi: float = PHI
    beta1: float = BETA1
    beta2: float = BETA2
    e0: float = 0.5
    malicious_boost: float = 0.5
    p_opt: float = 0.1

    def __post_init__(self):
        if min(self.phi, self.beta1, self.beta2, self.e0) <= 0:
            raise ValueError("energy coefficients must be positive")
        if self.malicious_boost < 0:
            raise ValueError("malicious_boost must be >= 0")
        if not 0 < self.p_opt <= 1:
            raise ValueError("p_opt must lie in (0, 1]")

    @property
    def crossover_distance(self) -> float:
        """Distance where the d^2 and d^4 amplifier terms coincide."""
        return math.sqrt(self.beta1 / self.beta2)

    def initial_energy(self, behavior: Behavior) -> float:
        if behavior.is_attacker:
            return (1 + self.malicious_boost) * self.e0
        return self.e0


@dataclass
class SensorNode:
    id: int
    position: tuple[float, float]
    behavior: Behavior = Behavior.HONEST
    is_relay: bool = False
    e_init: float = 0.5
    e_rem: float = 0.5

    @property
    def alive(self) -> bool:
        return self.e_rem > 0


@dataclass
class FogNode:
    fog_id: int
    position: tuple[float, float]
    received_count: int = 0


@dataclass
class NetworkGraph:
    nodes: list[SensorNode]
    fogs: list[FogNode]
    threshold_distance: float
    edges: set[tuple[int, int]] = field(default_factory=set)
    neighbor_sets: dict[int, set[int]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.edges and not self.neighbor_sets:
            self.edges, self.neighbor_sets = _build_edges(self.positions, self.threshold_distance)

    @property
    def positions(self) -> np.ndarray:
        return np.array([n.position for n in self.nodes], dtype=float).reshape(-1, 2)

    @property
    def fog_positions(self) -> np.ndarray:
        return np.array([f.position for f in self.fogs], dtype=float).reshape(-1, 2)

    @property
    def behaviors(self) -> list[Behavior]:
        return [n.behavior for n in self.nodes]

    def adjacency(self) -> np.ndarray:
        n = len(self.nodes)
        a = np.zeros((n, n), dtype=int)
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1
        return a

    def laplacian(self) -> np.ndarray:
        a = self.adjacency()
        return np.diag(a.sum(axis=1)) - a

    def degrees(self) -> np.ndarray:
        return np.array([len(self.neighbor_sets[n.id]) for n in self.nodes], dtype=int)

    def fog_distances(self) -> np.ndarray:
        """(l, fog_count) sensor-to-fog distance matrix."""
        diff = self.positions[:, None, :] - self.fog_positions[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=-1))

    def nearest_fog(self) -> tuple[np.ndarray, np.ndarray]:
        """Index into ``fogs`` and distance of each sensor's nearest fog."""
        d = self.fog_distances()
        idx = d.argmin(axis=1)
        return idx, d[np.arange(len(idx)), idx]


def _build_edges(pos: np.ndarray, d0: float):
    n = len(pos)
    d = pairwise_distances(pos)
    ii, jj = np.nonzero(np.triu(d <= d0, k=1))
    edges = {(int(i), int(j)) for i, j in zip(ii, jj)}
    neighbors = {i: set() for i in range(n)}
    for i, j in edges:
        neighbors[i].add(j)
        neighbors[j].add(i)
    return edges, neighbors


def pairwise_distances(pos: np.ndarray) -> np.ndarray:
    diff = pos[:, None, :] - pos[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def distance(a, b) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)


def fog_positions(config: DeploymentConfig) -> list[tuple[float, float]]:
    """Fog nodes sit on a uniform grid along the top edge of the area."""
    step = config.area_width / config.fog_count
    return [((k + 0.5) * step, config.area_height) for k in range(config.fog_count)]


def deploy(config: DeploymentConfig, energy: EnergyParams | None = None,
           attack_mix: dict | None = None, positions=None) -> NetworkGraph:
    """Place ``sensor_count`` nodes uniformly at random and assign behaviors.

    Positions and behavior assignment draw from independent child streams of
    ``config.seed`` so that two deployments differing only in ``attack_mix``
    share the same topology. ``positions`` overrides the random placement.
    """
    energy = energy or EnergyParams()
    attack_mix = {Behavior(k): float(v) for k, v in (attack_mix or {}).items()}
    if any(v < 0 for v in attack_mix.values()) or sum(attack_mix.values()) > 1 + 1e-12:
        raise ValueError("attack fractions must be nonnegative and sum to <= 1")
    if Behavior.HONEST in attack_mix:
        raise ValueError("attack_mix lists attacker behaviors only")

    l = config.sensor_count
    pos_ss, beh_ss, relay_ss = np.random.SeedSequence(config.seed).spawn(3)
    if positions is None:
        rng = np.random.default_rng(pos_ss)
        xy = rng.uniform((0.0, 0.0), (config.area_width, config.area_height), size=(l, 2))
    else:
        xy = np.asarray(positions, dtype=float).reshape(l, 2)

    behaviors = [Behavior.HONEST] * l
    order = np.random.default_rng(beh_ss).permutation(l)
    start = 0
    for b in (Behavior.FLOODING, Behavior.BLACK_HOLE,
              Behavior.SELECTIVE_FORWARDING, Behavior.GRAY_HOLE):
        count = int(round(attack_mix.get(b, 0.0) * l))
        for i in order[start:start + count]:
            behaviors[i] = b
        start += count
    if start > l:
        raise ValueError("attack_mix rounds to more attackers than nodes")

    relays = set(np.random.default_rng(relay_ss).permutation(l)[:max(1, round(config.relay_fraction * l))].tolist())
    nodes = []
    for i in range(l):
        e = energy.initial_energy(behaviors[i])
        nodes.append(SensorNode(i, (float(xy[i, 0]), float(xy[i, 1])), behaviors[i],
                                is_relay=i in relays, e_init=e, e_rem=e))
    fogs = [FogNode(l + k, p) for k, p in enumerate(fog_positions(config))]
    return NetworkGraph(nodes, fogs, config.threshold_distance)


def neighbor_set(graph: NetworkGraph, node_id: int) -> set[int]:
    if node_id not in graph.neighbor_sets:
        raise KeyError(f"unknown node id {node_id}")
    return set(graph.neighbor_sets[node_id])


def tx_energy(q, d, p: EnergyParams, d0: float):
    """Energy to transmit ``q`` bits over ``d`` meters.

    The d^2 branch applies strictly below ``d0``. Works elementwise on arrays.
    """
    q = np.asarray(q, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(q < 0) or np.any(d < 0):
        raise ValueError("bits and distance must be nonnegative")
    e = np.where(d < d0, q * (p.phi + p.beta1 * d ** 2), q * (p.phi + p.beta2 * d ** 4))
    return float(e) if e.ndim == 0 else e


def rx_energy(q, p: EnergyParams):
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0):
        raise ValueError("received bits must be positive")
    e = q * p.phi
    return float(e) if e.ndim == 0 else e


def node_total_energy(tx_events, rx_events, p: EnergyParams, d0: float) -> float:
    total = 0.0
    for q, d in tx_events:
        total += tx_energy(q, d, p, d0)
    for q in rx_events:
        total += rx_energy(q, p)
    return total


def average_energy(consumptions) -> float:
    values = list(consumptions)
    if not values:
        raise ValueError("average of an empty list")
    return math.fsum(values) / len(values)


def relay_probability(node: SensorNode, e_ratio_energy: float, e_avg: float,
                      p: EnergyParams) -> float:
    """Chance that ``node`` is elected relay this round.

    Attackers are damped by ``1 + a``; the result is clamped to [0, 1].
    """
    if e_avg == 0:
        raise ZeroDivisionError("average energy is zero")
    prob = p.p_opt * e_ratio_energy / e_avg
    if node.behavior.is_attacker:
        prob /= 1 + p.malicious_boost
    return min(1.0, max(0.0, prob))


def relay_probabilities(graph: NetworkGraph, residuals, p: EnergyParams) -> np.ndarray:
    residuals = np.asarray(residuals, dtype=float)
    alive = residuals > 0
    if not alive.any():
        raise ValueError("no alive nodes")
    e_avg = average_energy(residuals[alive])
    probs = np.zeros(len(residuals))
    for i in np.flatnonzero(alive):
        probs[i] = relay_probability(graph.nodes[i], residuals[i], e_avg, p)
    return probs


def select_relays(graph: NetworkGraph, residuals, p: EnergyParams, rng,
                  probabilities=None) -> set[int]:
    """Bernoulli relay election over alive nodes; updates ``is_relay`` flags.

    One uniform is drawn per node (dead nodes included) so the stream position
    does not depend on who is alive.
    """
    residuals = np.asarray(residuals, dtype=float)
    if probabilities is None:
        probabilities = relay_probabilities(graph, residuals, p)
    else:
        if not (residuals > 0).any():
            raise ValueError("no alive nodes")
        probabilities = np.broadcast_to(np.asarray(probabilities, dtype=float), residuals.shape)
    u = rng.random(len(residuals))
    chosen = (u < probabilities) & (residuals > 0)
    for node, flag in zip(graph.nodes, chosen):
        node.is_relay = bool(flag)
    return {int(i) for i in np.flatnonzero(chosen)}
