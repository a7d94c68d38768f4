"""Round-driven fog-WSN engine and the network analytics computed from its traces."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields
from enum import Enum

import numpy as np

from .attacks import Action, BehaviorParams, blackhole_route_reply, flooding_emissions, forward_decision
from .network import (Behavior, DeploymentConfig, EnergyParams, FogNode, NetworkGraph, SensorNode,
                      deploy, fog_positions, pairwise_distances, relay_probabilities, rx_energy,
                      select_relays, tx_energy)

# behaviors that forge route replies to attract traffic
LYING = (Behavior.BLACK_HOLE, Behavior.SELECTIVE_FORWARDING, Behavior.GRAY_HOLE)
HELLO_BASELINE = 1


class MessageKind(str, Enum):
    DATA = "Data"
    ROUTE_REQUEST = "RouteRequest"
    ROUTE_REPLY = "RouteReply"
    ADVERT = "Advert"


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    src: int
    dst: int
    bits: int
    hops: int = 0
    seq: int = 0

    def __post_init__(self):
        if self.bits <= 0 or self.hops < 0:
            raise ValueError("message needs positive bits and nonnegative hops")


@dataclass
class RoundLedger:
    """Everything that happened in one round, as per-node arrays of length l.

    Entries for nodes that were dead at the start of the round are zero and
    ``alive`` is False for them.
    """
    round_index: int
    alive: np.ndarray
    is_relay: np.ndarray
    relay_contact: np.ndarray
    next_hop: np.ndarray
    rank: np.ndarray
    data_tx: np.ndarray
    pkt_tx: np.ndarray
    data_rx: np.ndarray
    advert_rx: np.ndarray
    tx_energy: np.ndarray
    rx_energy: np.ndarray
    dropped: np.ndarray
    delivered: np.ndarray
    flagged_prev: np.ndarray
    e_rem: np.ndarray
    fog_rx: np.ndarray
    relay_fraction: float
    deaths: list[int] = field(default_factory=list)

    @property
    def offered_packets(self) -> int:
        return int(self.alive.sum())

    @property
    def delivered_packets(self) -> int:
        return int(self.delivered.sum())

    @property
    def dropped_packets(self) -> int:
        return int(self.dropped.sum())


@dataclass
class SimulationTrace:
    config: DeploymentConfig
    energy: EnergyParams
    behavior_params: BehaviorParams
    attack_mix: dict
    graph: NetworkGraph
    e_init: np.ndarray
    ledgers: list[RoundLedger]

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def final_e_rem(self) -> np.ndarray:
        return self.ledgers[-1].e_rem if self.ledgers else self.e_init.copy()

    @property
    def rounds_run(self) -> int:
        return len(self.ledgers)

    def delivered_bits(self) -> int:
        return self.config.packet_bits * sum(lg.delivered_packets for lg in self.ledgers)

    def offered_bits(self) -> int:
        return self.config.packet_bits * sum(lg.offered_packets for lg in self.ledgers)


@dataclass
class SimState:
    graph: NetworkGraph
    config: DeploymentConfig
    energy: EnergyParams
    params: BehaviorParams
    e_rem: np.ndarray
    seq: np.ndarray
    flagged: np.ndarray
    round_index: int = 0
    _geom: dict = field(default_factory=dict, repr=False)

    @classmethod
    def initial(cls, graph, config, energy, params, rng):
        e = np.array([n.e_init for n in graph.nodes], dtype=float)
        seq = rng.integers(0, 100, size=len(e))
        st = cls(graph, config, energy, params, e, seq, np.zeros(len(e), dtype=bool))
        st._geom = _geometry(graph, config)
        return st

    @property
    def alive(self) -> np.ndarray:
        return self.e_rem > 0


def _geometry(graph: NetworkGraph, config: DeploymentConfig) -> dict:
    pos = graph.positions
    dist = pairwise_distances(pos)
    nb = dist <= config.threshold_distance
    np.fill_diagonal(nb, False)
    fog_idx, fog_dist = graph.nearest_fog()
    return {
        "dist": dist,
        "neighbors": nb,
        "reach": nb & (dist <= config.sensor_range),
        "fog_idx": fog_idx,
        "fog_dist": fog_dist,
        "fog_ids": np.array([f.fog_id for f in graph.fogs]),
        "lying": np.array([b in LYING for b in graph.behaviors]),
        "flooder": np.array([b is Behavior.FLOODING for b in graph.behaviors]),
    }


def route_discovery(graph: NetworkGraph, source_id: int, replies: dict) -> int:
    """Pick the next hop from route replies ``{neighbor: (hops, seq)}``.

    Fewest hops wins, then the highest sequence number, then the lowest id.
    """
    if not replies:
        raise ValueError(f"node {source_id} has no alive neighbor to route through")
    return min(replies, key=lambda j: (replies[j][0], -replies[j][1], j))


def _route_replies(state: SimState, forwarders: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hop count and sequence number each forwarder advertises this round."""
    g = state._geom
    d0 = state.config.threshold_distance
    hops = np.where(g["fog_dist"] <= d0, 1, 2)
    seq = state.seq.copy()
    alive = state.alive
    for j in np.flatnonzero(forwarders & g["lying"]):
        seen = g["neighbors"][j] & alive
        max_seq = int(max(state.seq[j], state.seq[seen].max() if seen.any() else 0))
        hops[j], seq[j] = blackhole_route_reply(int(hops[j]), max_seq)
    return hops, seq


def _tdma_ranks(groups: np.ndarray, members: np.ndarray) -> np.ndarray:
    """1-based slot of each member within its group, ordered by node id."""
    rank = np.zeros(len(groups), dtype=int)
    counters: dict[int, int] = {}
    for i in np.flatnonzero(members):
        counters[groups[i]] = counters.get(groups[i], 0) + 1
        rank[i] = counters[groups[i]]
    return rank


def step_round(state: SimState, rng) -> tuple[SimState, RoundLedger]:
    """Advance one round; ``state`` is updated in place and returned."""
    cfg, en, params, g = state.config, state.energy, state.params, state._geom
    l = len(state.e_rem)
    alive = state.alive
    if not alive.any():
        raise ValueError("no alive nodes")
    q, qc, d0 = cfg.packet_bits, cfg.control_bits, cfg.threshold_distance

    # (1)-(2) relay election on residual energy
    probs = relay_probabilities(state.graph, state.e_rem, en)
    relays = np.zeros(l, dtype=bool)
    relays[list(select_relays(state.graph, state.e_rem, en, rng, probabilities=probs))] = True
    gray_active = rng.random(l) < params.grayhole_active_duty

    # forwarders: elected relays plus attackers forging route replies
    forwarders = alive & (relays | g["lying"])
    hops, seq = _route_replies(state, forwarders)

    next_hop = np.full(l, -1, dtype=int)
    members = np.zeros(l, dtype=bool)
    senders = alive & ~forwarders
    far = senders & (g["fog_dist"] > d0)
    cand = g["reach"] & forwarders[None, :]
    has_cand = far & cand.any(axis=1)
    if has_cand.any():
        key = hops.astype(np.int64) * (1 << 40) - seq.astype(np.int64)
        masked = np.where(cand[has_cand], key[None, :], np.iinfo(np.int64).max)
        next_hop[has_cand] = masked.argmin(axis=1)
        members[has_cand] = True
    direct = alive & ~members
    next_hop[forwarders] = np.flatnonzero(forwarders)

    # (3) TDMA slots: members within their forwarder group, others within their fog group
    groups = np.where(members, next_hop, l + g["fog_idx"])
    rank = _tdma_ranks(groups, alive)

    tx_e = np.zeros(l)
    rx_e = np.zeros(l)
    data_tx = np.zeros(l, dtype=int)
    data_rx = np.zeros(l, dtype=int)
    dropped = np.zeros(l, dtype=int)
    delivered = np.zeros(l, dtype=int)

    # (4) advertisements: one hello per node, flooders multiply it
    adverts = np.where(alive, HELLO_BASELINE, 0)
    flood_count = flooding_emissions(params, HELLO_BASELINE)
    adverts[alive & g["flooder"]] = flood_count
    advert_rx = (g["neighbors"] & alive[:, None] & alive[None, :]).astype(int) @ adverts
    tx_e += adverts * tx_energy(qc, d0, en, d0)
    rx_e += advert_rx * rx_energy(qc, en)

    # (5) members hand their packet to the chosen forwarder
    m_idx = np.flatnonzero(members)
    if len(m_idx):
        tx_e[m_idx] += tx_energy(q, g["dist"][m_idx, next_hop[m_idx]], en, d0)
        data_tx[m_idx] += 1
        np.add.at(data_rx, next_hop[m_idx], 1)
    rx_e += data_rx * rx_energy(q, en)

    # (6) forwarders and direct senders transmit to their nearest fog
    behaviors = state.graph.behaviors
    inbox = np.where(direct, 1 + data_rx, 0)
    for i in np.flatnonzero(direct):
        b = behaviors[i]
        if b is Behavior.HONEST or b is Behavior.FLOODING:
            sent = int(inbox[i])
        else:
            sent = sum(forward_decision(b, params, rng, active=bool(gray_active[i])) is Action.FORWARD
                       for _ in range(inbox[i]))
        dropped[i] = inbox[i] - sent
        if sent:
            tx_e[i] += sent * tx_energy(q, g["fog_dist"][i], en, d0)
            data_tx[i] += sent
            delivered[i] = sent
    fog_rx = np.bincount(g["fog_idx"], weights=delivered, minlength=len(g["fog_ids"])).astype(int)
    for k, fog in enumerate(state.graph.fogs):
        fog.received_count = int(fog_rx[k])

    # (7)-(8) debit energy; a node that cannot pay the round's bill runs dry
    cost = tx_e + rx_e
    dying = alive & (cost >= state.e_rem)
    scale = np.ones(l)
    scale[dying] = state.e_rem[dying] / cost[dying]
    tx_e *= scale
    rx_e *= scale
    e_rem = state.e_rem - tx_e - rx_e
    e_rem[dying] = 0.0
    for node, e in zip(state.graph.nodes, e_rem):
        node.e_rem = float(e)

    state.round_index += 1
    ledger = RoundLedger(
        round_index=state.round_index,
        alive=alive,
        is_relay=relays,
        relay_contact=members,
        next_hop=np.where(alive, next_hop, -1),
        rank=rank,
        data_tx=data_tx,
        pkt_tx=data_tx + adverts,
        data_rx=data_rx,
        advert_rx=np.where(alive, advert_rx, 0),
        tx_energy=tx_e,
        rx_energy=rx_e,
        dropped=dropped,
        delivered=delivered,
        flagged_prev=state.flagged & alive,
        e_rem=e_rem,
        fog_rx=fog_rx[g["fog_idx"]] * alive,
        relay_fraction=float(relays.sum() / alive.sum()),
        deaths=[int(i) for i in np.flatnonzero(dying)],
    )
    state.e_rem = e_rem
    state.flagged = (dropped > 0) | (adverts > HELLO_BASELINE)
    state.seq = state.seq + 1
    return state, ledger


def run_simulation(config: DeploymentConfig, energy: EnergyParams | None = None,
                   attack_mix: dict | None = None, behavior_params: BehaviorParams | None = None,
                   positions=None) -> SimulationTrace:
    energy = energy or EnergyParams()
    behavior_params = behavior_params or BehaviorParams()
    attack_mix = {Behavior(k).value: float(v) for k, v in (attack_mix or {}).items()}
    graph = deploy(config, energy, attack_mix, positions=positions)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(4)[3])
    state = SimState.initial(graph, config, energy, behavior_params, rng)
    e_init = state.e_rem.copy()
    ledgers = []
    for _ in range(config.rounds):
        if not state.alive.any():
            break
        state, ledger = step_round(state, rng)
        ledgers.append(ledger)
    return SimulationTrace(config, energy, behavior_params, attack_mix, graph, e_init, ledgers)


# ---------------------------------------------------------------- analytics

def throughput(trace: SimulationTrace, elapsed_seconds: float | None = None) -> tuple[float, float]:
    """(reported value, which is kbit/s x100, and raw kilobits per second)."""
    if elapsed_seconds is None:
        elapsed_seconds = trace.rounds_run * trace.config.ms_per_round / 1000.0
    return throughput_from_bits(trace.delivered_bits(), elapsed_seconds)


def throughput_from_bits(bits: float, elapsed_seconds: float) -> tuple[float, float]:
    if elapsed_seconds <= 0:
        raise ValueError("elapsed time must be positive")
    raw = bits / 1000.0 / elapsed_seconds
    return raw * 100, raw


@dataclass(frozen=True)
class LifetimeStats:
    n: int
    mean: float
    std: float
    std_error: float
    ci_lower: float
    ci_upper: float
    minimum: float
    maximum: float


def node_lifetimes(trace: SimulationTrace) -> np.ndarray:
    """Lifetime of each node in ms; survivors are credited the whole run."""
    life = np.full(len(trace.e_init), float(trace.rounds_run))
    for lg in trace.ledgers:
        life[lg.deaths] = lg.round_index
    return life * trace.config.ms_per_round


def lifetime_stats(trace_or_lifetimes) -> LifetimeStats:
    if isinstance(trace_or_lifetimes, SimulationTrace):
        life = node_lifetimes(trace_or_lifetimes)
    else:
        life = np.asarray(trace_or_lifetimes, dtype=float)
    n = len(life)
    if n == 0:
        raise ValueError("no lifetimes")
    mean = float(life.mean())
    sd = float(life.std(ddof=1)) if n > 1 else 0.0
    se = sd / math.sqrt(n)
    return LifetimeStats(n, mean, sd, se, mean - 1.96 * se, mean + 1.96 * se,
                         float(life.min()), float(life.max()))


def energy_curve(trace: SimulationTrace) -> list[tuple[int, float]]:
    """Mean cumulative energy consumed per node after each round."""
    cum = np.zeros(len(trace.e_init))
    out = []
    for lg in trace.ledgers:
        cum += lg.tx_energy + lg.rx_energy
        out.append((lg.round_index, float(cum.mean())))
    return out


def delivery_ratio(trace: SimulationTrace) -> float:
    offered = trace.offered_bits()
    if offered <= 0:
        raise ValueError("no traffic was offered")
    return trace.delivered_bits() / offered


# ---------------------------------------------------------------- trace CSV

TRACE_COLUMNS = (
    "round", "node", "behavior", "fog_id", "degree", "e_init", "e_rem", "is_relay",
    "relay_contact", "next_hop", "rank", "data_tx", "pkt_tx", "data_rx", "advert_rx",
    "tx_energy", "rx_energy", "dropped", "delivered", "flagged_prev", "fog_rx",
    "relay_fraction", "died",
)
_FLOAT_COLUMNS = {"e_init", "e_rem", "tx_energy", "rx_energy", "relay_fraction"}


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def trace_rows(trace: SimulationTrace):
    """One dict per (round, node alive at round start)."""
    g = trace.graph
    fog_idx, _ = g.nearest_fog()
    fog_ids = [g.fogs[k].fog_id for k in fog_idx]
    degree = g.degrees()
    for lg in trace.ledgers:
        died = set(lg.deaths)
        for i in np.flatnonzero(lg.alive):
            yield {
                "round": lg.round_index, "node": int(i), "behavior": g.nodes[i].behavior.value,
                "fog_id": fog_ids[i], "degree": int(degree[i]), "e_init": float(trace.e_init[i]),
                "e_rem": float(lg.e_rem[i]), "is_relay": int(lg.is_relay[i]),
                "relay_contact": int(lg.relay_contact[i]), "next_hop": int(lg.next_hop[i]),
                "rank": int(lg.rank[i]), "data_tx": int(lg.data_tx[i]), "pkt_tx": int(lg.pkt_tx[i]),
                "data_rx": int(lg.data_rx[i]), "advert_rx": int(lg.advert_rx[i]),
                "tx_energy": float(lg.tx_energy[i]), "rx_energy": float(lg.rx_energy[i]),
                "dropped": int(lg.dropped[i]), "delivered": int(lg.delivered[i]),
                "flagged_prev": int(lg.flagged_prev[i]), "fog_rx": int(lg.fog_rx[i]),
                "relay_fraction": lg.relay_fraction, "died": int(i in died),
            }


def _meta_lines(trace: SimulationTrace) -> list[str]:
    lines = []
    for obj, prefix in ((trace.config, "config"), (trace.energy, "energy"),
                        (trace.behavior_params, "behavior")):
        for f in fields(obj):
            lines.append(f"{prefix}.{f.name}={_fmt(getattr(obj, f.name))}")
    for k, v in sorted(trace.attack_mix.items()):
        lines.append(f"attack_mix.{k}={_fmt(v)}")
    for n in trace.graph.nodes:
        lines.append(f"node={n.id},{n.position[0]!r},{n.position[1]!r},{n.behavior.value}")
    return lines


def write_trace(trace: SimulationTrace, path) -> None:
    """Trace CSV: ``#`` metadata lines, a header row, one row per (round, node)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in _meta_lines(trace):
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace_rows(trace):
            w.writerow([_fmt(row[c]) for c in TRACE_COLUMNS])


def _coerce(cls, values: dict):
    defaults = cls()
    return cls(**{f.name: type(getattr(defaults, f.name))(values[f.name])
                  for f in fields(cls) if f.name in values})


class TraceFormatError(ValueError):
    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


def _parse_row(row: dict, lineno: int, l: int) -> dict:
    if None in row or any(v is None for v in row.values()):
        raise TraceFormatError(f"expected {len(TRACE_COLUMNS)} fields", row=lineno)
    out = {}
    for c in TRACE_COLUMNS:
        v = row[c]
        try:
            if c == "behavior":
                out[c] = Behavior(v)
            elif c in _FLOAT_COLUMNS:
                out[c] = float(v)
            else:
                out[c] = int(v)
        except ValueError:
            raise TraceFormatError(f"bad value {v!r} for {c}", row=lineno) from None
    if not 0 <= out["node"] < l:
        raise TraceFormatError(f"unknown node {out['node']}", row=lineno)
    return out


def read_trace(path) -> SimulationTrace:
    """Rebuild a trace written by :func:`write_trace`; bad rows raise with their line number."""
    meta: dict[str, dict] = {"config": {}, "energy": {}, "behavior": {}, "attack_mix": {}}
    nodes = []
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    body = []
    first_body = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            try:
                if key == "node":
                    i, x, y, b = value.split(",")
                    nodes.append((int(i), float(x), float(y), Behavior(b)))
                else:
                    section, _, name = key.partition(".")
                    meta[section][name] = value
            except (ValueError, KeyError):
                raise TraceFormatError(f"bad metadata line {line!r}", row=lineno) from None
        else:
            if first_body is None:
                first_body = lineno
            body.append(line)
    try:
        config = _coerce(DeploymentConfig, meta["config"])
        energy = _coerce(EnergyParams, meta["energy"])
        params = _coerce(BehaviorParams, meta["behavior"])
        attack_mix = {k: float(v) for k, v in meta["attack_mix"].items()}
    except ValueError as exc:
        raise TraceFormatError(f"bad trace metadata: {exc}") from None

    l = len(nodes)
    if l == 0:
        raise TraceFormatError("trace lists no nodes")
    reader = csv.DictReader(io.StringIO("\n".join(body)))
    if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
        raise TraceFormatError("trace header does not match the trace schema", row=first_body)
    e_init = np.zeros(l)
    graph_nodes = [SensorNode(i, (x, y), b) for i, x, y, b in nodes]
    by_round: dict[int, list[dict]] = {}
    for k, raw in enumerate(reader):
        row = _parse_row(raw, first_body + 1 + k, l)
        by_round.setdefault(row["round"], []).append(row)
        e_init[row["node"]] = row["e_init"]
    for n in graph_nodes:
        n.e_init = n.e_rem = float(e_init[n.id])
    fogs = [FogNode(l + k, p) for k, p in enumerate(fog_positions(config))]
    graph = NetworkGraph(graph_nodes, fogs, config.threshold_distance)

    ledgers = []
    e_rem = e_init.copy()
    for r in sorted(by_round):
        cols = {c: np.zeros(l, dtype=float if c in _FLOAT_COLUMNS else int) for c in TRACE_COLUMNS}
        cols["next_hop"][:] = -1
        alive = np.zeros(l, dtype=bool)
        rf = 0.0
        for row in by_round[r]:
            i = row["node"]
            alive[i] = True
            rf = row["relay_fraction"]
            for c in TRACE_COLUMNS:
                if c not in ("behavior", "round", "node", "relay_fraction"):
                    cols[c][i] = row[c]
        e_rem = np.where(alive, cols["e_rem"], e_rem)
        ledgers.append(RoundLedger(
            round_index=r, alive=alive, is_relay=cols["is_relay"].astype(bool),
            relay_contact=cols["relay_contact"].astype(bool), next_hop=cols["next_hop"],
            rank=cols["rank"], data_tx=cols["data_tx"], pkt_tx=cols["pkt_tx"],
            data_rx=cols["data_rx"], advert_rx=cols["advert_rx"], tx_energy=cols["tx_energy"],
            rx_energy=cols["rx_energy"], dropped=cols["dropped"], delivered=cols["delivered"],
            flagged_prev=cols["flagged_prev"].astype(bool), e_rem=e_rem.copy(),
            fog_rx=cols["fog_rx"], relay_fraction=rf,
            deaths=[int(i) for i in np.flatnonzero(cols["died"])],
        ))
    return SimulationTrace(config, energy, params, attack_mix, graph, e_init, ledgers)
