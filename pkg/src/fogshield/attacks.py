"""Per-round decision policies of the four DoS attacker types."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .network import Behavior


class Action(str, Enum):
    FORWARD = "Forward"
    DROP = "Drop"


@dataclass(frozen=True)
class BehaviorParams:
    flood_rate_multiplier: float = 10.0
    blackhole_drop_prob: float = 1.0
    selective_drop_prob: float = 0.5
    grayhole_drop_prob: float = 0.8
    grayhole_active_duty: float = 0.5

    def __post_init__(self):
        if self.flood_rate_multiplier < 1:
            raise ValueError("flood_rate_multiplier must be >= 1")
        for name in ("blackhole_drop_prob", "selective_drop_prob",
                     "grayhole_drop_prob", "grayhole_active_duty"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


LABELS = {
    Behavior.HONEST: "Normal",
    Behavior.SELECTIVE_FORWARDING: "Selective Forwarding",
    Behavior.BLACK_HOLE: "Black hole",
    Behavior.FLOODING: "Flooding",
    Behavior.GRAY_HOLE: "Gray hole",
}
# Class order used by every dataset and confusion matrix.
CLASS_NAMES = tuple(LABELS.values())
_BY_LABEL = {v: k for k, v in LABELS.items()}


def behavior_label(behavior) -> str:
    return LABELS[Behavior(behavior)]


def label_behavior(label: str) -> Behavior:
    try:
        return _BY_LABEL[label]
    except KeyError:
        raise ValueError(f"unknown attack class {label!r}") from None


def flooding_emissions(params: BehaviorParams, honest_baseline: int) -> int:
    """Advertisements a flooder broadcasts in a round where honest nodes send ``honest_baseline``."""
    if honest_baseline < 1:
        raise ValueError("baseline must be >= 1")
    # round before ceil so 10 * 0.3 style products do not jump a unit
    return math.ceil(round(params.flood_rate_multiplier * honest_baseline, 9))


def blackhole_route_reply(true_hops: int, max_seq_seen: int) -> tuple[int, int]:
    """The forged route reply: one hop away, freshest sequence number."""
    if max_seq_seen < 0:
        raise ValueError("sequence numbers are nonnegative")
    return 1, max_seq_seen + 1


def forward_decision(behavior, params: BehaviorParams, rng, active: bool | None = None) -> Action:
    """Forward or drop one packet.

    For gray holes ``active`` is the node's misbehavior state for the current
    round; when omitted it is drawn here with ``grayhole_active_duty``.
    """
    behavior = Behavior(behavior)
    if behavior is Behavior.HONEST:
        return Action.FORWARD
    if behavior is Behavior.FLOODING:
        raise ValueError("flooding nodes do not make forwarding decisions")
    if behavior is Behavior.BLACK_HOLE:
        p = params.blackhole_drop_prob
    elif behavior is Behavior.SELECTIVE_FORWARDING:
        p = params.selective_drop_prob
    else:
        if active is None:
            active = rng.random() < params.grayhole_active_duty
        if not active:
            return Action.FORWARD
        p = params.grayhole_drop_prob
    return Action.DROP if rng.random() < p else Action.FORWARD
