import numpy as np
import pytest

from fogshield.attacks import (CLASS_NAMES, Action, BehaviorParams, behavior_label, blackhole_route_reply,
                               flooding_emissions, forward_decision, label_behavior)
from fogshield.network import Behavior


def test_param_validation():
    with pytest.raises(ValueError):
        BehaviorParams(flood_rate_multiplier=0.5)
    with pytest.raises(ValueError):
        BehaviorParams(selective_drop_prob=1.5)
    with pytest.raises(ValueError):
        BehaviorParams(grayhole_active_duty=-0.1)


def test_flooding_emissions():
    assert flooding_emissions(BehaviorParams(flood_rate_multiplier=1), 7) == 7
    assert flooding_emissions(BehaviorParams(flood_rate_multiplier=10), 2) == 20
    assert flooding_emissions(BehaviorParams(flood_rate_multiplier=1.5), 3) == 5
    with pytest.raises(ValueError):
        flooding_emissions(BehaviorParams(), 0)


def test_blackhole_reply():
    assert blackhole_route_reply(7, 41) == (1, 42)
    assert blackhole_route_reply(1, 0) == (1, 1)
    with pytest.raises(ValueError):
        blackhole_route_reply(3, -1)


def test_honest_always_forwards():
    rng = np.random.default_rng(0)
    assert all(forward_decision(Behavior.HONEST, BehaviorParams(), rng) is Action.FORWARD
               for _ in range(100))


def test_total_blackhole_always_drops():
    rng = np.random.default_rng(0)
    p = BehaviorParams(blackhole_drop_prob=1.0)
    assert all(forward_decision(Behavior.BLACK_HOLE, p, rng) is Action.DROP for _ in range(1000))


def test_selective_drop_rate():
    rng = np.random.default_rng(12345)
    p = BehaviorParams(selective_drop_prob=0.3)
    drops = sum(forward_decision(Behavior.SELECTIVE_FORWARDING, p, rng) is Action.DROP
                for _ in range(100_000))
    assert 0.29 <= drops / 100_000 <= 0.31


def test_grayhole_inactive_forwards_and_mixes_over_time():
    p = BehaviorParams(grayhole_drop_prob=1.0, grayhole_active_duty=0.5)
    rng = np.random.default_rng(1)
    assert forward_decision(Behavior.GRAY_HOLE, p, rng, active=False) is Action.FORWARD
    assert forward_decision(Behavior.GRAY_HOLE, p, rng, active=True) is Action.DROP
    seen = {forward_decision(Behavior.GRAY_HOLE, p, rng) for _ in range(10_000)}
    assert seen == {Action.FORWARD, Action.DROP}


def test_flooder_has_no_forwarding_policy():
    with pytest.raises(ValueError):
        forward_decision(Behavior.FLOODING, BehaviorParams(), np.random.default_rng(0))


def test_labels():
    assert behavior_label(Behavior.HONEST) == "Normal"
    assert behavior_label(Behavior.GRAY_HOLE) == "Gray hole"
    assert len(set(CLASS_NAMES)) == len(Behavior)
    for b in Behavior:
        assert label_behavior(behavior_label(b)) is b
    with pytest.raises(ValueError):
        label_behavior("Sybil")
