"""Tests for the replay attacker."""

from __future__ import annotations

import pytest

from rplsim import engine
from rplsim.attack import AttackerConfig, AttackerState, CapturePolicy, attacker_step
from rplsim.config import ScenarioConfig
from rplsim.radio import RadioConfig
from rplsim.rpl import DioMessage, NodeState, Role


def make_attacker(policy=CapturePolicy.FIRST_HEARD, interval=1000):
    cfg = AttackerConfig(replay_interval_ms=interval, capture_policy=policy)
    node = NodeState(id=9, role=Role.ATTACKER, position=[0.0, 0.0])
    return node, AttackerState(cfg)


DIO_A = DioMessage(src=1, dodag_id=0, version=1, rank=256)
DIO_B = DioMessage(src=2, dodag_id=0, version=1, rank=384)


class TestCapture:
    def test_nothing_captured_is_silent(self):
        node, state = make_attacker()
        assert attacker_step(node, state, 95_000) is None
        assert state.replays_sent == 0

    def test_first_heard_wins(self):
        node, state = make_attacker()
        state.overhear(DIO_A, 30.0, 1000)
        state.overhear(DIO_B, 5.0, 2000)
        out = attacker_step(node, state, 90_000)
        assert out.rank == DIO_A.rank

    def test_strongest_prefers_closest(self):
        node, state = make_attacker(policy=CapturePolicy.STRONGEST)
        state.overhear(DIO_A, 30.0, 1000)
        state.overhear(DIO_B, 5.0, 2000)
        out = attacker_step(node, state, 90_000)
        assert out.rank == DIO_B.rank

    def test_payload_frozen_once_replaying(self):
        node, state = make_attacker(policy=CapturePolicy.STRONGEST)
        state.overhear(DIO_A, 30.0, 1000)
        first = attacker_step(node, state, 90_000)
        state.overhear(DIO_B, 1.0, 91_000)
        second = attacker_step(node, state, 91_000)
        assert (first.rank, first.version, first.dodag_id) == (
            second.rank,
            second.version,
            second.dodag_id,
        )

    def test_replay_is_non_spoofed(self):
        node, state = make_attacker()
        state.overhear(DIO_A, 10.0, 1000)
        out = attacker_step(node, state, 90_000)
        assert out.src == node.id != DIO_A.src


class TestTiming:
    def test_silent_before_attack_start(self):
        node, state = make_attacker()
        state.overhear(DIO_A, 10.0, 1000)
        assert attacker_step(node, state, 89_999) is None
        assert attacker_step(node, state, 90_000) is not None

    def test_config_validation(self):
        with pytest.raises(ValueError, match="replay_interval_ms"):
            AttackerConfig(replay_interval_ms=0)
        with pytest.raises(ValueError, match="attack_start_ms"):
            AttackerConfig(attack_start_ms=-1)


def chain_scenario(duration_ms):
    # root, one sensor, one attacker all mutually in range; lossless radio
    return ScenarioConfig(
        name="pair",
        duration_ms=duration_ms,
        n_sensors=1,
        n_attackers=1,
        topology="explicit",
        positions=((0, 0.0, 0.0), (1, 30.0, 0.0), (2, 30.0, 20.0)),
        radio=RadioConfig(tx_range_m=50.0, base_loss=0.0, congestion_model="none"),
        ids_enabled=True,
    )


class TestEndToEnd:
    def test_sixty_replays_in_sixty_seconds(self):
        sim = engine.Simulation(chain_scenario(150_000), seed=3)
        _, trace = sim.run()
        replays = [
            rec for rec in trace if rec[2] == "dio_sent" and rec[1] == 2 and rec[0] < 150_000
        ]
        assert len(replays) == 60
        assert all(rec[0] >= 90_000 for rec in replays)
        # byte-identical payload across the run
        assert len({rec[3:] for rec in replays}) == 1

    def test_attacker_stays_isolated(self):
        sim = engine.Simulation(chain_scenario(200_000), seed=3)
        _, trace = sim.run()
        attacker = sim.nodes[2]
        assert attacker.rank is None
        assert attacker.preferred_parent is None
        sent_kinds = {rec[2] for rec in trace if rec[1] == 2}
        assert "dis_sent" not in sent_kinds
        assert "dao_sent" not in sent_kinds
        assert "data_sent" not in sent_kinds

    def test_victim_sees_replay_interval_gap(self):
        sim = engine.Simulation(chain_scenario(150_000), seed=3)
        sim.run()
        victim = sim.nodes[1]
        entry = next(e for e in victim.ids.neighbors if e.addr == 2)
        assert entry.t_recent - entry.t_previous == 1000
        assert entry.dio_count >= 55  # lossless: every replay is counted
