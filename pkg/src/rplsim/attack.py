"""Replay attacker: capture one legitimate DIO, re-multicast it forever.

The attacker stays fully isolated from the DODAG.  It never joins, never
answers probes or acknowledges unicasts, and transmits nothing but the one
captured DIO payload, stamped with its own source address, at a fixed
cadence from the attack start onward.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .rpl import DioMessage, NodeState


class CapturePolicy(enum.Enum):
    FIRST_HEARD = "first_heard"
    STRONGEST = "strongest"


@dataclass(frozen=True)
class AttackerConfig:
    replay_interval_ms: int = 1000
    attack_start_ms: int = 90_000
    capture_policy: CapturePolicy = CapturePolicy.FIRST_HEARD

    def __post_init__(self) -> None:
        if self.replay_interval_ms <= 0:
            raise ValueError("replay_interval_ms must be positive")
        if self.attack_start_ms < 0:
            raise ValueError("attack_start_ms must be >= 0")


@dataclass
class AttackerState:
    config: AttackerConfig
    captured: DioMessage | None = None
    captured_distance: float = math.inf
    replays_sent: int = 0

    def overhear(self, dio: DioMessage, sender_distance: float, now: int) -> None:
        """Consider one overheard DIO for capture, per the capture policy.

        The payload freezes as soon as replaying has begun, so the whole
        attack replays one byte-identical advertisement.
        """
        if self.replays_sent:
            return
        policy = self.config.capture_policy
        if policy is CapturePolicy.FIRST_HEARD:
            if self.captured is None:
                self.captured = dio
                self.captured_distance = sender_distance
        else:
            if sender_distance < self.captured_distance:
                self.captured = dio
                self.captured_distance = sender_distance


def attacker_step(node: NodeState, state: AttackerState, now: int) -> DioMessage | None:
    """One replay tick: the captured payload under the attacker's address.

    Returns None (silent skip) before the attack start or while nothing has
    been captured yet.
    """
    if now < state.config.attack_start_ms or state.captured is None:
        return None
    state.replays_sent += 1
    captured = state.captured
    return DioMessage(
        src=node.id,
        dodag_id=captured.dodag_id,
        version=captured.version,
        rank=captured.rank,
        instance_id=captured.instance_id,
    )
