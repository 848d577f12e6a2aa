"""Unit-disk propagation with airtime congestion, plus node mobility.

Reachability is a hard disk of ``tx_range_m``.  Every frame heard at a
receiver (addressed to it or not) charges its current congestion window with
the frame's airtime; once a window holds more airtime than
``capacity_per_window * airtime_per_msg_ms``, further frames to that receiver
are lost with probability that escalates with the excess.  Receivers that are
themselves transmitting when a frame lands miss it outright (half duplex).

Mobility implements the random waypoint model: pick a uniform point in the
area, walk to it at a uniformly drawn speed, pause, repeat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DELIVERED = "delivered"
LOST = "lost"


@dataclass(frozen=True)
class RadioConfig:
    tx_range_m: float = 50.0
    base_loss: float = 0.01
    congestion_model: str = "airtime"  # "airtime" or "none"
    airtime_per_msg_ms: int = 10
    capacity_per_window: int = 10
    window_ms: int = 100
    unicast_airtime_ms: int = 30  # duty-cycled unicast, strobe until the ack
    strobe_airtime_ms: int = 100  # occupancy of an unacknowledged unicast try

    def __post_init__(self) -> None:
        if self.tx_range_m <= 0:
            raise ValueError("tx_range_m must be positive")
        if not 0.0 <= self.base_loss < 1.0:
            raise ValueError("base_loss must be in [0, 1)")
        if self.congestion_model not in ("airtime", "none"):
            raise ValueError("congestion_model must be 'airtime' or 'none'")
        if min(self.airtime_per_msg_ms, self.capacity_per_window, self.window_ms) < 1:
            raise ValueError("airtime/capacity/window must be >= 1")

    @property
    def capacity_ms(self) -> int:
        return self.capacity_per_window * self.airtime_per_msg_ms


class Radio:
    """Owns the congestion windows and the loss randomness for one run."""

    def __init__(self, config: RadioConfig, rng):
        self.config = config
        self.rng = rng
        self._windows: dict[int, tuple[int, int]] = {}  # node -> (win id, ms)

    def in_range(self, pos_a, pos_b) -> bool:
        return math.dist(pos_a, pos_b) <= self.config.tx_range_m

    def _charge(self, node_id: int, now: int, airtime_ms: int) -> int:
        win = now // self.config.window_ms
        prev_win, occupied = self._windows.get(node_id, (-1, 0))
        if prev_win != win:
            occupied = 0
        occupied += airtime_ms
        self._windows[node_id] = (win, occupied)
        return occupied

    def deliver(
        self,
        sender_pos,
        airtime_ms: int,
        receivers: list[tuple[int, list[float], bool]],
        now: int,
        draw_for: int | None = None,
    ) -> dict[int, str]:
        """Resolve one transmission against (id, position, rx_busy) receivers.

        Every in-range receiver's congestion window is charged (interference
        does not care who a frame is addressed to).  Loss is drawn for every
        in-range, non-busy receiver of a broadcast, or only for ``draw_for``
        on a unicast.  Receiver order must be deterministic.
        """
        cfg = self.config
        out: dict[int, str] = {}
        for node_id, pos, busy in receivers:
            if math.dist(sender_pos, pos) > cfg.tx_range_m:
                out[node_id] = LOST
                continue
            occupied = self._charge(node_id, now, airtime_ms)
            if draw_for is not None and node_id != draw_for:
                out[node_id] = LOST
                continue
            if busy:
                out[node_id] = LOST
                continue
            p_loss = cfg.base_loss
            if cfg.congestion_model == "airtime":
                excess = occupied - cfg.capacity_ms
                if excess > 0:
                    p_extra = min(1.0, excess / cfg.capacity_ms)
                    p_loss = 1.0 - (1.0 - p_loss) * (1.0 - p_extra)
            out[node_id] = LOST if self.rng.random() < p_loss else DELIVERED
        return out


@dataclass(frozen=True)
class MobilityConfig:
    model: str = "static"  # "static" or "random_waypoint"
    speed_min: float = 1.0
    speed_max: float = 2.0
    area: tuple[float, float] = (150.0, 150.0)
    pause_ms: int = 0

    def __post_init__(self) -> None:
        if self.model not in ("static", "random_waypoint"):
            raise ValueError("model must be 'static' or 'random_waypoint'")
        if not 0 < self.speed_min <= self.speed_max:
            raise ValueError("need 0 < speed_min <= speed_max")
        if min(self.area) <= 0:
            raise ValueError("area must be positive")


class Mobility:
    """Per-node RNGs keep trajectories independent of who else is mobile."""

    def __init__(self, config: MobilityConfig, rng_factory, mobile_ids: list[int]):
        self.config = config
        self.mobile_ids = list(mobile_ids) if config.model == "random_waypoint" else []
        self._rng = {node_id: rng_factory(node_id) for node_id in self.mobile_ids}
        self._target: dict[int, tuple[float, float]] = {}
        self._speed: dict[int, float] = {}
        self._pause_until: dict[int, int] = {}

    def _new_leg(self, node_id: int) -> None:
        w, h = self.config.area
        rng = self._rng[node_id]
        self._target[node_id] = (rng.random() * w, rng.random() * h)
        self._speed[node_id] = self.config.speed_min + rng.random() * (
            self.config.speed_max - self.config.speed_min
        )

    def move(self, positions: dict[int, list[float]], dt_ms: int, now: int) -> bool:
        """Advance every mobile node by dt; returns True if anything moved."""
        moved = False
        for node_id in self.mobile_ids:
            if self._pause_until.get(node_id, 0) > now:
                continue
            if node_id not in self._target:
                self._new_leg(node_id)
            pos = positions[node_id]
            tx, ty = self._target[node_id]
            dx, dy = tx - pos[0], ty - pos[1]
            dist = math.hypot(dx, dy)
            step = self._speed[node_id] * dt_ms / 1000.0
            if dist <= step:
                pos[0], pos[1] = tx, ty
                del self._target[node_id]
                if self.config.pause_ms:
                    self._pause_until[node_id] = now + self.config.pause_ms
            else:
                pos[0] += dx / dist * step
                pos[1] += dy / dist * step
            moved = True
        return moved
