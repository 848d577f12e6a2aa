"""Minimal RPL node behavior: DODAG join, rank, trickle, upward data.

This is not a full RFC implementation.  It models exactly what the
surrounding experiments need: DODAG construction from DIO advertisements,
rank computation through an objective function (ETX-weighted with hysteresis,
or a flat hop-count variant), trickle-driven DIO emission, DIS solicitation
while parentless, link-quality probing of unconfirmed candidates, and
upward-only data forwarding along preferred parents.  Downward DAO traffic
exists purely as airtime.

Node operations return lightweight action tuples (``("probe", addr)``,
``("trickle_reset",)``, ...) that the event engine turns into transmissions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .ids import IdsState

MIN_RANK = 128
MRHOF_RANK_FACTOR = 128
OF0_RANK_STEP = 256
PARENT_SWITCH_HYSTERESIS = 192
RANK_RESET_THRESHOLD = 256  # advertise-worthy rank move
ETX_INIT = 1.0
ETX_ALPHA = 0.2  # EWMA weight of the newest link sample
ETX_FAIL_SAMPLE = 4.0
ETX_DROP_THRESHOLD = 6.0  # beyond this the link is considered dead


class Role(enum.Enum):
    ROOT = "root"
    SENSOR = "sensor"
    ATTACKER = "attacker"


class ObjectiveMode(enum.Enum):
    MRHOF_ETX = "mrhof_etx"
    OF0 = "of0"


@dataclass(frozen=True)
class DioMessage:
    src: int
    dodag_id: int
    version: int
    rank: int
    instance_id: int = 0


@dataclass
class TrickleState:
    """Simplified trickle: one fire per interval, doubling after each fire."""

    i_min_ms: int = 4096
    doublings: int = 8
    redundancy_k: int = 10
    interval_ms: int = 4096
    fire_at: int = 0
    counter: int = 0
    generation: int = 0

    @property
    def max_interval_ms(self) -> int:
        return self.i_min_ms << self.doublings


def trickle_schedule(ts: TrickleState, now: int, rng) -> int:
    """Pick the fire point in the second half of the current interval."""
    ts.fire_at = now + ts.interval_ms // 2 + int(rng.random() * (ts.interval_ms / 2))
    ts.generation += 1
    return ts.fire_at


def trickle_reset(ts: TrickleState, now: int, rng) -> int:
    ts.interval_ms = ts.i_min_ms
    ts.counter = 0
    return trickle_schedule(ts, now, rng)


def trickle_after_fire(ts: TrickleState, now: int, rng) -> int:
    ts.interval_ms = min(ts.interval_ms * 2, ts.max_interval_ms)
    ts.counter = 0
    return trickle_schedule(ts, now, rng)


@dataclass
class Candidate:
    """What a node knows about one potential parent."""

    addr: int
    advertised_rank: int
    version: int
    etx: float = ETX_INIT
    confirmed: bool = False
    last_dio_ms: int = 0

    def rank_too_deep(self, own_rank: int | None) -> bool:
        return own_rank is not None and self.advertised_rank >= own_rank


@dataclass
class NodeState:
    id: int
    role: Role
    position: list[float]
    objective: ObjectiveMode = ObjectiveMode.MRHOF_ETX
    rank: int | None = None
    preferred_parent: int | None = None
    candidates: dict[int, Candidate] = field(default_factory=dict)
    trickle: TrickleState = field(default_factory=TrickleState)
    ids: IdsState | None = None
    version: int = 1
    dodag_id: int = 0
    probes_in_flight: set[int] = field(default_factory=set)
    tx_free_at: int = 0
    data_seq: int = 0

    def __post_init__(self) -> None:
        if self.role is Role.ROOT:
            self.rank = MIN_RANK

    @property
    def joined(self) -> bool:
        return self.rank is not None


def rank_increase(etx: float, mode: ObjectiveMode) -> int:
    if mode is ObjectiveMode.OF0:
        return OF0_RANK_STEP
    return round(MRHOF_RANK_FACTOR * max(ETX_INIT, etx))


def objective_function(
    candidates: list[tuple[int, int, float]],
    mode: ObjectiveMode = ObjectiveMode.MRHOF_ETX,
    current: tuple[int, int] | None = None,
    hysteresis: int = PARENT_SWITCH_HYSTERESIS,
) -> tuple[int, int] | None:
    """Pick the preferred parent and the resulting own rank.

    ``candidates`` holds (address, advertised rank, etx) triples; ``current``
    is the present (parent address, path cost) when joined.  Ties break on
    the lowest address.  Returns None for an empty candidate list; when a
    current parent is given, a different candidate wins only if it beats the
    current cost by more than the hysteresis margin.
    """
    best: tuple[int, int] | None = None
    current_cost: int | None = None
    for addr, adv_rank, etx in candidates:
        cost = adv_rank + rank_increase(etx, mode)
        if current is not None and addr == current[0]:
            current_cost = cost
        if best is None or (cost, addr) < (best[1], best[0]):
            best = (addr, cost)
    if best is None:
        return None
    if current is not None and current_cost is not None and best[0] != current[0]:
        if best[1] >= current_cost - hysteresis:
            return (current[0], current_cost)
    return best


def eligible_candidates(node: NodeState) -> list[tuple[int, int, float]]:
    """Confirmed, current-version candidates that do not violate loop rules."""
    out = []
    for cand in node.candidates.values():
        if not cand.confirmed or cand.version != node.version:
            continue
        if cand.etx > ETX_DROP_THRESHOLD:
            continue
        if node.joined and node.preferred_parent != cand.addr:
            # max_depth rule: never adopt a parent advertising >= own rank
            if cand.rank_too_deep(node.rank):
                continue
        out.append((cand.addr, cand.advertised_rank, cand.etx))
    return out


def select_parent(node: NodeState) -> list[tuple]:
    """Re-run parent selection; returns actions for any topology change."""
    if node.role is not Role.SENSOR:
        return []
    current = None
    if node.preferred_parent is not None and node.rank is not None:
        current = (node.preferred_parent, node.rank)
    choice = objective_function(eligible_candidates(node), node.objective, current)
    actions: list[tuple] = []
    if choice is None:
        if node.preferred_parent is not None or node.rank is not None:
            node.preferred_parent = None
            node.rank = None
            actions.append(("parent_lost",))
            actions.append(("trickle_reset",))
        return actions
    addr, new_rank = choice
    if addr != node.preferred_parent:
        actions.append(("parent_switch", node.preferred_parent, addr))
        actions.append(("send_dao", addr))
        actions.append(("trickle_reset",))
        node.preferred_parent = addr
        node.rank = new_rank
    elif node.rank != new_rank:
        big_move = node.rank is None or abs(new_rank - node.rank) >= RANK_RESET_THRESHOLD
        node.rank = new_rank
        if big_move:
            actions.append(("trickle_reset",))
    return actions


def handle_dio(node: NodeState, dio: DioMessage, now: int) -> list[tuple]:
    """Digest one accepted DIO; returns protocol actions for the engine.

    Stale-version DIOs and self-echoes are ignored.  A newer version wipes
    routing state and restarts the join.  Unconfirmed senders trigger a link
    probe; confirmed ones refresh their advertisement and may move the
    preferred parent.
    """
    if dio.src == node.id or node.role is Role.ATTACKER:
        return []
    if dio.version < node.version:
        return []
    actions: list[tuple] = []
    if dio.version > node.version:
        node.version = dio.version
        if node.role is Role.SENSOR:
            node.rank = None
            node.preferred_parent = None
        actions.append(("trickle_reset",))

    cand = node.candidates.get(dio.src)
    if cand is None:
        cand = Candidate(
            addr=dio.src,
            advertised_rank=dio.rank,
            version=dio.version,
            last_dio_ms=now,
        )
        node.candidates[dio.src] = cand
    else:
        cand.advertised_rank = dio.rank
        cand.version = dio.version
        cand.last_dio_ms = now

    if node.role is Role.ROOT:
        node.trickle.counter += 1
        return actions

    if not cand.confirmed:
        actions.append(("probe", dio.src))
        return actions

    before = (node.preferred_parent, node.rank)
    actions.extend(select_parent(node))
    if (node.preferred_parent, node.rank) == before:
        node.trickle.counter += 1  # consistent advertisement
    return actions


def handle_dis(node: NodeState, now: int) -> list[tuple]:
    """A solicitation from a neighbor asks for a fast DIO."""
    if node.role is Role.ATTACKER or not node.joined:
        return []
    return [("trickle_reset",)]


def note_probe_result(node: NodeState, target: int, ok: bool) -> list[tuple]:
    """Record a bidirectional probe outcome.

    Success admits (or re-validates) the candidate with a fresh ETX; a probe
    with every strobe unanswered is the out-of-range/unresponsive signature
    and retires the link until it is probed again.
    """
    cand = node.candidates.get(target)
    if cand is None:
        return []
    if ok:
        cand.confirmed = True
        cand.etx = ETX_INIT
    else:
        cand.confirmed = False
    return select_parent(node)


def note_link_outcome(
    node: NodeState, neighbor: int, attempts: int, delivered: bool
) -> list[tuple]:
    """Fold a unicast outcome into the neighbor's ETX estimate.

    A fully exhausted attempt chain asks for a liveness probe of the link
    instead of killing it outright: congestion loses some frames, but only a
    vanished neighbor loses a whole probe burst too.
    """
    cand = node.candidates.get(neighbor)
    if cand is None or not cand.confirmed:
        return []
    sample = float(attempts) if delivered else ETX_FAIL_SAMPLE
    cand.etx = (1.0 - ETX_ALPHA) * cand.etx + ETX_ALPHA * sample
    actions: list[tuple] = []
    if cand.etx > ETX_DROP_THRESHOLD:
        cand.confirmed = False  # must re-probe before reuse
    elif not delivered:
        actions.append(("probe", neighbor))
    return actions + select_parent(node)


def global_repair(root: NodeState) -> None:
    """Bump the DODAG version; the new number spreads with the next DIOs."""
    root.version += 1


@dataclass
class DataPacket:
    origin: int
    seq: int
    created_ms: int
    size_bytes: int = 30
    path: list[int] = field(default_factory=list)
