"""Evaluation metrics computed from run traces.

Four headline figures: packet delivery ratio (gateway receptions over origin
transmission attempts), average end-to-end delay over delivered packets only,
attacker detection accuracy (fraction of suspicion events whose subject really
is an attacker), and per-attacker first response time (first suspicion minus
attack launch).  Permanent-block times are reported separately from
suspicions.  Aggregation over replications uses mean and a two-sided 95%
t-interval; undetected attackers enter FRT aggregation right-censored at
(run duration - attack start).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class GroundTruth:
    scenario: str
    seed: int
    n_sensors: int
    n_attackers: int
    attack_start_ms: int
    duration_ms: int
    first_attacker: int

    @property
    def attacker_set(self) -> frozenset[int]:
        if self.n_attackers == 0:
            return frozenset()
        return frozenset(
            range(self.first_attacker, self.first_attacker + self.n_attackers)
        )


@dataclass(frozen=True)
class RunMetrics:
    pdr: float | None
    ae2ed_ms: float | None
    ada: float | None
    frt_ms: dict[int, int | None]  # per attacker; None = never suspected
    block_ms: dict[int, int | None]  # per attacker; first permanent block
    dio_sent: int
    dis_sent: int
    dao_sent: int
    data_sent: int
    data_delivered: int
    false_suspicions: int
    permanent_blocks_legit: int
    overflow_events: int
    loop_drops: int

    def __eq__(self, other):  # dict fields keep dataclass eq usable
        return isinstance(other, RunMetrics) and self.__dict__ == other.__dict__


def ground_truth(trace) -> GroundTruth:
    for rec in trace:
        if rec[2] == "run_info":
            _, _, _, name, seed, n_sensors, n_attackers, start, duration, first = rec
            return GroundTruth(
                str(name), seed, n_sensors, n_attackers, start, duration, first
            )
    raise ValueError("trace has no run_info record")


def compute_pdr(trace) -> float | None:
    sent = sum(1 for rec in trace if rec[2] == "data_sent")
    if sent == 0:
        return None
    received = sum(1 for rec in trace if rec[2] == "data_delivered")
    return received / sent


def compute_ae2ed(trace) -> float | None:
    """Mean delivery delay in milliseconds; lost packets are ignored."""
    delays = [rec[0] - rec[5] for rec in trace if rec[2] == "data_delivered"]
    if not delays:
        return None
    return sum(delays) / len(delays)


def compute_ada(trace, truth: GroundTruth | None = None) -> float | None:
    truth = truth or ground_truth(trace)
    attackers = truth.attacker_set
    true_hits = false_hits = 0
    for rec in trace:
        if rec[2] == "ids_suspect":
            if rec[3] in attackers:
                true_hits += 1
            else:
                false_hits += 1
    total = true_hits + false_hits
    if total == 0:
        return None
    return true_hits / total


def compute_frt(trace, truth: GroundTruth | None = None) -> dict[int, int | None]:
    """First suspicion time minus attack launch, per attacker (ms)."""
    truth = truth or ground_truth(trace)
    first_seen: dict[int, int] = {}
    for rec in trace:
        if rec[2] == "ids_suspect" and rec[3] in truth.attacker_set:
            first_seen.setdefault(rec[3], rec[0])
    return {
        attacker: (
            first_seen[attacker] - truth.attack_start_ms
            if attacker in first_seen
            else None
        )
        for attacker in sorted(truth.attacker_set)
    }


def compute_block_times(trace, truth: GroundTruth | None = None) -> dict[int, int | None]:
    """First permanent-block time minus attack launch, per attacker (ms)."""
    truth = truth or ground_truth(trace)
    first_block: dict[int, int] = {}
    for rec in trace:
        if rec[2] == "ids_block" and rec[3] in truth.attacker_set:
            first_block.setdefault(rec[3], rec[0])
    return {
        attacker: (
            first_block[attacker] - truth.attack_start_ms
            if attacker in first_block
            else None
        )
        for attacker in sorted(truth.attacker_set)
    }


def from_trace(trace) -> RunMetrics:
    truth = ground_truth(trace)
    attackers = truth.attacker_set
    counts = {"dio_sent": 0, "dis_sent": 0, "dao_sent": 0, "data_sent": 0,
              "data_delivered": 0, "loop_drop": 0, "ids_overflow": 0}
    false_susp = legit_blocks = 0
    for rec in trace:
        kind = rec[2]
        if kind in counts:
            counts[kind] += 1
        elif kind == "ids_suspect" and rec[3] not in attackers:
            false_susp += 1
        elif kind == "ids_block" and rec[3] not in attackers:
            legit_blocks += 1
    return RunMetrics(
        pdr=compute_pdr(trace),
        ae2ed_ms=compute_ae2ed(trace),
        ada=compute_ada(trace, truth),
        frt_ms=compute_frt(trace, truth),
        block_ms=compute_block_times(trace, truth),
        dio_sent=counts["dio_sent"],
        dis_sent=counts["dis_sent"],
        dao_sent=counts["dao_sent"],
        data_sent=counts["data_sent"],
        data_delivered=counts["data_delivered"],
        false_suspicions=false_susp,
        permanent_blocks_legit=legit_blocks,
        overflow_events=counts["ids_overflow"],
        loop_drops=counts["loop_drop"],
    )


# ---------------------------------------------------------------------------
# aggregation over replications

# two-sided 95% critical values of Student's t by degrees of freedom
_T95 = {
    1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447, 7: 2.365,
    8: 2.306, 9: 2.262, 10: 2.228, 11: 2.201, 12: 2.179, 13: 2.160, 14: 2.145,
    15: 2.131, 16: 2.120, 17: 2.110, 18: 2.101, 19: 2.093, 20: 2.086,
    21: 2.080, 22: 2.074, 23: 2.069, 24: 2.064, 25: 2.060, 26: 2.056,
    27: 2.052, 28: 2.048, 29: 2.045, 30: 2.042,
}


@dataclass(frozen=True)
class Aggregate:
    n: int
    mean: float | None
    ci95: float | None


def aggregate(values) -> Aggregate:
    """Mean and 95% confidence half-width, skipping undefined entries."""
    data = [v for v in values if v is not None]
    n = len(data)
    if n == 0:
        return Aggregate(0, None, None)
    mean = sum(data) / n
    if n == 1:
        return Aggregate(1, mean, None)
    var = sum((v - mean) ** 2 for v in data) / (n - 1)
    t_crit = _T95.get(n - 1, 1.96)
    return Aggregate(n, mean, t_crit * math.sqrt(var / n))


def censored_frt_values(
    runs: list[RunMetrics], duration_ms: int, attack_start_ms: int
) -> list[float]:
    """All per-(attacker, run) response times, censored at run end."""
    horizon = float(duration_ms - attack_start_ms)
    out: list[float] = []
    for run in runs:
        for attacker in sorted(run.frt_ms):
            value = run.frt_ms[attacker]
            out.append(horizon if value is None else float(value))
    return out


# ---------------------------------------------------------------------------
# CSV schema (golden-pinned by tests)

RUN_CSV_HEADER = (
    "scenario,seed,pdr,ae2ed_s,ada,frt_s,block_s,dio_sent,dis_sent,dao_sent,"
    "data_sent,data_delivered,false_suspicions,legit_blocks,overflow_events,"
    "loop_drops"
)

AGGREGATE_CSV_HEADER = (
    "scenario,runs,pdr_mean,pdr_ci95,ae2ed_mean_s,ae2ed_ci95_s,ada_mean,"
    "ada_ci95,frt_mean_s,frt_ci95_s,detected_attackers,attacker_slots,"
    "false_suspicions_mean,legit_blocks_total"
)


def _fmt(value, scale=1.0) -> str:
    if value is None:
        return "NA"
    return f"{value * scale:.6f}"


def _per_attacker(values: dict[int, int | None]) -> str:
    rendered = ";".join(
        f"{attacker}={_fmt(value, 0.001)}" for attacker, value in sorted(values.items())
    )
    return rendered or "none"


def run_csv_row(label: str, seed: int, m: RunMetrics) -> str:
    return ",".join(
        [
            label,
            str(seed),
            _fmt(m.pdr),
            _fmt(m.ae2ed_ms, 0.001),
            _fmt(m.ada),
            _per_attacker(m.frt_ms),
            _per_attacker(m.block_ms),
            str(m.dio_sent),
            str(m.dis_sent),
            str(m.dao_sent),
            str(m.data_sent),
            str(m.data_delivered),
            str(m.false_suspicions),
            str(m.permanent_blocks_legit),
            str(m.overflow_events),
            str(m.loop_drops),
        ]
    )


def aggregate_csv_row(
    label: str, runs: list[RunMetrics], duration_ms: int, attack_start_ms: int
) -> str:
    pdr = aggregate([m.pdr for m in runs])
    delay = aggregate([m.ae2ed_ms for m in runs])
    ada = aggregate([m.ada for m in runs])
    frt = aggregate(censored_frt_values(runs, duration_ms, attack_start_ms))
    detected = sum(
        1 for m in runs for v in m.frt_ms.values() if v is not None
    )
    slots = sum(len(m.frt_ms) for m in runs)
    false_mean = aggregate([float(m.false_suspicions) for m in runs])
    return ",".join(
        [
            label,
            str(len(runs)),
            _fmt(pdr.mean),
            _fmt(pdr.ci95),
            _fmt(delay.mean, 0.001),
            _fmt(delay.ci95, 0.001),
            _fmt(ada.mean),
            _fmt(ada.ci95),
            _fmt(frt.mean, 0.001),
            _fmt(frt.ci95, 0.001),
            str(detected),
            str(slots),
            _fmt(false_mean.mean),
            str(sum(m.permanent_blocks_legit for m in runs)),
        ]
    )
