"""Per-slice traffic generation, transmission queues, and SLA evaluation.

Slice order everywhere: 0 = URLLC, 1 = eMBB, 2 = mMTC.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from slicebench.errors import ConfigError, DomainError

URLLC, EMBB, MMTC = 0, 1, 2
SLICE_NAMES = ("urllc", "embb", "mmtc")


@dataclass(frozen=True)
class SlaConfig:
    """Traffic-model parameters and per-slice SLA thresholds."""

    urllc_latency_ms: float = 400.0
    urllc_p: float = 0.8
    urllc_size_range: tuple[float, float] = (1.5, 4.0)  # Mbits
    embb_min_mbps: float = 5.0
    embb_demand_range: tuple[float, float] = (5.0, 15.0)  # Mbps, per-episode mean
    embb_jitter: float = 0.1  # stddev as a fraction of the mean
    mmtc_per_device_mbps: float = 3.5
    mmtc_min_ratio: float = 0.95
    mmtc_device_count: int = 8
    step_ms: float = 100.0

    def __post_init__(self) -> None:
        if min(self.urllc_latency_ms, self.embb_min_mbps, self.mmtc_per_device_mbps, self.step_ms) <= 0:
            raise ConfigError("SLA thresholds and step duration must be positive")
        if not 0.0 < self.mmtc_min_ratio <= 1.0:
            raise ConfigError("mmtc_min_ratio must lie in (0, 1]")
        if not 0.0 <= self.urllc_p <= 1.0:
            raise ConfigError("urllc_p must lie in [0, 1]")
        if self.urllc_size_range[0] > self.urllc_size_range[1]:
            raise ConfigError("urllc_size_range must be ordered")


@dataclass
class UrllcPacket:
    size_mbits: float
    arrival_step: int
    remaining_mbits: float
    completion_step: int | None = None

    def latency_ms(self, step_ms: float) -> float:
        if self.completion_step is None:
            raise DomainError("packet has not completed")
        return (self.completion_step - self.arrival_step + 1) * step_ms


def gen_urllc(
    rng: np.random.Generator,
    arrival_step: int,
    cfg: SlaConfig,
    p: float | None = None,
) -> UrllcPacket | None:
    """Bernoulli arrival; on success, a packet with uniformly sampled size.

    ``p`` overrides the configured arrival probability (used by tests to force
    degenerate streams). The two draws (arrival, size) always consume one
    uniform each only when needed, keeping streams reproducible.
    """
    p_eff = cfg.urllc_p if p is None else p
    if rng.random() >= p_eff:
        return None
    lo, hi = cfg.urllc_size_range
    size = rng.uniform(lo, hi)
    return UrllcPacket(size_mbits=size, arrival_step=arrival_step, remaining_mbits=size)


def gen_embb_demand(
    rng: np.random.Generator, mu: float, jitter: float = 0.1
) -> float:
    """Gaussian step demand around the per-episode mean, clamped at zero."""
    if jitter == 0.0:
        return mu
    return max(0.0, rng.normal(mu, jitter * mu))


class UrllcQueue:
    """FIFO transmission queue for one URLLC UE; drains at step granularity."""

    def __init__(self) -> None:
        self._packets: list[UrllcPacket] = []

    def __len__(self) -> int:
        return len(self._packets)

    def push(self, packet: UrllcPacket) -> None:
        self._packets.append(packet)

    def backlog_mbits(self) -> float:
        return float(sum(p.remaining_mbits for p in self._packets))

    def head_age_ms(self, step: int, step_ms: float) -> float:
        """Age of the head-of-line packet as of this step; 0 when empty."""
        if not self._packets:
            return 0.0
        return (step - self._packets[0].arrival_step + 1) * step_ms

    def drain(
        self, throughput_mbps: float, step_ms: float, step: int
    ) -> list[UrllcPacket]:
        """FIFO drain of one step's budget; returns packets completed this step."""
        if throughput_mbps < 0:
            raise DomainError("throughput must be non-negative")
        budget = throughput_mbps * step_ms / 1000.0
        completed: list[UrllcPacket] = []
        while self._packets and budget > 0.0:
            head = self._packets[0]
            if head.remaining_mbits <= budget:
                budget -= head.remaining_mbits
                head.remaining_mbits = 0.0
                head.completion_step = step
                completed.append(head)
                self._packets.pop(0)
            else:
                head.remaining_mbits -= budget
                budget = 0.0
        return completed


@dataclass
class StepMetrics:
    """Per-step SLA bookkeeping across the three slices."""

    step: int
    achieved_mbps: tuple[float, float, float]
    demand: tuple[float, float, float]  # urllc: backlog Mbits; others: Mbps
    sla_satisfied: tuple[bool, bool, bool]
    violations: tuple[int, int, int]  # violating UEs (mmtc: 0 or 1 as a slice)
    urllc_latencies_ms: list[float] = field(default_factory=list)
    urllc_hol_ok: int = 0  # UEs whose head-of-line age meets the SLA (or empty queue)
    mmtc_supported_devices: int = 0
    mmtc_service_ratio: float = 0.0


def eval_sla(
    *,
    step: int,
    urllc_queues: list[UrllcQueue],
    urllc_completed: list[UrllcPacket],
    urllc_achieved_mbps: float,
    embb_achieved: list[float],
    embb_demand: list[float],
    mmtc_total_mbps: float,
    cfg: SlaConfig,
) -> StepMetrics:
    """Evaluate all three SLAs for one decision step.

    URLLC violates when any packet completed this step exceeded the latency
    bound or any head-of-line packet has already aged past it. eMBB is judged
    per UE against the fixed throughput floor (demand shortfall feeds the
    reward, not the violation counter). mMTC supports floor(total / per-device
    rate) devices and violates below the minimum service ratio.
    """
    latencies = [p.latency_ms(cfg.step_ms) for p in urllc_completed]
    late_ues = 0
    hol_ok = 0
    for q in urllc_queues:
        if q.head_age_ms(step, cfg.step_ms) > cfg.urllc_latency_ms:
            late_ues += 1
        else:
            hol_ok += 1
    late_completed = sum(1 for lat in latencies if lat > cfg.urllc_latency_ms)
    urllc_ok = late_ues == 0 and late_completed == 0
    backlog = sum(q.backlog_mbits() for q in urllc_queues)

    embb_under = sum(1 for a in embb_achieved if a < cfg.embb_min_mbps)
    embb_ok = embb_under == 0

    supported = int(mmtc_total_mbps / cfg.mmtc_per_device_mbps)
    ratio = min(supported, cfg.mmtc_device_count) / cfg.mmtc_device_count
    mmtc_ok = ratio >= cfg.mmtc_min_ratio

    return StepMetrics(
        step=step,
        achieved_mbps=(urllc_achieved_mbps, float(sum(embb_achieved)), mmtc_total_mbps),
        demand=(
            backlog,
            float(sum(embb_demand)),
            cfg.mmtc_per_device_mbps * cfg.mmtc_device_count,
        ),
        sla_satisfied=(urllc_ok, embb_ok, mmtc_ok),
        violations=(late_ues + late_completed, embb_under, 0 if mmtc_ok else 1),
        urllc_latencies_ms=latencies,
        urllc_hol_ok=hol_ok,
        mmtc_supported_devices=supported,
        mmtc_service_ratio=ratio,
    )
