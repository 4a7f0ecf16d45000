"""Slice-aware PRB allocation environment.

Episode structure: 14 UEs (3 URLLC / 3 eMBB / 8 mMTC) moving in a square cell
with the base station at the centre. Each decision step the agent sets one
PRB triple over the slices; slice budgets are split across the slice's UEs,
per-UE throughput comes from the selected oracle, traffic and SLA bookkeeping
advance, and the reward is a scenario-weighted sum of per-slice scores.

All episode randomness (placement, demand means, arrivals, packet sizes,
demand jitter, mobility) is pre-generated from the seed at reset, so a seed
fully determines the traffic/mobility trace independently of the policy, and
`trace_hash` can certify that different agents saw identical traces.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass

import numpy as np

from slicebench import oracle as oracle_mod
from slicebench import phy, traffic
from slicebench.errors import ConfigError, DomainError
from slicebench.traffic import EMBB, MMTC, URLLC

SLICE_UE_COUNTS = (3, 3, 8)
N_UE = sum(SLICE_UE_COUNTS)
OBS_DIM = 3 * N_UE

AREA_HALF_M = 750.0
MIN_CENTER_DIST_M = 10.0

ORACLE_MODES = ("practical", "theoretical", "hybrid")

# Demand normalization bounds per slice: URLLC queue backlog saturates at one
# max-size packet; eMBB follows its demand-mean range; mMTC demand is the
# constant per-device requirement.
DEMAND_BOUNDS = ((0.0, 4.0), (5.0, 15.0), (0.0, 3.5))


@dataclass(frozen=True)
class SliceAllocation:
    """PRB triple (URLLC, eMBB, mMTC); must exhaust the grid exactly."""

    prb_urllc: int
    prb_embb: int
    prb_mmtc: int
    prb_total: int = 106

    def __post_init__(self) -> None:
        parts = (self.prb_urllc, self.prb_embb, self.prb_mmtc)
        if any(p < 0 for p in parts):
            raise DomainError(f"PRB counts must be non-negative, got {parts}")
        if sum(parts) != self.prb_total:
            raise DomainError(
                f"contract violation: allocation {parts} sums to {sum(parts)}, "
                f"must be exactly {self.prb_total}"
            )

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.prb_urllc, self.prb_embb, self.prb_mmtc)


@dataclass(frozen=True)
class ScenarioConfig:
    """One deployment scenario: reward weighting, oracle choice, episode shape."""

    name: str
    weights: tuple[float, float, float]
    reward_oracle: str = "hybrid"
    eval_oracle: str = "practical"
    lam: float = 0.5
    episode_steps: int = 256
    mobility_std_m: float = 20.0
    seed: int = 0

    def __post_init__(self) -> None:
        if abs(sum(self.weights) - 1.0) > 1e-9 or any(w < 0 for w in self.weights):
            raise ConfigError(f"scenario weights must be a simplex, got {self.weights}")
        if self.reward_oracle not in ORACLE_MODES:
            raise ConfigError(f"unknown reward oracle {self.reward_oracle!r}")
        if self.eval_oracle not in ORACLE_MODES:
            raise ConfigError(f"unknown eval oracle {self.eval_oracle!r}")
        if self.episode_steps < 1:
            raise ConfigError("episode_steps must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam}")


# Emphasized slice gets the published 0.4; the remainder splits equally.
SCENARIO_WEIGHTS = {
    "smart_factory": (0.4, 0.3, 0.3),
    "stadium": (0.3, 0.4, 0.3),
    "smart_city": (0.3, 0.3, 0.4),
}


def emphasized_slice(weights: tuple[float, float, float]) -> int:
    """Slice index carrying the largest reward weight (ties to lowest index)."""
    return max(range(3), key=lambda i: (weights[i], -i))


def scenario_config(
    name: str,
    reward_oracle: str = "hybrid",
    lam: float = 0.5,
    seed: int = 0,
    **overrides,
) -> ScenarioConfig:
    """Build a named scenario preset, or load one from an INI preset file."""
    key = name.strip().lower()
    if key not in SCENARIO_WEIGHTS:
        if os.path.isfile(name):
            base = load_scenario_preset(name)
            return ScenarioConfig(
                name=base.name,
                weights=base.weights,
                reward_oracle=reward_oracle,
                lam=lam,
                seed=seed,
                **{
                    "episode_steps": base.episode_steps,
                    "mobility_std_m": base.mobility_std_m,
                    **overrides,
                },
            )
        raise ConfigError(
            f"unknown scenario {name!r}; expected one of {sorted(SCENARIO_WEIGHTS)} "
            "or a preset file path"
        )
    return ScenarioConfig(
        name=key,
        weights=SCENARIO_WEIGHTS[key],
        reward_oracle=reward_oracle,
        lam=lam,
        seed=seed,
        **overrides,
    )


def load_scenario_preset(path: str) -> ScenarioConfig:
    """Scenario preset file: INI with a [scenario] section.

    Keys: name, w_urllc, w_embb, w_mmtc, reward_oracle, lambda, episode_steps,
    mobility_std_m, seed.
    """
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read scenario preset {path}")
    if not parser.has_section("scenario"):
        raise ConfigError(f"{path} lacks a [scenario] section")
    s = parser["scenario"]
    try:
        weights = (s.getfloat("w_urllc"), s.getfloat("w_embb"), s.getfloat("w_mmtc"))
        if any(w is None for w in weights):
            raise ConfigError(f"{path} must define w_urllc, w_embb, w_mmtc")
        return ScenarioConfig(
            name=s.get("name", os.path.splitext(os.path.basename(path))[0]),
            weights=weights,
            reward_oracle=s.get("reward_oracle", "hybrid"),
            lam=s.getfloat("lambda", 0.5),
            episode_steps=s.getint("episode_steps", 256),
            mobility_std_m=s.getfloat("mobility_std_m", 20.0),
            seed=s.getint("seed", 0),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario preset {path}: {exc}") from exc


@dataclass
class UeState:
    """Dynamic per-UE state exposed to observation construction."""

    id: int
    slice_id: int
    position: np.ndarray  # metres, shape (2,)
    prx_db: float  # clipped
    demand: float  # URLLC: queued Mbits; eMBB: Mbps; mMTC: constant Mbps

    @property
    def demand_bounds(self) -> tuple[float, float]:
        return DEMAND_BOUNDS[self.slice_id]


def normalize_demand(r: float, bounds: tuple[float, float]) -> float:
    """Min-max demand normalization, clamped to [0, 1]."""
    lo, hi = bounds
    if lo >= hi:
        raise ConfigError(f"degenerate demand bounds {bounds}")
    return min(1.0, max(0.0, (r - lo) / (hi - lo)))


def largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Round non-negative quotas to integers summing to total exactly.

    Floors first, then hands the leftover units to the largest fractional
    remainders; remainder ties break toward the lowest index.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or weights.size == 0:
        raise DomainError("weights must be a non-empty vector")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise DomainError("weights must be finite and non-negative")
    wsum = weights.sum()
    if wsum <= 0:
        weights = np.ones_like(weights)
        wsum = weights.sum()
    quotas = weights / wsum * total
    floors = np.floor(quotas).astype(np.int64)
    leftover = total - int(floors.sum())
    fracs = quotas - floors
    order = sorted(range(weights.size), key=lambda i: (-fracs[i], i))
    for i in order[:leftover]:
        floors[i] += 1
    return floors


def project_action(raw, prb_total: int = 106) -> SliceAllocation:
    """Map three unconstrained reals onto the integer PRB simplex.

    Softmax scales to the grid size, then largest-remainder rounding; ties
    break by slice order URLLC < eMBB < mMTC.
    """
    raw = np.asarray(raw, dtype=np.float64).reshape(-1)
    if raw.size != 3 or not np.all(np.isfinite(raw)):
        raise DomainError(f"raw action must be 3 finite reals, got {raw}")
    z = raw - raw.max()
    w = np.exp(z)
    counts = largest_remainder(w, prb_total)
    return SliceAllocation(*map(int, counts), prb_total=prb_total)


def uniform_allocation(prb_total: int = 106) -> SliceAllocation:
    """Equal-split baseline action."""
    counts = largest_remainder(np.ones(3), prb_total)
    return SliceAllocation(*map(int, counts), prb_total=prb_total)


class SliceEnv:
    """Single-cell PRB allocation environment (one instance = one thread)."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        radio_cfg: phy.RadioConfig | None = None,
        sla_cfg: traffic.SlaConfig | None = None,
        profile: oracle_mod.McsProfile | None = None,
        trace: oracle_mod.ThroughputTrace | None = None,
        bler: np.ndarray | None = None,
        oracle_override: str | None = None,
        grid_scaled: bool = False,
        split_mode: str = "equal",
    ) -> None:
        self.scenario = scenario
        self.radio_cfg = radio_cfg or phy.RadioConfig()
        self.sla_cfg = sla_cfg or traffic.SlaConfig()
        self.profile = profile or oracle_mod.default_profile(self.radio_cfg)
        self.trace = trace or oracle_mod.default_trace(self.radio_cfg, self.profile)
        self.bler = oracle_mod.default_bler() if bler is None else bler
        self.grid_scaled = grid_scaled
        if split_mode not in ("equal", "demand"):
            raise ConfigError(f"unknown split mode {split_mode!r}")
        self.split_mode = split_mode
        self.oracle_mode = oracle_override or scenario.reward_oracle
        if self.oracle_mode not in ORACLE_MODES:
            raise ConfigError(f"unknown oracle mode {self.oracle_mode!r}")
        self._weight = oracle_mod.HybridWeight(scenario.lam)
        self.ues: list[UeState] = []
        self._t = 0
        self._done = True

    # -- oracle dispatch ----------------------------------------------------

    def throughput_mbps(self, prx_db: float, prbs: int) -> float:
        """Per-UE throughput under the environment's oracle."""
        if self.oracle_mode == "practical":
            return oracle_mod.practical_throughput(
                prx_db, prbs, self.trace, self.radio_cfg.prb_total
            )
        if self.oracle_mode == "theoretical":
            return oracle_mod.theoretical_throughput(
                prx_db, prbs, self.profile, self.radio_cfg, self.bler, self.grid_scaled
            )
        return oracle_mod.hybrid_throughput(
            prx_db,
            prbs,
            self.trace,
            self.profile,
            self._weight,
            self.radio_cfg,
            self.bler,
            self.grid_scaled,
        )

    # -- episode control ----------------------------------------------------

    def reset(self, seed: int | None = None) -> np.ndarray:
        """Start a new episode; pre-generates every stochastic stream."""
        seed = self.scenario.seed if seed is None else seed
        steps = self.scenario.episode_steps
        ss = np.random.SeedSequence(seed)
        r_place, r_mu, r_arrival, r_size, r_demand, r_move = (
            np.random.default_rng(s) for s in ss.spawn(6)
        )

        positions = r_place.uniform(-AREA_HALF_M, AREA_HALF_M, size=(N_UE, 2))
        for i in range(N_UE):
            while np.hypot(*positions[i]) < MIN_CENTER_DIST_M:
                positions[i] = r_place.uniform(-AREA_HALF_M, AREA_HALF_M, size=2)

        lo_mu, hi_mu = self.sla_cfg.embb_demand_range
        self._embb_mu = r_mu.uniform(lo_mu, hi_mu, size=SLICE_UE_COUNTS[EMBB])

        n_u = SLICE_UE_COUNTS[URLLC]
        self._arrivals = r_arrival.random((steps, n_u)) < self.sla_cfg.urllc_p
        lo_s, hi_s = self.sla_cfg.urllc_size_range
        self._sizes = r_size.uniform(lo_s, hi_s, size=(steps, n_u))

        jitter = self.sla_cfg.embb_jitter
        raw = self._embb_mu + jitter * self._embb_mu * r_demand.standard_normal(
            (steps, SLICE_UE_COUNTS[EMBB])
        )
        self._demands = np.maximum(0.0, raw)

        self._moves = self.scenario.mobility_std_m * r_move.standard_normal(
            (steps, N_UE, 2)
        )

        self._trace_hash = self._hash_streams(positions)

        self.ues = []
        uid = 0
        for slice_id, count in enumerate(SLICE_UE_COUNTS):
            for _ in range(count):
                ue = UeState(
                    id=uid,
                    slice_id=slice_id,
                    position=positions[uid].copy(),
                    prx_db=self._prx_for(positions[uid]),
                    demand=0.0,
                )
                self.ues.append(ue)
                uid += 1
        self._queues = [traffic.UrllcQueue() for _ in range(n_u)]
        self._t = 0
        self._done = False
        self._refresh_demands()
        return self.observation()

    def _hash_streams(self, positions: np.ndarray) -> str:
        h = hashlib.sha256()
        for arr in (
            positions,
            self._embb_mu,
            self._arrivals.astype(np.uint8),
            self._sizes,
            self._demands,
            self._moves,
        ):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def trace_hash(self) -> str:
        """Digest of the pre-generated traffic/mobility streams for this episode."""
        if self._done and self._t == 0:
            raise DomainError("trace hash is only defined after reset")
        return self._trace_hash

    def _prx_for(self, position: np.ndarray) -> float:
        dist_km = max(np.hypot(*position) / 1000.0, 1e-3)
        return phy.received_power(
            phy.LinkBudgetQuery(distance_km=dist_km), self.radio_cfg
        ).clipped_db

    def _refresh_demands(self) -> None:
        """Demand entries for the upcoming decision step self._t."""
        t = min(self._t, self.scenario.episode_steps - 1)
        for ue in self.ues:
            if ue.slice_id == URLLC:
                ue.demand = self._queues[ue.id].backlog_mbits()
            elif ue.slice_id == EMBB:
                ue.demand = float(self._demands[t, ue.id - SLICE_UE_COUNTS[URLLC]])
            else:
                ue.demand = self.sla_cfg.mmtc_per_device_mbps

    def observation(self) -> np.ndarray:
        """Flat per-UE (slice id, demand, received power) triples, all in [0,1]."""
        lo, hi = self.radio_cfg.prx_bounds_db
        obs = np.empty(OBS_DIM)
        for i, ue in enumerate(self.ues):
            obs[3 * i] = ue.slice_id / 2.0
            obs[3 * i + 1] = normalize_demand(ue.demand, ue.demand_bounds)
            obs[3 * i + 2] = (ue.prx_db - lo) / (hi - lo)
        return obs

    def slice_ues(self, slice_id: int) -> list[UeState]:
        return [ue for ue in self.ues if ue.slice_id == slice_id]

    def split_slice_prbs(self, slice_id: int, prbs: int) -> np.ndarray:
        """Integer per-UE shares of a slice budget (largest remainder)."""
        ues = self.slice_ues(slice_id)
        if self.split_mode == "demand":
            weights = np.array([ue.demand for ue in ues])
        else:
            weights = np.ones(len(ues))
        return largest_remainder(weights, prbs)

    def step(
        self, action: SliceAllocation | tuple[int, int, int] | np.ndarray
    ) -> tuple[np.ndarray, float, bool, traffic.StepMetrics]:
        if self._done:
            raise DomainError("episode is done; call reset() first")
        if not isinstance(action, SliceAllocation):
            vals = [int(v) for v in np.asarray(action).reshape(-1)]
            action = SliceAllocation(*vals, prb_total=self.radio_cfg.prb_total)
        t = self._t
        cfg = self.sla_cfg

        # 1. per-UE PRB shares and oracle throughputs
        tput: dict[int, float] = {}
        for slice_id, prbs in enumerate(action.as_tuple()):
            ues = self.slice_ues(slice_id)
            shares = self.split_slice_prbs(slice_id, prbs)
            for ue, share in zip(ues, shares):
                tput[ue.id] = self.throughput_mbps(ue.prx_db, int(share))

        # 2. URLLC arrivals for this step, then FIFO drains
        completed: list[traffic.UrllcPacket] = []
        for u in range(SLICE_UE_COUNTS[URLLC]):
            if self._arrivals[t, u]:
                size = float(self._sizes[t, u])
                self._queues[u].push(
                    traffic.UrllcPacket(
                        size_mbits=size, arrival_step=t, remaining_mbits=size
                    )
                )
            completed.extend(self._queues[u].drain(tput[u], cfg.step_ms, t))

        # 3. SLA bookkeeping
        embb_ues = self.slice_ues(EMBB)
        embb_achieved = [tput[ue.id] for ue in embb_ues]
        embb_demand = [
            float(self._demands[t, ue.id - SLICE_UE_COUNTS[URLLC]]) for ue in embb_ues
        ]
        mmtc_total = sum(tput[ue.id] for ue in self.slice_ues(MMTC))
        metrics = traffic.eval_sla(
            step=t,
            urllc_queues=self._queues,
            urllc_completed=completed,
            urllc_achieved_mbps=sum(tput[ue.id] for ue in self.slice_ues(URLLC)),
            embb_achieved=embb_achieved,
            embb_demand=embb_demand,
            mmtc_total_mbps=mmtc_total,
            cfg=cfg,
        )

        # 4. per-slice scores in [0,1] and the weighted reward
        scores = self._scores(metrics, embb_achieved, embb_demand)
        w = self.scenario.weights
        reward = w[0] * scores[0] + w[1] * scores[1] + w[2] * scores[2]
        self.last_scores = scores

        # 5. mobility with wall reflection, then received-power refresh
        for ue in self.ues:
            ue.position += self._moves[t, ue.id]
            for axis in range(2):
                if ue.position[axis] > AREA_HALF_M:
                    ue.position[axis] = 2 * AREA_HALF_M - ue.position[axis]
                elif ue.position[axis] < -AREA_HALF_M:
                    ue.position[axis] = -2 * AREA_HALF_M - ue.position[axis]
            ue.prx_db = self._prx_for(ue.position)

        self._t += 1
        self._done = self._t >= self.scenario.episode_steps
        self._refresh_demands()
        return self.observation(), float(reward), self._done, metrics

    def _scores(
        self,
        metrics: traffic.StepMetrics,
        embb_achieved: list[float],
        embb_demand: list[float],
    ) -> tuple[float, float, float]:
        """Bounded per-slice satisfaction scores.

        URLLC: fraction of UEs whose head-of-line packet is within the latency
        bound (empty queue counts as satisfied). eMBB: mean per-UE
        min(1, achieved/demand). mMTC: min(1, supported devices / device count).
        """
        score_u = metrics.urllc_hol_ok / SLICE_UE_COUNTS[URLLC]
        ratios = [
            1.0 if d <= 0.0 else min(1.0, a / d)
            for a, d in zip(embb_achieved, embb_demand)
        ]
        score_e = sum(ratios) / len(ratios)
        score_m = min(
            1.0, metrics.mmtc_supported_devices / self.sla_cfg.mmtc_device_count
        )
        return (score_u, score_e, score_m)
