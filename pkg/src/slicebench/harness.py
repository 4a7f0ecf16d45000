"""Experiment orchestration: train, evaluate, and compare agents.

The three agents differ only in the oracle feeding their training reward
(practical trace, theoretical profile-weighted estimator, or the hybrid
ensemble); evaluation always runs on the fixed practical oracle under
identical pre-generated scenario traces, so performance differences are
attributable to the training signal alone.
"""

from __future__ import annotations

import concurrent.futures
import csv
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from slicebench import env as env_mod
from slicebench import ppo
from slicebench.errors import ConfigError

log = logging.getLogger(__name__)

AGENTS = ("practical", "simulated", "hybrid")
AGENT_ORACLE = {"practical": "practical", "simulated": "theoretical", "hybrid": "hybrid"}
UNIFORM_AGENT = "uniform"

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentSpec:
    """One train/eval cell: scenario, agent variant, seeds, and run sizes."""

    scenario: str
    agent: str
    lam: float = 0.5
    train_seeds: tuple[int, ...] = (1,)
    eval_seeds: tuple[int, ...] = (101, 102, 103, 104, 105)
    eval_episodes: int = 20
    iterations: int = 60
    out_dir: str = "runs"
    episode_steps: int = 256
    mobility_std_m: float = 20.0
    hidden: int = 64
    ppo: ppo.PpoConfig = field(default_factory=ppo.PpoConfig)

    def __post_init__(self) -> None:
        if self.agent not in AGENTS + (UNIFORM_AGENT,):
            raise ConfigError(f"unknown agent {self.agent!r}; expected {AGENTS} or 'uniform'")
        if not self.train_seeds:
            raise ConfigError("need at least one training seed")
        if set(self.train_seeds) & set(self.eval_seeds):
            raise ConfigError("training and evaluation seed sets must be disjoint")
        if self.eval_episodes < 1:
            raise ConfigError("eval_episodes must be >= 1")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")

    def scenario_config(self, seed: int) -> env_mod.ScenarioConfig:
        agent = self.agent if self.agent in AGENTS else "hybrid"
        return env_mod.scenario_config(
            self.scenario,
            reward_oracle=AGENT_ORACLE[agent],
            lam=self.lam,
            seed=seed,
            episode_steps=self.episode_steps,
            mobility_std_m=self.mobility_std_m,
        )

    def config_hash(self) -> str:
        payload = repr(
            (
                self.scenario,
                self.agent,
                self.lam,
                self.episode_steps,
                self.mobility_std_m,
                self.hidden,
                self.ppo,
                env_mod.OBS_DIM,
            )
        )
        return ppo.config_hash(payload)

    def tag(self, seed: int) -> str:
        return f"{self.scenario}_{self.agent}_seed{seed}"


# -- CSV helpers --------------------------------------------------------------


def write_csv(path: str, name: str, header: list[str], rows: list[list]) -> None:
    """CSV with a schema-version comment line above the header."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={name}/v{SCHEMA_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(ln for ln in fh if not ln.startswith("#"))]
    return rows[0], rows[1:]


def cdf_rows(samples: list[float]) -> list[list[float]]:
    """Sorted (value, cumulative probability) pairs; the last bin reaches 1."""
    ordered = sorted(samples)
    n = len(ordered)
    return [[v, (i + 1) / n] for i, v in enumerate(ordered)]


# -- training ------------------------------------------------------------------


@dataclass
class TrainArtifacts:
    checkpoint_path: str
    curve_path: str
    iterations_run: int
    mean_rewards: list[float]


def _collect_rollout(
    environment: env_mod.SliceEnv,
    params: ppo.PolicyParams,
    cfg: ppo.PpoConfig,
    action_rng: np.random.Generator,
    episode_seed_rng: np.random.Generator,
) -> tuple[dict, float]:
    obs_l, act_l, logp_l, adv_l, ret_l = [], [], [], [], []
    episode_returns = []
    for _ in range(cfg.rollout_episodes):
        seed = int(episode_seed_rng.integers(0, 2**63))
        obs = environment.reset(seed=seed)
        rewards, values, dones = [], [], []
        done = False
        ep_obs, ep_act, ep_logp = [], [], []
        while not done:
            raw, logp, value = ppo.sample_action(params, obs, action_rng)
            allocation = env_mod.project_action(raw, environment.radio_cfg.prb_total)
            ep_obs.append(obs)
            ep_act.append(raw)
            ep_logp.append(logp)
            obs, reward, done, _ = environment.step(allocation)
            rewards.append(reward)
            values.append(value)
            dones.append(done)
        values.append(0.0)  # terminal bootstrap
        adv, ret = ppo.gae(
            np.array(rewards), np.array(values), np.array(dones, dtype=np.float64),
            cfg.gamma, cfg.gae_lambda,
        )
        obs_l.extend(ep_obs)
        act_l.extend(ep_act)
        logp_l.extend(ep_logp)
        adv_l.append(adv)
        ret_l.append(ret)
        episode_returns.append(float(np.sum(rewards)))
    batch = {
        "obs": np.asarray(obs_l),
        "actions": np.asarray(act_l),
        "logp": np.asarray(logp_l),
        "advantages": np.concatenate(adv_l),
        "returns": np.concatenate(ret_l),
    }
    return batch, float(np.mean(episode_returns))


CURVE_HEADER = [
    "iteration",
    "mean_episode_reward",
    "loss",
    "policy_loss",
    "value_loss",
    "entropy",
    "clip_fraction",
    "approx_kl",
]


def run_train(spec: ExperimentSpec, seed_index: int = 0) -> TrainArtifacts:
    """Train one agent; writes a per-iteration curve CSV and a checkpoint.

    On divergence the partial curve is flushed before the error propagates.
    """
    if spec.agent == UNIFORM_AGENT:
        raise ConfigError("the uniform baseline is not trainable")
    seed = spec.train_seeds[seed_index]
    scenario = spec.scenario_config(seed)
    environment = env_mod.SliceEnv(scenario)

    ss = np.random.SeedSequence(seed)
    action_rng, perm_rng, episode_rng = (np.random.default_rng(s) for s in ss.spawn(3))
    params = ppo.PolicyParams.init(
        env_mod.OBS_DIM, 3, spec.hidden, seed=seed
    )
    adam = ppo.Adam(params.flat.size, lr=spec.ppo.lr)

    tag = spec.tag(seed)
    curve_path = os.path.join(spec.out_dir, f"{tag}_curve.csv")
    checkpoint_path = os.path.join(spec.out_dir, f"{tag}_checkpoint.npz")
    rows: list[list] = []
    mean_rewards: list[float] = []
    try:
        for iteration in range(spec.iterations):
            batch, mean_reward = _collect_rollout(
                environment, params, spec.ppo, action_rng, episode_rng
            )
            diag = ppo.ppo_update(params, batch, spec.ppo, perm_rng, adam)
            mean_rewards.append(mean_reward)
            rows.append(
                [iteration, mean_reward]
                + [diag[k] for k in CURVE_HEADER[2:]]
            )
    finally:
        write_csv(curve_path, "training_curve", CURVE_HEADER, rows)

    ppo.save_checkpoint(
        checkpoint_path, params, spec.config_hash(), {"scenario": spec.scenario, "agent": spec.agent}
    )
    return TrainArtifacts(checkpoint_path, curve_path, len(rows), mean_rewards)


# -- evaluation ----------------------------------------------------------------


@dataclass
class ResultBundle:
    """Aggregated evaluation metrics for one agent on one scenario."""

    scenario: str
    agent: str
    weights: tuple[float, float, float]
    episodes: int
    mean_episode_reward: float
    urllc_mean_latency_ms: float
    urllc_violation_rate: float
    embb_mean_throughput_mbps: float
    embb_satisfaction_rate: float
    mmtc_mean_supported: float
    mmtc_service_ratio: float
    latency_samples_ms: list[float]
    embb_throughput_samples: list[float]
    trace_hashes: tuple[str, ...]

    SUMMARY_HEADER = [
        "scenario",
        "agent",
        "episodes",
        "mean_episode_reward",
        "urllc_mean_latency_ms",
        "urllc_violation_rate",
        "embb_mean_throughput_mbps",
        "embb_satisfaction_rate",
        "mmtc_mean_supported",
        "mmtc_service_ratio",
    ]

    def summary_row(self) -> list:
        return [
            self.scenario,
            self.agent,
            self.episodes,
            self.mean_episode_reward,
            self.urllc_mean_latency_ms,
            self.urllc_violation_rate,
            self.embb_mean_throughput_mbps,
            self.embb_satisfaction_rate,
            self.mmtc_mean_supported,
            self.mmtc_service_ratio,
        ]

    def emphasized_metric(self) -> tuple[str, float]:
        """Headline metric of the scenario's emphasized slice."""
        emphasized = env_mod.emphasized_slice(self.weights)
        if emphasized == 0:
            return "urllc_violation_rate", self.urllc_violation_rate
        if emphasized == 1:
            return "embb_mean_throughput_mbps", self.embb_mean_throughput_mbps
        return "mmtc_mean_supported", self.mmtc_mean_supported


def episode_seed(base_seed: int, episode_index: int) -> int:
    """Deterministic per-episode seed shared by every agent."""
    state = np.random.SeedSequence([base_seed, episode_index]).generate_state(1)
    return int(state[0])


def eval_episode_seeds(spec: ExperimentSpec) -> list[int]:
    return [
        episode_seed(spec.eval_seeds[i % len(spec.eval_seeds)], i)
        for i in range(spec.eval_episodes)
    ]


def run_eval(spec: ExperimentSpec, checkpoint_path: str | None = None) -> ResultBundle:
    """Deterministic evaluation on the fixed eval oracle over shared traces."""
    if spec.agent != UNIFORM_AGENT and checkpoint_path is None:
        raise ConfigError(f"agent {spec.agent!r} needs a checkpoint to evaluate")
    params = None
    if checkpoint_path is not None:
        params = ppo.load_checkpoint(checkpoint_path, spec.config_hash())

    scenario = spec.scenario_config(seed=spec.eval_seeds[0])
    environment = env_mod.SliceEnv(scenario, oracle_override=scenario.eval_oracle)

    episode_rewards: list[float] = []
    latencies: list[float] = []
    embb_steps: list[float] = []
    urllc_viol_steps = 0
    embb_ok_steps = 0
    supported: list[int] = []
    ratios: list[float] = []
    hashes: list[str] = []
    total_steps = 0

    for seed in eval_episode_seeds(spec):
        obs = environment.reset(seed=seed)
        hashes.append(environment.trace_hash())
        done = False
        total = 0.0
        while not done:
            if params is None:
                allocation = env_mod.uniform_allocation(environment.radio_cfg.prb_total)
            else:
                mu, _, _ = ppo.policy_forward(params, obs)
                allocation = env_mod.project_action(mu, environment.radio_cfg.prb_total)
            obs, reward, done, metrics = environment.step(allocation)
            total += reward
            total_steps += 1
            latencies.extend(metrics.urllc_latencies_ms)
            embb_steps.append(metrics.achieved_mbps[1])
            urllc_viol_steps += 0 if metrics.sla_satisfied[0] else 1
            embb_ok_steps += 1 if metrics.sla_satisfied[1] else 0
            supported.append(metrics.mmtc_supported_devices)
            ratios.append(metrics.mmtc_service_ratio)
        episode_rewards.append(total)

    return ResultBundle(
        scenario=scenario.name,
        agent=spec.agent,
        weights=scenario.weights,
        episodes=spec.eval_episodes,
        mean_episode_reward=float(np.mean(episode_rewards)),
        urllc_mean_latency_ms=float(np.mean(latencies)) if latencies else float("nan"),
        urllc_violation_rate=urllc_viol_steps / total_steps,
        embb_mean_throughput_mbps=float(np.mean(embb_steps)),
        embb_satisfaction_rate=embb_ok_steps / total_steps,
        mmtc_mean_supported=float(np.mean(supported)),
        mmtc_service_ratio=float(np.mean(ratios)),
        latency_samples_ms=sorted(latencies),
        embb_throughput_samples=sorted(embb_steps),
        trace_hashes=tuple(hashes),
    )


def export_bundle(bundle: ResultBundle, out_dir: str) -> None:
    """Summary row plus latency/throughput CDF series as CSV."""
    tag = f"{bundle.scenario}_{bundle.agent}"
    write_csv(
        os.path.join(out_dir, f"{tag}_summary.csv"),
        "eval_summary",
        ResultBundle.SUMMARY_HEADER,
        [bundle.summary_row()],
    )
    write_csv(
        os.path.join(out_dir, f"{tag}_latency_cdf.csv"),
        "latency_cdf",
        ["latency_ms", "cum_prob"],
        cdf_rows(bundle.latency_samples_ms),
    )
    write_csv(
        os.path.join(out_dir, f"{tag}_embb_cdf.csv"),
        "embb_throughput_cdf",
        ["embb_mbps", "cum_prob"],
        cdf_rows(bundle.embb_throughput_samples),
    )


# -- agent x scenario matrix -----------------------------------------------------


def _run_cell(spec: ExperimentSpec) -> dict:
    try:
        artifacts = run_train(spec)
        bundle = run_eval(spec, artifacts.checkpoint_path)
        metric_name, metric_value = bundle.emphasized_metric()
        return {
            "status": "ok",
            "spec": spec,
            "bundle": bundle,
            "row": bundle.summary_row() + [metric_name, metric_value],
        }
    except Exception as exc:  # per-cell isolation: one failure must not kill the grid
        log.error("matrix cell %s/%s failed: %s", spec.scenario, spec.agent, exc)
        return {
            "status": "failed",
            "spec": spec,
            "error": f"{type(exc).__name__}: {exc}",
            "row": [spec.scenario, spec.agent] + ["" for _ in range(10)],
        }


MATRIX_HEADER = ResultBundle.SUMMARY_HEADER + ["emphasized_metric", "emphasized_value"]


def run_matrix(base: ExperimentSpec, jobs: int = 1) -> tuple[list[dict], int]:
    """Train and evaluate the full agent x scenario grid.

    Returns (cell results, number of failed cells); the summary CSV lands in
    base.out_dir. Cells run as independent tasks bounded by ``jobs``.
    """
    specs = [
        replace(base, scenario=scenario, agent=agent,
                out_dir=os.path.join(base.out_dir, f"{scenario}_{agent}"))
        for scenario in env_mod.SCENARIO_WEIGHTS
        for agent in AGENTS
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, specs))
    else:
        results = [_run_cell(spec) for spec in specs]

    rows = [r["row"] for r in results]
    write_csv(
        os.path.join(base.out_dir, "matrix_summary.csv"), "matrix_summary",
        MATRIX_HEADER, rows,
    )
    _log_soft_ordering(results)
    failed = sum(1 for r in results if r["status"] != "ok")
    return results, failed


def _log_soft_ordering(results: list[dict]) -> None:
    """Soft check: hybrid at least matches one baseline on the emphasized metric."""
    by_cell = {
        (r["spec"].scenario, r["spec"].agent): r
        for r in results
        if r["status"] == "ok"
    }
    for scenario in env_mod.SCENARIO_WEIGHTS:
        hybrid = by_cell.get((scenario, "hybrid"))
        if hybrid is None:
            continue
        name, hybrid_value = hybrid["bundle"].emphasized_metric()
        lower_is_better = name == "urllc_violation_rate"
        outcomes = []
        for agent in ("practical", "simulated"):
            cell = by_cell.get((scenario, agent))
            if cell is None:
                continue
            _, value = cell["bundle"].emphasized_metric()
            better = hybrid_value <= value if lower_is_better else hybrid_value >= value
            outcomes.append((agent, value, better))
        ok = any(b for _, _, b in outcomes)
        log.info(
            "soft ordering %s: hybrid %s=%.4f vs %s -> %s",
            scenario, name, hybrid_value,
            ", ".join(f"{a}={v:.4f}" for a, v, _ in outcomes),
            "consistent" if ok else "inverted",
        )
