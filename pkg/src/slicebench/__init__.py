"""Desk-scale slice-aware PRB allocation sandbox.

OFDM link-layer simulator, multi-source throughput oracles, SLA-driven
traffic models, a PRB-allocation RL environment, a from-scratch PPO trainer,
and an experiment harness comparing agents that differ only in the origin of
their throughput reward signal.
"""

from slicebench.env import (
    ScenarioConfig,
    SliceAllocation,
    SliceEnv,
    project_action,
    scenario_config,
    uniform_allocation,
)
from slicebench.errors import ConfigError, DivergenceError, DomainError
from slicebench.harness import ExperimentSpec, ResultBundle, run_eval, run_matrix, run_train
from slicebench.linksim import LinkRunResult, LinkRunSpec, ber_analytic, simulate_link
from slicebench.oracle import (
    HybridWeight,
    McsProfile,
    ThroughputTrace,
    hybrid_throughput,
    practical_throughput,
    synthesize_profile,
    t_mcs,
    theoretical_throughput,
)
from slicebench.phy import (
    LinkBudgetQuery,
    McsEntry,
    Modulation,
    RadioConfig,
    duty_cycle,
    mcs_params,
    received_power,
)
from slicebench.ppo import PolicyParams, PpoConfig
from slicebench.traffic import SlaConfig, StepMetrics, UrllcPacket

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DivergenceError",
    "DomainError",
    "ExperimentSpec",
    "HybridWeight",
    "LinkBudgetQuery",
    "LinkRunResult",
    "LinkRunSpec",
    "McsEntry",
    "McsProfile",
    "Modulation",
    "PolicyParams",
    "PpoConfig",
    "RadioConfig",
    "ResultBundle",
    "ScenarioConfig",
    "SlaConfig",
    "SliceAllocation",
    "SliceEnv",
    "StepMetrics",
    "ThroughputTrace",
    "UrllcPacket",
    "ber_analytic",
    "duty_cycle",
    "hybrid_throughput",
    "mcs_params",
    "practical_throughput",
    "project_action",
    "received_power",
    "run_eval",
    "run_matrix",
    "run_train",
    "scenario_config",
    "simulate_link",
    "synthesize_profile",
    "t_mcs",
    "theoretical_throughput",
    "uniform_allocation",
    "__version__",
]
