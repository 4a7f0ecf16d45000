"""From-scratch PPO: Gaussian policy + value network with manual backprop.

Fixed architecture (two tanh hidden layers, shared trunk, mean/value heads,
state-independent log-stds), clipped surrogate objective, GAE advantages, and
adaptive-moment gradient descent with bias correction. No autodiff dependency;
gradients are derived analytically and checked against finite differences in
the test suite.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from slicebench.errors import ConfigError, DivergenceError, DomainError

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PpoConfig:
    clip_eps: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 4
    minibatch_size: int = 64
    lr: float = 3e-4
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    rollout_episodes: int = 8

    def __post_init__(self) -> None:
        if not 0.0 < self.clip_eps < 1.0:
            raise ConfigError("clip_eps must lie in (0, 1)")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must lie in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ConfigError("gae_lambda must lie in [0, 1]")
        if min(self.epochs, self.minibatch_size, self.rollout_episodes) < 1:
            raise ConfigError("epochs, minibatch_size, rollout_episodes must be >= 1")


class PolicyParams:
    """All network weights in one flat float64 vector with named views."""

    def __init__(self, obs_dim: int, act_dim: int, hidden: int, flat: np.ndarray):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.hidden = hidden
        expected = self.size(obs_dim, act_dim, hidden)
        if flat.shape != (expected,):
            raise DomainError(f"flat parameter vector must have length {expected}")
        self.flat = flat
        d, a, h = obs_dim, act_dim, hidden
        o = 0
        self.w1 = flat[o : o + h * d].reshape(h, d); o += h * d
        self.b1 = flat[o : o + h]; o += h
        self.w2 = flat[o : o + h * h].reshape(h, h); o += h * h
        self.b2 = flat[o : o + h]; o += h
        self.wmu = flat[o : o + a * h].reshape(a, h); o += a * h
        self.bmu = flat[o : o + a]; o += a
        self.wv = flat[o : o + h]; o += h
        self.bv = flat[o : o + 1]; o += 1
        self.log_std = flat[o : o + a]; o += a

    @staticmethod
    def size(obs_dim: int, act_dim: int, hidden: int) -> int:
        d, a, h = obs_dim, act_dim, hidden
        return h * d + h + h * h + h + a * h + a + h + 1 + a

    @classmethod
    def init(
        cls,
        obs_dim: int = 42,
        act_dim: int = 3,
        hidden: int = 64,
        seed: int = 0,
        init_log_std: float = -0.5,
    ) -> "PolicyParams":
        """Deterministic scaled-normal initialization from a seed."""
        rng = np.random.default_rng(seed)
        flat = np.zeros(cls.size(obs_dim, act_dim, hidden))
        params = cls(obs_dim, act_dim, hidden, flat)
        for w in (params.w1, params.w2, params.wmu):
            fan_in = w.shape[1]
            w[:] = rng.standard_normal(w.shape) / math.sqrt(fan_in)
        params.wv[:] = rng.standard_normal(hidden) / math.sqrt(hidden)
        params.log_std[:] = init_log_std
        return params

    def clone(self) -> "PolicyParams":
        return PolicyParams(self.obs_dim, self.act_dim, self.hidden, self.flat.copy())

    def clipped_log_std(self) -> np.ndarray:
        return np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX)

    def forward_batch(
        self, obs: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, tuple[np.ndarray, np.ndarray]]:
        """Batched forward pass; returns (means, log_stds, values, trunk cache)."""
        if obs.ndim != 2 or obs.shape[1] != self.obs_dim:
            raise DomainError(
                f"observation batch must have shape (*, {self.obs_dim}), got {obs.shape}"
            )
        h1 = np.tanh(obs @ self.w1.T + self.b1)
        h2 = np.tanh(h1 @ self.w2.T + self.b2)
        mu = h2 @ self.wmu.T + self.bmu
        v = h2 @ self.wv + self.bv[0]
        return mu, self.clipped_log_std(), v, (h1, h2)


def policy_forward(
    params: PolicyParams, observation: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Single-observation forward pass: (action mean, log-std, value)."""
    obs = np.asarray(observation, dtype=np.float64).reshape(-1)
    if obs.shape[0] != params.obs_dim or not np.all(np.isfinite(obs)):
        raise DomainError(
            f"observation must be {params.obs_dim} finite reals, got shape {obs.shape}"
        )
    mu, log_std, v, _ = params.forward_batch(obs[None, :])
    return mu[0], log_std, float(v[0])


def gaussian_logp(mu: np.ndarray, log_std: np.ndarray, actions: np.ndarray) -> np.ndarray:
    z = (actions - mu) / np.exp(log_std)
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * mu.shape[-1] * _LOG_2PI


def sample_action(
    params: PolicyParams, observation: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, float, float]:
    """Draw a raw action; returns (action, log-probability, value estimate)."""
    mu, log_std, v = policy_forward(params, observation)
    action = mu + np.exp(log_std) * rng.standard_normal(params.act_dim)
    logp = float(gaussian_logp(mu, log_std, action))
    return action, logp, v


def gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    gamma: float,
    gae_lambda: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation.

    ``values`` carries one extra trailing entry: the bootstrap value after the
    final transition. Returns (advantages, returns = advantages + values).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    t_len = rewards.shape[0]
    if values.shape[0] != t_len + 1 or dones.shape[0] != t_len:
        raise DomainError(
            "length mismatch: need len(values) == len(rewards)+1 == len(dones)+1"
        )
    adv = np.zeros(t_len)
    last = 0.0
    for t in range(t_len - 1, -1, -1):
        mask = 1.0 - dones[t]
        delta = rewards[t] + gamma * values[t + 1] * mask - values[t]
        last = delta + gamma * gae_lambda * mask * last
        adv[t] = last
    return adv, adv + values[:t_len]


def loss_and_grad(
    params: PolicyParams,
    obs: np.ndarray,
    actions: np.ndarray,
    logp_old: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    cfg: PpoConfig,
) -> tuple[float, np.ndarray, dict]:
    """PPO loss (to minimize) and its analytic gradient on the flat vector."""
    batch = obs.shape[0]
    mu, log_std, v, (h1, h2) = params.forward_batch(obs)
    std = np.exp(log_std)
    z = (actions - mu) / std
    logp = -0.5 * np.sum(z * z, axis=1) - np.sum(log_std) - 0.5 * params.act_dim * _LOG_2PI

    ratio = np.exp(logp - logp_old)
    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * advantages
    policy_loss = -np.mean(np.minimum(surr1, surr2))

    verr = v - returns
    value_loss = float(np.mean(verr * verr))
    entropy = float(np.sum(log_std) + 0.5 * params.act_dim * (1.0 + _LOG_2PI))
    loss = float(policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy)

    diag = {
        "loss": loss,
        "policy_loss": float(policy_loss),
        "value_loss": value_loss,
        "entropy": entropy,
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > cfg.clip_eps)),
        "approx_kl": float(np.mean(logp_old - logp)),
    }
    if not math.isfinite(loss):
        # caller aborts on this; a backward pass would only propagate NaNs
        return loss, np.zeros_like(params.flat), diag

    # Backward pass. Gradient flows through the unclipped surrogate wherever
    # it is the active minimum; the clipped branch has zero ratio-gradient
    # outside the trust region and coincides inside it.
    use_unclipped = surr1 <= surr2
    dratio = np.where(use_unclipped, advantages, 0.0) * (-1.0 / batch)
    dlogp = dratio * ratio
    dmu = dlogp[:, None] * (z / std)
    dlog_std = (dlogp[:, None] * (z * z - 1.0)).sum(axis=0) - cfg.entropy_coef
    dv = (2.0 * cfg.value_coef / batch) * verr

    grads = np.zeros_like(params.flat)
    g = PolicyParams(params.obs_dim, params.act_dim, params.hidden, grads)
    g.wmu[:] = dmu.T @ h2
    g.bmu[:] = dmu.sum(axis=0)
    g.wv[:] = h2.T @ dv
    g.bv[0] = dv.sum()
    dh2 = dmu @ params.wmu + np.outer(dv, params.wv)
    dz2 = dh2 * (1.0 - h2 * h2)
    g.w2[:] = dz2.T @ h1
    g.b2[:] = dz2.sum(axis=0)
    dz1 = (dz2 @ params.w2) * (1.0 - h1 * h1)
    g.w1[:] = dz1.T @ obs
    g.b1[:] = dz1.sum(axis=0)
    # Saturated log-std entries are constants under the clip.
    saturated = (params.log_std < LOG_STD_MIN) | (params.log_std > LOG_STD_MAX)
    g.log_std[:] = np.where(saturated, 0.0, dlog_std)
    return loss, grads, diag


class Adam:
    """Adaptive-moment gradient descent with bias correction."""

    def __init__(
        self,
        size: int,
        lr: float = 3e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, flat: np.ndarray, grad: np.ndarray) -> None:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        flat -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def ppo_update(
    params: PolicyParams,
    batch: dict,
    cfg: PpoConfig,
    rng: np.random.Generator,
    adam: Adam,
) -> dict:
    """One PPO optimization phase over a collected batch (in-place update).

    ``batch`` holds obs/actions/logp/advantages/returns arrays of equal
    leading length. Advantages are normalized per batch. Raises
    DivergenceError on a non-finite loss.
    """
    n = batch["obs"].shape[0]
    if n == 0:
        raise DomainError("empty batch")
    adv = normalize_advantages(batch["advantages"])
    diags: list[dict] = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, cfg.minibatch_size):
            idx = perm[lo : lo + cfg.minibatch_size]
            loss, grad, diag = loss_and_grad(
                params,
                batch["obs"][idx],
                batch["actions"][idx],
                batch["logp"][idx],
                adv[idx],
                batch["returns"][idx],
                cfg,
            )
            if not math.isfinite(loss):
                raise DivergenceError(
                    f"non-finite PPO loss at update {adam.t}: {diag}"
                )
            adam.step(params.flat, grad)
            diags.append(diag)
    return {k: float(np.mean([d[k] for d in diags])) for k in diags[0]}


# -- checkpointing -----------------------------------------------------------

CHECKPOINT_VERSION = 1


def config_hash(payload: str) -> str:
    """Stable digest used to pin checkpoints to their training configuration."""
    return hashlib.sha256(payload.encode()).hexdigest()


def save_checkpoint(path: str, params: PolicyParams, cfg_hash: str, meta: dict | None = None) -> None:
    np.savez(
        path,
        version=CHECKPOINT_VERSION,
        flat=params.flat,
        dims=np.array([params.obs_dim, params.act_dim, params.hidden]),
        config_hash=np.array(cfg_hash),
        meta=np.array(repr(meta or {})),
    )


def load_checkpoint(path: str, expect_hash: str) -> PolicyParams:
    """Load a checkpoint; refuses on version or config-hash mismatch."""
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ConfigError(f"checkpoint version {version} unsupported")
        stored = str(data["config_hash"])
        if stored != expect_hash:
            raise ConfigError(
                "checkpoint config hash mismatch: "
                f"stored {stored[:12]}.., expected {expect_hash[:12]}.."
            )
        dims = data["dims"]
        flat = data["flat"].copy()
    return PolicyParams(int(dims[0]), int(dims[1]), int(dims[2]), flat)
