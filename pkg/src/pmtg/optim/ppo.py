"""Minimal clipped-surrogate policy gradient with generalized advantage
estimation.

The actor is a Gaussian over raw (pre-squash) action channels with a
state-independent learnable log-std; the critic is a small rectified
MLP. Gradients are exact reverse-mode accumulation written for the two
fixed feed-forward architectures; there is no general autodiff here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..policy import PolicyParams, PolicyShape, init_params, param_count, unpack_layers
from ..seeding import rng_for, seed_for
from .ars import OptimizationError
from .rollout import RolloutRecord, RolloutTask

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PpoConfig:
    clip_ratio: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    learning_rate: float = 3e-3
    epochs: int = 3
    minibatch_size: int = 256
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    action_std: float = 0.3
    rollouts_per_batch: int = 8
    value_hidden: tuple[int, int] = (32, 32)

    def __post_init__(self):
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip_ratio must be in (0, 1)")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must be in [0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.action_std <= 0.0:
            raise ValueError("action_std must be > 0")


def gae(rewards, values, bootstrap_value: float, discount: float, lam: float):
    """Backward generalized-advantage recursion.

    `values` are V(s_t) for each step; `bootstrap_value` is V(s_T) of
    the state after the last step (0 for true terminal states). Returns
    (advantages, returns_to_go) with returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if rewards.shape != values.shape:
        raise ValueError("rewards and values must have equal lengths")
    n = len(rewards)
    adv = np.zeros(n)
    last = 0.0
    next_value = bootstrap_value
    for t in range(n - 1, -1, -1):
        delta = rewards[t] + discount * next_value - values[t]
        last = delta + discount * lam * last
        adv[t] = last
        next_value = values[t]
    return adv, adv + values


def forward_cached(flat: np.ndarray, shape: PolicyShape, x: np.ndarray):
    """Batched forward pass that keeps the activations needed for backprop."""
    layers = unpack_layers(flat, shape)
    activations = [x]
    h = x
    for i, (w, b) in enumerate(layers):
        z = h @ w.T
        if b is not None:
            z = z + b
        if i < len(layers) - 1:
            h = np.maximum(z, 0.0)
        else:
            h = z
        activations.append(h)
    return h, activations


def backward(flat: np.ndarray, shape: PolicyShape, activations, d_out: np.ndarray) -> np.ndarray:
    """Gradient of sum(d_out * output) wrt the flat parameter vector."""
    layers = unpack_layers(flat, shape)
    grad = np.zeros_like(flat)
    grad_layers = unpack_layers(grad, shape)
    delta = d_out
    for i in range(len(layers) - 1, -1, -1):
        w, b = layers[i]
        gw, gb = grad_layers[i]
        h_prev = activations[i]
        if i < len(layers) - 1:
            # activations[i + 1] is post-relu; its positivity marks active units
            delta = delta * (activations[i + 1] > 0.0)
        gw += delta.T @ h_prev
        if gb is not None:
            gb += delta.sum(axis=0)
        if i > 0:
            delta = delta @ w
    return grad


@dataclass
class PpoParams:
    """Actor, critic and exploration std, addressable as one flat vector."""

    policy: PolicyParams
    value: PolicyParams
    log_std: np.ndarray

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.policy.flat.size, self.value.flat.size, self.log_std.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.policy.flat, self.value.flat, self.log_std])

    def load_vector(self, vec: np.ndarray) -> None:
        np_, nv, ns = self.sizes
        self.policy.flat[:] = vec[:np_]
        self.value.flat[:] = vec[np_ : np_ + nv]
        self.log_std[:] = vec[np_ + nv :]


def make_ppo_params(policy_shape: PolicyShape, cfg: PpoConfig, master_seed: int) -> PpoParams:
    rng = rng_for(master_seed, "ppo_init")
    policy = init_params(policy_shape, rng=rng, scale=0.1)
    value_shape = PolicyShape("mlp", policy_shape.input_dim, 1, tuple(cfg.value_hidden))
    value = init_params(value_shape, rng=rng, scale=0.1)
    log_std = np.full(policy_shape.output_dim, math.log(cfg.action_std))
    return PpoParams(policy=policy, value=value, log_std=log_std)


def gaussian_logp(actions: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    std = np.exp(log_std)
    z = (actions - mean) / std
    return -0.5 * (z * z).sum(axis=1) - log_std.sum() - 0.5 * actions.shape[1] * LOG_2PI


@dataclass
class PpoBatch:
    observations: np.ndarray
    actions: np.ndarray
    old_logp: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray


def ppo_objective(ratio: np.ndarray, advantages: np.ndarray, clip_ratio: float) -> np.ndarray:
    """Per-sample clipped surrogate objective (to be maximized)."""
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    return np.minimum(ratio * advantages, clipped * advantages)


def ppo_loss_and_grad(params: PpoParams, batch: PpoBatch, cfg: PpoConfig):
    """Total PPO loss and its exact gradient wrt the combined flat vector."""
    n = batch.observations.shape[0]
    mean, p_acts = forward_cached(params.policy.flat, params.policy.shape, batch.observations)
    values, v_acts = forward_cached(params.value.flat, params.value.shape, batch.observations)
    values = values[:, 0]

    std = np.exp(params.log_std)
    z = (batch.actions - mean) / std
    logp = -0.5 * (z * z).sum(axis=1) - params.log_std.sum() - 0.5 * batch.actions.shape[1] * LOG_2PI
    ratio = np.exp(logp - batch.old_logp)

    surr_raw = ratio * batch.advantages
    surr_clip = np.clip(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * batch.advantages
    objective = np.minimum(surr_raw, surr_clip)
    policy_loss = -objective.mean()

    value_err = values - batch.returns
    value_loss = 0.5 * float((value_err * value_err).mean())

    act_dim = batch.actions.shape[1]
    entropy = float(params.log_std.sum() + 0.5 * act_dim * (1.0 + LOG_2PI))

    total = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy
    if not math.isfinite(total):
        raise OptimizationError(
            f"non-finite PPO loss (policy={policy_loss}, value={value_loss}, entropy={entropy})"
        )

    # gradient flows through the unclipped branch only where it is active
    active = surr_raw <= surr_clip
    coef = np.where(active, -batch.advantages * ratio / n, 0.0)
    dlogp_dmean = z / std  # (n, act)
    d_mean = coef[:, None] * dlogp_dmean
    g_policy = backward(params.policy.flat, params.policy.shape, p_acts, d_mean)

    dlogp_dlogstd = z * z - 1.0
    g_logstd = (coef[:, None] * dlogp_dlogstd).sum(axis=0) - cfg.entropy_coef

    d_value = (cfg.value_coef * value_err / n)[:, None]
    g_value = backward(params.value.flat, params.value.shape, v_acts, d_value)

    grad = np.concatenate([g_policy, g_value, g_logstd])
    metrics = {
        "loss": float(total),
        "policy_loss": float(policy_loss),
        "value_loss": value_loss,
        "entropy": entropy,
        "clip_fraction": float(np.mean(ratio < 1.0 - cfg.clip_ratio) + np.mean(ratio > 1.0 + cfg.clip_ratio)),
    }
    return metrics, grad


class AdamState:
    def __init__(self, dim: int, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.m = np.zeros(dim)
        self.v = np.zeros(dim)
        self.t = 0
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def step(self, vec: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return vec - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def ppo_update(params: PpoParams, adam: AdamState, batch: PpoBatch, cfg: PpoConfig, update_index: int, master_seed: int) -> dict:
    """Run the configured epochs/minibatches of clipped-surrogate descent."""
    n = batch.observations.shape[0]
    adv = batch.advantages
    batch = PpoBatch(
        observations=batch.observations,
        actions=batch.actions,
        old_logp=batch.old_logp,
        advantages=(adv - adv.mean()) / (adv.std() + 1e-8),
        returns=batch.returns,
    )
    vec = params.to_vector()
    last_metrics: dict = {}
    for epoch in range(cfg.epochs):
        perm = rng_for(master_seed, "ppo_minibatch", update_index, epoch).permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = perm[start : start + cfg.minibatch_size]
            mb = PpoBatch(
                observations=batch.observations[idx],
                actions=batch.actions[idx],
                old_logp=batch.old_logp[idx],
                advantages=batch.advantages[idx],
                returns=batch.returns[idx],
            )
            params.load_vector(vec)
            last_metrics, grad = ppo_loss_and_grad(params, mb, cfg)
            vec = adam.step(vec, grad, cfg.learning_rate)
    params.load_vector(vec)
    return last_metrics


@dataclass
class PpoIterationStats:
    iteration: int
    returns: np.ndarray
    mean_return: float
    max_return: float
    min_return: float
    rollouts: int
    env_steps: int
    metrics: dict


class PpoTrainer:
    """On-policy loop: collect seeded stochastic rollouts, estimate advantages,
    update the actor-critic with the clipped surrogate."""

    def __init__(self, policy_shape: PolicyShape, cfg: PpoConfig, master_seed: int, evaluate_many):
        self.cfg = cfg
        self.master_seed = master_seed
        self.evaluate_many = evaluate_many
        self.params = make_ppo_params(policy_shape, cfg, master_seed)
        self.adam = AdamState(self.params.to_vector().size)
        self.iteration = 0
        self.total_rollouts = 0
        self.total_env_steps = 0

    @property
    def flat(self) -> np.ndarray:
        return self.params.policy.flat

    def run_iteration(self) -> PpoIterationStats:
        cfg = self.cfg
        noise = np.exp(self.params.log_std)
        tasks = [
            RolloutTask(
                flat_params=self.params.policy.flat.copy(),
                seed=seed_for(self.master_seed, "rollout", self.iteration, i),
                noise_std=noise.copy(),
            )
            for i in range(cfg.rollouts_per_batch)
        ]
        records: list[RolloutRecord] = self.evaluate_many(tasks)

        obs_list, act_list, logp_list, adv_list, ret_list = [], [], [], [], []
        for rec in records:
            values = forward_cached(self.params.value.flat, self.params.value.shape, rec.observations)[0][:, 0]
            if rec.terminated:
                bootstrap = 0.0
            else:
                bootstrap = float(
                    forward_cached(self.params.value.flat, self.params.value.shape, rec.final_observation[None, :])[0][0, 0]
                )
            adv, rets = gae(rec.rewards, values, bootstrap, cfg.discount, cfg.gae_lambda)
            mean = forward_cached(self.params.policy.flat, self.params.policy.shape, rec.observations)[0]
            logp = gaussian_logp(rec.raw_actions, mean, self.params.log_std)
            obs_list.append(rec.observations)
            act_list.append(rec.raw_actions)
            logp_list.append(logp)
            adv_list.append(adv)
            ret_list.append(rets)

        batch = PpoBatch(
            observations=np.concatenate(obs_list),
            actions=np.concatenate(act_list),
            old_logp=np.concatenate(logp_list),
            advantages=np.concatenate(adv_list),
            returns=np.concatenate(ret_list),
        )
        metrics = ppo_update(self.params, self.adam, batch, cfg, self.iteration, self.master_seed)

        returns = np.array([r.episode_return for r in records])
        env_steps = int(sum(r.length for r in records))
        self.total_rollouts += len(records)
        self.total_env_steps += env_steps
        stats = PpoIterationStats(
            iteration=self.iteration,
            returns=returns,
            mean_return=float(returns.mean()),
            max_return=float(returns.max()),
            min_return=float(returns.min()),
            rollouts=len(records),
            env_steps=env_steps,
            metrics=metrics,
        )
        self.iteration += 1
        return stats
