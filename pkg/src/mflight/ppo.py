"""PPO update step: clipped surrogate, value loss, entropy bonus, Adam ascent.

The loss is
    -mean_t[ min(r_t A_t, clip(r_t, 1-eps, 1+eps) A_t) ]
    + value_coeff * mean[(V(s) - G)^2] - entropy_coeff * mean[entropy]
with r_t = exp(logpi_new - logpi_old). Gradients are assembled by hand from
the agent's MLP backward passes; at the min/clip kinks the unclipped branch
wins ties. One pooled batch is one minibatch (the batches here are tiny).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .agent import LOG_STD_MAX, LOG_STD_MIN, LOG_2PI, PolicyParams, gaussian_log_prob
from .errors import EmptyBatch

log = logging.getLogger(__name__)

RATIO_CAP = 1e6


@dataclass
class PpoConfig:
    clip_epsilon: float = 0.2
    learning_rate: float = 3e-4
    epochs_per_update: int = 10
    entropy_coeff: float = 0.0
    value_coeff: float = 0.5
    max_grad_norm: float = 0.5
    gamma: float = 0.99          # inert for one-step episodes
    kl_stop: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError("clip_epsilon must lie in (0, 1)")
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be >= 0")


@dataclass
class EpisodeRecord:
    """One pooled experience tuple (the unit the workers hand back)."""

    state: float          # normalized Reynolds number
    action: np.ndarray    # pre-clip 13-vector sample
    log_prob_old: float
    reward: float
    value_old: float
    advantage: float
    ret: float
    re_c: float = 0.0
    worker: int = 0
    info: dict = field(default_factory=dict)


@dataclass
class ExperienceBatch:
    states: np.ndarray      # (B, 1)
    actions: np.ndarray     # (B, D)
    log_probs_old: np.ndarray
    rewards: np.ndarray
    values_old: np.ndarray
    advantages: np.ndarray  # raw r - V, normalized at loss time
    returns: np.ndarray

    def __len__(self) -> int:
        return self.states.shape[0]

    @classmethod
    def from_records(cls, records: list[EpisodeRecord]) -> "ExperienceBatch":
        if not records:
            raise EmptyBatch("cannot assemble a batch from zero records")
        return cls(
            states=np.array([[r.state] for r in records]),
            actions=np.vstack([r.action for r in records]),
            log_probs_old=np.array([r.log_prob_old for r in records]),
            rewards=np.array([r.reward for r in records]),
            values_old=np.array([r.value_old for r in records]),
            advantages=np.array([r.advantage for r in records]),
            returns=np.array([r.ret for r in records]),
        )


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance advantages; an all-equal batch maps to zeros."""
    std = advantages.std()
    if std < 1e-12:
        return np.zeros_like(advantages)
    return (advantages - advantages.mean()) / std


def prob_ratio(log_prob_new, log_prob_old):
    """exp(logpi_new - logpi_old), capped to avoid overflow."""
    ratio = np.exp(np.asarray(log_prob_new) - np.asarray(log_prob_old))
    if np.any(ratio > RATIO_CAP):
        log.warning("probability ratio capped at %g", RATIO_CAP)
        ratio = np.minimum(ratio, RATIO_CAP)
    return ratio


@dataclass
class UpdateStats:
    mean_ratio: float
    clip_fraction: float
    policy_loss: float
    value_loss: float
    entropy: float
    kl: float
    epochs_run: int = 0
    aborted: bool = False


def clipped_surrogate(batch: ExperienceBatch, params: PolicyParams, cfg: PpoConfig):
    """Total loss, exact parameter gradients, and diagnostics for one batch.

    Advantages are consumed as stored; the update loop normalizes them once
    per batch before the epochs run.
    """
    if len(batch) == 0:
        raise EmptyBatch("empty experience batch")
    b = len(batch)
    d = params.action_dim
    eps = cfg.clip_epsilon
    adv = batch.advantages

    pol_cache: list = []
    mean = params.policy.forward(batch.states, cache=pol_cache)
    log_std = params.log_std
    std = np.exp(log_std)
    logp_new = gaussian_log_prob(batch.actions, mean, log_std)

    ratio = prob_ratio(logp_new, batch.log_probs_old)
    surr_raw = ratio * adv
    surr_clip = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv
    policy_loss = -np.minimum(surr_raw, surr_clip).mean()

    val_cache: list = []
    v = params.value.forward(batch.states, cache=val_cache)[:, 0]
    value_loss = ((v - batch.returns) ** 2).mean()

    entropy = float(log_std.sum() + 0.5 * d * (LOG_2PI + 1.0))

    loss = policy_loss + cfg.value_coeff * value_loss - cfg.entropy_coeff * entropy

    # --- gradients ---
    # unclipped branch wins ties, and only it carries gradient
    active = surr_raw <= surr_clip
    dlogp = np.where(active, -ratio * adv / b, 0.0)           # d loss / d logp_new
    z = (batch.actions - mean) / std
    dmean = dlogp[:, None] * z / std                          # d logp/d mean = z/std
    gw_p, gb_p, _ = params.policy.backward(pol_cache, dmean)
    dlog_std = (dlogp[:, None] * (z * z - 1.0)).sum(axis=0)   # d logp/d log_std
    dlog_std -= cfg.entropy_coeff * np.ones(d)                # d entropy/d log_std = 1

    dv = (2.0 * cfg.value_coeff / b) * (v - batch.returns)
    gw_v, gb_v, _ = params.value.backward(val_cache, dv[:, None])

    grads: dict[str, np.ndarray] = {}
    for i in range(len(gw_p)):
        grads[f"policy.w{i}"] = gw_p[i]
        grads[f"policy.b{i}"] = gb_p[i]
    grads["log_std"] = dlog_std
    for i in range(len(gw_v)):
        grads[f"value.w{i}"] = gw_v[i]
        grads[f"value.b{i}"] = gb_v[i]

    stats = UpdateStats(
        mean_ratio=float(ratio.mean()),
        clip_fraction=float((np.abs(ratio - 1.0) > eps).mean()),
        policy_loss=float(policy_loss),
        value_loss=float(value_loss),
        entropy=entropy,
        kl=float((batch.log_probs_old - logp_new).mean()),
    )
    return float(loss), grads, stats


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm > 0.0:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return float(total)


class Adam:
    """Adaptive-moment ascent on the negated loss (i.e. descent on loss)."""

    def __init__(self, params: PolicyParams, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(t) for name, t in params.tensors()}
        self.v = {name: np.zeros_like(t) for name, t in params.tensors()}

    def step(self, params: PolicyParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for name, tensor in params.tensors():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            tensor -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


class PpoTrainer:
    """Owns the mutable parameters and optimizer state; single-writer updates.

    Workers act on immutable snapshots from :meth:`snapshot`; :meth:`update`
    must not run concurrently with anything touching ``self.params``.
    """

    def __init__(self, params: PolicyParams, cfg: PpoConfig):
        self.params = params
        self.cfg = cfg
        self.opt = Adam(params, cfg.learning_rate)

    def snapshot(self) -> PolicyParams:
        return self.params.copy()

    def update(self, batch: ExperienceBatch) -> UpdateStats:
        """Run epochs of full-batch gradient steps; roll back on bad gradients."""
        cfg = self.cfg
        batch = replace(batch, advantages=normalize_advantages(batch.advantages))
        backup = self.params.copy()
        opt_backup = (self.opt.t, {k: v.copy() for k, v in self.opt.m.items()},
                      {k: v.copy() for k, v in self.opt.v.items()})
        stats = None
        epochs_run = 0
        for _ in range(cfg.epochs_per_update):
            loss, grads, stats = clipped_surrogate(batch, self.params, cfg)
            if not np.isfinite(loss) or not all(np.isfinite(g).all() for g in grads.values()):
                log.warning("non-finite loss or gradient: restoring previous parameters")
                self._restore(backup, opt_backup)
                stats.aborted = True
                stats.epochs_run = epochs_run
                return stats
            clip_grad_norm(grads, cfg.max_grad_norm)
            self.opt.step(self.params, grads)
            np.clip(self.params.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.params.log_std)
            epochs_run += 1
            if not self.params.all_finite():
                log.warning("non-finite parameter after step: rolling back update")
                self._restore(backup, opt_backup)
                stats.aborted = True
                stats.epochs_run = epochs_run
                return stats
            mean = self.params.policy.forward(batch.states)
            logp = gaussian_log_prob(batch.actions, mean, self.params.log_std)
            kl = float((batch.log_probs_old - logp).mean())
            stats.kl = kl
            if kl > cfg.kl_stop:
                break
        stats.epochs_run = epochs_run
        return stats

    def _restore(self, params: PolicyParams, opt_state) -> None:
        self.params = params
        self.opt.t, self.opt.m, self.opt.v = opt_state
