"""Training campaigns: source-phase learning, CTL-gated transfer, target phase.

Episodes are farmed out to workers in blocks of T_L/W per round, each episode
drawing from its own RNG stream keyed by (seed, phase, global episode index).
The worker count is therefore a pure throughput knob: W=1 and W=4 produce
bit-identical merged batches, and every logged number is a function of
(seed, config) alone. Collection, the PPO update, and the per-episode
controller updates are serialized on the coordinator.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ctl as ctl_mod
from .aeroenv import Environment, StateDistribution, make_environment, sample_state
from .agent import (
    PolicyParams,
    act,
    forward_policy,
    init_params,
    save_checkpoint,
    value,
)
from .errors import ConfigError, RunError, SchemaError
from .geometry import AirfoilShape, DesignVector, GeometryBounds
from .ppo import EpisodeRecord, ExperienceBatch, PpoConfig, PpoTrainer

log = logging.getLogger(__name__)

PHASE_IDS = {"source": 0, "target": 1, "eval": 2}
MODES = ("scratch", "single_fidelity_ctl", "multi_fidelity_ctl")

EPISODES_SCHEMA = "# mflight-episodes v1"
SUMMARY_SCHEMA = "mflight-summary v1"
EPISODE_COLUMNS = ("episode", "phase", "fidelity", "worker", "re_c", "reward",
                   "beta", "clip_fraction")


@dataclass(frozen=True)
class PhaseSpec:
    name: str
    fidelity: str
    dist: StateDistribution
    max_episodes: int

    def __post_init__(self):
        if self.name not in ("source", "target"):
            raise ConfigError(f"phase name must be source or target, got {self.name!r}")
        if self.fidelity not in ("low", "high"):
            raise ConfigError(f"unknown fidelity {self.fidelity!r}")
        if self.max_episodes < 0:
            raise ConfigError("max_episodes must be >= 0")


@dataclass
class RunConfig:
    mode: str
    target: PhaseSpec
    source: PhaseSpec | None = None
    ppo: PpoConfig = field(default_factory=PpoConfig)
    workers: int = 4
    episodes_per_update: int = 20      # T_L: pooled experience per policy update
    seed: int = 0
    penalty: float = -0.1
    hidden: tuple = (64, 64)
    log_std_init: float = -0.5
    ctl_window: int = 50
    ctl_gamma_cut: float = 0.3
    force_transfer: bool = False
    bounds: GeometryBounds = field(default_factory=GeometryBounds)
    alpha: float = 0.0
    blend_fraction: float = 0.02
    n_points_low: int = 62
    n_points_high: int = 202
    state_ref: tuple[float, float] | None = None
    threshold_fraction: float = 0.95
    tail_episodes: int = 500

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.episodes_per_update < 1:
            raise ConfigError("episodes_per_update must be >= 1")
        if self.episodes_per_update % self.workers != 0:
            raise ConfigError("episodes_per_update must be divisible by workers")
        if self.mode != "scratch" and self.source is None:
            raise ConfigError(f"mode {self.mode!r} needs a source phase")
        if self.mode == "scratch" and self.source is not None:
            raise ConfigError("scratch mode takes no source phase")
        for phase in filter(None, (self.source, self.target)):
            if phase.max_episodes % self.episodes_per_update != 0:
                raise ConfigError(
                    f"{phase.name} budget {phase.max_episodes} is not a multiple of "
                    f"episodes_per_update={self.episodes_per_update}"
                )
        if not 0.0 < self.threshold_fraction <= 1.0:
            raise ConfigError("threshold_fraction must lie in (0, 1]")

    def resolve_state_ref(self) -> tuple[float, float]:
        """Normalization reference, pinned to the source distribution."""
        if self.state_ref is not None:
            return self.state_ref
        dist = self.source.dist if self.source is not None else self.target.dist
        return (dist.mu, dist.sigma)


def normalize_state(re_c: float, ref: tuple[float, float]) -> float:
    mu_ref, sigma_ref = ref
    if sigma_ref <= 0:
        raise ConfigError("state reference sigma must be positive")
    return (re_c - mu_ref) / sigma_ref


def episode_rng(seed: int, phase: str, episode_index: int) -> np.random.Generator:
    """Private RNG stream for one episode, independent of worker layout."""
    return np.random.default_rng([seed, PHASE_IDS[phase], episode_index])


def _effective_threads(workers: int) -> int:
    cap = os.environ.get("MFLIGHT_THREADS", "")
    if cap:
        try:
            return max(1, min(workers, int(cap)))
        except ValueError:
            pass
    return workers


def run_episode(env: Environment, params: PolicyParams, dist: StateDistribution,
                ref: tuple[float, float], rng: np.random.Generator,
                penalty: float) -> EpisodeRecord:
    re_c = sample_state(dist, rng)
    state = normalize_state(re_c, ref)
    ga = act(params, state, rng)
    v = value(params, state)
    reward, info = env.step(DesignVector(ga.clipped_action), re_c, penalty)
    return EpisodeRecord(state=state, action=ga.action, log_prob_old=ga.log_prob,
                         reward=reward, value_old=v, advantage=reward - v,
                         ret=reward, re_c=re_c, info=info)


def collect_round(phase: PhaseSpec, env: Environment, params: PolicyParams,
                  cfg: RunConfig, round_index: int) -> list[EpisodeRecord]:
    """One pooled round of T_L episodes, merged in (worker, episode) order."""
    t_l = cfg.episodes_per_update
    per_worker = t_l // cfg.workers
    ref = cfg.resolve_state_ref()

    def run_block(w: int) -> list[EpisodeRecord]:
        records = []
        for j in range(per_worker):
            g = round_index * t_l + w * per_worker + j
            rng = episode_rng(cfg.seed, phase.name, g)
            rec = run_episode(env, params, phase.dist, ref, rng, cfg.penalty)
            rec.worker = w
            records.append(rec)
        return records

    threads = _effective_threads(cfg.workers)
    try:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                blocks = list(pool.map(run_block, range(cfg.workers)))
        else:
            blocks = [run_block(w) for w in range(cfg.workers)]
    except Exception as exc:
        raise RunError(f"worker failure during round {round_index}: {exc}") from exc
    return [rec for block in blocks for rec in block]


@dataclass
class LogRow:
    episode: int
    phase: str
    fidelity: str
    worker: int
    re_c: float
    reward: float
    beta: float | None
    clip_fraction: float

    def to_csv(self) -> str:
        beta = "" if self.beta is None else repr(float(self.beta))
        return (f"{self.episode},{self.phase},{self.fidelity},{self.worker},"
                f"{float(self.re_c)!r},{float(self.reward)!r},{beta},"
                f"{float(self.clip_fraction)!r}")


@dataclass
class PhaseResult:
    name: str
    fidelity: str
    episodes: int
    rewards: np.ndarray
    rows: list
    complete: bool | None = None
    complete_episode: int | None = None


def run_phase(phase: PhaseSpec, env: Environment, trainer: PpoTrainer,
              controller: ctl_mod.TransferController | None, cfg: RunConfig,
              episode_offset: int = 0) -> PhaseResult:
    """Rounds of collect -> update -> controller updates, until done.

    The phase stops at the first round boundary after the controller declares
    completion, or when the episode budget runs out.
    """
    t_l = cfg.episodes_per_update
    rounds = phase.max_episodes // t_l
    rows: list[LogRow] = []
    rewards: list[float] = []
    consecutive_aborts = 0
    for r in range(rounds):
        snapshot = trainer.snapshot()
        records = collect_round(phase, env, snapshot, cfg, r)
        batch = ExperienceBatch.from_records(records)
        stats = trainer.update(batch)
        if stats.aborted:
            consecutive_aborts += 1
            if consecutive_aborts >= 3:
                raise RunError("three consecutive non-finite-gradient updates")
        else:
            consecutive_aborts = 0
        for idx, rec in enumerate(records):
            beta = controller.update(rec.reward) if controller is not None else None
            rows.append(LogRow(episode=episode_offset + r * t_l + idx + 1,
                               phase=phase.name, fidelity=phase.fidelity,
                               worker=rec.worker, re_c=rec.re_c, reward=rec.reward,
                               beta=beta, clip_fraction=stats.clip_fraction))
            rewards.append(rec.reward)
        if controller is not None and controller.complete:
            log.info("%s phase complete at episode %d (beta <= %g)",
                     phase.name, controller.complete_episode, controller.gamma_cut)
            break
    return PhaseResult(name=phase.name, fidelity=phase.fidelity, episodes=len(rewards),
                       rewards=np.asarray(rewards), rows=rows,
                       complete=None if controller is None else controller.complete,
                       complete_episode=None if controller is None else controller.complete_episode)


def trailing_mean(rewards: np.ndarray, k: int) -> np.ndarray:
    """Mean over the trailing min(e, k) rewards, for every episode e."""
    rewards = np.asarray(rewards, dtype=float)
    out = np.empty(len(rewards))
    csum = np.concatenate([[0.0], np.cumsum(rewards)])
    for e in range(1, len(rewards) + 1):
        lo = max(0, e - k)
        out[e - 1] = (csum[e] - csum[lo]) / (e - lo)
    return out


def threshold_value(final_mean: float, fraction: float) -> float:
    """Reward level corresponding to a fraction of converged performance.

    For negative rewards the literal product would sit above the final level
    and be unreachable, so the fraction divides instead.
    """
    return final_mean * fraction if final_mean >= 0 else final_mean / fraction


def episodes_to_threshold(rewards: np.ndarray, threshold: float, k: int) -> int | None:
    """First episode whose trailing-k mean reaches the threshold, 1-based."""
    if len(rewards) == 0:
        return None
    tm = trailing_mean(rewards, k)
    hit = np.nonzero(tm >= threshold)[0]
    return int(hit[0]) + 1 if len(hit) else None


@dataclass
class CampaignReport:
    mode: str
    seed: int
    state_ref: tuple[float, float]
    source: PhaseResult | None
    target: PhaseResult
    rows: list
    params: PolicyParams
    source_params: PolicyParams | None
    controller: ctl_mod.TransferController | None
    env_counts: dict
    hifi_calls_during_source: int
    threshold: float
    episodes_to_threshold: int | None
    tail_mean: float
    tail_var: float
    ctl_window: int = 50
    tail_episodes: int = 500
    checkpoints: dict = field(default_factory=dict)


def run_campaign(cfg: RunConfig, out_dir=None) -> CampaignReport:
    """Execute one full campaign; optionally drop checkpoints into out_dir."""
    cfg.validate()
    state_ref = cfg.resolve_state_ref()

    init_rng = np.random.default_rng([cfg.seed, 9000])
    params = init_params(init_rng, state_dim=1, action_dim=13,
                         hidden=tuple(cfg.hidden), log_std_init=cfg.log_std_init)
    trainer = PpoTrainer(params, cfg.ppo)

    def env_for(phase: PhaseSpec) -> Environment:
        n_points = cfg.n_points_low if phase.fidelity == "low" else cfg.n_points_high
        return make_environment(phase.fidelity, bounds=cfg.bounds, alpha=cfg.alpha,
                                blend_fraction=cfg.blend_fraction, n_points=n_points)

    target_env = env_for(cfg.target)
    source_env = env_for(cfg.source) if cfg.source is not None else None

    checkpoints: dict[str, str] = {}
    controller = None
    source_result = None
    source_params = None
    hifi_during_source = 0
    episode_offset = 0

    if cfg.mode != "scratch":
        controller = ctl_mod.TransferController(k=cfg.ctl_window, gamma_cut=cfg.ctl_gamma_cut)
        source_result = run_phase(cfg.source, source_env, trainer, controller, cfg)
        episode_offset = source_result.episodes
        hifi_during_source = target_env.eval_count if cfg.target.fidelity == "high" else 0
        if not controller.complete and not cfg.force_transfer:
            raise RunError(
                "source budget exhausted before the transfer criterion fired; "
                "set ctl.force_transfer to transfer anyway"
            )
        source_params = trainer.params.copy()
        if out_dir is not None:
            path = os.path.join(out_dir, "checkpoint_source_final.ckpt")
            save_checkpoint(path, trainer.params, extras=controller.state_arrays())
            checkpoints["source_final"] = path
        trainer = PpoTrainer(ctl_mod.transfer(trainer.params), cfg.ppo)

    target_result = run_phase(cfg.target, target_env, trainer, None, cfg,
                              episode_offset=episode_offset)

    if out_dir is not None:
        path = os.path.join(out_dir, "checkpoint_target_final.ckpt")
        extras = controller.state_arrays() if controller is not None else None
        save_checkpoint(path, trainer.params, extras=extras)
        checkpoints["target_final"] = path

    rows = (source_result.rows if source_result else []) + target_result.rows
    tail = target_result.rewards[-cfg.tail_episodes:]
    tail_mean = float(tail.mean()) if len(tail) else float("nan")
    tail_var = float(tail.var()) if len(tail) else float("nan")
    tm_final = float(trailing_mean(target_result.rewards, cfg.ctl_window)[-1]) \
        if target_result.episodes else float("nan")
    threshold = threshold_value(tm_final, cfg.threshold_fraction) \
        if target_result.episodes else float("nan")
    eps_thr = episodes_to_threshold(target_result.rewards, threshold, cfg.ctl_window) \
        if target_result.episodes else None

    counts = {
        "source": source_env.eval_count if source_env is not None else 0,
        "target": target_env.eval_count,
        "low": sum(e.eval_count for e in (source_env, target_env)
                   if e is not None and e.fidelity == "low"),
        "high": sum(e.eval_count for e in (source_env, target_env)
                    if e is not None and e.fidelity == "high"),
    }

    return CampaignReport(mode=cfg.mode, seed=cfg.seed, state_ref=state_ref,
                          source=source_result, target=target_result, rows=rows,
                          params=trainer.params, source_params=source_params,
                          controller=controller, env_counts=counts,
                          hifi_calls_during_source=hifi_during_source,
                          threshold=threshold, episodes_to_threshold=eps_thr,
                          tail_mean=tail_mean, tail_var=tail_var,
                          ctl_window=cfg.ctl_window, tail_episodes=cfg.tail_episodes,
                          checkpoints=checkpoints)


@dataclass
class EvalResult:
    rewards: np.ndarray
    summary: dict
    mean_action: np.ndarray
    mean_shape: AirfoilShape | None
    mean_aero: object | None


def evaluate_policy(params: PolicyParams, dist: StateDistribution, env: Environment,
                    n_episodes: int, seed: int, ref: tuple[float, float],
                    penalty: float = -0.1) -> EvalResult:
    """Greedy rollout of the policy mean over sampled states.

    Also produces the mean predictive shape: the deterministic design at the
    distribution's mean state.
    """
    rewards = np.empty(n_episodes)
    for i in range(n_episodes):
        rng = episode_rng(seed, "eval", i)
        re_c = sample_state(dist, rng)
        mean, _ = forward_policy(params, normalize_state(re_c, ref))
        reward, _ = env.step(DesignVector(np.clip(mean, -1.0, 1.0)), re_c, penalty)
        rewards[i] = reward

    summary = {}
    if n_episodes:
        summary = {"episodes": n_episodes, "mean": float(rewards.mean()),
                   "std": float(rewards.std()), "min": float(rewards.min()),
                   "max": float(rewards.max())}

    mean_action, _ = forward_policy(params, normalize_state(dist.mu, ref))
    mean_action = np.clip(mean_action, -1.0, 1.0)
    mean_shape = env.build_shape(DesignVector(mean_action))
    mean_aero = None
    if mean_shape.valid:
        try:
            mean_aero = env.evaluate(mean_shape, dist.mu)
        except Exception:
            mean_aero = None
    return EvalResult(rewards=rewards, summary=summary, mean_action=mean_action,
                      mean_shape=mean_shape, mean_aero=mean_aero)


# ---------------------------------------------------------------------------
# artifact persistence (CSV + structured-text summary), atomic writes
# ---------------------------------------------------------------------------

def atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_episodes_csv(rows: list, path) -> None:
    lines = [EPISODES_SCHEMA, ",".join(EPISODE_COLUMNS)]
    lines.extend(row.to_csv() for row in rows)
    atomic_write(path, "\n".join(lines) + "\n")


def read_episodes_csv(path):
    """Rows of the episodes log as a list of dicts; rejects unknown schemas."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != EPISODES_SCHEMA:
        raise SchemaError(f"{path}: unknown episodes.csv schema")
    if lines[1] != ",".join(EPISODE_COLUMNS):
        raise SchemaError(f"{path}: unexpected episodes.csv columns")
    rows = []
    for line in lines[2:]:
        ep, phase, fidelity, worker, re_c, reward, beta, clipf = line.split(",")
        rows.append({"episode": int(ep), "phase": phase, "fidelity": fidelity,
                     "worker": int(worker), "re_c": float(re_c),
                     "reward": float(reward),
                     "beta": None if beta == "" else float(beta),
                     "clip_fraction": float(clipf)})
    return rows


def summary_text(report: CampaignReport) -> str:
    lines = [SUMMARY_SCHEMA,
             f"mode: {report.mode}",
             f"seed: {report.seed}",
             f"state_ref_mu: {report.state_ref[0]!r}",
             f"state_ref_sigma: {report.state_ref[1]!r}"]
    if report.source is not None:
        lines += [f"source_fidelity: {report.source.fidelity}",
                  f"source_episodes: {report.source.episodes}",
                  f"ctl_complete: {report.source.complete}",
                  f"ctl_complete_episode: {report.source.complete_episode}"]
    lines += [f"target_fidelity: {report.target.fidelity}",
              f"target_episodes: {report.target.episodes}",
              f"ctl_window: {report.ctl_window}",
              f"tail_episodes: {report.tail_episodes}",
              f"threshold: {report.threshold!r}",
              f"episodes_to_threshold: {report.episodes_to_threshold}",
              f"tail_mean: {report.tail_mean!r}",
              f"tail_var: {report.tail_var!r}",
              f"env_calls_source: {report.env_counts['source']}",
              f"env_calls_target: {report.env_counts['target']}",
              f"env_calls_low: {report.env_counts['low']}",
              f"env_calls_high: {report.env_counts['high']}",
              f"hifi_calls_during_source: {report.hifi_calls_during_source}"]
    return "\n".join(lines) + "\n"


def write_summary(report: CampaignReport, path) -> None:
    atomic_write(path, summary_text(report))


def read_summary(path) -> dict:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != SUMMARY_SCHEMA:
        raise SchemaError(f"{path}: unknown summary schema")
    out = {}
    for line in lines[1:]:
        key, _, val = line.partition(": ")
        out[key] = val
    return out
