"""Experiment orchestration.

Runs the four-stage loop against the synthetic learner: sample a batch
with the current calibrated probabilities, score reward groups and train
the learner, turn group variances into probability proposals, then update
the probability list and category calibration.  Emits line-delimited
metrics and checkpoints that resume bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from . import core
from .calibration import CategoryState, update_category_state
from .sampler import SampledBatch, SamplerConfig, sample_batch
from .simenv import (
    SimLearner,
    SimPrompt,
    TierSpec,
    default_tiers,
    generate_rewards,
    make_tiered_dataset,
    train_step,
)

METRICS_SCHEMA = 1
STRATEGIES = ("cgpo", "uniform", "static-curriculum")


@dataclass
class EnvironmentConfig:
    tiers: list[TierSpec] = field(default_factory=default_tiers)
    slope: float = 2.0
    learn_rate: float = 3e-4
    initial_capability: float = 0.0
    reward_mode: str = "bernoulli"
    sigma: float = 0.1
    per_category_offsets: bool = False


@dataclass
class ExperimentConfig:
    total_iterations: int = 2000
    batch_size: int = 48
    group_size: int = 24
    lam: float = 10.0
    strategy: str = "cgpo"
    seed: int = 0
    metrics_every: int = 1
    checkpoint_every: int = 0
    high_prob_threshold: float = 0.7
    use_probability_sampling: bool = True
    use_exploration: bool = True
    use_calibration: bool = True
    max_attempts: int = 0  # 0 means auto: max(100 * batch_size, 10 * N)
    advantage_epsilon: float = 1e-8
    reward_floor: float = 1e-6
    env: EnvironmentConfig = field(default_factory=EnvironmentConfig)

    def validate(self) -> None:
        if self.total_iterations < 0:
            raise ValueError("total_iterations must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}"
            )
        if self.metrics_every < 1:
            raise ValueError("metrics_every must be >= 1")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be >= 0")
        if not (0.0 < self.high_prob_threshold < 1.0):
            raise ValueError("high_prob_threshold must be in (0, 1)")
        if self.env.reward_mode not in ("bernoulli", "gaussian"):
            raise ValueError(f"unknown reward mode {self.env.reward_mode!r}")

    def resolved_max_attempts(self, n_prompts: int) -> int:
        if self.max_attempts > 0:
            return self.max_attempts
        return max(100 * self.batch_size, 10 * n_prompts)

    # -- nested-dict form (config files, hashing, CLI overrides) ------------

    def to_dict(self) -> dict:
        return {
            "run": {
                "total_iterations": self.total_iterations,
                "batch_size": self.batch_size,
                "group_size": self.group_size,
                "strategy": self.strategy,
                "seed": self.seed,
                "metrics_every": self.metrics_every,
                "checkpoint_every": self.checkpoint_every,
                "high_prob_threshold": self.high_prob_threshold,
            },
            "components": {
                "probability_sampling": self.use_probability_sampling,
                "exploration": self.use_exploration,
                "calibration": self.use_calibration,
            },
            "sampler": {
                "max_attempts": self.max_attempts,
                "advantage_epsilon": self.advantage_epsilon,
            },
            "calibration": {
                "lam": self.lam,
                "reward_floor": self.reward_floor,
            },
            "environment": {
                "slope": self.env.slope,
                "learn_rate": self.env.learn_rate,
                "initial_capability": self.env.initial_capability,
                "reward_mode": self.env.reward_mode,
                "sigma": self.env.sigma,
                "per_category_offsets": self.env.per_category_offsets,
                "tiers": [asdict(t) for t in self.env.tiers],
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        run = data.get("run", {})
        comp = data.get("components", {})
        samp = data.get("sampler", {})
        cal = data.get("calibration", {})
        env = data.get("environment", {})
        tiers = [TierSpec(**t) for t in env.get("tiers", [])] or default_tiers(
            slope=env.get("slope", 2.0),
            capability=env.get("initial_capability", 0.0),
        )
        defaults = cls()
        return cls(
            total_iterations=run.get("total_iterations", defaults.total_iterations),
            batch_size=run.get("batch_size", defaults.batch_size),
            group_size=run.get("group_size", defaults.group_size),
            strategy=run.get("strategy", defaults.strategy),
            seed=run.get("seed", defaults.seed),
            metrics_every=run.get("metrics_every", defaults.metrics_every),
            checkpoint_every=run.get("checkpoint_every", defaults.checkpoint_every),
            high_prob_threshold=run.get(
                "high_prob_threshold", defaults.high_prob_threshold
            ),
            use_probability_sampling=comp.get("probability_sampling", True),
            use_exploration=comp.get("exploration", True),
            use_calibration=comp.get("calibration", True),
            max_attempts=samp.get("max_attempts", defaults.max_attempts),
            advantage_epsilon=samp.get(
                "advantage_epsilon", defaults.advantage_epsilon
            ),
            lam=cal.get("lam", defaults.lam),
            reward_floor=cal.get("reward_floor", defaults.reward_floor),
            env=EnvironmentConfig(
                tiers=tiers,
                slope=env.get("slope", 2.0),
                learn_rate=env.get("learn_rate", 3e-4),
                initial_capability=env.get("initial_capability", 0.0),
                reward_mode=env.get("reward_mode", "bernoulli"),
                sigma=env.get("sigma", 0.1),
                per_category_offsets=env.get("per_category_offsets", False),
            ),
        )


def ablation_environment() -> EnvironmentConfig:
    """Two-category environment with asymmetric difficulty for ablations.

    Category 0 is a broad band the learner can work through; category 1 is
    a small, much harder slice.  Rewards are noisy (clipped Gaussian) so
    group variance is an imperfect signal and per-category offsets give
    calibration a lever: extra samples of the weak category actually move
    its success rate.
    """
    return EnvironmentConfig(
        tiers=[
            TierSpec(count=240, low=-0.55, high=0.35, category=0),
            TierSpec(count=48, low=1.2, high=1.9, category=1),
        ],
        slope=2.0,
        reward_mode="gaussian",
        sigma=0.2,
        per_category_offsets=True,
    )


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class IterationMetrics:
    iter: int
    reward_avg: float | None
    reward_std_mean: float | None
    eval_reward: float
    capability: float
    mean_abs_advantage: float | None
    high_prob_by_tier: list[int]
    category_mean_rewards: list[float]
    category_weights: list[float]
    batch_by_tier: list[int]
    batch_by_category: list[int]
    attempts_used: int
    fallback: bool

    def to_json_line(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "IterationMetrics":
        return cls(**json.loads(line))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    metrics: list[IterationMetrics]
    prompts: list[SimPrompt]
    probability_list: core.ProbabilityList
    category_state: CategoryState
    learner: SimLearner
    metrics_path: str | None = None
    checkpoint_path: str | None = None


def tier_occupancy(
    plist: core.ProbabilityList,
    tiers_by_id: Mapping[str, int],
    n_tiers: int,
    threshold: float,
) -> list[int]:
    """Per-tier counts of prompts whose list probability exceeds threshold."""
    if not (0.0 < threshold < 1.0):
        raise ValueError("threshold must be in (0, 1)")
    counts = [0] * n_tiers
    for pid, rec in plist.records.items():
        if rec.p_list > threshold:
            counts[tiers_by_id[pid]] += 1
    return counts


def _eval_reward(
    learner: SimLearner, difficulties: np.ndarray, categories: np.ndarray
) -> float:
    """Dataset-mean success probability: a sampling-strategy-free progress
    measure (batch rewards are biased by what the strategy samples)."""
    theta = learner.capability
    if learner.category_offsets is not None:
        theta = theta + np.asarray(learner.category_offsets)[categories]
    p = 1.0 / (1.0 + np.exp(-learner.slope * (theta - difficulties)))
    return float(p.mean())


def _rng_state_to_jsonable(state: Any) -> Any:
    if isinstance(state, dict):
        return {k: _rng_state_to_jsonable(v) for k, v in state.items()}
    if isinstance(state, np.ndarray):
        return {"__ndarray__": state.tolist(), "dtype": str(state.dtype)}
    if isinstance(state, (np.integer,)):
        return int(state)
    return state


def _rng_state_from_jsonable(state: Any) -> Any:
    if isinstance(state, dict):
        if "__ndarray__" in state:
            return np.array(state["__ndarray__"], dtype=state["dtype"])
        return {k: _rng_state_from_jsonable(v) for k, v in state.items()}
    return state


def save_checkpoint(
    path: str,
    config: ExperimentConfig,
    plist: core.ProbabilityList,
    cat_state: CategoryState,
    learner: SimLearner,
    rng: np.random.Generator,
) -> None:
    payload = {
        "kind": "cgpo-checkpoint",
        "schema": METRICS_SCHEMA,
        "config_hash": config_hash(config),
        "iter": plist.iter,
        "probability_list": core.probability_list_to_text(plist),
        "category_state": {
            "mean_rewards": [float(x) for x in cat_state.mean_rewards],
            "lam": cat_state.lam,
            "reward_floor": cat_state.reward_floor,
        },
        "learner": {
            "capability": learner.capability,
            "slope": learner.slope,
            "learn_rate": learner.learn_rate,
            "category_offsets": (
                list(learner.category_offsets)
                if learner.category_offsets is not None
                else None
            ),
        },
        "rng_state": _rng_state_to_jsonable(rng.bit_generator.state),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_checkpoint(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("kind") != "cgpo-checkpoint":
        raise ValueError(f"{path} is not a checkpoint file")
    return payload


def _restore_from_checkpoint(
    payload: dict, config: ExperimentConfig
) -> tuple[core.ProbabilityList, CategoryState, SimLearner, np.random.Generator]:
    if payload["config_hash"] != config_hash(config):
        raise ValueError(
            "checkpoint config hash does not match the supplied config; "
            "refusing to resume"
        )
    plist = core.probability_list_from_text(payload["probability_list"])
    cs = payload["category_state"]
    from .calibration import reference_from_rewards, weights_from_q

    mean_rewards = np.asarray(cs["mean_rewards"], dtype=float)
    v = reference_from_rewards(mean_rewards, cs["reward_floor"])
    cat_state = CategoryState(
        mean_rewards=mean_rewards,
        reference=v,
        weights=weights_from_q(v, cs["lam"]),
        lam=cs["lam"],
        reward_floor=cs["reward_floor"],
    )
    ln = payload["learner"]
    learner = SimLearner(
        capability=ln["capability"],
        slope=ln["slope"],
        learn_rate=ln["learn_rate"],
        category_offsets=(
            tuple(ln["category_offsets"])
            if ln["category_offsets"] is not None
            else None
        ),
    )
    rng = np.random.Generator(np.random.Philox(0))
    rng.bit_generator.state = _rng_state_from_jsonable(payload["rng_state"])
    return plist, cat_state, learner, rng


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | None = None,
    resume_from: str | None = None,
) -> ExperimentResult:
    """Execute the experiment; see the module docstring for the loop order.

    With ``out_dir`` set, writes ``metrics.jsonl`` (header line plus one
    record per logged iteration) and checkpoint files.  With
    ``resume_from`` set, restores state at iteration k and reproduces
    iterations k+1..T exactly as the uninterrupted run would.
    """
    config.validate()
    chash = config_hash(config)

    # The dataset derives from the seed alone so resume never depends on it.
    ss = np.random.SeedSequence(config.seed)
    dataset_ss, loop_ss = ss.spawn(2)
    dataset_rng = np.random.Generator(np.random.Philox(dataset_ss))
    prompts = make_tiered_dataset(config.env.tiers, dataset_rng)
    by_id = {p.id: p for p in prompts}
    tiers_by_id = {p.id: p.tier for p in prompts}
    n_tiers = len(config.env.tiers)
    categories = sorted({p.category for p in prompts})
    n_categories = max(categories) + 1
    difficulties = np.array([p.difficulty for p in prompts])
    prompt_cats = np.array([p.category for p in prompts])

    env = config.env
    if resume_from is not None:
        payload = load_checkpoint(resume_from)
        plist, cat_state, learner, rng = _restore_from_checkpoint(payload, config)
        start_iter = int(payload["iter"])
    else:
        plist = core.init_probability_list((p.id, p.category) for p in prompts)
        cat_state = CategoryState.initial(
            n_categories, config.lam, config.reward_floor
        )
        learner = SimLearner(
            capability=env.initial_capability,
            slope=env.slope,
            learn_rate=env.learn_rate,
            category_offsets=(
                tuple(0.0 for _ in range(n_categories))
                if env.per_category_offsets
                else None
            ),
        )
        rng = np.random.Generator(np.random.Philox(loop_ss))
        start_iter = 0

    use_prob = config.strategy == "cgpo" and config.use_probability_sampling
    use_explore = use_prob and config.use_exploration
    use_cal = config.strategy == "cgpo" and config.use_calibration
    sampler_cfg = SamplerConfig(
        batch_size=config.batch_size,
        max_attempts=config.resolved_max_attempts(len(prompts)),
        seed=config.seed,
    )
    uniform_weights = {c: 1.0 for c in range(n_categories)}

    metrics: list[IterationMetrics] = []
    metrics_fh = None
    metrics_path = None
    checkpoint_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        metrics_path = os.path.join(out_dir, "metrics.jsonl")
        metrics_fh = open(metrics_path, "w", encoding="utf-8")
        header = {
            "schema": METRICS_SCHEMA,
            "kind": "cgpo-metrics",
            "config_hash": chash,
            "strategy": config.strategy,
            "n_prompts": len(prompts),
            "tier_sizes": [t.count for t in config.env.tiers],
            "n_categories": n_categories,
            "start_iter": start_iter,
        }
        metrics_fh.write(json.dumps(header, separators=(",", ":")) + "\n")

    def emit(row: IterationMetrics) -> None:
        metrics.append(row)
        if metrics_fh is not None:
            metrics_fh.write(row.to_json_line() + "\n")

    def snapshot_row(
        t: int,
        batch: SampledBatch | None,
        reward_avg: float | None,
        reward_std_mean: float | None,
        mean_abs_adv: float | None,
    ) -> IterationMetrics:
        batch_tiers = [0] * n_tiers
        batch_cats = [0] * n_categories
        if batch is not None:
            for pid in batch.prompt_ids:
                batch_tiers[by_id[pid].tier] += 1
                batch_cats[by_id[pid].category] += 1
        weights = cat_state.weight_map() if use_cal else uniform_weights
        return IterationMetrics(
            iter=t,
            reward_avg=reward_avg,
            reward_std_mean=reward_std_mean,
            eval_reward=_eval_reward(learner, difficulties, prompt_cats),
            capability=float(learner.capability),
            mean_abs_advantage=mean_abs_adv,
            high_prob_by_tier=tier_occupancy(
                plist, tiers_by_id, n_tiers, config.high_prob_threshold
            ),
            category_mean_rewards=[float(x) for x in cat_state.mean_rewards],
            category_weights=[float(weights[c]) for c in range(n_categories)],
            batch_by_tier=batch_tiers,
            batch_by_category=batch_cats,
            attempts_used=batch.attempts_used if batch is not None else 0,
            fallback=bool(batch.fallback) if batch is not None else False,
        )

    try:
        if start_iter == 0:
            emit(snapshot_row(0, None, None, None, None))

        for t in range(start_iter + 1, config.total_iterations + 1):
            # Stage 1: sample with the probabilities produced by the
            # previous iteration's update.
            weights = cat_state.weight_map() if use_cal else uniform_weights
            if config.strategy == "static-curriculum":
                batch = _static_curriculum_batch(
                    t, config, prompts, plist.iter, rng
                )
            else:
                batch = sample_batch(plist, weights, sampler_cfg, rng=rng)

            # Stage 2: reward groups, advantages, learner update.
            groups = {
                pid: generate_rewards(
                    learner,
                    by_id[pid],
                    config.group_size,
                    rng,
                    mode=env.reward_mode,
                    sigma=env.sigma,
                )
                for pid in batch.prompt_ids
            }
            all_rewards = np.concatenate(
                [groups[pid].rewards for pid in batch.prompt_ids]
            )
            group_stds = [float(g.rewards.std()) for g in groups.values()]
            adv_abs = [
                float(
                    np.abs(
                        core.compute_advantages(g, config.advantage_epsilon)
                    ).mean()
                )
                for g in groups.values()
            ]
            learner = train_step(
                learner, [by_id[pid] for pid in batch.prompt_ids]
            )

            # Stage 3: group variances to rescaled proposals.
            variances = {pid: core.compute_variance(g) for pid, g in groups.items()}

            # Stage 4: probability and calibration updates.
            if use_prob:
                proposals = core.rescale_batch_variances(variances)
                core.update_probabilities(
                    plist, batch.prompt_ids, proposals, explore=use_explore
                )
            else:
                plist.iter += 1
            if use_cal:
                by_cat: dict[int, list[float]] = {}
                for pid, g in groups.items():
                    by_cat.setdefault(by_id[pid].category, []).extend(
                        float(x) for x in g.rewards
                    )
                cat_state = update_category_state(cat_state, by_cat)

            if t % config.metrics_every == 0 or t == config.total_iterations:
                emit(
                    snapshot_row(
                        t,
                        batch,
                        float(all_rewards.mean()),
                        float(np.mean(group_stds)),
                        float(np.mean(adv_abs)),
                    )
                )

            if (
                out_dir is not None
                and config.checkpoint_every
                and t % config.checkpoint_every == 0
            ):
                save_checkpoint(
                    os.path.join(out_dir, f"checkpoint_{t:06d}.json"),
                    config,
                    plist,
                    cat_state,
                    learner,
                    rng,
                )
    except Exception as exc:
        raise RuntimeError(
            f"experiment failed at iteration {plist.iter}: {exc}"
        ) from exc
    finally:
        if metrics_fh is not None:
            metrics_fh.close()

    if out_dir is not None:
        checkpoint_path = os.path.join(out_dir, "checkpoint_final.json")
        save_checkpoint(checkpoint_path, config, plist, cat_state, learner, rng)
        core.save_probability_list(
            os.path.join(out_dir, "probability_list.tsv"), plist
        )

    return ExperimentResult(
        config=config,
        metrics=metrics,
        prompts=prompts,
        probability_list=plist,
        category_state=cat_state,
        learner=learner,
        metrics_path=metrics_path,
        checkpoint_path=checkpoint_path,
    )


def _static_curriculum_batch(
    t: int,
    config: ExperimentConfig,
    prompts: Sequence[SimPrompt],
    list_iter: int,
    rng: np.random.Generator,
) -> SampledBatch:
    """Easy-to-hard baseline: equal-length phases, one tier active per
    phase, batch drawn uniformly from the active tier (padded with earlier
    tiers if the active one is too small)."""
    n_tiers = len(config.env.tiers)
    phase_len = max(1, math.ceil(config.total_iterations / n_tiers))
    active = min(n_tiers - 1, (t - 1) // phase_len)
    pool = [p.id for p in prompts if p.tier == active]
    tier = active
    while len(pool) < config.batch_size and tier > 0:
        tier -= 1
        pool.extend(p.id for p in prompts if p.tier == tier)
    chosen = rng.choice(len(pool), size=config.batch_size, replace=False)
    return SampledBatch(
        prompt_ids=tuple(pool[i] for i in chosen),
        attempts_used=config.batch_size,
        iter=list_iter,
        fallback=False,
    )


# ---------------------------------------------------------------------------
# Strategy comparison


@dataclass
class StrategySummary:
    strategy: str
    seeds: list[int]
    final_rewards: list[float]
    iterations_to_target: list[int | None]

    @property
    def final_mean(self) -> float:
        return float(np.mean(self.final_rewards))

    @property
    def final_std(self) -> float:
        return float(np.std(self.final_rewards))


@dataclass
class StrategyComparison:
    target_reward: float
    reference_strategy: str
    summaries: dict[str, StrategySummary]
    series: dict[str, dict[str, list[float]]]  # strategy -> {iters, mean, std}
    p_values: dict[str, float]  # strategy -> one-sided p vs reference

    def to_rows(self) -> list[dict]:
        rows = []
        for name, s in self.summaries.items():
            reached = [i for i in s.iterations_to_target if i is not None]
            rows.append(
                {
                    "strategy": name,
                    "seeds": len(s.seeds),
                    "final_reward_mean": s.final_mean,
                    "final_reward_std": s.final_std,
                    "target_reward": self.target_reward,
                    "iters_to_target_mean": (
                        float(np.mean(reached)) if reached else None
                    ),
                    "iters_to_target_std": (
                        float(np.std(reached)) if reached else None
                    ),
                    "runs_reaching_target": len(reached),
                    "p_value_vs_reference": self.p_values.get(name),
                }
            )
        return rows


def _strip_comparison_fields(d: dict) -> dict:
    d = json.loads(json.dumps(d))  # deep copy
    d["run"].pop("strategy")
    d["run"].pop("seed")
    d.pop("components")
    return d


def compare_strategies(
    configs: Sequence[ExperimentConfig],
    target_fraction: float = 0.9,
    target_reward: float | None = None,
    reference_strategy: str = "uniform",
) -> StrategyComparison:
    """Run every config and align strategies on reward-vs-iteration.

    Configs must differ only in strategy, seed, and component toggles.
    The target reward defaults to ``target_fraction`` of the reference
    strategy's mean final dataset reward; iterations-to-target is the
    first logged iteration whose dataset reward reaches it.
    """
    if not configs:
        raise ValueError("no configs to compare")
    base = _strip_comparison_fields(configs[0].to_dict())
    for cfg in configs[1:]:
        if _strip_comparison_fields(cfg.to_dict()) != base:
            raise ValueError(
                "configs must differ only in strategy/seed/components"
            )

    runs: dict[str, list[ExperimentResult]] = {}
    for cfg in configs:
        runs.setdefault(cfg.strategy, []).append(run_experiment(cfg))

    if target_reward is None:
        ref = reference_strategy if reference_strategy in runs else next(iter(runs))
        ref_finals = [r.metrics[-1].eval_reward for r in runs[ref]]
        target_reward = target_fraction * float(np.mean(ref_finals))
    else:
        ref = reference_strategy if reference_strategy in runs else next(iter(runs))

    summaries: dict[str, StrategySummary] = {}
    series: dict[str, dict[str, list[float]]] = {}
    for name, results in runs.items():
        finals = [r.metrics[-1].eval_reward for r in results]
        to_target: list[int | None] = []
        for r in results:
            hit = next(
                (m.iter for m in r.metrics if m.eval_reward >= target_reward),
                None,
            )
            to_target.append(hit)
        summaries[name] = StrategySummary(
            strategy=name,
            seeds=[r.config.seed for r in results],
            final_rewards=finals,
            iterations_to_target=to_target,
        )
        iters = [m.iter for m in results[0].metrics]
        mat = np.array([[m.eval_reward for m in r.metrics] for r in results])
        series[name] = {
            "iters": iters,
            "mean": [float(x) for x in mat.mean(axis=0)],
            "std": [float(x) for x in mat.std(axis=0)],
        }

    p_values: dict[str, float] = {}
    ref_hits = summaries[ref].iterations_to_target
    for name, summary in summaries.items():
        if name == ref:
            continue
        pairs = [
            (a, b)
            for a, b in zip(summary.iterations_to_target, ref_hits)
            if a is not None and b is not None
        ]
        if len(pairs) >= 2:
            a, b = zip(*pairs)
            if all(x == y for x, y in zip(a, b)):
                p_values[name] = 1.0
            else:
                # One-sided: does this strategy reach the target earlier?
                res = scipy_stats.ttest_rel(a, b, alternative="less")
                p_values[name] = float(res.pvalue)
        else:
            p_values[name] = float("nan")

    return StrategyComparison(
        target_reward=float(target_reward),
        reference_strategy=ref,
        summaries=summaries,
        series=series,
        p_values=p_values,
    )


def tier_peak_iterations(
    rows: Sequence[IterationMetrics],
    n_tiers: int,
    smooth_window: int = 31,
    burn_in: int | None = None,
) -> list[int]:
    """Iteration at which each tier's high-probability count peaks.

    Counts are smoothed with a centered moving average; everything before
    ``burn_in`` is ignored because every prompt starts at probability 1,
    putting all tiers at ceiling until the first sweep through the data.
    """
    if not rows:
        raise ValueError("no metrics rows")
    iters = np.array([m.iter for m in rows])
    if burn_in is None:
        burn_in = max(1, int(iters[-1]) // 50)
    kernel = np.ones(smooth_window) / smooth_window
    peaks = []
    for k in range(n_tiers):
        counts = np.array([m.high_prob_by_tier[k] for m in rows], dtype=float)
        if counts.size >= smooth_window:
            pad = smooth_window // 2
            padded = np.pad(counts, pad, mode="edge")
            smoothed = np.convolve(padded, kernel, mode="valid")
        else:
            smoothed = counts
        mask = iters >= burn_in
        idx = np.flatnonzero(mask)
        best = idx[int(np.argmax(smoothed[mask]))]
        peaks.append(int(iters[best]))
    return peaks
