"""Synthetic learner environment.

Stands in for the generative model plus reward model: each prompt has a
latent difficulty, the learner has an evolving capability, and group
rewards are stochastic draws around the success probability
sigmoid(slope * (capability - difficulty)).  Capability grows fastest on
prompts with success probability near 0.5, which is exactly the regime
the variance-driven curriculum is supposed to find, so curriculum benefit
is measurable rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import RewardGroup


@dataclass(frozen=True)
class SimPrompt:
    id: str
    category: int
    difficulty: float
    tier: int


@dataclass(frozen=True)
class TierSpec:
    """One difficulty stratum: prompt count and a difficulty range."""

    count: int
    low: float
    high: float
    category: int = 0

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("tier count must be >= 1")
        if not (self.low <= self.high):
            raise ValueError(f"invalid tier range [{self.low}, {self.high}]")


@dataclass(frozen=True)
class SimLearner:
    """Learner state: global capability plus optional per-category offsets."""

    capability: float = 0.0
    slope: float = 2.0
    learn_rate: float = 3e-4
    category_offsets: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.slope <= 0:
            raise ValueError("slope must be positive")
        if self.learn_rate <= 0:
            raise ValueError("learn_rate must be positive")

    def success_probability(self, prompt: SimPrompt) -> float:
        theta = self.capability
        if self.category_offsets is not None:
            theta += self.category_offsets[prompt.category]
        return _sigmoid(self.slope * (theta - prompt.difficulty))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def generate_rewards(
    learner: SimLearner,
    prompt: SimPrompt,
    group_size: int,
    rng: np.random.Generator,
    mode: str = "bernoulli",
    sigma: float = 0.1,
) -> RewardGroup:
    """Draw a group of stochastic rewards for one prompt.

    Bernoulli mode (default) emits 0/1 scores with success probability
    p(x); expected group variance is then p(1-p), maximal at p = 0.5.
    Gaussian mode emits clipped Gaussian(p, sigma) scores for testing
    robustness to continuous rewards.
    """
    if group_size < 2:
        raise ValueError("group_size must be >= 2")
    p = learner.success_probability(prompt)
    if mode == "bernoulli":
        rewards = (rng.random(group_size) < p).astype(float)
    elif mode == "gaussian":
        rewards = np.clip(rng.normal(p, sigma, size=group_size), 0.0, 1.0)
    else:
        raise ValueError(f"unknown reward mode {mode!r}")
    return RewardGroup(prompt_id=prompt.id, rewards=rewards)


def learning_gain(p: float) -> float:
    """Per-prompt capability gain factor; peaks at p = 0.5."""
    return p * (1.0 - p)


def train_step(learner: SimLearner, batch: Sequence[SimPrompt]) -> SimLearner:
    """Advance the learner on one batch.

    Capability rises by learn_rate * sum of p(1-p) over the batch, so
    solved (p ~ 1) and hopeless (p ~ 0) prompts contribute nothing.
    Per-category offsets, when enabled, accumulate the same gain from
    their own category's prompts.  Capability never decreases.
    """
    if not batch:
        raise ValueError("batch is empty")
    total = 0.0
    per_cat: dict[int, float] = {}
    for prompt in batch:
        g = learning_gain(learner.success_probability(prompt))
        total += g
        per_cat[prompt.category] = per_cat.get(prompt.category, 0.0) + g
    new_capability = learner.capability + learner.learn_rate * total
    offsets = learner.category_offsets
    if offsets is not None:
        offsets = tuple(
            off + learner.learn_rate * per_cat.get(cat, 0.0)
            for cat, off in enumerate(offsets)
        )
    return replace(learner, capability=new_capability, category_offsets=offsets)


def make_tiered_dataset(
    tiers: Sequence[TierSpec],
    rng: np.random.Generator,
) -> list[SimPrompt]:
    """Draw prompts with difficulties uniform within each tier's range.

    Tier ranges must be non-overlapping and ordered easiest-first.
    """
    if not tiers:
        raise ValueError("need at least one tier")
    for a, b in zip(tiers, tiers[1:]):
        if a.high > b.low:
            raise ValueError(
                f"tier ranges overlap or are out of order: "
                f"[{a.low}, {a.high}] then [{b.low}, {b.high}]"
            )
    prompts: list[SimPrompt] = []
    for tier_idx, spec in enumerate(tiers):
        difficulties = rng.uniform(spec.low, spec.high, size=spec.count)
        for j, d in enumerate(difficulties):
            prompts.append(
                SimPrompt(
                    id=f"t{tier_idx}_{j:04d}",
                    category=spec.category,
                    difficulty=float(d),
                    tier=tier_idx,
                )
            )
    return prompts


def default_tiers(slope: float = 2.0, capability: float = 0.0) -> list[TierSpec]:
    """Three 160-prompt tiers centered so a fresh learner sits near
    success probabilities 0.6 / 0.3 / 0.1 on tiers 1 / 2 / 3."""

    def center(p: float) -> float:
        return capability - math.log(p / (1.0 - p)) / slope

    half = 0.25 / slope * 2.0  # half-width of each difficulty band
    c1, c2, c3 = center(0.6), center(0.3), center(0.1)
    return [
        TierSpec(count=160, low=c1 - half, high=c1 + half, category=0),
        TierSpec(count=160, low=c2 - half, high=c2 + half, category=0),
        TierSpec(count=160, low=c3 - half, high=c3 + half, category=0),
    ]
