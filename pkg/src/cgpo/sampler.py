"""Bernoulli-acceptance batch sampling over the probability list.

Batches are filled by rejection: candidates are drawn uniformly (without
replacement within one pass over the pool), each subjected to an
independent Bernoulli acceptance trial at min(1, w * p_list) where w is
the prompt's category calibration weight.  Rejected candidates are
replaced by new draws until the batch is full or the attempt cap trips,
at which point remaining slots are filled greedily and the batch flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ProbabilityList


@dataclass(frozen=True)
class SamplerConfig:
    batch_size: int = 48
    max_attempts: int = 4800
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_attempts < self.batch_size:
            raise ValueError("max_attempts must be >= batch_size")


@dataclass
class SampledBatch:
    prompt_ids: tuple[str, ...]
    attempts_used: int
    iter: int
    fallback: bool = False


def acceptance_probability(p_list: float, w: float) -> float:
    """Calibrated Bernoulli parameter: min(1, w * p_list)."""
    if not (0.0 <= p_list <= 1.0):
        raise ValueError(f"p_list {p_list!r} outside [0, 1]")
    if w < 0 or not np.isfinite(w):
        raise ValueError(f"invalid calibration weight {w!r}")
    return min(1.0, w * p_list)


def sample_batch(
    plist: ProbabilityList,
    weights: dict[int, float],
    config: SamplerConfig,
    rng: np.random.Generator | None = None,
) -> SampledBatch:
    """Fill one batch by rejection sampling.

    Deterministic given (plist, weights, config.seed); a caller-supplied
    ``rng`` takes precedence over the config seed so the harness can run
    many iterations off a single checkpointable stream.
    """
    n = plist.n_prompts
    if config.batch_size > n:
        raise ValueError(f"batch_size {config.batch_size} exceeds prompt count {n}")
    categories = {rec.category for rec in plist.records.values()}
    missing = categories - weights.keys()
    if missing:
        raise KeyError(f"no calibration weight for categories {sorted(missing)}")
    if rng is None:
        rng = np.random.Generator(np.random.Philox(config.seed))

    ids = list(plist.records)
    accepted: list[str] = []
    accepted_set: set[str] = set()
    attempts = 0

    while len(accepted) < config.batch_size and attempts < config.max_attempts:
        # One uniform pass over the not-yet-accepted pool; rejected prompts
        # may reappear in later passes.
        pool = [pid for pid in ids if pid not in accepted_set]
        for idx in rng.permutation(len(pool)):
            pid = pool[idx]
            if pid in accepted_set:
                continue
            attempts += 1
            rec = plist.records[pid]
            p_accept = acceptance_probability(rec.p_list, weights[rec.category])
            if rng.random() < p_accept:
                accepted.append(pid)
                accepted_set.add(pid)
                if len(accepted) == config.batch_size:
                    break
            if attempts >= config.max_attempts:
                break

    fallback = len(accepted) < config.batch_size
    if fallback:
        # Deterministic greedy fill: highest acceptance probability first,
        # original list order breaking ties.
        remaining = [pid for pid in ids if pid not in accepted_set]
        remaining.sort(
            key=lambda pid: -acceptance_probability(
                plist.records[pid].p_list, weights[plist.records[pid].category]
            )
        )
        need = config.batch_size - len(accepted)
        accepted.extend(remaining[:need])

    return SampledBatch(
        prompt_ids=tuple(accepted),
        attempts_used=attempts,
        iter=plist.iter,
        fallback=fallback,
    )
