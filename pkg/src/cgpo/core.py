"""Prompt-probability list maintenance and group reward statistics.

Each prompt carries a sampling probability that evolves with training:
prompts whose reward groups show high variance (partially mastered, still
informative) get their probability refreshed from a smoothed variance
proposal, while prompts left out of a batch drift back up by 1/N per
iteration so nothing is starved forever.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Iterable, Mapping

import numpy as np

#: Sentinel for "this prompt has never been sampled".
NEVER_SAMPLED = -1

#: Number of variance proposals kept per prompt for smoothing.
HISTORY_CAPACITY = 3


@dataclass
class PromptRecord:
    """Sampling state for a single prompt."""

    id: str
    category: int
    p_list: float = 1.0
    var_history: Deque[float] = field(
        default_factory=lambda: deque(maxlen=HISTORY_CAPACITY)
    )
    last_sampled_iter: int = NEVER_SAMPLED


@dataclass
class ProbabilityList:
    """The full prompt collection plus the training-iteration counter.

    Single-writer: all updates happen between iterations on one control
    thread; read-only snapshots may be shared during batch generation.
    """

    records: dict[str, PromptRecord]
    iter: int = 0

    @property
    def n_prompts(self) -> int:
        return len(self.records)


@dataclass
class RewardGroup:
    """The per-output reward scores for one prompt in one iteration."""

    prompt_id: str
    rewards: np.ndarray

    def __post_init__(self) -> None:
        self.rewards = np.asarray(self.rewards, dtype=float)
        if self.rewards.ndim != 1 or self.rewards.size < 2:
            raise ValueError(
                f"reward group for {self.prompt_id!r} needs at least 2 scores, "
                f"got shape {self.rewards.shape}"
            )
        if not np.all(np.isfinite(self.rewards)):
            raise ValueError(f"non-finite reward in group for {self.prompt_id!r}")

    @property
    def group_size(self) -> int:
        return int(self.rewards.size)


def init_probability_list(prompts: Iterable[tuple[str, int]]) -> ProbabilityList:
    """Build a fresh list with every probability at 1.0.

    ``prompts`` yields (id, category) pairs; ids must be unique.
    """
    records: dict[str, PromptRecord] = {}
    for pid, category in prompts:
        pid = str(pid)
        if pid in records:
            raise ValueError(f"duplicate prompt id {pid!r}")
        records[pid] = PromptRecord(id=pid, category=int(category))
    if not records:
        raise ValueError("prompt set is empty")
    return ProbabilityList(records=records, iter=0)


def compute_advantages(group: RewardGroup, epsilon: float = 1e-8) -> np.ndarray:
    """Group-relative advantages: (r - mean) / std, population std.

    A degenerate group (std below ``epsilon``) carries no learning signal
    and maps to all-zero advantages rather than a blown-up division.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rewards = group.rewards
    std = float(rewards.std())  # population std, consistent with 1/G variance
    if std < epsilon:
        return np.zeros_like(rewards)
    return (rewards - rewards.mean()) / std


def compute_variance(group: RewardGroup) -> float:
    """Population variance of the group rewards (1/G normalization)."""
    return float(group.rewards.var())


def rescale_batch_variances(
    variances: Mapping[str, float],
) -> dict[str, float]:
    """Min-max rescale batch variances into [0, 1] proposal probabilities.

    When every variance in the batch is identical the rescale is undefined;
    all proposals become 0.5 (neutral: neither boosting nor suppressing).
    """
    if not variances:
        raise ValueError("cannot rescale an empty batch of variances")
    for pid, v in variances.items():
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"invalid variance {v!r} for prompt {pid!r}")
    vmin = min(variances.values())
    vmax = max(variances.values())
    if vmax == vmin:
        return {pid: 0.5 for pid in variances}
    span = vmax - vmin
    return {pid: (v - vmin) / span for pid, v in variances.items()}


def update_probabilities(
    plist: ProbabilityList,
    batch_ids: Iterable[str],
    proposals: Mapping[str, float],
    *,
    explore: bool = True,
) -> ProbabilityList:
    """Apply one iteration's probability update in place.

    Sampled prompts: the proposal joins the (capacity-3) history and the
    probability becomes the mean of whatever history exists.  Unsampled
    prompts: probability rises by 1/N, clamped at 1, unless ``explore`` is
    disabled (ablation switch).  Returns ``plist`` with its iteration
    counter advanced.
    """
    batch = set(batch_ids)
    if set(proposals.keys()) != batch:
        raise ValueError("proposals must be keyed exactly by batch_ids")
    unknown = batch - plist.records.keys()
    if unknown:
        raise KeyError(f"unknown prompt ids in batch: {sorted(unknown)}")
    for pid, prop in proposals.items():
        if not (0.0 <= prop <= 1.0):
            raise ValueError(f"proposal {prop!r} for {pid!r} outside [0, 1]")

    new_iter = plist.iter + 1
    n = plist.n_prompts
    for pid, rec in plist.records.items():
        if pid in batch:
            rec.var_history.append(float(proposals[pid]))
            rec.p_list = sum(rec.var_history) / len(rec.var_history)
            rec.last_sampled_iter = new_iter
        elif explore:
            rec.p_list = min(1.0, rec.p_list + 1.0 / n)
    plist.iter = new_iter
    return plist


# ---------------------------------------------------------------------------
# Line-delimited checkpoint format
#
# Header line:  iter=<t>\tn=<N>
# Record line:  id \t category \t p_list \t h1,h2,h3 \t last_sampled_iter
#
# Floats are written with 17 significant digits so the round trip is
# lossless at double precision.


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_probability_list(path, plist: ProbabilityList) -> None:
    """Write the list to ``path`` in the line-delimited checkpoint format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(probability_list_to_text(plist))


def probability_list_to_text(plist: ProbabilityList) -> str:
    lines = [f"iter={plist.iter}\tn={plist.n_prompts}"]
    for rec in plist.records.values():
        if "\t" in rec.id or "\n" in rec.id:
            raise ValueError(f"prompt id {rec.id!r} contains a delimiter")
        hist = ",".join(_fmt(v) for v in rec.var_history)
        last = "never" if rec.last_sampled_iter == NEVER_SAMPLED else str(rec.last_sampled_iter)
        lines.append(
            "\t".join([rec.id, str(rec.category), _fmt(rec.p_list), hist, last])
        )
    return "\n".join(lines) + "\n"


def load_probability_list(path) -> ProbabilityList:
    with open(path, "r", encoding="utf-8") as fh:
        return probability_list_from_text(fh.read())


def probability_list_from_text(text: str) -> ProbabilityList:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty probability-list checkpoint")
    header = dict(part.split("=", 1) for part in lines[0].split("\t"))
    it = int(header["iter"])
    n = int(header["n"])
    records: dict[str, PromptRecord] = {}
    for line in lines[1:]:
        if not line:
            continue
        pid, category, p_list, hist, last = line.split("\t")
        history = deque(
            (float(v) for v in hist.split(",") if v), maxlen=HISTORY_CAPACITY
        )
        records[pid] = PromptRecord(
            id=pid,
            category=int(category),
            p_list=float(p_list),
            var_history=history,
            last_sampled_iter=NEVER_SAMPLED if last == "never" else int(last),
        )
    if len(records) != n:
        raise ValueError(f"header says n={n} but found {len(records)} records")
    return ProbabilityList(records=records, iter=it)
