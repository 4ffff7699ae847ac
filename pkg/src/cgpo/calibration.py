"""Category calibration via proportional fairness.

Given per-category mean rewards r, a reference distribution v puts more
mass on weaker categories (normalized inverse rewards).  The calibration
target q maximizes  sum_i log(q_i) - lambda * KL(v || q)  on the simplex;
the closed form is q_i = (1 + lambda * v_i) / (c + lambda), and the
practical sampling weight is w_i = 1 + lambda * v_i = (c + lambda) * q_i.

``numerical_oracle_q`` re-solves the same program by exponentiated
gradient ascent so the closed form can be verified independently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

#: Floor applied to mean rewards before inversion; absorbs zero/negative
#: rewards early in training.
REWARD_FLOOR = 1e-6


class ConvergenceError(RuntimeError):
    """The iterative fairness solver did not reach tolerance."""


def reference_from_rewards(
    r: Sequence[float], epsilon: float = REWARD_FLOOR
) -> np.ndarray:
    """Normalized inverse rewards: lower reward, higher reference mass."""
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or r.size < 1:
        raise ValueError("need at least one category reward")
    if not np.all(np.isfinite(r)):
        raise ValueError("non-finite category reward")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    inv = 1.0 / np.maximum(r, epsilon)
    return inv / inv.sum()


def closed_form_q(v: Sequence[float], lam: float) -> np.ndarray:
    """Analytical fairness solution q_i = (1 + lam*v_i) / (c + lam)."""
    v = _check_reference(v)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    c = v.size
    return (1.0 + lam * v) / (c + lam)


def numerical_oracle_q(
    v: Sequence[float],
    lam: float,
    tol: float = 1e-8,
    max_iters: int = 20000,
) -> np.ndarray:
    """Solve the fairness program iteratively, independent of the closed form.

    Exponentiated-gradient ascent on the simplex.  The first-order
    optimality condition is that the objective gradient is constant across
    coordinates at the optimum, so the stopping rule is the max deviation
    of the gradient from its q-weighted mean, scaled by that mean.
    """
    v = _check_reference(v)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    c = v.size
    q = np.full(c, 1.0 / c)
    step = 0.5
    for _ in range(max_iters):
        # d/dq_i [ sum log q + lam * sum v log q ] (KL term, v log v constant)
        grad = 1.0 / q + lam * v / q
        mean_grad = float(grad @ q)
        residual = float(np.max(np.abs(grad - mean_grad))) / mean_grad
        if residual < tol:
            return q
        q = q * np.exp(step * (grad / mean_grad - 1.0))
        q = q / q.sum()
    raise ConvergenceError(
        f"fairness solver did not converge in {max_iters} iterations "
        f"(residual {residual:.3e}, tol {tol:.3e})"
    )


def objective_value(q: Sequence[float], v: Sequence[float], lam: float) -> float:
    """sum_i log(q_i) - lam * KL(v || q), with 0*log(0) := 0 in the KL term."""
    q = np.asarray(q, dtype=float)
    v = _check_reference(v)
    if q.shape != v.shape:
        raise ValueError("q and v must have the same length")
    if np.any(q <= 0):
        raise ValueError("objective undefined: q has a zero/negative coordinate")
    kl_terms = np.where(v > 0, v * (np.log(np.maximum(v, 1e-300)) - np.log(q)), 0.0)
    return float(np.sum(np.log(q)) - lam * np.sum(kl_terms))


def weights_from_q(v: Sequence[float], lam: float) -> np.ndarray:
    """Practical sampling weights w_i = 1 + lam * v_i."""
    v = _check_reference(v)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    return 1.0 + lam * v


@dataclass
class CategoryState:
    """Per-category calibration state: mean rewards, reference, weights."""

    mean_rewards: np.ndarray
    reference: np.ndarray
    weights: np.ndarray
    lam: float
    reward_floor: float = REWARD_FLOOR

    @classmethod
    def initial(
        cls, category_count: int, lam: float, reward_floor: float = REWARD_FLOOR
    ) -> "CategoryState":
        """Start with equal mean rewards, hence a uniform reference."""
        if category_count < 1:
            raise ValueError("need at least one category")
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        r = np.ones(category_count)
        v = reference_from_rewards(r, reward_floor)
        return cls(
            mean_rewards=r,
            reference=v,
            weights=weights_from_q(v, lam),
            lam=lam,
            reward_floor=reward_floor,
        )

    @property
    def category_count(self) -> int:
        return int(self.mean_rewards.size)

    def weight_map(self) -> dict[int, float]:
        return {i: float(w) for i, w in enumerate(self.weights)}


def update_category_state(
    state: CategoryState,
    batch_rewards: Mapping[int, Sequence[float]],
) -> CategoryState:
    """Refresh mean rewards from the batch period and recompute v and w.

    Categories absent from the batch keep their previous mean reward so a
    thin batch cannot spike the weights.  The mean is taken over all
    individual rewards observed for the category in the period.
    """
    r = state.mean_rewards.copy()
    for cat, rewards in batch_rewards.items():
        if not (0 <= cat < state.category_count):
            raise ValueError(f"unknown category {cat!r}")
        rewards = np.asarray(rewards, dtype=float)
        if rewards.size:
            r[cat] = float(rewards.mean())
    v = reference_from_rewards(r, state.reward_floor)
    return replace(
        state,
        mean_rewards=r,
        reference=v,
        weights=weights_from_q(v, state.lam),
    )


def _check_reference(v: Sequence[float]) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("reference must be a non-empty vector")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("reference entries must be finite and non-negative")
    if abs(v.sum() - 1.0) > 1e-9:
        raise ValueError(f"reference must sum to 1, got {v.sum()!r}")
    return v
