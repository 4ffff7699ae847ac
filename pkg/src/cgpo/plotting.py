"""Figure rendering for exported metrics.

Each export kind gets a matching PNG next to its CSV so runs can be eyed
without a separate plotting step.  Rendering uses the Agg backend and
never opens a window.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_reward_curve(rows: Sequence[dict], path: str) -> None:
    iters = [r["iter"] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(iters, [r["reward_avg"] for r in rows], label="reward_avg", lw=1)
    ax.plot(
        iters,
        [r["reward_std_mean"] for r in rows],
        label="reward_std_mean",
        lw=1,
    )
    if rows and "eval_reward" in rows[0]:
        ax.plot(iters, [r["eval_reward"] for r in rows], label="eval_reward", lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("reward")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_tier_occupancy(rows: Sequence[dict], path: str) -> None:
    iters = [r["iter"] for r in rows]
    tier_cols = [k for k in rows[0] if k.startswith("tier")]
    fig, ax = plt.subplots(figsize=(7, 4))
    for col in tier_cols:
        ax.plot(iters, [r[col] for r in rows], label=col, lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("high-probability prompt count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_category_weights(rows: Sequence[dict], path: str) -> None:
    iters = [r["iter"] for r in rows]
    weight_cols = [k for k in rows[0] if k.startswith("w")]
    fig, ax = plt.subplots(figsize=(7, 4))
    for col in weight_cols:
        ax.plot(iters, [r[col] for r in rows], label=col, lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("calibration weight")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sweep(rows: Sequence[dict], param: str, path: str) -> None:
    ok = [r for r in rows if r.get("final_eval_reward") is not None]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(
        [r[param] for r in ok],
        [r["final_eval_reward"] for r in ok],
        marker="o",
    )
    ax.set_xlabel(param)
    ax.set_ylabel("final dataset reward")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
