"""Command-line front door: simulate, sweep, calibrate, inspect, export."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Sequence

import numpy as np
import yaml

from . import plotting
from .calibration import closed_form_q, numerical_oracle_q, reference_from_rewards, weights_from_q
from .config import ConfigError, apply_overrides, load_config, save_config
from .core import probability_list_from_text
from .harness import (
    ExperimentConfig,
    IterationMetrics,
    load_checkpoint,
    run_experiment,
    tier_peak_iterations,
)

USAGE_ERROR = 1
RUNTIME_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cgpo",
        description="Curriculum sampling engine and simulation harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="experiment config file (YAML)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="config override (repeatable, dotted keys)",
        )
        p.add_argument("--seed", type=int, help="seed override")

    p_sim = sub.add_parser("simulate", help="run one experiment")
    add_common(p_sim)
    p_sim.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    p_sweep = sub.add_parser("sweep", help="run a one-parameter grid of experiments")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--grid",
        required=True,
        metavar="KEY=V1,V2,...",
        help="parameter grid, e.g. calibration.lam=5,8,10,12,15",
    )
    p_sweep.add_argument("--no-plot", action="store_true")

    p_cal = sub.add_parser(
        "calibrate", help="print reference, fairness solution, and weights"
    )
    p_cal.add_argument(
        "--rewards", required=True, help="file of per-category mean rewards"
    )
    p_cal.add_argument("--lam", type=float, default=10.0)

    p_ins = sub.add_parser("inspect", help="inspect a checkpoint's probability list")
    p_ins.add_argument("--checkpoint", required=True)
    p_ins.add_argument("--top", type=int, default=10, help="rows per end")

    p_exp = sub.add_parser("export", help="export plot-ready CSV from a metrics log")
    p_exp.add_argument("--log", required=True, help="metrics.jsonl path")
    p_exp.add_argument(
        "--kind",
        required=True,
        choices=["reward-curve", "tier-occupancy", "category-weights"],
    )
    p_exp.add_argument("--out", required=True, help="output CSV path")
    p_exp.add_argument("--no-plot", action="store_true")

    return parser


def _configure(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.overrides:
        cfg = apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        cfg = apply_overrides(cfg, [f"run.seed={args.seed}"])
    cfg.validate()
    return cfg


def _summary(result) -> dict:
    final = result.metrics[-1]
    final_eval = final.eval_reward
    thresholds = {}
    for frac in (0.5, 0.75, 0.9):
        target = frac * final_eval
        hit = next(
            (m.iter for m in result.metrics if m.eval_reward >= target), None
        )
        thresholds[f"{frac:.2f}_of_final"] = hit
    n_tiers = len(result.config.env.tiers)
    peaks = (
        tier_peak_iterations(result.metrics, n_tiers)
        if len(result.metrics) > 1
        else None
    )
    return {
        "strategy": result.config.strategy,
        "seed": result.config.seed,
        "iterations": result.config.total_iterations,
        "final_reward_avg": final.reward_avg,
        "final_eval_reward": final_eval,
        "final_capability": final.capability,
        "iterations_to_eval_thresholds": thresholds,
        "tier_high_prob_final": final.high_prob_by_tier,
        "tier_high_prob_peak_iters": peaks,
        "any_fallback": any(m.fallback for m in result.metrics),
    }


def cmd_simulate(args) -> int:
    import os

    cfg = _configure(args)
    result = run_experiment(cfg, out_dir=args.out)
    save_config(os.path.join(args.out, "config.yaml"), cfg)
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(_summary(result), fh, indent=2)
    if not args.no_plot:
        rows = _metric_dicts(result.metrics, "reward-curve")
        plotting.render_reward_curve(
            [r for r in rows if r["reward_avg"] is not None],
            os.path.join(args.out, "reward_curve.png"),
        )
        occ = _metric_dicts(result.metrics, "tier-occupancy")
        plotting.render_tier_occupancy(
            occ, os.path.join(args.out, "tier_occupancy.png")
        )
    print(json.dumps(_summary(result)))
    return 0


def cmd_sweep(args) -> int:
    import os

    if "=" not in args.grid:
        raise ConfigError("--grid must be KEY=V1,V2,...")
    key, raw_values = args.grid.split("=", 1)
    values = [v for v in raw_values.split(",") if v != ""]
    if not values:
        raise ConfigError("empty grid")

    base = _configure(args)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for raw in values:
        point_dir = os.path.join(args.out, f"{key.replace('.', '_')}_{raw}")
        row = {key: yaml.safe_load(raw)}
        try:
            cfg = apply_overrides(base, [f"{key}={raw}"])
            cfg.validate()
            result = run_experiment(cfg, out_dir=point_dir)
            final = result.metrics[-1]
            row.update(
                {
                    "final_eval_reward": final.eval_reward,
                    "final_reward_avg": final.reward_avg,
                    "status": "ok",
                    "error": "",
                }
            )
        except Exception as exc:  # record the failure, keep sweeping
            row.update(
                {
                    "final_eval_reward": None,
                    "final_reward_avg": None,
                    "status": "failed",
                    "error": str(exc),
                }
            )
        rows.append(row)

    report_path = os.path.join(args.out, "sweep.csv")
    fieldnames = [key, "final_eval_reward", "final_reward_avg", "status", "error"]
    with open(report_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    if not args.no_plot and any(r["status"] == "ok" for r in rows):
        plotting.render_sweep(rows, key, os.path.join(args.out, "sweep.png"))
    print(report_path)
    return 0


def cmd_calibrate(args) -> int:
    with open(args.rewards, "r", encoding="utf-8") as fh:
        text = fh.read().replace(",", " ")
    rewards = [float(tok) for tok in text.split()]
    if not rewards:
        raise ConfigError(f"no rewards found in {args.rewards}")
    if args.lam < 0:
        raise ConfigError("lambda must be non-negative")
    v = reference_from_rewards(rewards)
    q = closed_form_q(v, args.lam)
    w = weights_from_q(v, args.lam)
    q_oracle = numerical_oracle_q(v, args.lam)
    deviation = float(np.max(np.abs(q - q_oracle)))
    print(f"lambda = {args.lam}")
    print("category  reward      v           q           w")
    for i, r in enumerate(rewards):
        print(f"{i:8d}  {r:<10.6g}  {v[i]:<10.8f}  {q[i]:<10.8f}  {w[i]:<10.8f}")
    print(f"max |closed_form - oracle| = {deviation:.3e}")
    return 0


def cmd_inspect(args) -> int:
    payload = load_checkpoint(args.checkpoint)
    plist = probability_list_from_text(payload["probability_list"])
    records = sorted(plist.records.values(), key=lambda r: -r.p_list)
    print(f"iteration {plist.iter}, {plist.n_prompts} prompts")

    def show(rec) -> None:
        hist = ", ".join(f"{v:.4f}" for v in rec.var_history) or "-"
        last = "never" if rec.last_sampled_iter < 0 else rec.last_sampled_iter
        print(
            f"  {rec.id:<12} cat={rec.category} p={rec.p_list:.6f} "
            f"history=[{hist}] last_sampled={last}"
        )

    k = min(args.top, len(records))
    print(f"top {k} by probability:")
    for rec in records[:k]:
        show(rec)
    print(f"bottom {k} by probability:")
    for rec in records[-k:]:
        show(rec)
    return 0


def _load_metrics_log(path: str) -> tuple[dict, list[IterationMetrics]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line]
    if not lines:
        raise ValueError(f"empty metrics log {path}")
    header = json.loads(lines[0])
    if header.get("kind") != "cgpo-metrics":
        raise ValueError(f"{path} is not a metrics log")
    return header, [IterationMetrics.from_json_line(line) for line in lines[1:]]


def _metric_dicts(metrics: Sequence[IterationMetrics], kind: str) -> list[dict]:
    rows = []
    for m in metrics:
        if kind == "reward-curve":
            rows.append(
                {
                    "iter": m.iter,
                    "reward_avg": m.reward_avg,
                    "reward_std_mean": m.reward_std_mean,
                }
            )
        elif kind == "tier-occupancy":
            row = {"iter": m.iter}
            for k, count in enumerate(m.high_prob_by_tier):
                row[f"tier{k + 1}"] = count
            rows.append(row)
        elif kind == "category-weights":
            row = {"iter": m.iter}
            for c, w in enumerate(m.category_weights):
                row[f"w{c}"] = w
            rows.append(row)
        else:
            raise ValueError(f"unknown export kind {kind!r}")
    return rows


def cmd_export(args) -> int:
    _, metrics = _load_metrics_log(args.log)
    rows = _metric_dicts(metrics, args.kind)
    fieldnames = list(rows[0].keys())
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    if not args.no_plot:
        png = args.out.rsplit(".", 1)[0] + ".png"
        if args.kind == "reward-curve":
            plotting.render_reward_curve(
                [r for r in rows if r["reward_avg"] is not None], png
            )
        elif args.kind == "tier-occupancy":
            plotting.render_tier_occupancy(rows, png)
        else:
            plotting.render_category_weights(rows, png)
    print(args.out)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "inspect": cmd_inspect,
    "export": cmd_export,
}


def _error_record(exc: Exception) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc)})


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, FileNotFoundError, KeyError) as exc:
        print(_error_record(exc), file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:
        print(_error_record(exc), file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
