"""Experiment config files (YAML key-value tree) and CLI overrides."""

from __future__ import annotations

from typing import Any, Mapping, Sequence

import yaml

from .harness import ExperimentConfig


class ConfigError(ValueError):
    pass


def load_config(path: str | None) -> ExperimentConfig:
    """Load a config file; ``None`` yields the default configuration."""
    if path is None:
        return ExperimentConfig()
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return ExperimentConfig()
    if not isinstance(data, Mapping):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    return ExperimentConfig.from_dict(data)


def save_config(path: str, config: ExperimentConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=False)


def _leaf_paths(tree: Mapping[str, Any], prefix: tuple[str, ...] = ()) -> list[tuple[str, ...]]:
    paths = []
    for key, value in tree.items():
        if isinstance(value, Mapping):
            paths.extend(_leaf_paths(value, prefix + (key,)))
        else:
            paths.append(prefix + (key,))
    return paths


def apply_overrides(
    config: ExperimentConfig, overrides: Sequence[str]
) -> ExperimentConfig:
    """Apply ``key=value`` overrides to an experiment config.

    Keys are dotted paths into the config tree (``run.strategy=uniform``);
    a bare leaf name is accepted when it is unambiguous
    (``strategy=uniform``).  Unknown keys are rejected.
    """
    tree = config.to_dict()
    leaves = _leaf_paths(tree)
    by_leaf_name: dict[str, list[tuple[str, ...]]] = {}
    for path in leaves:
        by_leaf_name.setdefault(path[-1], []).append(path)

    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = tuple(key.split("."))
        if parts in leaves:
            path = parts
        elif len(parts) == 1 and len(by_leaf_name.get(parts[0], [])) == 1:
            path = by_leaf_name[parts[0]][0]
        elif len(parts) == 1 and len(by_leaf_name.get(parts[0], [])) > 1:
            options = [".".join(p) for p in by_leaf_name[parts[0]]]
            raise ConfigError(
                f"override key {key!r} is ambiguous; use one of {options}"
            )
        else:
            raise ConfigError(f"unknown config key {key!r}")
        node: Any = tree
        for part in path[:-1]:
            node = node[part]
        node[path[-1]] = yaml.safe_load(raw)
    return ExperimentConfig.from_dict(tree)
