"""Runtime configuration: one flat JSON file plus environment overrides.

Every key has a default, so an empty file (or no file) is a valid
configuration. Environment variables named HSEARCH_<KEY> override file
values and are cast to the key's declared type.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

ENV_PREFIX = "HSEARCH_"


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class AppConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    corpus_path: str = ""
    gazetteer_path: str = ""
    annotations_path: str = ""
    model_path: str = ""
    index_path: str = ""
    ui_dir: str = ""
    index_mode: str = "hybrid"
    page_size: int = 10
    run_depth: int = 100
    wordcloud_top_k: int = 50
    entities_top_k: int = 50
    summary_damping: float = 0.85
    summary_mmr_lambda: float = 0.7
    summary_size: int = 3
    summary_min_sentences: int = 5
    cluster_max: int = 8
    cluster_min_support: int = 3

    def __post_init__(self):
        if self.index_mode not in ("word", "entity", "hybrid"):
            raise ConfigError(f"index_mode must be word, entity or hybrid, "
                              f"got {self.index_mode!r}")
        if not 1 <= self.port <= 65535:
            raise ConfigError(f"port out of range: {self.port}")
        for name in ("page_size", "run_depth", "wordcloud_top_k",
                     "entities_top_k", "summary_size",
                     "summary_min_sentences", "cluster_max",
                     "cluster_min_support"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")


_FIELD_TYPES = {f.name: type(f.default) for f in fields(AppConfig)}


def _cast(name: str, raw, source: str):
    expected = _FIELD_TYPES[name]
    if isinstance(raw, str) and expected is not str:
        try:
            return expected(raw)
        except ValueError as exc:
            raise ConfigError(f"{source}: {name}: {exc}") from exc
    if expected is float and isinstance(raw, int) and not isinstance(raw, bool):
        return float(raw)
    if not isinstance(raw, expected) or isinstance(raw, bool):
        raise ConfigError(f"{source}: {name} expects {expected.__name__}, "
                          f"got {type(raw).__name__}")
    return raw


def load_config(path: str | Path | None = None,
                env: dict[str, str] | None = None) -> AppConfig:
    """Merge defaults, the optional JSON file, then HSEARCH_* variables."""
    values: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        for key, raw in data.items():
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}: unknown key {key!r}")
            values[key] = _cast(key, raw, str(path))

    env = dict(os.environ if env is None else env)
    for name in _FIELD_TYPES:
        var = ENV_PREFIX + name.upper()
        if var in env:
            values[name] = _cast(name, env[var], var)
    return AppConfig(**values)
