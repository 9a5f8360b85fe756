"""Engine configuration: defaults, YAML loading, environment overrides."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

log = logging.getLogger(__name__)

# Maps outer-loop topics to the mini template that scripts them. MOVIE is
# absent because the movie flow is its own engine, and NEWS/GENERAL are
# absent because they route to the pooled generators.
DEFAULT_TOPIC_SPECS: dict[str, str] = {
    "BOOK": "book",
    "MUSIC": "music",
    "SPORT": "sport",
    "TECH": "tech",
    "PETS": "pets",
    "FAMILY": "family",
    "TRAVEL": "travel-italy",
    "FOOD": "food",
}

DEFAULT_RANKER_WEIGHTS: dict[str, float] = {
    "comprehensible": 1.0,
    "interesting": 1.0,
    "engaging": 1.0,
    "erroneous": -2.0,
    "on_topic": 2.0,
}


@dataclass(frozen=True)
class EngineConfig:
    seed: int = 1337
    turns_per_topic: int = 5
    mention_min_score: float = 0.75
    joke_threshold: int = 2
    max_response_chars: int = 600
    retrieve_limit: int = 5
    generator_timeout: float = 1.0
    boredom_token_limit: int = 3
    news_window_days: int = 30
    news_filter_retries: int = 20
    session_idle_minutes: int = 30
    serialization: str = "queue"
    host: str = "127.0.0.1"
    port: int = 8000
    data_dir: Path | None = None
    store_dir: Path = Path("engine_data")
    ranker_weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_RANKER_WEIGHTS))
    topic_specs: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_TOPIC_SPECS))

    def __post_init__(self) -> None:
        if self.serialization not in ("queue", "reject"):
            raise ValueError(f"serialization must be 'queue' or 'reject', got {self.serialization!r}")
        if self.turns_per_topic < 1:
            raise ValueError("turns_per_topic must be at least 1")
        if self.ranker_weights.get("erroneous", 0.0) > 0.0:
            raise ValueError("the erroneous weight must not be positive")

    @property
    def store_path(self) -> Path:
        return self.store_dir / "store.jsonl"


def _apply_env(config: EngineConfig) -> EngineConfig:
    overrides: dict[str, object] = {}
    data_dir = os.environ.get("ENGINE_DATA_DIR")
    if data_dir:
        overrides["store_dir"] = Path(data_dir)
    port = os.environ.get("ENGINE_PORT")
    if port:
        try:
            overrides["port"] = int(port)
        except ValueError as exc:
            raise ValueError(f"ENGINE_PORT must be an integer, got {port!r}") from exc
    return replace(config, **overrides) if overrides else config


def load_config(path: str | Path | None = None) -> EngineConfig:
    """Build a config from defaults, an optional YAML file, then env vars."""
    values: dict[str, object] = {}
    if path is not None:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(doc, dict):
            raise ValueError(f"{path}: config must be a mapping")
        known = {f.name for f in fields(EngineConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        values.update(doc)
        for key in ("data_dir", "store_dir"):
            if key in values and values[key] is not None:
                values[key] = Path(str(values[key]))
        for key in ("ranker_weights", "topic_specs"):
            if key in values:
                default = DEFAULT_RANKER_WEIGHTS if key == "ranker_weights" else DEFAULT_TOPIC_SPECS
                merged = dict(default)
                merged.update(values[key] or {})
                values[key] = merged
    config = EngineConfig(**values)  # type: ignore[arg-type]
    return _apply_env(config)
