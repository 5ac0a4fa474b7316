"""Pipeline configuration: one JSON document with a section per module.

Flags override config values; every artifact produced under a config
embeds its hash so stale combinations fail fast instead of silently
skewing metrics.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError
from .subword import SkipgramConfig
from .training import TrainConfig


@dataclass
class TokenSection:
    walks_per_node: int = 10
    walk_length: int = 8
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.05
    min_count: int = 1
    bucket_space: int = 2_000_000

    def skipgram(self, seed: int) -> SkipgramConfig:
        return SkipgramConfig(dim=self.dim, window=self.window, negatives=self.negatives,
                              epochs=self.epochs, learning_rate=self.learning_rate,
                              min_count=self.min_count, bucket_space=self.bucket_space,
                              seed=seed)


@dataclass
class GclSection:
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 1e-3
    tau: float = 0.5
    ema_decay: float = 0.99
    node_drop_ratio: float = 0.2
    edge_perturb_ratio: float = 0.2

    def train_config(self, objective: str, seed: int) -> TrainConfig:
        return TrainConfig(objective=objective, epochs=self.epochs,
                           batch_size=self.batch_size, learning_rate=self.learning_rate,
                           tau=self.tau, ema_decay=self.ema_decay,
                           node_drop_ratio=self.node_drop_ratio,
                           edge_perturb_ratio=self.edge_perturb_ratio, seed=seed)


@dataclass
class ServeSection:
    host: str = "127.0.0.1"
    port: int = 8765
    default_k: int = 10


@dataclass
class PipelineConfig:
    corpus: str = ""
    out_dir: str = "artifacts"
    layout: str = "slt"
    model: str = "graphcl"
    seed: int = 7
    tokens: TokenSection = field(default_factory=TokenSection)
    gcl: GclSection = field(default_factory=GclSection)
    serve: ServeSection = field(default_factory=ServeSection)

    def __post_init__(self):
        if self.layout.lower() not in ("slt", "opt"):
            raise ConfigError(f"layout must be slt or opt, got {self.layout!r}")
        if self.model.lower() not in ("infograph", "graphcl", "bgrl", "baseline"):
            raise ConfigError(f"unknown model {self.model!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        # out_dir is where artifacts land, not what they contain; leaving it
        # out keeps runs into different directories byte-identical
        hashed = self.to_dict()
        hashed.pop("out_dir")
        canonical = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _apply_section(section, values: dict, name: str):
    for key, value in values.items():
        if not hasattr(section, key):
            raise ConfigError(f"unknown key {key!r} in section {name!r}")
        setattr(section, key, value)


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    cfg = PipelineConfig()
    sections = {"tokens": cfg.tokens, "gcl": cfg.gcl, "serve": cfg.serve}
    for key, value in raw.items():
        if key in sections:
            if not isinstance(value, dict):
                raise ConfigError(f"section {key!r} must be an object")
            _apply_section(sections[key], value, key)
        elif hasattr(cfg, key):
            setattr(cfg, key, value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)
    cfg.__post_init__()
    if not cfg.corpus:
        raise ConfigError("config needs a corpus path")
    if not Path(cfg.corpus).exists():
        raise ConfigError(f"corpus path does not exist: {cfg.corpus}")
    return cfg
