"""Experiment configuration: one flat JSON document plus the source-spec grammar.

Source specs: ``fmm:<dict-path>`` | ``bmm:<dict-path>`` | ``ext:<jsonl-path>``
| ``rand:<seed>:<mean-len>``. Relative paths resolve against the config file's
directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError, InputError
from .model import ModelConfig
from .segmentation import (
    BmmSegmenter,
    ExternalSegmenter,
    FmmSegmenter,
    RandomSegmenter,
    load_dictionary,
    load_external_segmentations,
)
from .train import TrainSettings

CONFIG_VERSION = 1


def parse_source_spec(spec: str, base_dir: Path | None = None):
    """Build a segmenter from a source spec string.

    ``char`` (every character its own block) extends the file/random kinds so
    the no-segmentation baseline can be expressed and checkpointed like any
    other source.
    """
    if spec == "char":
        from .segmentation import SingletonSegmenter

        return SingletonSegmenter()
    kind, _, rest = spec.partition(":")
    if kind in ("fmm", "bmm"):
        if not rest:
            raise ConfigError(f"source spec {spec!r}: missing dictionary path")
        path = Path(rest)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        lex = load_dictionary(path)
        cls = FmmSegmenter if kind == "fmm" else BmmSegmenter
        return cls(lex, label=spec)
    if kind == "ext":
        if not rest:
            raise ConfigError(f"source spec {spec!r}: missing segmentation path")
        path = Path(rest)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return ExternalSegmenter(load_external_segmentations(path), label=spec)
    if kind == "rand":
        parts = rest.split(":")
        if len(parts) != 2:
            raise ConfigError(f"source spec {spec!r}: expected rand:<seed>:<mean-len>")
        try:
            seed = int(parts[0])
            mean_len = float(parts[1])
        except ValueError as e:
            raise ConfigError(f"source spec {spec!r}: {e}") from e
        if mean_len < 1:
            raise ConfigError(f"source spec {spec!r}: mean length must be >= 1")
        return RandomSegmenter(seed, mean_len, label=spec)
    raise ConfigError(f"unknown source kind {kind!r} in spec {spec!r}")


@dataclass
class ExperimentConfig:
    """Everything a training or ablation run needs, in one flat document."""

    dim: int = 32
    heads: int = 4
    vocab_size: int = 12
    max_len: int = 32
    classes: int = 2
    sources: list[str] = field(default_factory=list)
    random_source: str = "rand:7:2.0"
    lr: float = 0.05
    batch_size: int = 8
    epochs: int = 3
    seeds: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    weight_decay: float = 0.01
    warmup_ratio: float = 0.1
    clip_norm: float | None = 1.0
    variants: list[str] = field(default_factory=lambda: ["mwa_multi"])
    orientation: str = "kq"
    per_source_params: bool = False
    pos_amplitude: float = 0.15
    pooling: str = "mixed"
    train_dataset: str | None = None
    dev_dataset: str | None = None
    test_dataset: str | None = None
    workers: int = 1
    base_dir: Path | None = None  # set by load_config; not serialized

    def validate(self) -> None:
        self.model_config().validate()
        if not self.sources:
            raise ConfigError("config lists no segmentation sources")
        if not self.seeds:
            raise ConfigError("config lists no seeds")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def model_config(self, n_sources: int | None = None) -> ModelConfig:
        return ModelConfig(
            dim=self.dim,
            n_heads=self.heads,
            vocab_size=self.vocab_size,
            max_len=self.max_len,
            n_classes=self.classes,
            n_sources=len(self.sources) if n_sources is None else n_sources,
            orientation=self.orientation,
            per_source_params=self.per_source_params,
            pos_amplitude=self.pos_amplitude,
            pooling=self.pooling,
        )

    def train_settings(self) -> TrainSettings:
        return TrainSettings(
            lr0=self.lr,
            epochs=self.epochs,
            batch_size=self.batch_size,
            weight_decay=self.weight_decay,
            warmup_ratio=self.warmup_ratio,
            clip_norm=self.clip_norm,
        )

    def resolve_path(self, p: str) -> Path:
        path = Path(p)
        if self.base_dir is not None and not path.is_absolute():
            path = self.base_dir / path
        return path

    def build_sources(self) -> list:
        return [parse_source_spec(s, self.base_dir) for s in self.sources]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        d["config_version"] = CONFIG_VERSION
        return d

    def fingerprint(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(canon.encode("utf-8")).hexdigest()


_CONFIG_KEYS = {
    "dim", "heads", "vocab_size", "max_len", "classes", "sources", "random_source",
    "lr", "batch_size", "epochs", "seeds", "weight_decay", "warmup_ratio", "clip_norm",
    "variants", "orientation", "per_source_params", "pos_amplitude", "pooling",
    "train_dataset", "dev_dataset", "test_dataset", "workers",
}


def load_config(path) -> ExperimentConfig:
    """Read and validate a config file; referenced files must exist."""
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    version = raw.pop("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {version}")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**raw)
    cfg.base_dir = p.parent
    cfg.validate()
    for spec in [*cfg.sources, cfg.random_source]:
        parse_source_spec(spec, cfg.base_dir)  # existence + grammar check
    for ds in (cfg.train_dataset, cfg.dev_dataset, cfg.test_dataset):
        if ds is not None and not cfg.resolve_path(ds).exists():
            raise InputError(f"dataset file does not exist: {ds}")
    return cfg
