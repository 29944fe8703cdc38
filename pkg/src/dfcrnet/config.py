"""Experiment configuration: JSON round trip and stable hashing."""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

from .cnn_branch import CnnConfig
from .data.synthetic import DEFAULT_CLASS_COUNTS
from .model import ModelConfig
from .transformer import BackboneConfig


@dataclass
class DataConfig:
    """Either a path to an existing manifest or a generator specification."""

    manifest: str | None = None
    out_dir: str = "data"
    counts: tuple[int, ...] = DEFAULT_CLASS_COUNTS
    tile_size: int = 32
    seed: int = 0
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    stratified: bool = True


@dataclass
class OptimConfig:
    lr: float = 1e-4
    batch_size: int = 16
    epochs: int = 100
    early_stop_oa: float | None = None


@dataclass
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    data: DataConfig = field(default_factory=DataConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    deterministic: bool = False
    output_dir: str = "runs"

    def to_dict(self) -> dict:
        # JSON-canonical form (tuples become lists) so round trips compare equal.
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return _from_dict(cls, d)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(canonical_json(self.to_dict()) + "\n")


def _from_dict(cls, value):
    """Rebuild (possibly nested) dataclasses from plain dicts and lists."""
    if is_dataclass(cls) and isinstance(value, dict):
        kwargs = {}
        known = {f.name: f for f in fields(cls)}
        for key, raw in value.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r} for {cls.__name__}")
            kwargs[key] = _coerce_field(known[key], raw)
        return cls(**kwargs)
    return value


_NESTED = {
    "model": ModelConfig,
    "backbone": BackboneConfig,
    "cnn": CnnConfig,
    "data": DataConfig,
    "optim": OptimConfig,
}


def _coerce_field(f, raw):
    if f.name in _NESTED and isinstance(raw, dict):
        return _from_dict(_NESTED[f.name], raw)
    if isinstance(raw, list):
        return tuple(raw)
    return raw


def canonical_json(obj) -> str:
    """Key-order-independent serialization used for hashing and on-disk configs."""
    return json.dumps(obj, sort_keys=True, indent=2)


def config_hash(config: "ExperimentConfig | dict") -> str:
    """Short digest identifying the experiment.

    Stable under key reordering; the output directory is excluded so the same
    experiment hashes identically wherever its artifacts land.
    """
    d = dict(config.to_dict() if isinstance(config, ExperimentConfig) else config)
    d.pop("output_dir", None)
    compact = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(compact.encode()).hexdigest()[:12]
