"""Pipeline configuration: nested blocks with complete defaults, unknown keys rejected."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError
from .synth import SynthConfig


@dataclass
class PathsConfig:
    listings: str | None = None
    reviews: str | None = None
    pois: str | None = None
    labeled_corpus: str | None = None
    text_corpus: str | None = None


@dataclass
class SplitConfig:
    ratio: float = 0.8


@dataclass
class LassoConfig:
    method: str = "lasso"          # lasso | pvalue | manual
    folds: int = 5
    n_alphas: int = 50
    alpha_ratio: float = 1e-4
    tol: float = 1e-6
    max_iter: int = 10_000
    top_k: int = 20
    manual_columns: list = field(default_factory=list)
    max_missing: float = 0.3


@dataclass
class CbowConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    min_count: int = 2


@dataclass
class NbConfig:
    smoothing: float = 1.0


@dataclass
class SdneConfig:
    radius_km: float = 1.0
    embed_dim: int = 16
    hidden_dims: list = field(default_factory=lambda: [64])
    alpha_1st: float = 0.05
    beta: float = 5.0
    nu: float = 1e-4
    epochs: int = 50
    lr: float = 0.01


@dataclass
class RegressorConfig:
    epochs: int = 120
    batch_size: int = 256
    learning_rate: float = 0.01
    hidden_dims: list = field(default_factory=lambda: [128, 64, 64])
    shuffle: bool = True


@dataclass
class AblationConfig:
    variants: list = field(default_factory=lambda: ["S", "ST", "STP"])


@dataclass
class PipelineConfig:
    seed: int = 42
    variant: str = "STP"
    paths: PathsConfig = field(default_factory=PathsConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    lasso: LassoConfig = field(default_factory=LassoConfig)
    cbow: CbowConfig = field(default_factory=CbowConfig)
    nb: NbConfig = field(default_factory=NbConfig)
    sdne: SdneConfig = field(default_factory=SdneConfig)
    regressor: RegressorConfig = field(default_factory=RegressorConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def to_dict(self):
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'} must be a JSON object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        prefix = f"{where}." if where else ""
        raise ConfigError(f"unknown config key: {', '.join(prefix + k for k in unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = known[name].default_factory() if callable(known[name].default_factory) else None
        if default is not None and hasattr(default, "__dataclass_fields__"):
            kwargs[name] = _build(type(default), value, f"{where}.{name}" if where else name)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where or 'config'}: {exc}") from None


def config_from_dict(data) -> PipelineConfig:
    cfg = _build(PipelineConfig, data or {}, "")
    if cfg.variant not in ("S", "ST", "STP"):
        raise ConfigError(f"variant must be S, ST or STP, not {cfg.variant!r}")
    if cfg.lasso.method not in ("lasso", "pvalue", "manual"):
        raise ConfigError(f"lasso.method must be lasso, pvalue or manual, not {cfg.lasso.method!r}")
    return cfg


def load_config(path=None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(data)


def derive_seed(seed: int, stage: str) -> int:
    """Per-stage seed from the global seed and the stage name."""
    h = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(h[:4], "little")
