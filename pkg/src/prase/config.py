"""Run configuration: defaults, flat ``key=value`` files and dotted overrides."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, is_dataclass

from .embedding import TrainConfig
from .ingest import ConfigError
from .reasoner import ReasonerConfig, ReasonerConfigError


class FeedbackMode(str, enum.Enum):
    BOTH = "both"
    MAPPINGS_ONLY = "mappings_only"
    EMBEDDINGS_ONLY = "embeddings_only"


@dataclass
class PraseConfig:
    """Top-level settings.  ``beta`` here overrides ``reasoner.beta`` during a run."""

    K: int = 1
    alpha1: float = 1.0
    alpha2: float = 1.0
    beta: float = 0.8
    delta1: float = 0.1
    delta2: float = 0.1
    delta_f: float = 0.1
    feedback_mode: str = FeedbackMode.BOTH.value
    reasoner: ReasonerConfig = field(default_factory=ReasonerConfig)
    trainer: TrainConfig = field(default_factory=TrainConfig)

    @property
    def use_se_mappings(self) -> bool:
        return self.feedback_mode != FeedbackMode.EMBEDDINGS_ONLY.value

    @property
    def use_embedding_blend(self) -> bool:
        return self.feedback_mode != FeedbackMode.MAPPINGS_ONLY.value

    def validate(self):
        if self.K < 0:
            raise ConfigError(f"K must be non-negative, got {self.K}")
        for name in ("alpha1", "alpha2"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1]")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError("beta must lie in (0, 1)")
        for name in ("delta1", "delta2", "delta_f"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1)")
        try:
            FeedbackMode(self.feedback_mode)
        except ValueError:
            raise ConfigError(f"unknown feedback_mode {self.feedback_mode!r}") from None
        try:
            self.reasoner.validate()
            self.trainer.validate()
        except (ReasonerConfigError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return self


def flatten(cfg, prefix: str = "") -> dict:
    """Dotted-key view of a (nested) config dataclass; callables are skipped."""
    out = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if is_dataclass(value):
            out.update(flatten(value, f"{prefix}{f.name}."))
        elif not callable(value):
            out[prefix + f.name] = value.value if isinstance(value, enum.Enum) else value
    return out


def _coerce(raw: str, current, key: str):
    try:
        if isinstance(current, bool):
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw.strip()


def set_option(cfg, key: str, raw: str):
    """Set dotted ``key`` on ``cfg`` from its string form, coerced to the field's type."""
    target = cfg
    *path, last = key.strip().split(".")
    for part in path:
        if not hasattr(target, part) or not is_dataclass(getattr(target, part)):
            raise ConfigError(f"unknown config key: {key}")
        target = getattr(target, part)
    names = {f.name for f in fields(target)}
    if last not in names or is_dataclass(getattr(target, last)):
        raise ConfigError(f"unknown config key: {key}")
    setattr(target, last, _coerce(raw, getattr(target, last), key))
    return cfg


def parse_overrides(items) -> list[tuple[str, str]]:
    out = []
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override must look like key=value: {item!r}")
        k, v = item.split("=", 1)
        out.append((k.strip(), v.strip()))
    return out


def read_config_file(path) -> list[tuple[str, str]]:
    """``key=value`` lines; ``#`` starts a comment, blank lines are ignored."""
    pairs = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            pairs.append((k.strip(), v.strip()))
    return pairs


def build_config(config_path=None, overrides=(), base: PraseConfig | None = None) -> PraseConfig:
    """Defaults, then the config file, then command-line overrides."""
    cfg = base or PraseConfig()
    if config_path is not None:
        for k, v in read_config_file(config_path):
            set_option(cfg, k, v)
    for k, v in parse_overrides(overrides):
        set_option(cfg, k, v)
    return cfg.validate()
