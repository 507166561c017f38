"""Flat ``key = value`` experiment configuration."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

ALGORITHMS = ("single_weak", "online_mbbm", "adaboost_olm")
LEARNERS = ("stump", "naive_bayes", "oracle")
ADVERSARY_MODES = ("constant_edge", "two_phase")


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    algorithm: list[str] = field(default_factory=lambda: ["adaboost_olm"])
    dataset: str = ""                 # CSV path, "balance", "cars" or "adversary"
    label_column: str = "class"
    categorical: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    fill_missing: float | None = None
    N: int = 20
    gamma: list[float] = field(default_factory=list)
    loss: str = "logistic"
    learner: str = "stump"
    n_bins: int = 32
    refresh_min: int = 5
    refresh_max: int = 50
    var_floor: float = 1e-6
    weight_scaling: str = "trivial"
    bound_constant: float = 8.0
    max_states: int = 10**7
    mc_samples: int = 2000
    reorders: int | None = None
    seed: int = 0
    baseline_m: int = 0
    workers: int = 1
    audit: bool = False
    adversary_mode: str = "constant_edge"
    adversary_k: int = 3
    adversary_edge: float = 0.3
    adversary_T: int = 10000
    adversary_T0: float | None = None
    adversary_S: float | None = None

    def validate(self) -> "ExperimentConfig":
        for a in self.algorithm:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
        if not self.algorithm:
            raise ConfigError("at least one algorithm is required")
        has_mbbm = "online_mbbm" in self.algorithm
        if has_mbbm and not self.gamma:
            raise ConfigError("online_mbbm requires gamma")
        if self.gamma and not has_mbbm:
            raise ConfigError("gamma only applies to online_mbbm")
        for g in self.gamma:
            if not 0.0 < g < 0.5:
                raise ConfigError(f"gamma {g} outside (0, 0.5)")
        if self.learner not in LEARNERS:
            raise ConfigError(f"unknown learner {self.learner!r}; choose from {LEARNERS}")
        if self.loss not in ("logistic", "exponential", "square_hinge"):
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.weight_scaling not in ("trivial", "bound", "running_max"):
            raise ConfigError(f"unknown weight_scaling {self.weight_scaling!r}")
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if self.reorders is not None and self.reorders < 1:
            raise ConfigError("reorders must be >= 1")
        if not 1 <= self.refresh_min <= self.refresh_max:
            raise ConfigError("need 1 <= refresh_min <= refresh_max")
        if self.var_floor <= 0.0:
            raise ConfigError("var_floor must be > 0")
        if self.n_bins < 2:
            raise ConfigError("n_bins must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.dataset:
            raise ConfigError("dataset is required")
        if self.dataset == "adversary":
            if self.adversary_mode not in ADVERSARY_MODES:
                raise ConfigError(f"unknown adversary_mode {self.adversary_mode!r}")
            if self.learner != "oracle":
                raise ConfigError("adversary streams need learner = oracle")
            if self.adversary_k < 2 or self.adversary_T < 1:
                raise ConfigError("adversary needs k >= 2 and T >= 1")
        elif self.learner == "oracle":
            raise ConfigError("oracle learners only work on dataset = adversary")
        return self

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **kw) -> "ExperimentConfig":
        d = asdict(self)
        d.update(kw)
        return ExperimentConfig(**d)


_LIST_FIELDS = {"algorithm", "categorical", "labels", "gamma"}


def _coerce(name: str, raw: str, ftype):
    t = str(ftype)
    try:
        if name in ("gamma",):
            return float(raw)
        if name in _LIST_FIELDS:
            return raw
        if raw.lower() in ("none", "null") and "None" in t:
            return None
        if t.startswith("int"):
            return int(raw)
        if t.startswith("float"):
            return float(raw)
        if t.startswith("bool"):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {name}") from None


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; repeated keys (or comma lists) build list fields."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    values: dict = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        if key in _LIST_FIELDS:
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            values.setdefault(key, []).extend(_coerce(key, p, types[key]) for p in parts)
        else:
            if key in values:
                raise ConfigError(f"line {n}: key {key!r} repeated")
            values[key] = _coerce(key, raw, types[key])
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return parse_config_text(text)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if f.name in _LIST_FIELDS:
            lines.extend(f"{f.name} = {x}" for x in v)
        elif v is not None:
            lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
