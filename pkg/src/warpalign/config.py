"""Experiment configuration: a flat key=value text format plus overrides.

The file format is deliberately plain: one `key = value` per line, `#`
comments, blank lines ignored. Command-line flags override file values,
which override defaults. Every key is validated against the schema
before any work starts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .errors import ConfigError
from .objectives import HyperParams
from .trainer import TrainConfig


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated floats, got {text!r}") from exc


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


@dataclass
class ExperimentConfig:
    # Paths
    dataset: str = "dataset.jsonl"
    checkpoint: str = "checkpoint.bin"
    out_dir: str = "out"
    # Shared
    seed: int = 0
    threads: int = 0  # 0 = use all available cores
    # Dataset generation
    train_videos: int = 24
    test_videos: int = 8
    phases: int = 4
    d_in: int = 12
    noise: float = 0.1
    style_amp: float = 2.5
    f_min: int = 40
    f_max: int = 120
    # Loss hyperparameters
    tau: float = 0.1
    sigma_sq: float = 10.0
    lambda1: float = 0.01
    lambda2: float = 0.01
    gamma: float = 0.1
    T: int = 32
    # Optimization. The experiment default learning rate runs hotter
    # than the library TrainConfig default: the compact encoder trains
    # from scratch for 30 epochs, not fine-tuned hundreds.
    learning_rate: float = 4e-4
    weight_decay: float = 1e-5
    epochs: int = 30
    cosine_decay: bool = True
    aug_strength: float = 0.2
    # Encoder
    d_h: int = 48
    d_z: int = 16
    mix_weight: float = 0.5
    pos_scale: float = 0.05
    # Evaluation
    fractions: tuple[float, ...] = (0.1, 0.5, 1.0)
    ks: tuple[int, ...] = (5, 10, 15)

    def validate(self) -> None:
        if self.train_videos < 2 or self.test_videos < 2:
            raise ConfigError("train_videos and test_videos must both be >= 2")
        if self.phases < 2:
            raise ConfigError(f"phases must be >= 2, got {self.phases}")
        if not 2 <= self.f_min <= self.f_max:
            raise ConfigError(f"need 2 <= f_min <= f_max, got [{self.f_min}, {self.f_max}]")
        if self.T > self.f_min:
            raise ConfigError(
                f"clip length T={self.T} exceeds the shortest possible video f_min={self.f_min}"
            )
        if self.noise < 0 or self.style_amp < 0:
            raise ConfigError("noise and style_amp must be >= 0")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0 (0 means all cores)")
        if not self.fractions or not self.ks:
            raise ConfigError("fractions and ks must be nonempty")
        try:
            self.hyper_params()
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def hyper_params(self) -> HyperParams:
        return HyperParams(
            tau=self.tau, sigma_sq=self.sigma_sq, lambda1=self.lambda1,
            lambda2=self.lambda2, gamma=self.gamma, T=self.T,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            epochs=self.epochs,
            seed=self.seed,
            hp=self.hyper_params(),
            d_h=self.d_h,
            d_z=self.d_z,
            mix_weight=self.mix_weight,
            pos_scale=self.pos_scale,
            cosine_decay=self.cosine_decay,
            aug_strength=self.aug_strength,
            threads=self.resolved_threads(),
        )

    def resolved_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


_PARSERS = {
    str: lambda text: text,
    int: int,
    float: float,
    bool: _parse_bool,
    tuple[float, ...]: _parse_float_list,
    tuple[int, ...]: _parse_int_list,
}

_SCHEMA = {f.name: f.type for f in fields(ExperimentConfig)}
_TYPES = {
    "str": str, "int": int, "float": float, "bool": bool,
    "tuple[float, ...]": tuple[float, ...], "tuple[int, ...]": tuple[int, ...],
}


def parse_value(key: str, text: str):
    if key not in _SCHEMA:
        raise ConfigError(f"unknown configuration key {key!r}")
    typ = _SCHEMA[key]
    if isinstance(typ, str):  # dataclass stores annotations as strings
        typ = _TYPES[typ]
    try:
        return _PARSERS[typ](text)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad value for {key!r}: {text!r}") from exc


def parse_config_file(path) -> dict:
    """Read `key = value` lines into a typed dict; unknown keys fail."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
        key, text = (part.strip() for part in line.split("=", 1))
        values[key] = parse_value(key, text)
    return values


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then file values, then overrides; validated at the end."""
    merged: dict = {}
    if path is not None:
        merged.update(parse_config_file(path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
        merged[key] = value
    config = ExperimentConfig(**merged)
    config.validate()
    return config


def write_config(path, config: ExperimentConfig) -> None:
    """Dump a config in the same format load_config reads."""
    with open(path, "w") as fh:
        for f in fields(ExperimentConfig):
            value = getattr(config, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            fh.write(f"{f.name} = {value}\n")
