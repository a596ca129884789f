"""Experiment configuration: one flat JSON object, every field optional."""

import json
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Malformed, unknown or out-of-range configuration values."""


def _default_t_grid() -> list[float]:
    return [round(0.05 * i, 10) for i in range(21)]


@dataclass
class SweepConfig:
    seed: int = 0
    # data
    n: int = 50
    m_rbf: int = 100
    d: int = 10
    n_samples: int = 5000
    k_components: int = 10
    sigma_sq_floor: float = 1e-3
    workers: int = 1
    # models
    target_width: int = 100
    source_width: int = 100
    lr: float = 0.5
    epochs: int = 2000
    # sweep
    t_grid: list[float] = field(default_factory=_default_t_grid)
    attack_order: int = 1
    eps_list: list[float] = field(default_factory=lambda: [1e-2, 1e-3, 1e-4])
    svg: bool = True
    out_dir: str = "out"

    def validate(self) -> "SweepConfig":
        ints = ("seed", "n", "m_rbf", "d", "n_samples", "k_components", "workers",
                "target_width", "source_width", "epochs", "attack_order")
        for name in ints:
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"{name} must be an integer, got {val!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        for name in ("n", "m_rbf", "d", "k_components", "workers", "target_width",
                     "source_width", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.n_samples < 2:
            raise ConfigError("n_samples must be at least 2")
        if self.attack_order not in (1, 2):
            raise ConfigError("attack_order must be 1 or 2")
        if self.attack_order > min(self.n, self.d):
            raise ConfigError("attack_order exceeds min(n, d)")
        for name in ("lr", "sigma_sq_floor"):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not np.isfinite(val):
                raise ConfigError(f"{name} must be a finite number")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if not 0 < self.sigma_sq_floor < 100:
            raise ConfigError("sigma_sq_floor must lie in (0, 100)")
        if not isinstance(self.t_grid, list) or not self.t_grid:
            raise ConfigError("t_grid must be a non-empty list")
        for t in self.t_grid:
            if isinstance(t, bool) or not isinstance(t, (int, float)) or not 0.0 <= t <= 1.0:
                raise ConfigError(f"t_grid values must lie in [0, 1], got {t!r}")
        if not isinstance(self.eps_list, list):
            raise ConfigError("eps_list must be a list")
        for e in self.eps_list:
            if isinstance(e, bool) or not isinstance(e, (int, float)) or not e > 0:
                raise ConfigError(f"eps_list values must be positive, got {e!r}")
        if not isinstance(self.svg, bool):
            raise ConfigError("svg must be true or false")
        if not isinstance(self.out_dir, str) or not self.out_dir:
            raise ConfigError("out_dir must be a non-empty string")
        self.t_grid = [float(t) for t in self.t_grid]
        self.eps_list = [float(e) for e in self.eps_list]
        self.lr = float(self.lr)
        self.sigma_sq_floor = float(self.sigma_sq_floor)
        return self

    @property
    def same_width(self) -> bool:
        return self.source_width == self.target_width

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj) -> "SweepConfig":
        if not isinstance(obj, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**obj).validate()


def load_config(path) -> SweepConfig:
    """Read and validate a config file. OSError propagates for the caller to report."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return SweepConfig.from_dict(obj)


def derive_seed(seed: int, tag: str) -> int:
    """Independent 64-bit sub-seed for a named stage."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(tag.encode())])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
