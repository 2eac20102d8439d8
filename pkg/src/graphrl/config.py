"""Run configuration: flat key = value files with schema versioning.

CLI flags override file values; the effective configuration is echoed into
the output directory so every run is reproducible from its artifacts.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

SCHEMA_VERSION = 1
OUT_ROOT_ENV = "GRAPHRL_OUT_ROOT"


@dataclass
class RunConfig:
    """Everything a training or solving run needs, with shipped defaults."""
    problem: str = "mvc"
    embed_dim: int = 32
    num_layers: int = 2
    batch_size: int = 64
    gamma: float = 0.9
    learning_rate: float = 1e-5
    replay_capacity: int = 50_000
    tau: int = 4
    eps_start: float = 0.9
    eps_end: float = 0.1
    eps_decay_steps: int = 500
    eval_every: int = 10
    d_schedule: str = "adaptive"
    init_scale: float = 0.05
    init_orientation: str = "positive"
    workers: int = 1
    seed: int = 0
    train_steps: int = 1000
    train_graphs: str = ""
    eval_graphs: str = ""
    out_dir: str = "run"

    def validate(self) -> None:
        if self.problem != "mvc":
            raise ConfigError(f"unknown problem {self.problem!r}")
        positive = ("embed_dim", "num_layers", "batch_size", "replay_capacity",
                    "tau", "eps_decay_steps", "eval_every", "workers",
                    "train_steps")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must be in (0, 1]")
        for name in ("eps_start", "eps_end"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.init_orientation not in ("positive", "symmetric"):
            raise ConfigError(
                f"init_orientation must be positive or symmetric, "
                f"got {self.init_orientation!r}")
        parse_schedule(self.d_schedule)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def load_config(path) -> RunConfig:
    """Parse a key = value file; '#' starts a comment."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    saw_version = False
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key == "schema_version":
                if raw.strip() != str(SCHEMA_VERSION):
                    raise ConfigError(
                        f"{path}:{lineno}: unsupported schema_version {raw!r}")
                saw_version = True
                continue
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw)
    if not saw_version:
        raise ConfigError(f"{path}: missing schema_version")
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def dump_config(cfg: RunConfig, path) -> None:
    path = Path(path)
    lines = [f"schema_version = {SCHEMA_VERSION}"]
    for f in fields(RunConfig):
        lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Set non-None override values (CLI flags beat file values)."""
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


def resolve_out_dir(out_dir: str) -> Path:
    """Relative output paths land under $GRAPHRL_OUT_ROOT when it is set."""
    path = Path(out_dir)
    root = os.environ.get(OUT_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def parse_schedule(spec: str):
    """Parse a d-schedule spec: 'adaptive' or 'fixed:<d>'."""
    from .inference import SelectionSchedule
    if spec == "adaptive":
        return SelectionSchedule.adaptive()
    if spec.startswith("fixed:"):
        try:
            d = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad d in schedule spec {spec!r}") from None
        if d < 1:
            raise ConfigError("fixed schedule needs d >= 1")
        return SelectionSchedule.fixed(d)
    raise ConfigError(f"unknown d-schedule {spec!r} (use adaptive or fixed:<d>)")
