"""Run configuration: strict JSON parsing, validation, and bundled presets."""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .observers import STRATEGY_KINDS

__all__ = [
    "GridConfig",
    "PhysicsConfig",
    "NudgingConfig",
    "StrategyConfig",
    "IoConfig",
    "RunConfig",
    "parse_config",
    "config_from_dict",
    "load_preset",
    "preset_names",
]

_SECTIONS = {
    "grid": {"n"},
    "physics": {"nu", "grashof", "dt", "t_spin", "t_run", "forcing_band"},
    "nudging": {"mu", "error_sample_every", "convergence_floor"},
    "strategy": {"kind", "m", "count", "a", "b", "mx", "my", "move_interval", "seed"},
    "io": {"output_dir", "checkpoint_path", "log_trajectories"},
}

_REQUIRED = {
    "grid": {"n"},
    "physics": {"nu", "grashof", "dt", "t_run"},
    "nudging": {"mu"},
    "strategy": {"kind", "seed"},
    "io": set(),
}

# knobs each strategy must provide beyond kind and seed
_STRATEGY_REQUIRED = {
    "static": {"m"},
    "bleeps": {"count"},
    "creeps": {"count"},
    "thin-sweep": {"a"},
    "thick-sweep": set(),       # count or (mx, my)
    "random-sweep": {"count"},
    "lagrangian": {"m"},
}


@dataclass(frozen=True)
class GridConfig:
    n: int


@dataclass(frozen=True)
class PhysicsConfig:
    nu: float
    grashof: float
    dt: float
    t_run: float
    t_spin: float | None = None
    forcing_band: tuple[int, int] = (32, 34)


@dataclass(frozen=True)
class NudgingConfig:
    mu: float
    error_sample_every: int = 10
    convergence_floor: float = 1e-14


@dataclass(frozen=True)
class StrategyConfig:
    kind: str
    seed: int
    m: int | None = None
    count: int | None = None
    a: int | None = None
    b: int | None = None
    mx: int | None = None
    my: int | None = None
    move_interval: int = 1


@dataclass(frozen=True)
class IoConfig:
    output_dir: str = "out"
    checkpoint_path: str | None = None
    log_trajectories: bool = False


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig
    physics: PhysicsConfig
    nudging: NudgingConfig
    strategy: StrategyConfig
    io: IoConfig = field(default_factory=IoConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def mu_dt(self) -> float:
        return self.nudging.mu * self.physics.dt


def _check_keys(section: str, data: dict) -> None:
    unknown = set(data) - _SECTIONS[section]
    if unknown:
        raise ValueError(f"unknown {section} keys: {', '.join(sorted(unknown))}")
    missing = _REQUIRED[section] - set(data)
    if missing:
        raise ValueError(f"{section} section missing keys: {', '.join(sorted(missing))}")


def _positive(name: str, value, *, allow_zero: bool = False) -> None:
    if value is None:
        return
    if value < 0 or (value == 0 and not allow_zero):
        bound = "nonnegative" if allow_zero else "positive"
        raise ValueError(f"{name} must be {bound}, got {value}")


def config_from_dict(data: dict) -> RunConfig:
    """Build a validated RunConfig from a plain dict; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ValueError("configuration must be a JSON object")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ValueError(f"unknown sections: {', '.join(sorted(unknown))}")
    missing = {s for s in _SECTIONS if s not in data and _REQUIRED[s]}
    if missing:
        raise ValueError(f"missing sections: {', '.join(sorted(missing))}")
    for section in _SECTIONS:
        _check_keys(section, data.get(section, {}))

    grid = GridConfig(n=int(data["grid"]["n"]))
    phys_raw = data["physics"]
    band_raw = phys_raw.get("forcing_band", (32, 34))
    physics = PhysicsConfig(
        nu=float(phys_raw["nu"]),
        grashof=float(phys_raw["grashof"]),
        dt=float(phys_raw["dt"]),
        t_run=float(phys_raw["t_run"]),
        t_spin=None if phys_raw.get("t_spin") is None else float(phys_raw["t_spin"]),
        forcing_band=(int(band_raw[0]), int(band_raw[1])),
    )
    nudge_raw = data["nudging"]
    nudging = NudgingConfig(
        mu=float(nudge_raw["mu"]),
        error_sample_every=int(nudge_raw.get("error_sample_every", 10)),
        convergence_floor=float(nudge_raw.get("convergence_floor", 1e-14)),
    )
    strat_raw = data["strategy"]
    strategy = StrategyConfig(
        kind=str(strat_raw["kind"]),
        seed=int(strat_raw["seed"]),
        m=strat_raw.get("m"),
        count=strat_raw.get("count"),
        a=strat_raw.get("a"),
        b=strat_raw.get("b"),
        mx=strat_raw.get("mx"),
        my=strat_raw.get("my"),
        move_interval=int(strat_raw.get("move_interval", 1)),
    )
    io_raw = data.get("io", {})
    io = IoConfig(
        output_dir=str(io_raw.get("output_dir", "out")),
        checkpoint_path=io_raw.get("checkpoint_path"),
        log_trajectories=bool(io_raw.get("log_trajectories", False)),
    )
    cfg = RunConfig(grid=grid, physics=physics, nudging=nudging, strategy=strategy, io=io)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.grid.n % 2 != 0 or cfg.grid.n < 8:
        raise ValueError(f"grid n must be even and >= 8, got {cfg.grid.n}")
    _positive("physics.nu", cfg.physics.nu)
    _positive("physics.grashof", cfg.physics.grashof)
    _positive("physics.dt", cfg.physics.dt)
    _positive("physics.t_run", cfg.physics.t_run, allow_zero=True)
    _positive("physics.t_spin", cfg.physics.t_spin, allow_zero=True)
    lo, hi = cfg.physics.forcing_band
    if not 0 < lo <= hi:
        raise ValueError(f"physics.forcing_band must satisfy 0 < lo <= hi, got {cfg.physics.forcing_band}")
    _positive("nudging.mu", cfg.nudging.mu)
    if cfg.nudging.error_sample_every < 1:
        raise ValueError("nudging.error_sample_every must be >= 1")
    _positive("nudging.convergence_floor", cfg.nudging.convergence_floor)

    s = cfg.strategy
    if s.kind not in STRATEGY_KINDS:
        raise ValueError(f"strategy kind must be one of {STRATEGY_KINDS}, got {s.kind!r}")
    missing = {k for k in _STRATEGY_REQUIRED[s.kind] if getattr(s, k) is None}
    if s.kind == "thick-sweep" and s.count is None and (s.mx is None or s.my is None):
        missing.add("count (or mx and my)")
    if missing:
        raise ValueError(f"strategy {s.kind!r} missing keys: {', '.join(sorted(missing))}")
    for name in ("m", "count", "a", "b", "mx", "my"):
        value = getattr(s, name)
        if value is not None and int(value) < 1:
            raise ValueError(f"strategy.{name} must be >= 1, got {value}")
    if s.move_interval < 1:
        raise ValueError("strategy.move_interval must be >= 1")
    if s.m is not None and s.m > cfg.grid.n:
        raise ValueError(f"strategy.m = {s.m} exceeds grid n = {cfg.grid.n}")
    if s.a is not None and s.a > cfg.grid.n:
        raise ValueError(f"strategy.a = {s.a} exceeds grid n = {cfg.grid.n}")

    # dense grid-aligned observation with an explicit feedback increment is
    # only stable while mu * dt < 2
    if s.kind == "static" and cfg.mu_dt >= 2.0:
        warnings.warn(
            f"mu * dt = {cfg.mu_dt:g} >= 2 with static observers; "
            "the explicit feedback increment will be unstable",
            UserWarning,
            stacklevel=3,
        )


def parse_config(path) -> RunConfig:
    """Load and validate a JSON run configuration file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"configuration file {path} does not exist")
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)


def preset_names() -> list[str]:
    files = resources.files("nudge2d").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> RunConfig:
    """Load a bundled preset configuration by name."""
    ref = resources.files("nudge2d").joinpath(f"presets/{name}.json")
    if not ref.is_file():
        raise FileNotFoundError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        )
    return config_from_dict(json.loads(ref.read_text()))
