"""Flat ``key = value`` run configuration.

Every ShrinkingParams, SolverConfig and ShootParams field is a key, plus a
few run settings. Files may hold comments after ``#``; ``--set KEY=VALUE``
overrides are applied on top, in order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .decomposition import ShrinkingParams
from .shooting import ShootParams
from .solver import SolverConfig


class ConfigError(ValueError):
    """Unknown key or unparsable value."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    # shrinking set
    A: float = 20.0
    At: float = 20.0
    Bt: float = 0.5
    eta: float = 0.05
    alpha: float = 2.025
    K0: float = 10.0
    s0: float = 20.0
    # stepper
    ds: float = 0.01
    h: float = 0.05
    ymax: float | None = None
    bc: str = "dirichlet"
    advection: str = "central"
    cadence: float = 0.1
    regrid: bool = False
    potential: bool = True
    nonlinear: bool = True
    residual: bool = True
    # initial-data parameters (simulate)
    d0: float = 0.0
    d1: float = 0.0
    dt0: float = 0.0
    dt1: float = 0.0
    # run settings
    s_max: float | None = None  # None: s0 + 10
    budget: int = 200
    margin: float = 5.0  # search refines until trapped to s_max + margin
    seed: int = 0
    workers: int = 1
    draws: int = 0
    snapshot_stride: int = 10
    R: float = 2.0
    eta0: float = 0.1

    @property
    def horizon(self) -> float:
        return self.s_max if self.s_max is not None else self.s0 + 10.0

    def shrinking(self) -> ShrinkingParams:
        return ShrinkingParams(
            A=self.A, At=self.At, Bt=self.Bt, eta=self.eta, alpha=self.alpha, K0=self.K0, s0=self.s0
        )

    def solver(self) -> SolverConfig:
        names = {f.name for f in fields(SolverConfig)}
        return SolverConfig(**{k: v for k, v in asdict(self).items() if k in names})

    def shoot_params(self) -> ShootParams:
        return ShootParams(self.d0, self.d1, self.dt0, self.dt1)

    def validate(self) -> "RunConfig":
        """Build the component objects once so bad values fail early."""
        try:
            self.shrinking()
            self.solver()
            self.shoot_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.budget < 1 or self.workers < 1 or self.snapshot_stride < 1 or self.draws < 0:
            raise ConfigError("budget, workers and snapshot_stride must be >= 1, draws >= 0")
        if not self.horizon > self.s0:
            raise ConfigError("s_max must exceed s0", "s_max")
        return self

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {_format(v)}")
        return "\n".join(lines) + "\n"


_TYPES = {f.name: f.type for f in fields(RunConfig)}
KEYS = tuple(_TYPES)


def _format(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _parse(key: str, text: str):
    kind = _TYPES[key]
    text = text.strip()
    try:
        if kind == "float | None":
            return None if text.lower() in ("none", "") else float(text)
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}", key) from None


def parse_assignment(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ConfigError(f"expected KEY=VALUE, got {item!r}")
    key, value = item.split("=", 1)
    key = key.strip()
    if key not in _TYPES:
        raise ConfigError(f"unknown config key: {key}", key)
    return key, _parse(key, value)


def parse_text(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            key, value = parse_assignment(line)
            out[key] = value
    return out


def load_config(path: str | Path | None = None, overrides=(), base: RunConfig | None = None) -> RunConfig:
    values = {}
    if path is not None:
        values.update(parse_text(Path(path).read_text()))
    for item in overrides:
        key, value = parse_assignment(item)
        values[key] = value
    return replace(base or RunConfig(), **values).validate()
