"""Flat key-value run configuration.

The format is one `key = value` per line, `#` starts a comment, and nested
settings use dotted keys (picard.tol, ic.seed, output.trace_path).  Unknown
keys are hard errors so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .energetics import ModelParams
from .fields import GridSpec
from .stepper import PicardConfig

IC_KINDS = ("uniform_perturbed", "random_smooth", "defect_pair")


class ConfigError(ValueError):
    """Configuration parse or validation failure; carries a line number when
    the offending key is known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class InitialConditionSpec:
    kind: str = "uniform_perturbed"
    seed: int = 0
    amplitude: float = 0.1

    def __post_init__(self):
        if self.kind not in IC_KINDS:
            raise ConfigError(f"ic.kind must be one of {IC_KINDS}, got {self.kind!r}")
        if self.amplitude < 0:
            raise ConfigError("ic.amplitude >= 0 required")


@dataclass(frozen=True)
class OutputSpec:
    trace_path: str = "energy_trace.csv"
    snapshot_dir: str = "snapshots"
    snapshot_every: int = 0
    full_state: bool = False

    def __post_init__(self):
        if self.snapshot_every < 0:
            raise ConfigError("output.snapshot_every >= 0 required")


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    params: ModelParams
    t_end: float
    picard: PicardConfig = field(default_factory=PicardConfig)
    ic: InitialConditionSpec = field(default_factory=InitialConditionSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError("t_end > 0 required")
        tau_min = self.picard.tau_min
        if tau_min is not None and tau_min > self.params.tau:
            raise ConfigError("picard.tau_min must satisfy 0 < tau_min <= tau")


_KEYS = {
    "dim": int,
    "n": int,
    "dealias": str,
    "padding_factor": Fraction,
    "rho": float,
    "eta": float,
    "alpha": float,
    "gamma": float,
    "epsilon": float,
    "tau": float,
    "t_end": float,
    "picard.tol": float,
    "picard.max_iter": int,
    "picard.damping": float,
    "picard.tau_shrink": float,
    "picard.tau_min": float,
    "ic.kind": str,
    "ic.seed": int,
    "ic.amplitude": float,
    "output.trace_path": str,
    "output.snapshot_dir": str,
    "output.snapshot_every": int,
    "output.full_state": bool,
}

_REQUIRED = ("dim", "n", "tau", "t_end")


def _parse_value(key: str, raw: str, line: int):
    kind = _KEYS[key]
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind is Fraction:
            return Fraction(raw)
        return kind(raw)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse {key} value {raw!r} as {kind.__name__}", line)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a configuration document.

    Raises ConfigError with a line number on malformed lines or unknown keys,
    and with the violated invariant on bad values.
    """
    values: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", lineno)
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not raw:
            raise ConfigError(f"empty value for {key!r}", lineno)
        values[key] = _parse_value(key, raw, lineno)

    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    try:
        grid = GridSpec(
            dim=values["dim"],
            n=values["n"],
            dealias=values.get("dealias", "two_thirds"),
            padding_factor=values.get("padding_factor"),
        )
        params = ModelParams(
            rho=values.get("rho", 1.0),
            eta=values.get("eta", 1.0),
            alpha=values.get("alpha", 0.5),
            gamma=values.get("gamma", 0.1),
            epsilon=values.get("epsilon", 0.01),
            tau=values["tau"],
        )
        picard = PicardConfig(
            tol=values.get("picard.tol", 1e-10),
            max_iter=values.get("picard.max_iter", 60),
            damping=values.get("picard.damping", 1.0),
            tau_shrink=values.get("picard.tau_shrink", 0.5),
            tau_min=values.get("picard.tau_min"),
        )
        ic = InitialConditionSpec(
            kind=values.get("ic.kind", "uniform_perturbed"),
            seed=values.get("ic.seed", 0),
            amplitude=values.get("ic.amplitude", 0.1),
        )
        output = OutputSpec(
            trace_path=values.get("output.trace_path", "energy_trace.csv"),
            snapshot_dir=values.get("output.snapshot_dir", "snapshots"),
            snapshot_every=values.get("output.snapshot_every", 0),
            full_state=values.get("output.full_state", False),
        )
        return RunConfig(grid=grid, params=params, t_end=values["t_end"],
                         picard=picard, ic=ic, output=output)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
