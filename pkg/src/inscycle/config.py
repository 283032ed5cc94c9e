"""Experiment configuration: one JSON document with four blocks.

Blocks: "market" (MarketParams), "solver" (SolverConfig), "simulation"
(SimulationConfig), "sweep" (axis + values) and "output".  Every block is
optional; omitted fields fall back to the built-in benchmark defaults.
Unknown keys are rejected.  Dotted-path overrides ("market.rho=0.2")
take precedence over the file.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import SimulationConfig
from .errors import ConfigError
from .params import MarketParams
from .solver import SolverConfig, SWEEP_AXES

__all__ = ["ExperimentConfig", "SweepSpec", "OutputSpec", "load_config",
           "apply_overrides"]

# "lambda" is the natural spelling in configs but a keyword in Python
_MARKET_ALIASES = {"lambda": "lam"}


@dataclass(frozen=True)
class SweepSpec:
    axis: str = "gamma"
    values: tuple = (0.02, 0.1, 0.2, 0.3)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES and self.axis != "lambda":
            raise ConfigError(f"sweep.axis must be one of {SWEEP_AXES}, "
                              f"got {self.axis!r}")
        if len(self.values) == 0:
            raise ConfigError("sweep.values must be non-empty")


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    emit_csv: bool = True
    emit_svg: bool = False
    stride: int = 1000   # path thinning for simulate output


@dataclass(frozen=True)
class ExperimentConfig:
    market: MarketParams = field(default_factory=MarketParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    output: OutputSpec = field(default_factory=OutputSpec)


_BLOCKS = {
    "market": MarketParams,
    "solver": SolverConfig,
    "simulation": SimulationConfig,
    "sweep": SweepSpec,
    "output": OutputSpec,
}


def _build_block(name, cls, data):
    fields = {f.name for f in dataclasses.fields(cls)}
    clean = {}
    for key, value in data.items():
        key = _MARKET_ALIASES.get(key, key) if name == "market" else key
        if key not in fields:
            raise ConfigError(f"unknown key {name}.{key}")
        if isinstance(value, list):
            value = tuple(value)
        clean[key] = value
    try:
        return cls(**clean)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid {name} block: {exc}")


def load_config(path=None) -> ExperimentConfig:
    """Parse a config file; with path=None return pure defaults."""
    if path is None:
        return ExperimentConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    blocks = {}
    for name, data in doc.items():
        if name not in _BLOCKS:
            raise ConfigError(f"unknown config block {name!r}")
        if not isinstance(data, dict):
            raise ConfigError(f"config block {name!r} must be an object")
        blocks[name] = _build_block(name, _BLOCKS[name], data)
    return ExperimentConfig(**blocks)


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    """Apply dotted key=value overrides, e.g. market.rho=0.2."""
    blocks = {name: getattr(cfg, name) for name in _BLOCKS}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like block.key=value")
        dotted, _, raw = item.partition("=")
        if "." not in dotted:
            raise ConfigError(f"override key {dotted!r} must be block.key")
        block_name, _, key = dotted.partition(".")
        if block_name not in _BLOCKS:
            raise ConfigError(f"unknown config block {block_name!r}")
        if block_name == "market":
            key = _MARKET_ALIASES.get(key, key)
        cls = _BLOCKS[block_name]
        fields = {f.name for f in dataclasses.fields(cls)}
        if key not in fields:
            raise ConfigError(f"unknown key {block_name}.{key}")
        value = _parse_value(raw)
        if isinstance(value, list):
            value = tuple(value)
        try:
            blocks[block_name] = dataclasses.replace(blocks[block_name],
                                                     **{key: value})
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid override {item!r}: {exc}")
    return ExperimentConfig(**blocks)
