"""Experiment configuration and its on-disk form (JSON or YAML)."""

from __future__ import annotations

import copy
import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from ..env import NoiseModel
from ..errors import ConfigError, DgEtcError
from ..setfn import FunctionDescriptor, SetFunction

ALGORITHMS = ("dgetc", "rgl", "dg_offline_repeated")


@dataclass(frozen=True)
class ExperimentConfig:
    function: FunctionDescriptor
    noise: NoiseModel = field(default_factory=NoiseModel)
    algorithm: str = "dgetc"
    T: int = 10_000
    delta: float = 0.05
    c: Optional[float] = None  # defaults to the function's declared range
    sigma: Optional[float] = None  # defaults to the noise model's declared parameter
    replications: int = 1
    seed: int = 0
    repeats: int = 100  # dg_offline_repeated only
    opt_value: Optional[float] = None  # required when d > 25
    trace: bool = True
    name: str = ""

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if not 0 < self.delta <= 1:
            raise ConfigError(f"delta must lie in (0, 1], got {self.delta}")

    def build_function(self) -> SetFunction:
        try:
            return self.function.build()
        except DgEtcError as exc:
            raise ConfigError(f"cannot build function: {exc}") from exc

    def resolved_c(self, f: SetFunction) -> float:
        c = f.c if self.c is None else self.c
        if c <= 0:
            raise ConfigError("range bound c must be positive; set 'c' explicitly for constant functions")
        return c

    def resolved_sigma(self) -> float:
        return self.noise.sigma if self.sigma is None else self.sigma

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "function": self.function.to_dict(),
            "noise": self.noise.to_dict(),
            "algorithm": self.algorithm,
            "T": self.T,
            "delta": self.delta,
            "c": self.c,
            "sigma": self.sigma,
            "replications": self.replications,
            "seed": self.seed,
            "repeats": self.repeats,
            "opt_value": self.opt_value,
            "trace": self.trace,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        if "function" not in data:
            raise ConfigError("config needs a 'function' section")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            data["function"] = FunctionDescriptor.from_dict(data["function"])
            data["noise"] = NoiseModel.from_dict(data.get("noise", {}))
            for key, kind in (("T", int), ("replications", int), ("seed", int), ("repeats", int)):
                if key in data:
                    data[key] = kind(data[key])
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_dotted(data: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override {key!r}: {part!r} is not a section")
    node[parts[-1]] = value


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``key=value`` strings (dotted keys, JSON values) to a config dict."""
    out = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        set_dotted(out, key.strip(), parse_value(text.strip()))
    return out


def load_document(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix in (".yaml", ".yml"):
            import yaml

            return yaml.safe_load(text)
        return json.loads(text)
    except Exception as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def expand_grid(doc: Any) -> list[dict]:
    """Config dicts from a grid document.

    Either a list of configs, or ``{"base": {...}, "grid": {"key": [values], ...}}``
    whose cartesian product (dotted keys) is applied to ``base`` in key order.
    """
    if isinstance(doc, list):
        return [dict(d) for d in doc]
    if not isinstance(doc, dict) or "base" not in doc:
        raise ConfigError("grid file must be a list of configs or have 'base' and 'grid' keys")
    grid = doc.get("grid", {}) or {}
    keys = list(grid)
    cells = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        cell = copy.deepcopy(doc["base"])
        for key, value in zip(keys, combo):
            set_dotted(cell, key, value)
        cells.append(cell)
    return cells
