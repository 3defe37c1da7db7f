"""Experiment configuration: strict TOML parsing with documented defaults.

Key set (all optional; an empty file gives the defaults below)::

    experiment = "verify-frame"   # must match the command-line experiment if given
    d = 1
    L = 8.0
    M = 512
    N = 7
    K = 64
    seed = 0
    trials = 20
    threads = 1

    [window]
    delta = 0.01
    a = 1.6

    [potential]
    kind = "zero"        # zero | constant | symmetric | grlex
    value = [0.3]        # constant: one entry per dimension
    b = 1.0              # symmetric (d = 2)
    coeffs = [[0.0, 0.0, 0.5]]   # grlex: one coefficient list per component

    [symbol]
    family = "gaussian"  # gaussian | tapered-trig | liouville | constant | file
    width = 0.7
    taper = 1.5
    path = ""            # file: double-symbol binary

    [boxes]              # defaults depend on d (shown for d = 1)
    decay = [[1, 12], [2, 20], [3, 28]]   # d = 2: [[1, 2], [1, 4], [1, 6]]
    schur = [[1, 24], [1, 32]]            # d = 2: [[1, 4], [1, 6]]
    max_weight = 4

    [tolerances]
    parseval = 1e-8      # d = 2 runs default to 1e-5
    roundtrip = 1e-8
    identity = 1e-10
    unitarity = 1e-6
    gauge = 1e-8
    isometry = 1e-7
    product = 1e-6
    factorization = 1e-9
    liouville = 1e-8
    saturation = 0.05
    schur = 1e-6
    direct = 1e-3
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import tomli

from .magnetics import (VectorPotential, constant_potential, symmetric_gauge,
                        zero_potential)

EXPERIMENTS = (
    "verify-frame",
    "quantize-roundtrip",
    "gauge-covariance",
    "hs-isometry",
    "product-formulas",
    "super-decay",
    "boundedness",
    "liouville",
    "schur-demo",
)


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit status 2."""


@dataclass
class WindowConfig:
    delta: float = 0.01
    a: float = 1.6


@dataclass
class PotentialConfig:
    kind: str = "zero"
    value: list = field(default_factory=lambda: [0.3])
    b: float = 1.0
    coeffs: list = field(default_factory=list)


@dataclass
class SymbolConfig:
    family: str = "gaussian"
    width: float = 0.7
    taper: float = 1.5
    path: str = ""


@dataclass
class BoxConfig:
    decay: list | None = None
    schur: list | None = None
    max_weight: int = 4


@dataclass
class Tolerances:
    parseval: float | None = None
    roundtrip: float = 1e-8
    identity: float = 1e-10
    unitarity: float = 1e-6
    gauge: float = 1e-8
    isometry: float = 1e-7
    product: float = 1e-6
    factorization: float = 1e-9
    liouville: float = 1e-8
    saturation: float = 0.05
    schur: float = 1e-6
    direct: float = 1e-3


@dataclass
class ExperimentConfig:
    experiment: str | None = None
    d: int = 1
    L: float = 8.0
    M: int = 512
    N: int = 7
    K: int = 64
    seed: int = 0
    trials: int = 20
    threads: int = 1
    window: WindowConfig = field(default_factory=WindowConfig)
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    symbol: SymbolConfig = field(default_factory=SymbolConfig)
    boxes: BoxConfig = field(default_factory=BoxConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def parseval_tol(self) -> float:
        t = self.tolerances.parseval
        return t if t is not None else (1e-8 if self.d == 1 else 1e-5)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["tolerances"]["parseval"] = self.parseval_tol
        return out

    def validate(self) -> "ExperimentConfig":
        if self.experiment is not None and self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.d not in (1, 2):
            raise ConfigError(f"d must be 1 or 2, got {self.d}")
        if self.M <= 0 or self.M % 2:
            raise ConfigError(f"grid size M must be a positive even integer, got {self.M}")
        if self.L <= 0:
            raise ConfigError("L must be positive")
        if self.N < 0 or self.K < 0:
            raise ConfigError("N and K must be non-negative")
        if self.L < self.N + 1:
            raise ConfigError(f"frame invariant violated: L={self.L} must be >= N+1={self.N + 1}")
        if not 2 * self.K < self.M * np.pi / self.L:
            raise ConfigError(f"frame invariant violated: need 2K < M pi / L (K={self.K}, M={self.M}, L={self.L})")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not 0 < self.window.delta < 0.25 or self.window.a <= 0:
            raise ConfigError("window needs 0 < delta < 0.25 and a > 0")
        p = self.potential
        if p.kind not in ("zero", "constant", "symmetric", "grlex"):
            raise ConfigError(f"unknown potential kind {p.kind!r}")
        if p.kind == "constant" and len(p.value) != self.d:
            raise ConfigError("constant potential needs one value per dimension")
        if p.kind == "symmetric" and self.d != 2:
            raise ConfigError("symmetric gauge needs d = 2")
        if p.kind == "grlex" and len(p.coeffs) != self.d:
            raise ConfigError("grlex potential needs one coefficient list per component")
        s = self.symbol
        if s.family not in ("gaussian", "tapered-trig", "liouville", "constant", "file"):
            raise ConfigError(f"unknown symbol family {s.family!r}")
        if s.family == "file" and not s.path:
            raise ConfigError("symbol family 'file' needs a path")
        if s.width <= 0 or s.taper <= 0:
            raise ConfigError("symbol width and taper must be positive")
        def clamp(boxes):
            return [[min(a, self.N), min(k, self.K)] for a, k in boxes]

        if self.boxes.decay is None:
            self.boxes.decay = clamp([[1, 12], [2, 20], [3, 28]] if self.d == 1 else [[1, 2], [1, 4], [1, 6]])
        if self.boxes.schur is None:
            self.boxes.schur = clamp([[1, 24], [1, 32]] if self.d == 1 else [[1, 4], [1, 6]])
        for name in ("decay", "schur"):
            bx = getattr(self.boxes, name)
            if not bx or any(len(b) != 2 or min(b) < 0 for b in bx):
                raise ConfigError(f"boxes.{name} must be a list of [n_alpha, n_k] pairs")
            if any(b[0] > self.N or b[1] > self.K for b in bx):
                raise ConfigError(f"boxes.{name} exceeds the frame truncation (N, K)")
        if not 0 <= self.boxes.max_weight <= 8:
            raise ConfigError("boxes.max_weight must lie in [0, 8]")
        return self

    def potential_object(self) -> VectorPotential:
        p = self.potential
        if p.kind == "zero":
            return zero_potential(self.d)
        if p.kind == "constant":
            return constant_potential(p.value)
        if p.kind == "symmetric":
            return symmetric_gauge(p.b)
        try:
            return VectorPotential.from_grlex(p.coeffs)
        except ValueError as exc:
            raise ConfigError(f"bad grlex potential: {exc}") from exc


_SECTIONS = {
    "window": WindowConfig,
    "potential": PotentialConfig,
    "symbol": SymbolConfig,
    "boxes": BoxConfig,
    "tolerances": Tolerances,
}


def _coerce(name: str, value, default, hint):
    """Type-check one value against the declared field type."""
    def bad():
        return ConfigError(f"key {name!r}: expected {hint}, got {type(value).__name__}")

    if hint in ("int",):
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad()
        return value
    if hint in ("float", "float | None"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad()
        return float(value)
    if hint in ("str", "str | None"):
        if not isinstance(value, str):
            raise bad()
        return value
    if hint in ("list", "list | None"):
        if not isinstance(value, list):
            raise bad()
        return value
    return value


def _fill(cls, data: dict, prefix: str = ""):
    known = {f.name: f for f in fields(cls)}
    kw = {}
    for k, v in data.items():
        if k not in known:
            raise ConfigError(f"unknown key {prefix + k!r}")
        f = known[k]
        if k in _SECTIONS and cls is ExperimentConfig:
            if not isinstance(v, dict):
                raise ConfigError(f"key {k!r} must be a table")
            kw[k] = _fill(_SECTIONS[k], v, prefix=f"{k}.")
        else:
            kw[k] = _coerce(prefix + k, v, None, str(f.type))
    return cls(**kw)


def parse_config(path) -> ExperimentConfig:
    """Read a TOML config. Unknown keys, duplicate keys and type mismatches are errors."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return _fill(ExperimentConfig, data).validate()
