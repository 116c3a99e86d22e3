"""Run configuration: defaults, flat-file parsing, seed derivation.

Full-scale defaults: 200 robots, 800-step lifetimes, 1000 generations,
a 15x15 archive, 150 red + 150 blue tokens, sigma starting at 0.1, 30
replicates. Geometry and motion limits beyond the 956-unit arena diameter
are simulator defaults and freely overridable.

Config files are flat ``key = value`` text (blank lines and ``#`` comments
allowed). Precedence: CLI flags > file values > defaults. Unknown keys are
rejected.
"""

from __future__ import annotations

import dataclasses
import hashlib
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError

_MASK64 = (1 << 64) - 1


def splitmix64(seed: int, index: int) -> int:
    """Derived seed for replicate ``index``: splitmix64 finalizer of
    seed + (index+1) * golden-gamma. Pure 64-bit integer math, so derived
    streams are portable across platforms and implementations."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass
class RunConfig:
    variant: str
    population: int = 200
    lifetime: int = 800
    generations: int = 1000
    map_bins: int = 15
    tokens_red: int = 150
    tokens_blue: int = 150
    sigma_init: float = 0.1
    sigma_min: float = 0.01
    sigma_max: float = 0.5
    adapt_sigma: bool = True
    arena_diameter: float = 956.0
    robot_radius: float = 5.0
    token_radius: float = 5.0
    sensor_range: float = 64.0
    broadcast_range: float = 32.0
    max_speed: float = 2.0
    max_turn_deg: float = 30.0
    distance_bound: Optional[float] = None  # None -> arena diameter
    seed: int = 1
    replicates: int = 30
    out_dir: str = "runs"
    workers: int = 0  # 0 -> available parallelism
    dump_genomes: bool = False
    trace: bool = False
    force: bool = False

    # Execution-only fields that do not influence results; everything else
    # is covered by the config hash.
    _EXECUTION_FIELDS = ("out_dir", "workers", "force")

    def __post_init__(self):
        from .evolution import parse_variant  # deferred: avoids import cycle

        try:
            self.variant = parse_variant(self.variant).value
        except ValueError as e:
            raise ConfigurationError(str(e)) from None
        for name in ("population", "lifetime", "map_bins", "replicates"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.generations < 0:  # 0 = initialization artifacts only
            raise ConfigurationError("generations must be >= 0")
        for name in ("tokens_red", "tokens_blue"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        if not (0 < self.sigma_min <= self.sigma_init <= self.sigma_max):
            raise ConfigurationError(
                "need 0 < sigma_min <= sigma_init <= sigma_max, got "
                f"{self.sigma_min}/{self.sigma_init}/{self.sigma_max}")
        if self.distance_bound is not None and self.distance_bound <= 0:
            raise ConfigurationError("distance_bound must be positive")
        if self.workers < 0:
            raise ConfigurationError("workers must be >= 0")
        if self.seed < 0:
            raise ConfigurationError("seed must be >= 0")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in self._EXECUTION_FIELDS:
            d.pop(k)
        return d

    def config_hash(self) -> str:
        """Digest of every result-affecting field."""
        d = self.to_dict()
        text = "".join(f"{k}={d[k]!r}\n" for k in sorted(d))
        return hashlib.sha256(text.encode()).hexdigest()

    def replicate_seed(self, index: int) -> int:
        return splitmix64(self.seed, index)

    def replicate_config(self, index: int) -> "RunConfig":
        """Config of one replicate: derived seed, single run."""
        return dataclasses.replace(self, seed=self.replicate_seed(index), replicates=1)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: str):
    typ = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if key == "distance_bound":
            return None if raw.lower() in ("none", "") else float(raw)
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "bool":
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"invalid value for {key!r}: {raw!r}") from None


def parse_config_file(path: Path) -> dict:
    """Flat key = value file -> dict of coerced RunConfig fields."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    return values


def build_config(cli_values: dict, config_file: Optional[Path] = None) -> RunConfig:
    """Layer CLI values over file values over defaults.

    ``cli_values`` holds only flags the user actually passed.
    """
    merged: dict = {}
    if config_file is not None:
        merged.update(parse_config_file(config_file))
    merged.update({k: v for k, v in cli_values.items() if v is not None})
    if "variant" not in merged:
        raise ConfigurationError("missing variant: pass --variant or set it in the config file")
    try:
        return RunConfig(**merged)
    except TypeError as e:
        raise ConfigurationError(str(e)) from None


def software_versions() -> dict:
    import numba
    import numpy
    import scipy

    from . import __version__

    return {
        "edqd": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }
