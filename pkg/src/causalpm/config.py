"""Flat key-value experiment configs with lossless round-tripping.

Format: one ``key = value`` per line, ``#`` comments, arrays as
comma-separated scalars.  Scalars parse as int, then float, then bool,
then string.  Seeds are explicit; a config with no seed is invalid (no
ambient entropy anywhere in the harness).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

Scalar = int | float | bool | str
Value = Scalar | list


class ConfigError(ValueError):
    """Malformed or incomplete experiment configuration."""


_EXPERIMENTS = ("exponent-sweep", "alpha-vs-p", "error-prob", "control-sim")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    trials: int = 1000
    workers: int = 1
    out: str = "out"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in _EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; "
                              f"expected one of {_EXPERIMENTS}")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an explicit integer")
        if self.trials < 0:
            raise ConfigError("trials must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for key, val in self.params.items():
            if isinstance(val, list) and len(val) == 0:
                raise ConfigError(f"grid {key!r} must be nonempty")

    def grid(self, key: str, default=None) -> list:
        """Parameter as a nonempty list (scalars promote to singletons)."""
        val = self.params.get(key, default)
        if val is None:
            raise ConfigError(f"missing required grid {key!r}")
        if not isinstance(val, list):
            val = [val]
        if not val:
            raise ConfigError(f"grid {key!r} must be nonempty")
        return val

    def scalar(self, key: str, default=None):
        if key in self.params:
            val = self.params[key]
            if isinstance(val, list):
                raise ConfigError(f"{key!r} must be a scalar, got a list")
            return val
        if default is None:
            raise ConfigError(f"missing required parameter {key!r}")
        return default

    def sha256(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()

    def as_dict(self) -> dict:
        out = {"experiment": self.experiment, "seed": self.seed,
               "trials": self.trials, "workers": self.workers, "out": self.out}
        out.update(self.params)
        return out


def _parse_scalar(tok: str) -> Scalar:
    tok = tok.strip()
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        pass
    if tok.lower() in ("true", "false"):
        return tok.lower() == "true"
    return tok


def _format_scalar(val: Scalar) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(val)
    return str(val)


def loads(text: str) -> ExperimentConfig:
    fields: dict[str, Value] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in fields:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if "," in val:
            fields[key] = [_parse_scalar(tok) for tok in val.split(",") if tok.strip()]
        else:
            fields[key] = _parse_scalar(val)
    if "experiment" not in fields:
        raise ConfigError("config is missing 'experiment'")
    if "seed" not in fields:
        raise ConfigError("config is missing an explicit 'seed'")
    known = {}
    for name, conv in (("experiment", str), ("seed", int), ("trials", int),
                       ("workers", int), ("out", str)):
        if name in fields:
            val = fields.pop(name)
            if not isinstance(val, conv if conv is not str else (str, int, float)):
                raise ConfigError(f"{name} must be a {conv.__name__}, got {val!r}")
            known[name] = conv(val)
    return ExperimentConfig(params=fields, **known)


def dumps(cfg: ExperimentConfig) -> str:
    lines = [f"experiment = {cfg.experiment}",
             f"seed = {cfg.seed}",
             f"trials = {cfg.trials}",
             f"workers = {cfg.workers}",
             f"out = {cfg.out}"]
    for key in sorted(cfg.params):
        val = cfg.params[key]
        if isinstance(val, list):
            body = ", ".join(_format_scalar(v) for v in val)
            if len(val) == 1:
                body += ","  # keep singleton lists lists on re-parse
            lines.append(f"{key} = {body}")
        else:
            lines.append(f"{key} = {_format_scalar(val)}")
    return "\n".join(lines) + "\n"


def load(path) -> ExperimentConfig:
    with open(path) as fh:
        return loads(fh.read())


def dump(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(cfg))
