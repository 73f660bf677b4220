"""Strict ``key = value`` experiment configuration with ``[section]`` headers.

Every key, its type and its default is listed once in :data:`SCHEMA`; the
shipped ``defaults.cfg`` mirrors it and a test keeps the two in sync. Unknown
sections or keys are errors, never warnings.
"""

import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import ConfigError, ConfigSyntax, MissingRequired, UnknownKey
from .objective import Regularizer

DEFAULT_EPS = {"l2": 1e-4, "entropy": 1e-1}
FAMILIES = ("mixture", "full-gaussian", "diag-gaussian", "ring")
SCENARIOS = ("two-gaussians", "rings", "single-gaussian")


def _bool(text):
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text):
    return None if text.lower() in ("", "auto", "none") else float(text)


def _optional_str(text):
    return None if text.lower() in ("", "none") else text


def _float_list(text):
    return None if text.lower() in ("", "equal", "none") else tuple(float(v) for v in text.split(","))


def _int_tuple(text):
    return tuple(int(v) for v in text.split(","))


def _str_list(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"{text!r} is not one of {', '.join(options)}")
        return text

    return parse


# section -> key -> (parser, default); the attribute name equals the key
SCHEMA = {
    "experiment": {
        "seed": (int, 0),
        "seeds": (int, 1),
        "workers": (int, 1),
        "eval_samples": (int, 100000),
        "emit_samples": (int, 5000),
    },
    "train": {
        "regularizer": (_choice("l2", "entropy"), "l2"),
        "eps": (_optional_float, None),
        "batch_size": (int, 64),
        "iterations": (int, 20000),
        "eval_every": (int, 200),
        "hidden": (_int_tuple, (128, 256)),
        "potential_lr": (float, 1e-3),
        "lambda_lr": (float, 1e-3),
        "lambda_decay": (float, 0.0),
        "lambda_optimizer": (_choice("adam", "sgd"), "adam"),
        "control_variate": (_bool, True),
        "cyclical_sign": (float, -1.0),
        "pairing": (_choice("paired", "all"), "all"),
        "components": (int, 10),
        "init_scale": (float, 1.0),
        "weights": (_float_list, None),
    },
    "bench": {
        "dim": (int, 2),
        "n_inputs": (int, 3),
        "family": (_choice(*FAMILIES), "full-gaussian"),
    },
    "demo": {
        "scenario": (_choice(*SCENARIOS), "two-gaussians"),
        "family": (_choice("auto", *FAMILIES), "auto"),
    },
    "aggregate": {
        "files": (_str_list, ()),
        "truth": (_optional_str, None),
        "family": (_choice(*FAMILIES), "full-gaussian"),
    },
}

# keys that exist in several sections get a section prefix on the dataclass
_ATTR = {
    ("bench", "family"): "bench_family",
    ("demo", "family"): "demo_family",
    ("aggregate", "family"): "aggregate_family",
}


def _attr(section, key):
    return _ATTR.get((section, key), key)


@dataclass
class ExperimentConfig:
    seed: int = 0
    seeds: int = 1
    workers: int = 1
    eval_samples: int = 100000
    emit_samples: int = 5000
    regularizer: str = "l2"
    eps: Optional[float] = None  # None picks the default for the regularizer kind
    batch_size: int = 64
    iterations: int = 20000
    eval_every: int = 200
    hidden: tuple = (128, 256)
    potential_lr: float = 1e-3
    lambda_lr: float = 1e-3
    lambda_decay: float = 0.0
    lambda_optimizer: str = "adam"
    control_variate: bool = True
    cyclical_sign: float = -1.0
    pairing: str = "all"
    components: int = 10
    init_scale: float = 1.0
    weights: Optional[tuple] = None
    dim: int = 2
    n_inputs: int = 3
    bench_family: str = "full-gaussian"
    scenario: str = "two-gaussians"
    demo_family: str = "auto"  # mixture for Gaussian scenarios, ring for rings
    files: tuple = field(default_factory=tuple)
    truth: Optional[str] = None
    aggregate_family: str = "full-gaussian"

    def __post_init__(self):
        if self.eps is None:
            self.eps = DEFAULT_EPS.get(self.regularizer)
        validate(self)

    def regularizer_spec(self):
        return Regularizer(self.regularizer, self.eps)


def validate(cfg):
    """Range checks shared by the parser and direct construction."""
    for name in ("seeds", "workers", "eval_samples", "emit_samples", "iterations", "dim", "n_inputs", "components"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be at least 1, got {getattr(cfg, name)}")
    if cfg.batch_size < 2:
        raise ConfigError(f"batch_size must be at least 2, got {cfg.batch_size}")
    if cfg.eval_every < 0:
        raise ConfigError("eval_every must be non-negative")
    if cfg.regularizer not in DEFAULT_EPS:
        raise ConfigError(f"unknown regularizer {cfg.regularizer!r}")
    if not cfg.eps > 0:
        raise ConfigError(f"eps must be positive, got {cfg.eps}")
    if cfg.weights is not None:
        if any(w <= 0 for w in cfg.weights):
            raise ConfigError(f"weights must be positive: {cfg.weights}")
        if abs(math.fsum(cfg.weights) - 1.0) > 1e-12:
            raise ConfigError(f"weights must sum to 1, they sum to {math.fsum(cfg.weights):.15g}")


def parse_text(text, source="<string>"):
    """Parse config text into an :class:`ExperimentConfig` with defaults filled."""
    values = {}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigSyntax(f"{where}: malformed section header {raw_line.strip()!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise UnknownKey(f"{where}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigSyntax(f"{where}: expected 'key = value', got {raw_line.strip()!r}")
        if section is None:
            raise ConfigSyntax(f"{where}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise UnknownKey(f"{where}: unknown key {key!r} in [{section}]")
        attr = _attr(section, key)
        if attr in values:
            raise ConfigSyntax(f"{where}: duplicate key {key!r} in [{section}]")
        parser, _ = SCHEMA[section][key]
        try:
            values[attr] = parser(value)
        except ValueError as exc:
            raise ConfigSyntax(f"{where}: bad value for {key}: {exc}") from None
    return ExperimentConfig(**values)


def parse_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MissingRequired(f"cannot read config {path}: {exc}") from None
    return parse_text(text, str(path))


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def dump_config(cfg):
    """Resolved snapshot with every key written explicitly."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_format(getattr(cfg, _attr(section, key)))}")
        lines.append("")
    return "\n".join(lines)


def defaults_text():
    """Contents of the reference defaults file shipped with the package."""
    return resources.files("vwb").joinpath("defaults.cfg").read_text()


def schema_defaults():
    return {_attr(s, k): default for s, keys in SCHEMA.items() for k, (_, default) in keys.items()}


def config_fields():
    return [f.name for f in fields(ExperimentConfig)]
