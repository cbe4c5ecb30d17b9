"""Run configuration files.

INI-style key-value text (``configparser``) with units in key names. Every
section and key is optional except ``[task] name``; unknown sections or keys
are rejected so that typos fail loudly.

Example::

    [task]
    name = xor-standard
    topology = 3 5 1
    scheme = integer

    [sim]
    dt_ms = 1
    theta = 1.5

    [ga]
    seed = 7
    max_generations = 500
"""
from __future__ import annotations

import configparser
import enum
import io
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import SrmgaError
from .evolve import GaConfig, config_hash
from .genome import QuantScheme
from .srm import KernelMode, SimParams, validate_topology
from .tasks import GrfConfig


class ConfigError(SrmgaError):
    """Invalid configuration; message names the offending field."""


class TaskName(str, enum.Enum):
    XOR_STANDARD = "xor-standard"
    XOR_ONE_NEURON = "xor-one-neuron"
    IRIS = "iris"


@dataclass(frozen=True)
class IrisSplit:
    data_path: str = ""
    train_per_class: int = 10
    k_folds: int = 5
    fold: int = 0
    shuffle_seed: int | None = None
    tolerance_ms: float = 2.0


@dataclass(frozen=True)
class RunOptions:
    checkpoint_every: int = 10


@dataclass(frozen=True)
class RunConfig:
    task: TaskName
    topology: tuple[int, ...]
    scheme: QuantScheme = QuantScheme.INTEGER
    sim: SimParams = field(default_factory=SimParams)
    ga: GaConfig = field(default_factory=GaConfig)
    grf: GrfConfig = field(default_factory=GrfConfig)
    iris: IrisSplit = field(default_factory=IrisSplit)
    run: RunOptions = field(default_factory=RunOptions)

    @property
    def input_width(self) -> int:
        if self.task is TaskName.IRIS:
            return 1 + 4 * self.grf.m
        return 3

    def to_dict(self) -> dict:
        d = {
            "task": {"name": self.task.value, "topology": " ".join(map(str, self.topology)),
                     "scheme": self.scheme.value},
            "sim": asdict(self.sim),
            "ga": {_GA_KEYS_REV.get(k, k): v for k, v in asdict(self.ga).items()},
            "run": asdict(self.run),
        }
        d["sim"]["kernel_mode"] = self.sim.kernel_mode.value
        if self.task is TaskName.IRIS:
            d["grf"] = asdict(self.grf)
            d["iris"] = asdict(self.iris)
        return d

    def hash(self) -> str:
        return config_hash(self.to_dict())

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, ga=replace(self.ga, seed=seed))


# config-file key -> dataclass field, where they differ
_GA_KEYS = {"mse_target_ms2": "mse_target", "miss_penalty_ms2": "miss_penalty"}
_GA_KEYS_REV = {v: k for k, v in _GA_KEYS.items()}

_SECTIONS = {
    "sim": (SimParams, {}),
    "ga": (GaConfig, _GA_KEYS),
    "grf": (GrfConfig, {}),
    "iris": (IrisSplit, {}),
    "run": (RunOptions, {}),
}

_DEFAULT_TOPOLOGY = {
    TaskName.XOR_STANDARD: (3, 5, 1),
    TaskName.XOR_ONE_NEURON: (3, 1),
    TaskName.IRIS: (33, 8, 1),
}


def _coerce(section: str, key: str, raw: str, default):
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in {"1", "true", "yes", "on"}
        if isinstance(default, enum.Enum):
            return type(default)(raw.strip())
        if isinstance(default, int) or (default is None and key.endswith("seed")):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: invalid value {raw!r} ({exc})") from exc


def _build(section: str, items: dict[str, str]):
    cls, renames = _SECTIONS[section]
    defaults = cls()
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, raw in items.items():
        name = renames.get(key, key)
        if name not in known or (name in renames.values() and key not in renames):
            allowed = sorted(_GA_KEYS_REV.get(n, n) if section == "ga" else n for n in known)
            raise ConfigError(f"[{section}] unknown key {key!r}; allowed: {', '.join(allowed)}")
        kwargs[name] = _coerce(section, key, raw, getattr(defaults, name))
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    unknown = set(cp.sections()) - set(_SECTIONS) - {"task"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    if not cp.has_section("task") or not cp.has_option("task", "name"):
        raise ConfigError("[task] name is required")
    task_items = dict(cp.items("task"))
    extra = set(task_items) - {"name", "topology", "scheme"}
    if extra:
        raise ConfigError(f"[task] unknown key(s): {', '.join(sorted(extra))}")
    try:
        task = TaskName(task_items["name"].strip())
    except ValueError:
        raise ConfigError(f"[task] name: expected one of {[t.value for t in TaskName]}") from None
    try:
        scheme = QuantScheme(task_items.get("scheme", "integer").strip())
    except ValueError:
        raise ConfigError(f"[task] scheme: expected one of {[s.value for s in QuantScheme]}") from None
    if "topology" in task_items:
        try:
            topology = validate_topology([int(x) for x in task_items["topology"].split()])
        except ValueError as exc:
            raise ConfigError(f"[task] topology: {exc}") from exc
    else:
        topology = _DEFAULT_TOPOLOGY[task]
    parts = {s: _build(s, dict(cp.items(s))) for s in _SECTIONS if cp.has_section(s)}
    if task is not TaskName.IRIS and ({"grf", "iris"} & set(parts)):
        raise ConfigError("[grf]/[iris] sections only apply to task iris")
    cfg = RunConfig(task, topology, scheme, **parts)
    _cross_check(cfg)
    return cfg


def _cross_check(cfg: RunConfig) -> None:
    if cfg.topology[0] != cfg.input_width:
        raise ConfigError(
            f"[task] topology: first layer is {cfg.topology[0]} but task {cfg.task.value} "
            f"provides {cfg.input_width} inputs")
    if cfg.topology[-1] != 1:
        raise ConfigError("[task] topology: the output layer must hold exactly one neuron")
    if cfg.ga.elite_count >= cfg.ga.population_size and cfg.ga.population_size > 1:
        raise ConfigError("[ga] elite_count must be smaller than population_size")
    if cfg.run.checkpoint_every < 1:
        raise ConfigError("[run] checkpoint_every must be >= 1")
    if cfg.task is TaskName.IRIS:
        if not 0 <= cfg.iris.fold < cfg.iris.k_folds:
            raise ConfigError(f"[iris] fold must lie in 0..{cfg.iris.k_folds - 1}")
        if cfg.iris.tolerance_ms <= 0:
            raise ConfigError("[iris] tolerance_ms must be > 0")


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: RunConfig) -> str:
    """Render a config so that ``parse_config(dump_config(c)) == c``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for section, values in cfg.to_dict().items():
        cp[section] = {k: ("" if v is None else str(v)) for k, v in values.items()
                       if not (section == "iris" and k == "shuffle_seed" and v is None)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
