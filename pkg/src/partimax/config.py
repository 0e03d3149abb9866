"""Run configuration in flat INI form.

Every section maps onto one frozen dataclass; keys are the dataclass
field names. Missing keys take the dataclass default, unknown sections or
keys are errors. :func:`dumps` writes every field, so ``loads(dumps(c)) == c``
for any accepted config.
"""

from __future__ import annotations

import configparser
import dataclasses
import types
import typing
from dataclasses import dataclass, field, fields

from .belief import DetectorModel, FilterParams, MotionModel
from .select import SELECTORS
from .simulate import BenchmarkConfig
from .tiling import TileCodingConfig
from .verify import SUITES, VerifyConfig

MODES = ("bench", "verify", "select")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunSection:
    mode: str = "bench"
    out: str = "results.csv"
    jobs: int = 1
    # false writes 0.0 in the timing column so the CSV is reproducible byte for byte
    timing: bool = True
    belief: str = ""
    suites: tuple[str, ...] = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        unknown = set(self.suites) - set(SUITES)
        if unknown:
            raise ValueError(f"unknown suites: {sorted(unknown)}")


@dataclass(frozen=True)
class SweepSection:
    algorithms: tuple[str, ...] = BenchmarkConfig.algorithms
    k_values: tuple[int, ...] = BenchmarkConfig.k_values
    r_values: tuple[int, ...] = BenchmarkConfig.r_values
    people: tuple[int, ...] = BenchmarkConfig.people
    seeds: tuple[int, ...] = BenchmarkConfig.seeds
    trajectories: int = BenchmarkConfig.trajectories
    timesteps: int = BenchmarkConfig.timesteps
    max_rejects: int | None = None
    time_budget: float | None = None
    detector_cost_us: float = 0.0


@dataclass(frozen=True)
class SelectSection:
    algorithm: str = "partimax"
    k: int = 40
    r: int = 10
    seed: int = 0
    max_rejects: int | None = None

    def __post_init__(self):
        if self.algorithm not in SELECTORS:
            raise ValueError(f"algorithm must be one of {sorted(SELECTORS)}")


@dataclass(frozen=True)
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    tiling: TileCodingConfig = field(default_factory=TileCodingConfig)
    motion: MotionModel = field(default_factory=MotionModel)
    detector: DetectorModel = field(default_factory=DetectorModel)
    filter: FilterParams = field(default_factory=FilterParams)
    select: SelectSection = field(default_factory=SelectSection)
    verify: VerifyConfig = field(default_factory=VerifyConfig)

    def benchmark(self) -> BenchmarkConfig:
        return BenchmarkConfig(
            **dataclasses.asdict(self.sweep),
            tiling=self.tiling,
            motion=self.motion,
            detector=self.detector,
            filter=self.filter,
        )

    def replace(self, section: str, **changes) -> "RunConfig":
        try:
            return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}] {exc}") from exc


def _hints(cls) -> dict:
    return typing.get_type_hints(cls)


def _optional(tp):
    """``X | None`` -> X, else None."""
    if isinstance(tp, types.UnionType) or typing.get_origin(tp) is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if len(args) == 1:
            return args[0]
    return None


def _parse_scalar(text: str, tp):
    if tp is bool:
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if tp is int:
        return int(text)
    if tp is float:
        return float(text)
    if tp is str:
        return text
    raise TypeError(f"unsupported field type {tp}")


def parse_value(text: str, tp):
    text = text.strip()
    inner = _optional(tp)
    if inner is not None:
        return None if text.lower() in ("", "none") else parse_value(text, inner)
    if typing.get_origin(tp) is tuple:
        item = typing.get_args(tp)[0]
        return tuple(_parse_scalar(p.strip(), item) for p in text.split(",") if p.strip())
    return _parse_scalar(text, tp)


def format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def from_parser(parser: configparser.ConfigParser) -> RunConfig:
    sections = {f.name: f for f in fields(RunConfig)}
    unknown = [s for s in parser.sections() if s not in sections]
    if unknown:
        raise ConfigError(f"unknown sections: {unknown}")
    built = {}
    for name, f in sections.items():
        cls = _hints(RunConfig)[name]
        hints = _hints(cls)
        kwargs = {}
        if parser.has_section(name):
            for key, text in parser.items(name):
                if key not in hints:
                    raise ConfigError(f"[{name}] unknown key {key!r}")
                try:
                    kwargs[key] = parse_value(text, hints[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"[{name}] {key}: {exc}") from exc
        try:
            built[name] = cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}] {exc}") from exc
    cfg = RunConfig(**built)
    try:
        cfg.benchmark()
    except ValueError as exc:
        raise ConfigError(f"[sweep] {exc}") from exc
    return cfg


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    p.optionxform = str  # keys are case sensitive field names
    return p


def loads(text: str) -> RunConfig:
    p = _parser()
    try:
        p.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return from_parser(p)


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def dumps(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        section = getattr(cfg, f.name)
        lines.append(f"[{f.name}]")
        for sf in fields(section):
            lines.append(f"{sf.name} = {format_value(getattr(section, sf.name))}")
        lines.append("")
    return "\n".join(lines)
