"""Run configuration: a single YAML file, validated against a fixed schema.

Every section is optional at parse time; each subcommand checks that the
sections it needs are present.  Unknown keys, duplicate keys and wrong types
are rejected with the line and column of the offending entry.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .errors import ConfigError
from .model import FAMILIES, CenterModel, LatticeSpec, make_model

PROPAGATORS = ("eigen", "stepper")
POLE_SOLVERS = ("numeric", "analytic")


@dataclass(frozen=True)
class ModelConfig:
    family: str
    params: dict

    def build(self) -> CenterModel:
        return make_model(self.family, **self.params)


@dataclass(frozen=True)
class PacketSection:
    j0: int
    sigma: float
    k: float


@dataclass(frozen=True)
class TimeSection:
    t_end: float
    dt: Optional[float] = None
    record_every: float = 1.0
    propagator: str = "eigen"
    snapshot_times: tuple = ()
    growth_window: Optional[tuple] = None


@dataclass(frozen=True)
class SweepSection:
    parameter: Optional[str]
    start: float
    stop: float
    step: float

    def grid(self) -> np.ndarray:
        """Inclusive grid start, start+step, ..., stop (rounded to 12 decimals)."""
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        return np.round(self.start + self.step * np.arange(n + 1), 12)


@dataclass(frozen=True)
class ScatterSection:
    k_min: float = 0.0
    k_max: float = math.pi
    n_k: int = 181


@dataclass(frozen=True)
class PolesSection:
    solver: str = "numeric"


@dataclass(frozen=True)
class SpectrumSection:
    threshold: float = 0.05
    profiles: Any = "bound"  # "bound", "all", "none" or a tuple of state indices


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    lattice: Optional[LatticeSpec] = None
    packet: Optional[PacketSection] = None
    time: Optional[TimeSection] = None
    sweep: Optional[SweepSection] = None
    scatter: ScatterSection = field(default_factory=ScatterSection)
    poles: PolesSection = field(default_factory=PolesSection)
    spectrum: SpectrumSection = field(default_factory=SpectrumSection)
    output_dir: str = "out"
    seed: int = 0
    source: Optional[str] = None

    def require(self, *sections: str):
        missing = [s for s in sections if getattr(self, s) is None]
        if missing:
            raise ConfigError(
                f"{self.source or 'config'}: missing required section(s) {missing}"
            )


# ---------------------------------------------------------------- parsing


class _Doc:
    """Parsed YAML with the source position of every mapping entry."""

    def __init__(self, text: str, source: str):
        self.source = source
        try:
            root = yaml.compose(text, Loader=yaml.SafeLoader)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark or exc.context_mark
            raise self._error(mark, f"YAML syntax error: {exc.problem}") from None
        if root is None:
            raise ConfigError(f"{source}: config file is empty")
        self.marks = {}
        self.key_marks = {}
        self._loader = yaml.SafeLoader("")
        self.data = self._convert(root, ())

    def _error(self, mark, message):
        if mark is None:
            return ConfigError(f"{self.source}: {message}")
        return ConfigError(
            f"{self.source}:{mark.line + 1}:{mark.column + 1}: {message}",
            line=mark.line + 1,
            column=mark.column + 1,
        )

    def _convert(self, node, path):
        self.marks[path] = node.start_mark
        if isinstance(node, yaml.MappingNode):
            out = {}
            for key_node, value_node in node.value:
                if not isinstance(key_node, yaml.ScalarNode):
                    raise self._error(key_node.start_mark, "mapping keys must be plain names")
                key = key_node.value
                if key in out:
                    raise self._error(key_node.start_mark, f"duplicate key {key!r}")
                self.key_marks[path + (key,)] = key_node.start_mark
                out[key] = self._convert(value_node, path + (key,))
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._convert(v, path + (i,)) for i, v in enumerate(node.value)]
        return self._loader.construct_object(node, deep=True)

    def fail(self, path, message, at_key=False):
        marks = self.key_marks if at_key else self.marks
        mark = marks.get(tuple(path))
        where = ".".join(str(p) for p in path) or "<root>"
        return self._error(mark, f"{where}: {message}")


def _section(doc, path, allowed, required=()):
    value = doc.data
    for p in path:
        value = value[p]
    if not isinstance(value, dict):
        raise doc.fail(path, "expected a mapping")
    for key in value:
        if key not in allowed:
            raise doc.fail(
                path + (key,), f"unknown key {key!r}; allowed: {sorted(allowed)}", at_key=True
            )
    for key in required:
        if key not in value:
            raise doc.fail(path, f"missing required key {key!r}")
    return value


def _number(doc, path, value, positive=False, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise doc.fail(path, f"expected a number, got {value!r}")
    if integer and not (isinstance(value, int) or float(value).is_integer()):
        raise doc.fail(path, f"expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise doc.fail(path, "must be finite")
    if positive and value <= 0:
        raise doc.fail(path, f"must be positive, got {value!r}")
    return int(value) if integer else float(value)


def _choice(doc, path, value, choices):
    if value not in choices:
        raise doc.fail(path, f"expected one of {list(choices)}, got {value!r}")
    return value


def _k_value(doc, path, sec, name, default=None):
    """A wavenumber given either as ``name`` or as ``name_over_pi``."""
    alt = name + "_over_pi"
    if name in sec and alt in sec:
        raise doc.fail(path + (alt,), f"give either {name!r} or {alt!r}, not both")
    if alt in sec:
        return math.pi * _number(doc, path + (alt,), sec[alt])
    if name in sec:
        return _number(doc, path + (name,), sec[name])
    if default is None:
        raise doc.fail(path, f"missing required key {name!r} (or {alt!r})")
    return default


def _parse_model(doc):
    sec = _section(doc, ("model",), _model_keys(doc), ("family",))
    family = _choice(doc, ("model", "family"), sec["family"], sorted(FAMILIES))
    params = {}
    for key, value in sec.items():
        if key == "family":
            continue
        params[key] = _number(doc, ("model", key), value)
    allowed = {f.name for f in dataclasses.fields(FAMILIES[family])}
    for key in params:
        if key not in allowed:
            raise doc.fail(
                ("model", key),
                f"{family} has no parameter {key!r}; allowed: {sorted(allowed)}",
                at_key=True,
            )
    try:
        make_model(family, **params)
    except (TypeError, ValueError) as exc:
        raise doc.fail(("model",), str(exc)) from None
    return ModelConfig(family, params)


def _model_keys(doc):
    keys = {"family"}
    for cls in FAMILIES.values():
        keys |= {f.name for f in dataclasses.fields(cls)}
    return keys


def _parse_lattice(doc):
    sec = _section(doc, ("lattice",), {"L"}, ("L",))
    L = _number(doc, ("lattice", "L"), sec["L"], positive=True, integer=True)
    try:
        return LatticeSpec(L)
    except ValueError as exc:
        raise doc.fail(("lattice", "L"), str(exc)) from None


def _parse_packet(doc):
    path = ("packet",)
    sec = _section(doc, path, {"j0", "sigma", "k", "k_over_pi"}, ("j0", "sigma"))
    return PacketSection(
        _number(doc, path + ("j0",), sec["j0"], integer=True),
        _number(doc, path + ("sigma",), sec["sigma"], positive=True),
        _k_value(doc, path, sec, "k"),
    )


def _parse_time(doc):
    path = ("time",)
    allowed = {"t_end", "dt", "record_every", "propagator", "snapshot_times", "growth_window"}
    sec = _section(doc, path, allowed, ("t_end",))
    t_end = _number(doc, path + ("t_end",), sec["t_end"])
    if t_end < 0:
        raise doc.fail(path + ("t_end",), "must be non-negative")
    snaps = sec.get("snapshot_times", [])
    if not isinstance(snaps, list):
        raise doc.fail(path + ("snapshot_times",), "expected a list of times")
    snaps = tuple(_number(doc, path + ("snapshot_times", i), v) for i, v in enumerate(snaps))
    for i, t in enumerate(snaps):
        if not 0 <= t <= t_end:
            raise doc.fail(path + ("snapshot_times", i), f"must lie in [0, t_end={t_end}]")
    window = sec.get("growth_window")
    if window is not None:
        if not isinstance(window, list) or len(window) != 2:
            raise doc.fail(path + ("growth_window",), "expected [t_start, t_stop]")
        window = tuple(
            _number(doc, path + ("growth_window", i), v) for i, v in enumerate(window)
        )
        if not 0 <= window[0] < window[1] <= t_end:
            raise doc.fail(path + ("growth_window",), "need 0 <= t_start < t_stop <= t_end")
    return TimeSection(
        t_end,
        _number(doc, path + ("dt",), sec.get("dt"), positive=True, allow_none=True),
        _number(doc, path + ("record_every",), sec.get("record_every", 1.0), positive=True),
        _choice(doc, path + ("propagator",), sec.get("propagator", "eigen"), PROPAGATORS),
        snaps,
        window,
    )


def _parse_sweep(doc, model: ModelConfig):
    path = ("sweep",)
    sec = _section(doc, path, {"parameter", "start", "stop", "step"}, ("start", "stop", "step"))
    parameter = sec.get("parameter")
    if parameter is not None:
        allowed = {f.name for f in dataclasses.fields(FAMILIES[model.family])}
        _choice(doc, path + ("parameter",), parameter, sorted(allowed))
    start = _number(doc, path + ("start",), sec["start"])
    stop = _number(doc, path + ("stop",), sec["stop"])
    step = _number(doc, path + ("step",), sec["step"], positive=True)
    if stop < start:
        raise doc.fail(path + ("stop",), "sweep is empty: stop < start")
    return SweepSection(parameter, start, stop, step)


def _parse_scatter(doc):
    path = ("scatter",)
    sec = _section(doc, path, {"k_min", "k_min_over_pi", "k_max", "k_max_over_pi", "n_k"})
    k_min = _k_value(doc, path, sec, "k_min", 0.0)
    k_max = _k_value(doc, path, sec, "k_max", math.pi)
    n_k = _number(doc, path + ("n_k",), sec.get("n_k", 181), positive=True, integer=True)
    if not 0 <= k_min <= k_max <= math.pi + 1e-12:
        raise doc.fail(path, "need 0 <= k_min <= k_max <= pi")
    return ScatterSection(k_min, min(k_max, math.pi), n_k)


def _parse_profiles(doc, value):
    path = ("spectrum", "profiles")
    if isinstance(value, list):
        return tuple(
            _number(doc, path + (i,), v, integer=True) for i, v in enumerate(value)
        )
    return _choice(doc, path, value, ("bound", "all", "none"))


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate YAML config text; raises :class:`ConfigError`."""
    doc = _Doc(text, source)
    top = {
        "model", "lattice", "packet", "time", "sweep", "scatter", "poles", "spectrum",
        "output_dir", "seed",
    }
    root = _section(doc, (), top, ("model",))
    model = _parse_model(doc)
    kwargs: dict[str, Any] = {"model": model, "source": source}
    if "lattice" in root:
        kwargs["lattice"] = _parse_lattice(doc)
    if "packet" in root:
        kwargs["packet"] = _parse_packet(doc)
    if "time" in root:
        kwargs["time"] = _parse_time(doc)
    if "sweep" in root:
        kwargs["sweep"] = _parse_sweep(doc, model)
    if "scatter" in root:
        kwargs["scatter"] = _parse_scatter(doc)
    if "poles" in root:
        sec = _section(doc, ("poles",), {"solver"})
        kwargs["poles"] = PolesSection(
            _choice(doc, ("poles", "solver"), sec.get("solver", "numeric"), POLE_SOLVERS)
        )
    if "spectrum" in root:
        sec = _section(doc, ("spectrum",), {"threshold", "profiles"})
        kwargs["spectrum"] = SpectrumSection(
            _number(doc, ("spectrum", "threshold"), sec.get("threshold", 0.05), positive=True),
            _parse_profiles(doc, sec.get("profiles", "bound")),
        )
    if "output_dir" in root:
        if not isinstance(root["output_dir"], str):
            raise doc.fail(("output_dir",), "expected a path string")
        kwargs["output_dir"] = root["output_dir"]
    if "seed" in root:
        kwargs["seed"] = _number(doc, ("seed",), root["seed"], integer=True)
    cfg = RunConfig(**kwargs)
    if isinstance(cfg.spectrum.profiles, tuple) and cfg.lattice is not None:
        for i, n in enumerate(cfg.spectrum.profiles):
            if not 0 <= n < cfg.lattice.L:
                raise doc.fail(("spectrum", "profiles", i), f"state index must lie in [0, {cfg.lattice.L})")
    if cfg.packet is not None and cfg.lattice is not None:
        sites = cfg.lattice.sites
        if not sites[0] <= cfg.packet.j0 <= sites[-1]:
            raise doc.fail(("packet", "j0"), f"lies outside the lattice [{sites[0]}, {sites[-1]}]")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
