"""Experiment configuration: a nested YAML file with strict key checking."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass

import yaml

from .analysis import SweepConfig
from .detection import CountingConfig
from .errors import ConfigError, OamSimError
from .field_oracle import MIN_RESOLUTION, GridParams

AUTO = "auto"


@dataclass
class MziSection:
    L: int = 3
    arm_a2_spp_order: int = 1


@dataclass
class OracleSection:
    N: int = 512
    extent: float = 6.0
    waist: float = 1.0
    order: int = 1
    offset_start: float = 0.0
    offset_stop: float = 1.5
    offset_step: float = 0.05

    def offsets(self) -> list[float]:
        n = int(math.floor((self.offset_stop - self.offset_start) / self.offset_step + 1e-9)) + 1
        return [round(self.offset_start + k * self.offset_step, 12) for k in range(n)]


@dataclass
class SweepSection:
    n_phase_points: int = 200
    phase_span: float = 4 * math.pi
    scan_frequency: float = 0.2
    crosstalk_epsilon: float = 0.0
    # "auto": r/2 for the ideal eraser, oracle d* for the calibrated one
    eraser_offset: float | str = AUTO


@dataclass
class CountingSection:
    photon_rate: float = 1e4
    bin_duration: float = 0.1
    n_bins_per_phase: int = 10
    coincidence_window: float = 1.59e-6
    dark_rate: float = 0.0
    efficiency: float = 1.0


@dataclass
class ReferenceSection:
    target_visibility: float = 0.8435
    visibility_tolerance: float = 0.017
    coincidence_probability: float = 1.25e-4


@dataclass
class ExperimentConfig:
    seed: int = 20240608
    out_dir: str = "out"
    mzi: MziSection = field(default_factory=MziSection)
    oracle: OracleSection = field(default_factory=OracleSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    counting: CountingSection = field(default_factory=CountingSection)
    reference: ReferenceSection = field(default_factory=ReferenceSection)

    def grid(self) -> GridParams:
        o = self.oracle
        return GridParams(o.N, o.extent, o.waist)

    def counting_config(self) -> CountingConfig:
        c = self.counting
        return CountingConfig(c.photon_rate, c.bin_duration, c.n_bins_per_phase, self.seed,
                              c.coincidence_window, c.dark_rate, c.efficiency)

    def sweep_config(self, scenario: str, analytic: bool = False, **overrides) -> SweepConfig:
        s = self.sweep
        kw = dict(
            scenario=scenario,
            n_phase_points=s.n_phase_points,
            phase_span=s.phase_span,
            scan_frequency=s.scan_frequency,
            counting=self.counting_config(),
            crosstalk_epsilon=s.crosstalk_epsilon,
            eraser_offset=None if s.eraser_offset == AUTO else float(s.eraser_offset),
            arm_a2_spp_order=self.mzi.arm_a2_spp_order,
            L=self.mzi.L,
            oracle_grid=self.grid(),
            analytic=analytic,
        )
        kw.update(overrides)
        return SweepConfig(**kw)

    def validate(self, lines: dict | None = None):
        lines = lines or {}

        def fail(path, msg):
            raise ConfigError(f"{path}: {msg}", lines.get(path))

        if self.oracle.N < MIN_RESOLUTION:
            fail("oracle.N", f"resolution {self.oracle.N} below the floor of {MIN_RESOLUTION}")
        if self.oracle.order == 0:
            fail("oracle.order", "SPP order must be nonzero")
        if abs(self.oracle.order) > self.mzi.L:
            fail("oracle.order", f"order exceeds truncation L={self.mzi.L}")
        if self.oracle.offset_step <= 0:
            fail("oracle.offset_step", "must be > 0")
        if not 0 <= self.oracle.offset_start <= self.oracle.offset_stop < self.oracle.extent:
            fail("oracle.offset_stop", "need 0 <= offset_start <= offset_stop < extent")
        if self.mzi.L < abs(self.mzi.arm_a2_spp_order) + 1:
            fail("mzi.L", "must be >= |arm_a2_spp_order| + 1")
        if not 0 <= self.seed < 2 ** 64:
            fail("seed", "must be an unsigned 64-bit integer")
        eo = self.sweep.eraser_offset
        if isinstance(eo, str) and eo != AUTO:
            fail("sweep.eraser_offset", f"must be a number or {AUTO!r}")
        if not 0 <= self.sweep.crosstalk_epsilon < 1:
            fail("sweep.crosstalk_epsilon", "must lie in [0, 1)")
        try:
            self.grid()
            self.counting_config()
            for name in ("which_path_l0", "erased_ideal"):
                self.sweep_config(name)
        except OamSimError as exc:
            raise ConfigError(str(exc)) from exc
        return self


def default_config_yaml() -> str:
    return yaml.safe_dump(asdict(ExperimentConfig()), sort_keys=False)


def _coerce(path, value, default, line):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        if ok:
            value = float(value)
    elif isinstance(default, str):
        # eraser_offset accepts a number as well as "auto"
        ok = isinstance(value, str) or (path == "sweep.eraser_offset"
                                        and isinstance(value, (int, float))
                                        and not isinstance(value, bool))
        if ok and not isinstance(value, str):
            value = float(value)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{path}: expected {type(default).__name__}, got {value!r}", line)
    return value


def _node_to_python(node):
    return yaml.safe_load(yaml.serialize(node))


def _build(cls, node, prefix, lines):
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{prefix or 'config'}: expected a mapping", node.start_mark.line + 1)
    defaults = cls()
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key_node, val_node in node.value:
        key = key_node.value
        path = f"{prefix}.{key}" if prefix else key
        line = key_node.start_mark.line + 1
        lines[path] = line
        if key not in known:
            raise ConfigError(f"unknown key {path!r}", line)
        if key in kwargs:
            raise ConfigError(f"duplicate key {path!r}", line)
        default = getattr(defaults, key)
        if is_dataclass(default):
            kwargs[key] = _build(type(default), val_node, path, lines)
        else:
            kwargs[key] = _coerce(path, _node_to_python(val_node), default, line)
    return cls(**kwargs)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML config; unknown keys raise :class:`ConfigError`."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from exc
    if root is None:
        return ExperimentConfig().validate()
    lines: dict[str, int] = {}
    cfg = _build(ExperimentConfig, root, "", lines)
    return cfg.validate(lines)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)

