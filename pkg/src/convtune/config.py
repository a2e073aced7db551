"""Strict TOML run configuration with full-default echo.

Unknown keys are fatal: a silently ignored typo in a parameter name would
invalidate an experiment.  Every resolved value, defaults included, is
echoed into the emitted reports so a run's plant is never unrecoverable.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .fuzzy import FuzzyConfig, PIDGains
from .loop import LoopConfig, WeightVector
from .optimizers import AcorConfig, IcaConfig, PsoConfig
from .power_stage import (
    ConverterParams,
    InputStep,
    LoadScale,
    OutputSpec,
    derive_default_params,
)
from .scenarios import Scenario, named_scenarios


class ConfigError(ValueError):
    """Malformed, unknown or invalid configuration content."""


_DEFAULT_PARAMS = derive_default_params()


@dataclass(frozen=True)
class PlantConfig:
    v_in: float = _DEFAULT_PARAMS.v_in_nominal
    v_in_min: float = _DEFAULT_PARAMS.v_in_min
    v_in_max: float = _DEFAULT_PARAMS.v_in_max
    f_sw: float = _DEFAULT_PARAMS.f_sw
    n1: float = _DEFAULT_PARAMS.outputs[0].turns_ratio
    n2: float = _DEFAULT_PARAMS.outputs[1].turns_ratio
    n3: float = _DEFAULT_PARAMS.outputs[2].turns_ratio
    l1: float = _DEFAULT_PARAMS.l[0]
    l2: float = _DEFAULT_PARAMS.l[1]
    l3: float = _DEFAULT_PARAMS.l[2]
    c1: float = _DEFAULT_PARAMS.c[0]
    c2: float = _DEFAULT_PARAMS.c[1]
    c3: float = _DEFAULT_PARAMS.c[2]
    r_c1: float = _DEFAULT_PARAMS.r_c[0]
    r_c2: float = _DEFAULT_PARAMS.r_c[1]
    r_c3: float = _DEFAULT_PARAMS.r_c[2]
    r_series1: float = _DEFAULT_PARAMS.r_series[0]
    r_series2: float = _DEFAULT_PARAMS.r_series[1]
    r_series3: float = _DEFAULT_PARAMS.r_series[2]
    r_d: float = _DEFAULT_PARAMS.r_d
    r_primary: float = _DEFAULT_PARAMS.r_primary

    def to_params(self) -> ConverterParams:
        outs = (
            OutputSpec.from_ratings(5.0, 50.0, self.n1),
            OutputSpec.from_ratings(15.0, 45.0, self.n2),
            OutputSpec.from_ratings(-15.0, 15.0, self.n3),
        )
        return ConverterParams(
            v_in_nominal=self.v_in, v_in_min=self.v_in_min, v_in_max=self.v_in_max,
            f_sw=self.f_sw, outputs=outs,
            l=(self.l1, self.l2, self.l3), c=(self.c1, self.c2, self.c3),
            r_c=(self.r_c1, self.r_c2, self.r_c3),
            r_series=(self.r_series1, self.r_series2, self.r_series3),
            r_d=self.r_d, r_primary=self.r_primary)


@dataclass(frozen=True)
class ControllerConfig:
    kind: str = "fuzzy"
    fuzzy: FuzzyConfig = field(default_factory=FuzzyConfig)
    pid: PIDGains = field(default_factory=PIDGains)

    def build(self):
        return self.fuzzy if self.kind == "fuzzy" else self.pid


@dataclass(frozen=True)
class OptimizerConfig:
    algo: str = "ica"
    workers: int = 0
    pso: PsoConfig = field(default_factory=PsoConfig)
    ica: IcaConfig = field(default_factory=IcaConfig)
    aco: AcorConfig = field(default_factory=AcorConfig)

    def build(self):
        return {"pso": self.pso, "ica": self.ica, "aco": self.aco}[self.algo]


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out_dir: str | None = None
    formats: tuple[str, ...] = ("csv", "json", "svg")
    plant: PlantConfig = field(default_factory=PlantConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    loop: LoopConfig = field(default_factory=LoopConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    scenario_names: tuple[str, ...] = ("load5_half", "load15_up20", "vin_30to35")
    custom_scenarios: tuple[Scenario, ...] = ()
    weights: tuple[float, float, float] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    methods: tuple[str, ...] = ("ica", "constant")
    bench_functions: tuple[str, ...] = ("sphere", "rosenbrock")

    def scenarios(self) -> list[Scenario]:
        known = named_scenarios()
        for sc in self.custom_scenarios:
            known[sc.name] = sc
        missing = [n for n in self.scenario_names if n not in known]
        if missing:
            raise ConfigError(f"unknown scenario name(s): {', '.join(missing)}; "
                              f"known: {', '.join(sorted(known))}")
        return [known[n] for n in self.scenario_names]

    def weight_vector(self) -> WeightVector:
        return WeightVector.normalized(self.weights)

    def resolve_out_dir(self) -> str:
        return self.out_dir or os.environ.get("CONVTUNE_OUT", "out")

    def to_dict(self) -> dict:
        d = asdict(self)
        # the output directory is where results land, not what they are
        d.pop("out_dir")
        d["controller"]["fuzzy"].pop("membership")
        d["controller"]["fuzzy"].pop("rules")
        d["custom_scenarios"] = [
            {"name": sc.name, "v_in": sc.v_in_initial, "duration": sc.duration,
             "window": sc.window, "snapshots": list(sc.snapshot_times),
             "events": [_event_dict(ev) for ev in sc.events]}
            for sc in self.custom_scenarios]
        return d


def _event_dict(ev) -> dict:
    if isinstance(ev, LoadScale):
        return {"t": ev.t_event, "kind": "load_scale",
                "output": ev.output_index, "factor": ev.factor}
    return {"t": ev.t_event, "kind": "input_step", "v_in": ev.new_v_in}


def _take(section: dict, path: str, known: set[str]) -> None:
    unknown = set(section) - known
    if unknown:
        where = path or "top level"
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}; "
                          f"allowed: {', '.join(sorted(known))}")


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def _integer(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return value


def _string(value, key: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{key} must be a string, got {value!r}")
    return value


def _dataclass_section(cls_default, section: dict, path: str,
                       int_fields: frozenset[str] = frozenset()):
    """Fill the scalar fields of a dataclass from a TOML table, strictly."""
    known = {f.name for f in fields(cls_default)
             if isinstance(getattr(cls_default, f.name), (int, float, str))}
    _take(section, path, known)
    kwargs = {}
    for key, value in section.items():
        if key in int_fields:
            kwargs[key] = _integer(value, f"{path}.{key}")
        elif isinstance(getattr(cls_default, key), str):
            kwargs[key] = _string(value, f"{path}.{key}")
        else:
            kwargs[key] = _number(value, f"{path}.{key}")
    try:
        return replace(cls_default, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid {path} section: {exc}") from exc


def _parse_event(d: dict, path: str):
    _take(d, path, {"t", "kind", "output", "factor", "v_in"})
    kind = _string(d.get("kind", ""), f"{path}.kind")
    t = _number(d.get("t", 0.0), f"{path}.t")
    if kind == "load_scale":
        return LoadScale(t, output_index=_integer(d["output"], f"{path}.output"),
                         factor=_number(d["factor"], f"{path}.factor"))
    if kind == "input_step":
        return InputStep(t, new_v_in=_number(d["v_in"], f"{path}.v_in"))
    raise ConfigError(f"{path}.kind must be 'load_scale' or 'input_step', got {kind!r}")


def _parse_custom_scenario(d: dict, path: str) -> Scenario:
    _take(d, path, {"name", "v_in", "duration", "window", "snapshots", "events"})
    try:
        return Scenario(
            name=_string(d["name"], f"{path}.name"),
            v_in_initial=_number(d["v_in"], f"{path}.v_in"),
            events=tuple(_parse_event(ev, f"{path}.events[{i}]")
                         for i, ev in enumerate(d.get("events", []))),
            snapshot_times=tuple(_number(x, f"{path}.snapshots")
                                 for x in d.get("snapshots", (6e-3, 16e-3))),
            window=_number(d.get("window", 2e-3), f"{path}.window"),
            duration=_number(d.get("duration", 20e-3), f"{path}.duration"))
    except KeyError as exc:
        raise ConfigError(f"{path} is missing required key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid scenario in {path}: {exc}") from exc


def _string_tuple(value, key: str, allowed: set[str] | None = None) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ConfigError(f"{key} must be a list of strings")
    if allowed is not None:
        bad = [x for x in value if x not in allowed]
        if bad:
            raise ConfigError(f"{key} contains unknown entry {bad[0]!r}; "
                              f"allowed: {', '.join(sorted(allowed))}")
    return tuple(value)


def load_config(text: str) -> RunConfig:
    """Parse and validate configuration text into a resolved RunConfig."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    _take(raw, "", {"seed", "out_dir", "formats", "plant", "controller", "loop",
                    "optimizer", "scenario", "weights", "methods", "bench"})
    cfg = RunConfig()
    if "seed" in raw:
        seed = _integer(raw["seed"], "seed")
        if seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg = replace(cfg, seed=seed)
    if "out_dir" in raw:
        cfg = replace(cfg, out_dir=_string(raw["out_dir"], "out_dir"))
    if "formats" in raw:
        cfg = replace(cfg, formats=_string_tuple(raw["formats"], "formats",
                                                 {"csv", "json", "svg"}))
    if "plant" in raw:
        cfg = replace(cfg, plant=_dataclass_section(cfg.plant, raw["plant"], "plant"))
    if "controller" in raw:
        sec = dict(raw["controller"])
        _take(sec, "controller", {"kind", "fuzzy", "pid"})
        ctl = cfg.controller
        if "kind" in sec:
            kind = _string(sec["kind"], "controller.kind")
            if kind not in ("fuzzy", "pid"):
                raise ConfigError("controller.kind must be 'fuzzy' or 'pid'")
            ctl = replace(ctl, kind=kind)
        if "fuzzy" in sec:
            ctl = replace(ctl, fuzzy=_dataclass_section(ctl.fuzzy, sec["fuzzy"],
                                                        "controller.fuzzy"))
        if "pid" in sec:
            ctl = replace(ctl, pid=_dataclass_section(ctl.pid, sec["pid"],
                                                      "controller.pid"))
        cfg = replace(cfg, controller=ctl)
    if "loop" in raw:
        cfg = replace(cfg, loop=_dataclass_section(
            cfg.loop, raw["loop"], "loop", int_fields=frozenset({"sample_stride"})))
    if "optimizer" in raw:
        sec = dict(raw["optimizer"])
        _take(sec, "optimizer", {"algo", "workers", "pso", "ica", "aco"})
        opt = cfg.optimizer
        if "algo" in sec:
            algo = _string(sec["algo"], "optimizer.algo")
            if algo not in ("pso", "ica", "aco"):
                raise ConfigError("optimizer.algo must be one of: aco, ica, pso")
            opt = replace(opt, algo=algo)
        if "workers" in sec:
            opt = replace(opt, workers=_integer(sec["workers"], "optimizer.workers"))
        ints = {
            "pso": frozenset({"pop_size", "max_iter", "seed"}),
            "ica": frozenset({"n_colonies", "n_imperialists", "max_iter", "seed"}),
            "aco": frozenset({"archive_size", "n_ants", "max_iter", "seed"}),
        }
        for name in ("pso", "ica", "aco"):
            if name in sec:
                opt = replace(opt, **{name: _dataclass_section(
                    getattr(opt, name), sec[name], f"optimizer.{name}",
                    int_fields=ints[name])})
        cfg = replace(cfg, optimizer=opt)
    if "scenario" in raw:
        sec = dict(raw["scenario"])
        _take(sec, "scenario", {"names", "custom"})
        if "custom" in sec:
            if not isinstance(sec["custom"], list):
                raise ConfigError("scenario.custom must be an array of tables")
            cfg = replace(cfg, custom_scenarios=tuple(
                _parse_custom_scenario(d, f"scenario.custom[{i}]")
                for i, d in enumerate(sec["custom"])))
        if "names" in sec:
            cfg = replace(cfg, scenario_names=_string_tuple(sec["names"],
                                                            "scenario.names"))
    if "weights" in raw:
        sec = dict(raw["weights"])
        _take(sec, "weights", {"k"})
        k = sec.get("k")
        if not isinstance(k, list) or len(k) != 3:
            raise ConfigError("weights.k must be a list of three numbers")
        cfg = replace(cfg, weights=tuple(_number(x, "weights.k") for x in k))
    if "methods" in raw:
        cfg = replace(cfg, methods=_string_tuple(
            raw["methods"], "methods", {"pso", "ica", "aco", "constant"}))
    if "bench" in raw:
        sec = dict(raw["bench"])
        _take(sec, "bench", {"functions"})
        if "functions" in sec:
            cfg = replace(cfg, bench_functions=_string_tuple(
                sec["functions"], "bench.functions", {"sphere", "rosenbrock"}))
    cfg.scenarios()        # fail fast on dangling scenario names
    cfg.weight_vector()    # and on invalid weights
    return cfg


def parse_config(path) -> RunConfig:
    """Load a RunConfig from a TOML file (missing file -> ConfigError)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return load_config(text)
