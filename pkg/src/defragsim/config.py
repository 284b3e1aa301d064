"""Experiment configuration: YAML ingestion with strict validation.

The file mirrors the module configs: a topology block, a trace block
(load levels, job counts, seeds, model menu), the algorithm list, the
controller block, and an output directory. Unknown keys anywhere are
rejected so typos fail loudly instead of silently running defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .topology import ClusterTopology, make_two_tier
from .workload import DEFAULT_TEMPLATES, ModelTemplate, TraceConfig


class ConfigError(ValueError):
    """Invalid or malformed experiment configuration."""


def _require_keys(block: dict, allowed: set[str], context: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {context}: {', '.join(sorted(unknown))}")


def _get(block: dict, key: str, kind, default, context: str):
    value = block.get(key, default)
    if value is None:
        return None
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(
            f"{context}.{key} must be {kind.__name__}, got {value!r}")
    return value


@dataclass
class TopologyBlock:
    racks: int = 4
    hosts_per_rack: int = 4
    gpus_per_host: int = 8
    uplinks_per_tor: int = 4
    nic_bandwidth_gbps: float = 400.0
    uplink_bandwidth_gbps: float = 400.0
    spines: int | None = None  # default: one spine per uplink

    def build(self) -> ClusterTopology:
        return make_two_tier(
            racks=self.racks, hosts_per_rack=self.hosts_per_rack,
            gpus_per_host=self.gpus_per_host, uplinks=self.uplinks_per_tor,
            nic_bw=self.nic_bandwidth_gbps * 1e9,
            uplink_bw=self.uplink_bandwidth_gbps * 1e9,
            spines=self.spines or self.uplinks_per_tor)


@dataclass
class TraceBlock:
    loads: list[float] = field(default_factory=lambda: [0.9])
    num_jobs: int = 100
    base_seed: int = 0
    num_seeds: int = 1
    templates: list[str] | None = None  # names from the default menu
    min_workers: int = 8
    max_workers: int = 256
    pp_choices: list[int] = field(default_factory=lambda: [1, 2, 4])
    size_choices: list[int] | None = None
    iterations_min: int = 20
    iterations_max: int = 60

    def menu(self) -> tuple[ModelTemplate, ...]:
        if self.templates is None:
            return DEFAULT_TEMPLATES
        by_name = {t.name: t for t in DEFAULT_TEMPLATES}
        missing = [n for n in self.templates if n not in by_name]
        if missing:
            raise ConfigError(
                f"unknown model template(s): {', '.join(missing)}; "
                f"available: {', '.join(sorted(by_name))}")
        return tuple(by_name[n] for n in self.templates)

    def trace_config(self) -> TraceConfig:
        return TraceConfig(
            templates=self.menu(),
            min_workers=self.min_workers,
            max_workers=self.max_workers,
            pp_choices=tuple(self.pp_choices),
            iterations_min=self.iterations_min,
            iterations_max=self.iterations_max,
            size_choices=(tuple(self.size_choices)
                          if self.size_choices is not None else None))


@dataclass
class ControllerBlock:
    threshold: float | None = None  # default: uplinks per ToR
    solver_time_limit: float = 10.0
    max_moves: int | None = 16  # None lifts the migration batch cap


@dataclass
class SweepBlock:
    load: list[float] = field(default_factory=list)
    oversubscription: list[float] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)

    def axis_values(self, axis: str) -> list[float]:
        values = getattr(self, axis, None)
        if values is None:
            raise ConfigError(f"unknown sweep axis {axis!r}; "
                              "expected load, oversubscription or threshold")
        if not values:
            raise ConfigError(f"sweep axis {axis!r} has no values listed "
                              "in the config")
        return values


@dataclass
class ExperimentConfig:
    topology: TopologyBlock = field(default_factory=TopologyBlock)
    trace: TraceBlock = field(default_factory=TraceBlock)
    algorithms: list[str] = field(
        default_factory=lambda: ["defrag-perfect", "perfect", "sglb",
                                 "crux", "ecmp"])
    controller: ControllerBlock = field(default_factory=ControllerBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    output_dir: str = "results"


_TOPOLOGY_KEYS = {"racks", "hosts_per_rack", "gpus_per_host",
                  "uplinks_per_tor", "nic_bandwidth_gbps",
                  "uplink_bandwidth_gbps", "spines"}
_TRACE_KEYS = {"loads", "num_jobs", "base_seed", "num_seeds", "templates",
               "min_workers", "max_workers", "pp_choices", "size_choices",
               "iterations_min", "iterations_max"}
_CONTROLLER_KEYS = {"threshold", "solver_time_limit", "max_moves"}
_SWEEP_KEYS = {"load", "oversubscription", "threshold"}
_TOP_KEYS = {"topology", "trace", "algorithms", "controller", "sweep",
             "output_dir"}


def _number_list(block: dict, key: str, context: str,
                 default: list | None) -> list | None:
    values = block.get(key, default)
    if values is None:
        return None
    if (not isinstance(values, list)
            or not all(isinstance(v, (int, float)) for v in values)):
        raise ConfigError(f"{context}.{key} must be a list of numbers")
    return values


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a parsed YAML mapping into an ExperimentConfig."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    _require_keys(data, _TOP_KEYS, "config")

    topo_block = data.get("topology", {}) or {}
    _require_keys(topo_block, _TOPOLOGY_KEYS, "topology")
    topology = TopologyBlock(
        racks=_get(topo_block, "racks", int, 4, "topology"),
        hosts_per_rack=_get(topo_block, "hosts_per_rack", int, 4,
                            "topology"),
        gpus_per_host=_get(topo_block, "gpus_per_host", int, 8, "topology"),
        uplinks_per_tor=_get(topo_block, "uplinks_per_tor", int, 4,
                             "topology"),
        nic_bandwidth_gbps=_get(topo_block, "nic_bandwidth_gbps", float,
                                400.0, "topology"),
        uplink_bandwidth_gbps=_get(topo_block, "uplink_bandwidth_gbps",
                                   float, 400.0, "topology"),
        spines=_get(topo_block, "spines", int, None, "topology"))

    trace_block = data.get("trace", {}) or {}
    _require_keys(trace_block, _TRACE_KEYS, "trace")
    templates = trace_block.get("templates")
    if templates is not None and (
            not isinstance(templates, list)
            or not all(isinstance(t, str) for t in templates)):
        raise ConfigError("trace.templates must be a list of names")
    trace = TraceBlock(
        loads=_number_list(trace_block, "loads", "trace", [0.9]),
        num_jobs=_get(trace_block, "num_jobs", int, 100, "trace"),
        base_seed=_get(trace_block, "base_seed", int, 0, "trace"),
        num_seeds=_get(trace_block, "num_seeds", int, 1, "trace"),
        templates=templates,
        min_workers=_get(trace_block, "min_workers", int, 8, "trace"),
        max_workers=_get(trace_block, "max_workers", int, 256, "trace"),
        pp_choices=_number_list(trace_block, "pp_choices", "trace",
                                [1, 2, 4]),
        size_choices=_number_list(trace_block, "size_choices", "trace",
                                  None),
        iterations_min=_get(trace_block, "iterations_min", int, 20,
                            "trace"),
        iterations_max=_get(trace_block, "iterations_max", int, 60,
                            "trace"))
    if not trace.loads:
        raise ConfigError("trace.loads must list at least one load level")
    if trace.num_seeds < 1:
        raise ConfigError("trace.num_seeds must be at least 1")
    trace.menu()  # fail fast on unknown template names

    ctl_block = data.get("controller", {}) or {}
    _require_keys(ctl_block, _CONTROLLER_KEYS, "controller")
    controller = ControllerBlock(
        threshold=_get(ctl_block, "threshold", float, None, "controller"),
        solver_time_limit=_get(ctl_block, "solver_time_limit", float, 10.0,
                               "controller"),
        max_moves=(_get(ctl_block, "max_moves", int, 16, "controller")
                   if ctl_block.get("max_moves", 16) is not None else None))

    sweep_block = data.get("sweep", {}) or {}
    _require_keys(sweep_block, _SWEEP_KEYS, "sweep")
    sweep = SweepBlock(
        load=_number_list(sweep_block, "load", "sweep", []),
        oversubscription=_number_list(sweep_block, "oversubscription",
                                      "sweep", []),
        threshold=_number_list(sweep_block, "threshold", "sweep", []))

    algorithms = data.get("algorithms",
                          ["defrag-perfect", "perfect", "sglb", "crux",
                           "ecmp"])
    if (not isinstance(algorithms, list) or not algorithms
            or not all(isinstance(a, str) for a in algorithms)):
        raise ConfigError("algorithms must be a non-empty list of names")
    from .simulate import ALGORITHMS
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise ConfigError(
            f"unknown algorithm(s): {', '.join(unknown)}; "
            f"available: {', '.join(ALGORITHMS)}")

    output_dir = _get(data, "output_dir", str, "results", "config")

    config = ExperimentConfig(topology=topology, trace=trace,
                              algorithms=list(algorithms),
                              controller=controller, sweep=sweep,
                              output_dir=output_dir)
    config.topology.build()  # fail fast on impossible topologies
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a YAML experiment config file."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if data is None:
        data = {}
    try:
        return parse_config(data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc
