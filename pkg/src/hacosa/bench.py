"""Seeded multi-run experiments, aggregation, and table/CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .aco import ENGINES, SolverParams, run_engine
from .instance import Instance, fig4_fixture, load_tsplib
from .report import RunReport

log = logging.getLogger(__name__)

BUDGETS = ("equal-tours", "fixed-iterations", "fixed-time")
FORMATS = ("table", "csv", "json")
RUN_COLUMNS = ("engine", "instance", "seed", "best_length", "wall_time_s")
AGGREGATE_COLUMNS = (
    "engine", "instance", "runs", "mean_cost", "mean_time_s", "best", "worst", "std_cost",
)
OUTPUT_DIR_ENV = "HACOSA_OUT"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    instances: list[str]
    engines: list[str]
    runs: int = 30
    seed_base: int = 0
    budget: str = "equal-tours"
    tours: int = 2500
    time_limit: float = 10.0
    workers: int = 1
    # engine name (or "*" for every engine) -> {parameter: raw value}
    overrides: dict[str, dict[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if not self.instances:
            raise ConfigError("at least one instance is required")
        if not self.engines:
            raise ConfigError("at least one engine is required")
        for e in self.engines:
            if e not in ENGINES:
                raise ConfigError(f"unknown engine {e!r}; choose from {', '.join(ENGINES)}")
        if self.budget not in BUDGETS:
            raise ConfigError(f"unknown budget policy {self.budget!r}; choose from {', '.join(BUDGETS)}")

    def params_for(self, engine: str, seed: int) -> SolverParams:
        p = SolverParams.defaults(engine, seed=seed)
        try:
            p = p.with_overrides({**self.overrides.get("*", {}), **self.overrides.get(engine, {})})
        except ValueError as exc:
            raise ConfigError(f"{engine}: {exc}") from None
        if self.budget == "equal-tours":
            if engine == "HACO-SA":
                iterations = (self.tours - p.population) // p.m
            else:
                iterations = self.tours // p.m
            p = p.replace(iterations=max(1, iterations), stall=None, time_limit=None)
        elif self.budget == "fixed-time":
            p = p.replace(iterations=10**9, stall=None, time_limit=self.time_limit)
        return p


_INT_KEYS = {"runs", "seed_base", "tours", "workers"}


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Read the flat ``key = value`` experiment format.

    ``param.NAME = v`` sets a solver parameter for every engine and
    ``param.ENGINE.NAME = v`` for one engine. Relative instance paths are
    resolved against ``base_dir``.
    """
    values: dict = {}
    overrides: dict[str, dict[str, str]] = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key.startswith("param."):
            parts = key.split(".")
            if len(parts) == 2:
                overrides.setdefault("*", {})[parts[1]] = value
            elif len(parts) == 3:
                overrides.setdefault(parts[1], {})[parts[2]] = value
            else:
                raise ConfigError(f"line {line_no}: bad parameter key {key!r}")
        elif key in ("instances", "engines"):
            values[key] = [v.strip() for v in value.split(",") if v.strip()]
        elif key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(f"line {line_no}: {key} must be an integer") from None
        elif key == "time_limit":
            values[key] = float(value)
        elif key == "budget":
            values[key] = value
        else:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
    if base_dir is not None and "instances" in values:
        values["instances"] = [
            v if v == "fig4" or Path(v).is_absolute() else str(base_dir / v)
            for v in values["instances"]
        ]
    for key in ("instances", "engines"):
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    return ExperimentConfig(overrides=overrides, **values)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


def load_instance(spec: str) -> Instance:
    """A TSPLIB path, or ``fig4`` for the built-in 8-city example."""
    if spec == "fig4":
        return fig4_fixture()
    return load_tsplib(spec)


def warm_up(engines) -> None:
    """Compile the numba kernels so that no run's wall time includes JIT work."""
    inst = fig4_fixture()
    for e in engines:
        run_engine(inst, SolverParams.defaults(e, iterations=2, population=4))


_worker_instances: dict[str, Instance] = {}


def _run_task(task) -> RunReport:
    spec, engine, params = task
    inst = _worker_instances.get(spec)
    if inst is None:
        inst = _worker_instances[spec] = load_instance(spec)
        warm_up([engine])
    return run_engine(inst, params)


def run_experiment(config: ExperimentConfig, progress=None) -> list[RunReport]:
    """Every (instance, engine, run) cell; run r of any cell uses seed seed_base + r."""
    instances = {}
    for spec in config.instances:
        try:
            instances[spec] = load_instance(spec)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load instance {spec}: {exc}") from None
    tasks = [
        (spec, engine, config.params_for(engine, config.seed_base + r))
        for spec in config.instances
        for engine in config.engines
        for r in range(config.runs)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            reports = []
            for rep in pool.map(_run_task, tasks):
                reports.append(rep)
                if progress:
                    progress(rep)
        return reports

    warm_up(config.engines)
    reports = []
    for spec, engine, params in tasks:
        rep = run_engine(instances[spec], params)
        log.info("%s %s seed=%d best=%d %.3fs", rep.instance, engine, rep.seed,
                 rep.best_length, rep.wall_time)
        reports.append(rep)
        if progress:
            progress(rep)
    return reports


@dataclass
class Aggregate:
    engine: str
    instance: str
    runs: int
    mean_cost: float
    mean_time_s: float
    best: int
    worst: int
    std_cost: float


def aggregate(reports: list[RunReport]) -> list[Aggregate]:
    """Per (engine, instance) statistics, in order of first appearance."""
    if not reports:
        raise ValueError("nothing to aggregate")
    cells: dict[tuple[str, str], list[RunReport]] = {}
    for r in reports:
        cells.setdefault((r.engine, r.instance), []).append(r)
    out = []
    for (engine, instance), rs in cells.items():
        lengths = [r.best_length for r in rs]
        out.append(Aggregate(
            engine=engine,
            instance=instance,
            runs=len(rs),
            mean_cost=sum(lengths) / len(lengths),
            mean_time_s=sum(r.wall_time for r in rs) / len(rs),
            best=min(lengths),
            worst=max(lengths),
            std_cost=statistics.stdev(lengths) if len(lengths) > 1 else 0.0,
        ))
    return out


JSON_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["aggregates", "runs"],
    "properties": {
        "aggregates": {
            "type": "array",
            "items": {
                "type": "object",
                "required": list(AGGREGATE_COLUMNS),
                "properties": {
                    "engine": {"type": "string"},
                    "instance": {"type": "string"},
                    "runs": {"type": "integer", "minimum": 1},
                    "mean_cost": {"type": "number"},
                    "mean_time_s": {"type": "number", "minimum": 0},
                    "best": {"type": "integer"},
                    "worst": {"type": "integer"},
                    "std_cost": {"type": "number", "minimum": 0},
                },
            },
        },
        "runs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": list(RUN_COLUMNS),
                "properties": {
                    "engine": {"type": "string"},
                    "instance": {"type": "string"},
                    "seed": {"type": "integer"},
                    "best_length": {"type": "integer"},
                    "wall_time_s": {"type": "number", "minimum": 0},
                    "iterations": {"type": "integer"},
                    "tours_built": {"type": "integer"},
                    "best_tour": {"type": "array", "items": {"type": "integer"}},
                    "trace": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "integer"},
                                  "minItems": 2, "maxItems": 2},
                    },
                },
            },
        },
    },
}


def _table(aggs: list[Aggregate], title: str, attr: str, fmt: str) -> list[str]:
    engines = list(dict.fromkeys(a.engine for a in aggs))
    instances = list(dict.fromkeys(a.instance for a in aggs))
    cell = {(a.instance, a.engine): getattr(a, attr) for a in aggs}
    rows = [[title] + engines]
    for inst in instances:
        rows.append([inst] + [
            fmt.format(cell[(inst, e)]) if (inst, e) in cell else "-" for e in engines
        ])
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return [
        "  ".join(v.ljust(w) if c == 0 else v.rjust(w) for c, (v, w) in enumerate(zip(r, widths)))
        for r in rows
    ]


def render(aggs: list[Aggregate], fmt: str, reports: list[RunReport] | None = None) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    if fmt == "table":
        lines = _table(aggs, "Average cost", "mean_cost", "{:.2f}")
        lines.append("")
        lines += _table(aggs, "Average time (s)", "mean_time_s", "{:.3f}")
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for a in aggs:
            w.writerow([a.engine, a.instance, a.runs, repr(a.mean_cost), repr(a.mean_time_s),
                        a.best, a.worst, repr(a.std_cost)])
        return buf.getvalue()
    doc = {
        "aggregates": [asdict(a) for a in aggs],
        "runs": [_run_record(r) for r in (reports or [])],
    }
    return json.dumps(doc, indent=2) + "\n"


def _run_record(r: RunReport) -> dict:
    return {
        "engine": r.engine,
        "instance": r.instance,
        "seed": r.seed,
        "best_length": r.best_length,
        "wall_time_s": r.wall_time,
        "iterations": r.iterations,
        "tours_built": r.tours_built,
        "best_tour": list(r.best_order),
        "trace": [list(p) for p in r.trace],
    }


def render_runs_csv(reports: list[RunReport], with_time: bool = True) -> str:
    """One row per run; ``with_time=False`` drops the only non-deterministic column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = RUN_COLUMNS if with_time else RUN_COLUMNS[:-1]
    w.writerow(cols)
    for r in reports:
        row = [r.engine, r.instance, r.seed, r.best_length]
        if with_time:
            row.append(f"{r.wall_time:.3f}")
        w.writerow(row)
    return buf.getvalue()


def write_outputs(out_dir: str | Path, aggs: list[Aggregate], reports: list[RunReport]) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "runs.csv": render_runs_csv(reports),
        "summary.csv": render(aggs, "csv"),
        "summary.json": render(aggs, "json", reports),
        "summary.txt": render(aggs, "table"),
    }
    paths = []
    for name, text in files.items():
        p = out / name
        p.write_text(text)
        paths.append(p)
    return paths
