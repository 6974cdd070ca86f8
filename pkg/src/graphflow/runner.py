"""Batch experiments: Cartesian expansion, replicated runs, CSV/JSON output.

Config files are INI documents. ``[experiment]`` holds ``task``,
``epochs``, ``master_seed``, ``outputs`` and optionally ``eval_runs``;
every other section is one list entry whose kind is the prefix of its
name (``graph.*``, ``diffusion.*``, ``seed.*``, ``method.*``). Entries
keep their file order. See the README for a full example.
"""

import configparser
import csv
import inspect
import json
import math
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Tuple, Union

import numpy as np

from ._rng import child_seed
from .diffusion import DiffusionConfig, Trace, expected_spread, simulate
from .exceptions import ConfigurationError, GraphflowError
from .graph import GraphGenSpec, generate, read_graph
from .ibm import IBM_METHODS, apply_block, blocking_effect, greedy_block, proxy_block
from .im import IM_METHODS, PROXIES, celf_im, greedy_im, proxy_im, ris_im, solve_im
from .seeding import SEED_STRATEGIES, select_seeds
from .sl import SL_METHODS, locate, plant_cascade, source_distance

TASKS = ("im", "ibm", "sl")
OUTPUTS = ("csv", "trace_json", "summary")
METRICS = {"im": "IE", "ibm": "blocked", "sl": "distance"}
TASK_METHODS = {"im": IM_METHODS, "ibm": IBM_METHODS, "sl": SL_METHODS}
EVAL_RUNS = 1000
CSV_HEADER = (
    "run_index", "graph", "diffusion", "seed_strategy", "method",
    "budget", "epochs", "metric", "mean", "std", "runtime_seconds",
)

# Spawn-key tags keep the stream families apart.
_GRAPH_KEY, _INSTANCE_KEY, _METHOD_KEY = 0, 1, 2


@dataclass(frozen=True)
class GraphFile:
    path: str
    directed: bool = False

    @property
    def label(self):
        return os.path.basename(self.path)


@dataclass(frozen=True)
class SeedStrategy:
    """A seed-selection strategy and its budget (source count for SL)."""

    name: str
    budget: int

    def __post_init__(self):
        if self.name not in SEED_STRATEGIES:
            raise ConfigurationError(f"unknown seed strategy {self.name!r}; expected one of {SEED_STRATEGIES}")
        if isinstance(self.budget, bool) or not isinstance(self.budget, (int, np.integer)) or self.budget < 1:
            raise ConfigurationError(f"seed budget must be a positive integer, got {self.budget!r}")

    @property
    def label(self):
        return f"{self.name}(k={self.budget})"


@dataclass(frozen=True)
class MethodSpec:
    name: str
    params: Tuple[Tuple[str, Any], ...] = ()

    @classmethod
    def of(cls, name, **params):
        return cls(name, tuple(sorted(params.items())))

    @property
    def kwargs(self):
        return dict(self.params)


@dataclass(frozen=True)
class ExperimentSpec:
    graphs: Tuple[Union[GraphGenSpec, GraphFile], ...]
    diffusions: Tuple[DiffusionConfig, ...]
    seed_strategies: Tuple[SeedStrategy, ...]
    methods: Tuple[MethodSpec, ...]
    task: str = "im"
    epochs: int = 10
    master_seed: int = 0
    outputs: Tuple[str, ...] = ("csv",)
    eval_runs: int = EVAL_RUNS

    def __post_init__(self):
        for name in ("graphs", "diffusions", "seed_strategies", "methods", "outputs"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for name in ("graphs", "diffusions", "seed_strategies", "methods"):
            if not getattr(self, name):
                raise ConfigurationError(f"experiment needs at least one entry in {name}")
        if self.task not in TASKS:
            raise ConfigurationError(f"unknown task {self.task!r}; expected one of {TASKS}")
        for flag in ("epochs", "eval_runs"):
            value = getattr(self, flag)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigurationError(f"{flag} must be a positive integer, got {value!r}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigurationError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        bad = set(self.outputs) - set(OUTPUTS)
        if bad:
            raise ConfigurationError(f"unknown output(s) {sorted(bad)}; expected a subset of {OUTPUTS}")
        for method in self.methods:
            _check_method(self.task, method)


@dataclass(frozen=True)
class RunDescriptor:
    run_index: int
    graph_index: int
    diffusion_index: int
    seed_index: int
    method_index: int


@dataclass(frozen=True)
class ResultRecord:
    run_index: int
    graph: str
    diffusion: str
    seed_strategy: str
    method: str
    budget: int
    epochs: int
    metric: str
    mean: float
    std: float
    runtime_seconds: float
    error: Optional[str] = field(default=None, compare=False)
    trace: Optional[Trace] = field(default=None, compare=False, repr=False)
    trace_graph: Any = field(default=None, compare=False, repr=False)

    @property
    def failed(self):
        return self.error is not None


# -- validation ------------------------------------------------------------

def _method_target(task, name):
    if task == "im":
        if name == "greedy":
            return greedy_im
        if name in ("celf", "celfpp"):
            return celf_im
        return ris_im if name == "ris" else proxy_im
    if task == "ibm":
        return greedy_block if name == "greedy" else proxy_block
    return None


def _check_method(task, method):
    allowed = TASK_METHODS[task]
    if method.name not in allowed:
        raise ConfigurationError(
            f"method {method.name!r} is not valid for task {task!r}; expected one of {allowed}"
        )
    params = set(method.kwargs)
    if task == "ibm":
        params.discard("budget")
    target = _method_target(task, method.name)
    accepted = set()
    if target is not None:
        fixed = {"graph", "config", "budget", "seeds", "proxy", "rng_seed", "lookahead", "oracle"}
        accepted = set(inspect.signature(target).parameters) - fixed
    unknown = params - accepted
    if unknown:
        raise ConfigurationError(f"method {method.name!r} does not accept parameter(s) {sorted(unknown)}")


def expand_spec(spec):
    """All (graph, diffusion, seed strategy, method) combinations in list order."""
    grid = np.ndindex(len(spec.graphs), len(spec.diffusions), len(spec.seed_strategies), len(spec.methods))
    return [RunDescriptor(i, *map(int, idx)) for i, idx in enumerate(grid)]


# -- config files ----------------------------------------------------------

def _parse_value(text):
    text = text.strip()
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _section_values(section):
    return {key: _parse_value(value) for key, value in section.items()}


def _build(cls, values, where):
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigurationError(f"[{where}]: {exc}") from None
    except ConfigurationError as exc:
        raise ConfigurationError(f"[{where}]: {exc}") from None


def parse_config(text, base_dir="."):
    parser = configparser.ConfigParser(
        interpolation=None, default_section="__defaults__", inline_comment_prefixes=("#", ";")
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None
    if not parser.has_section("experiment"):
        raise ConfigurationError("config needs an [experiment] section")
    exp = _section_values(parser["experiment"])
    graphs, diffusions, seeds, methods = [], [], [], []
    for name in parser.sections():
        if name == "experiment":
            continue
        kind, _, suffix = name.partition(".")
        values = _section_values(parser[name])
        if kind == "graph":
            if "path" in values:
                path = str(values.pop("path"))
                if not os.path.isabs(path):
                    path = os.path.join(base_dir, path)
                graphs.append(_build(GraphFile, dict(values, path=path), name))
            else:
                graphs.append(_build(GraphGenSpec, values, name))
        elif kind == "diffusion":
            diffusions.append(_build(DiffusionConfig, values, name))
        elif kind == "seed":
            values.setdefault("name", values.pop("strategy", suffix))
            seeds.append(_build(SeedStrategy, values, name))
        elif kind == "method":
            method_name = str(values.pop("name", suffix))
            methods.append(MethodSpec.of(method_name, **values))
        else:
            raise ConfigurationError(f"unknown section [{name}]")
    outputs = exp.pop("outputs", "csv")
    outputs = tuple(o.strip() for o in str(outputs).split(",") if o.strip())
    known = {"task", "epochs", "master_seed", "eval_runs"}
    extra = set(exp) - known
    if extra:
        raise ConfigurationError(f"[experiment]: unknown key(s) {sorted(extra)}")
    return ExperimentSpec(
        graphs=graphs, diffusions=diffusions, seed_strategies=seeds, methods=methods,
        outputs=outputs, **{k: exp[k] for k in known & set(exp)},
    )


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


# -- execution -------------------------------------------------------------

def materialize_graphs(spec):
    graphs = []
    for i, entry in enumerate(spec.graphs):
        if isinstance(entry, GraphFile):
            graphs.append(read_graph(entry.path, entry.directed))
        else:
            graphs.append(generate(entry, child_seed(spec.master_seed, _GRAPH_KEY, i)))
    return graphs


def _budget(spec, d):
    strategy = spec.seed_strategies[d.seed_index]
    if spec.task == "ibm":
        return int(spec.methods[d.method_index].kwargs.get("budget", strategy.budget))
    return strategy.budget


def _run_epoch(spec, graph, d, epoch, want_trace):
    """One replication. Returns (metric, method seconds, trace, trace graph)."""
    config = spec.diffusions[d.diffusion_index]
    strategy = spec.seed_strategies[d.seed_index]
    method = spec.methods[d.method_index]
    params = method.kwargs
    # Instance streams ignore the method so that methods are compared on
    # identical seeds, cascades and evaluation samples.
    inst = child_seed(spec.master_seed, _INSTANCE_KEY, d.graph_index, d.diffusion_index, d.seed_index, epoch)
    own = child_seed(spec.master_seed, _METHOD_KEY, d.run_index, epoch)
    trace = trace_graph = None

    if spec.task == "im":
        start = time.perf_counter()
        seeds = solve_im(method.name, graph, config, strategy.budget, rng_seed=own, **params).seeds
        elapsed = time.perf_counter() - start
        value = expected_spread(graph, config, seeds, spec.eval_runs, child_seed(inst, 1)).mean
        if want_trace:
            trace, trace_graph = simulate(graph, config, seeds, child_seed(inst, 2)), graph
    elif spec.task == "ibm":
        seeds = select_seeds(graph, strategy.name, strategy.budget, child_seed(inst, 0))
        budget = params.pop("budget", strategy.budget)
        start = time.perf_counter()
        if method.name in PROXIES:
            block = proxy_block(graph, method.name, seeds, budget, **params)
        else:
            block = greedy_block(graph, config, seeds, budget, rng_seed=own, **params)
        elapsed = time.perf_counter() - start
        value = blocking_effect(graph, config, seeds, block, spec.eval_runs, child_seed(inst, 1)).effect
        if want_trace:
            trace_graph = apply_block(graph, block)
            trace = simulate(trace_graph, config, seeds, child_seed(inst, 2))
    else:
        truth, obs = plant_cascade(graph, config, strategy.budget, inst, strategy.name)
        start = time.perf_counter()
        predicted = locate(method.name, graph, obs, strategy.budget).predicted
        elapsed = time.perf_counter() - start
        value = source_distance(graph, predicted, truth)
        if want_trace:
            trace, trace_graph = simulate(graph, config, truth, child_seed(inst, 1)), graph
    return float(value), elapsed, trace, trace_graph


_WORKER = {}


def _init_worker(spec, graphs):
    _WORKER["spec"] = spec
    _WORKER["graphs"] = graphs


def _task(args):
    d, epoch, want_trace = args
    spec, graphs = _WORKER["spec"], _WORKER["graphs"]
    try:
        return _run_epoch(spec, graphs[d.graph_index], d, epoch, want_trace) + (None,)
    except Exception as exc:  # a failed run must not sink the sweep
        reason = f"{type(exc).__name__}: {exc}"
        if not isinstance(exc, GraphflowError):
            reason += " | " + traceback.format_exc(limit=1).strip().splitlines()[-1]
        return (math.nan, 0.0, None, None, reason)


def _record(spec, d, results):
    strategy = spec.seed_strategies[d.seed_index]
    method = spec.methods[d.method_index]
    errors = [r[4] for r in results if r[4] is not None]
    values = np.array([r[0] for r in results])
    failed = bool(errors)
    return ResultRecord(
        run_index=d.run_index,
        graph=spec.graphs[d.graph_index].label,
        diffusion=spec.diffusions[d.diffusion_index].label,
        seed_strategy=strategy.name,
        method=method.name,
        budget=_budget(spec, d),
        epochs=spec.epochs,
        metric=METRICS[spec.task],
        mean=math.nan if failed else float(values.mean()),
        std=math.nan if failed else float(values.std()),
        runtime_seconds=float(np.mean([r[1] for r in results])),
        error=errors[0] if failed else None,
        trace=results[0][2],
        trace_graph=results[0][3],
    )


def run_experiments(spec, parallelism=1, graphs=None):
    """Execute every descriptor for ``spec.epochs`` replications.

    Replications run concurrently up to ``parallelism`` processes.
    Results land in an index-addressed buffer, so records (apart from
    ``runtime_seconds``) do not depend on scheduling. ``std`` is the
    population standard deviation over epochs.
    """
    if isinstance(parallelism, bool) or not isinstance(parallelism, (int, np.integer)) or parallelism < 1:
        raise ConfigurationError(f"parallelism must be a positive integer, got {parallelism!r}")
    descriptors = expand_spec(spec)
    graphs = materialize_graphs(spec) if graphs is None else list(graphs)
    want_trace = "trace_json" in spec.outputs
    jobs = [(d, e, want_trace and e == 0) for d in descriptors for e in range(spec.epochs)]
    if parallelism == 1:
        _init_worker(spec, graphs)
        flat = [_task(job) for job in jobs]
    else:
        with ProcessPoolExecutor(parallelism, initializer=_init_worker, initargs=(spec, graphs)) as pool:
            flat = list(pool.map(_task, jobs))
    buffer = [flat[i * spec.epochs:(i + 1) * spec.epochs] for i in range(len(descriptors))]
    return [_record(spec, d, buffer[d.run_index]) for d in descriptors]


# -- output ----------------------------------------------------------------

def _fmt(x):
    return f"{x:.6g}"


def write_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in sorted(records, key=lambda r: r.run_index):
            writer.writerow([
                r.run_index, r.graph, r.diffusion, r.seed_strategy, r.method, r.budget,
                r.epochs, r.metric, _fmt(r.mean), _fmt(r.std), _fmt(r.runtime_seconds),
            ])


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        records = []
        for row in reader:
            records.append(ResultRecord(
                int(row[0]), row[1], row[2], row[3], row[4], int(row[5]), int(row[6]), row[7],
                float(row[8]), float(row[9]), float(row[10]),
            ))
    return records


def trace_document(trace, graph):
    return {
        "nodes": int(graph.node_count),
        "edges": [[int(u), int(v)] for u, v in graph.edges()],
        "seeds": [int(v) for v in trace.seed_ids],
        "steps": np.asarray(trace.steps, dtype=int).tolist(),
    }


def write_trace_json(trace, graph, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(trace_document(trace, graph), fh, separators=(",", ":"))
        fh.write("\n")


def format_summary(records):
    lines = []
    for r in records:
        head = f"[{r.run_index}] {r.graph} | {r.diffusion} | {r.seed_strategy} | {r.method} | k={r.budget}"
        if r.failed:
            lines.append(f"{head}: FAILED ({r.error})")
        else:
            lines.append(f"{head}: {r.metric} = {r.mean:.6g} +/- {r.std:.6g} ({r.runtime_seconds:.3g} s)")
    failed = sum(r.failed for r in records)
    lines.append(f"{len(records)} runs, {failed} failed")
    return "\n".join(lines) + "\n"


def write_outputs(spec, records, out_dir):
    """Write the outputs requested by ``spec`` into ``out_dir``; return their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if "csv" in spec.outputs:
        paths.append(os.path.join(out_dir, "results.csv"))
        write_csv(records, paths[-1])
    if "trace_json" in spec.outputs:
        for r in records:
            if r.trace is not None:
                paths.append(os.path.join(out_dir, f"trace_{r.run_index:04d}.json"))
                write_trace_json(r.trace, r.trace_graph, paths[-1])
    if "summary" in spec.outputs:
        paths.append(os.path.join(out_dir, "summary.txt"))
        with open(paths[-1], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_summary(records))
    return paths
