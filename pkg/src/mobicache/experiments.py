"""Experiment drivers: capacity sweeps, cumulative utility, ratio studies and
algorithm comparisons, plus the tab-separated result writer.

Every driver takes a list of :class:`Source` (labelled instances) and returns
plain row dicts in deterministic grid order.  Grid cells may run on a
process pool; results are collected in submission order, so output never
depends on the number of workers.
"""
from __future__ import annotations

import itertools
import json
import platform
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .formats import format_float, read_instance
from .metrics import evaluate
from .model import Instance
from .placement import (
    ALGORITHMS,
    DEFAULT_BUDGET,
    ApproximationBoundError,
    BudgetExceededError,
    approximation_report,
    place,
)
from .traces import (
    SyntheticConfig,
    assign_profiles,
    build_instance,
    generate_synthetic,
    preferences_from_listening,
    random_instance,
    read_listening_log,
    read_mobility_log,
    slot_mobility_log,
)

__all__ = [
    "ExperimentConfig",
    "Source",
    "load_config",
    "build_sources",
    "run_capacity_sweep",
    "run_time_series",
    "run_ratio_study",
    "run_comparison",
    "write_table",
    "manifest",
    "RATIO_BINS",
    "read_table",
]

PER_USER_NOTE = "per_user_utility = utility / n_users (summed over all slots)"
RATIO_BINS = (1.0, 1.1, 1.25, 1.5, 2.0, 3.0)


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment run.

    Exactly one instance source is used, in this priority: ``instances``
    (instance files), ``mobility_log`` + ``listening_log`` (raw logs, one
    profile assignment per seed), ``random`` (small random instances for
    ratio studies, one per seed), else ``synthetic`` (one per seed).
    """

    instances: list = field(default_factory=list)
    synthetic: dict = field(default_factory=dict)
    random: dict | None = None
    mobility_log: str | None = None
    listening_log: str | None = None
    window: list | None = None
    slot_seconds: float = 20.0
    top_n: int = 200
    log_capacity: int = 1
    algorithms: list = field(default_factory=lambda: ["mobicacher", "femtocacher", "popularity"])
    capacities: list = field(default_factory=lambda: [1])
    seeds: list = field(default_factory=lambda: [0])
    budget: int = DEFAULT_BUDGET
    workers: int = 1
    out: str = "results"

    def __post_init__(self):
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithm(s): {', '.join(sorted(unknown))}")
        if any(int(c) < 0 for c in self.capacities):
            raise ValueError("capacities must be non-negative")
        self.capacities = [int(c) for c in self.capacities]
        self.seeds = [int(s) for s in self.seeds]
        unknown = set(self.synthetic) - {f.name for f in fields(SyntheticConfig)}
        if unknown:
            raise ValueError(f"unknown synthetic field(s): {', '.join(sorted(unknown))}")

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return ExperimentConfig(**data)


@dataclass(frozen=True)
class Source:
    label: str
    seed: int | None
    instance: Instance


def build_sources(config: ExperimentConfig) -> list[Source]:
    if config.instances:
        return [Source(Path(p).name, None, read_instance(p)) for p in config.instances]
    if config.mobility_log or config.listening_log:
        if not (config.mobility_log and config.listening_log):
            raise ValueError("raw-log sources need both mobility_log and listening_log")
        slotted = slot_mobility_log(read_mobility_log(config.mobility_log), config.slot_seconds,
                                    tuple(config.window) if config.window else None)
        prefs = preferences_from_listening(read_listening_log(config.listening_log), config.top_n)
        n_users = len(slotted.devices)
        return [
            Source(f"logs-seed{s}", s,
                   build_instance(slotted, assign_profiles(n_users, prefs.costs, s), config.log_capacity))
            for s in config.seeds
        ]
    if config.random is not None:
        return [Source(f"random-seed{s}", s, random_instance(s, **config.random)) for s in config.seeds]
    return [
        Source(f"synthetic-seed{s}", s, generate_synthetic(SyntheticConfig(**{**config.synthetic, "seed": s})))
        for s in config.seeds
    ]


def _map(fn, jobs: Sequence, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _seed_text(seed) -> str:
    return "-" if seed is None else str(seed)


def _sweep_cell(job) -> dict:
    source, capacity, algorithm, budget = job
    inst = source.instance.with_capacities(capacity)
    row = {
        "capacity": capacity,
        "algorithm": algorithm,
        "instance": source.label,
        "seed": _seed_text(source.seed),
    }
    try:
        report = evaluate(inst, place(inst, algorithm, budget))
    except BudgetExceededError as exc:
        return {**row, "status": f"budget_exceeded:{exc.candidates}", "utility": "",
                "total_cost": "", "cost_constant": "", "per_user_utility": ""}
    per_user = report.utility / inst.n_users if inst.n_users else 0.0
    return {**row, "status": "ok", "utility": report.utility, "total_cost": report.total_cost,
            "cost_constant": report.cost_constant, "per_user_utility": per_user}


SWEEP_COLUMNS = ("capacity", "algorithm", "instance", "seed", "status", "utility",
                 "total_cost", "cost_constant", "per_user_utility")


def run_capacity_sweep(sources: Sequence[Source], algorithms: Sequence[str], capacities: Sequence[int],
                       budget: int = DEFAULT_BUDGET, workers: int = 1) -> list[dict]:
    """One row per (capacity, algorithm, source), in that nesting order.

    Capacities apply uniformly to all stations.  An exact solve over budget
    is marked in ``status`` and the sweep continues.
    """
    jobs = [(s, c, a, budget) for c in capacities for a in algorithms for s in sources]
    return _map(_sweep_cell, jobs, workers)


TIMESERIES_COLUMNS = ("algorithm", "instance", "seed", "slot", "slot_utility", "cumulative_utility")


def run_time_series(sources: Sequence[Source], algorithms: Sequence[str], capacity: int,
                    budget: int = DEFAULT_BUDGET) -> list[dict]:
    """Cumulative utility per slot for placements fixed before the first slot.

    Slots are reported 1-based.
    """
    rows = []
    for algorithm in algorithms:
        for source in sources:
            inst = source.instance.with_capacities(capacity)
            report = evaluate(inst, place(inst, algorithm, budget))
            running = itertools.accumulate(report.per_slot_utility)
            for t, (u, cum) in enumerate(zip(report.per_slot_utility, running), 1):
                rows.append({"algorithm": algorithm, "instance": source.label,
                             "seed": _seed_text(source.seed), "slot": t,
                             "slot_utility": u, "cumulative_utility": cum})
    return rows


RATIO_COLUMNS = ("instance", "seed", "status", "greedy_utility", "optimal_utility", "max_degree", "ratio")


def _ratio_cell(job) -> dict:
    source, budget = job
    row = {"instance": source.label, "seed": _seed_text(source.seed)}
    try:
        rec = approximation_report(source.instance, budget)
    except BudgetExceededError as exc:
        return {**row, "status": f"budget_exceeded:{exc.candidates}", "greedy_utility": "",
                "optimal_utility": "", "max_degree": "", "ratio": ""}
    except ApproximationBoundError as exc:
        return {**row, "status": "violation", "greedy_utility": "", "optimal_utility": "",
                "max_degree": "", "ratio": "", "error": str(exc)}
    return {**row, "status": "ok", **asdict(rec)}


def run_ratio_study(sources: Sequence[Source], budget: int = DEFAULT_BUDGET, workers: int = 1,
                    strict: bool = True) -> tuple[list[dict], dict]:
    """Greedy vs exhaustive optimum on every source.

    Returns per-instance rows and a summary with the worst ratio, a ratio
    histogram over :data:`RATIO_BINS`, and skip/violation counts.  With
    ``strict`` a bound violation raises after all instances ran.
    """
    rows = _map(_ratio_cell, [(s, budget) for s in sources], workers)
    ok = [r for r in rows if r["status"] == "ok"]
    violations = [r for r in rows if r["status"] == "violation"]
    edges = list(RATIO_BINS) + [float("inf")]
    hist = {}
    for lo, hi in zip(edges, edges[1:]):
        hist[f"[{format_float(lo)},{format_float(hi)})"] = sum(1 for r in ok if lo <= r["ratio"] < hi)
    worst = max(ok, key=lambda r: r["ratio"], default=None)
    summary = {
        "instances": len(rows),
        "evaluated": len(ok),
        "skipped": sum(1 for r in rows if r["status"].startswith("budget_exceeded")),
        "violations": len(violations),
        "max_ratio": worst["ratio"] if worst else None,
        "worst_instance": worst["instance"] if worst else None,
        "max_degree_observed": max((r["max_degree"] for r in ok), default=None),
        "histogram": hist,
    }
    if strict and violations:
        raise ApproximationBoundError(
            f"{len(violations)} bound violation(s), first: {violations[0]['instance']}: {violations[0]['error']}"
        )
    return rows, summary


def run_comparison(sources: Sequence[Source], algorithms: Sequence[str], capacity: int,
                   budget: int = DEFAULT_BUDGET, min_seeds: int = 10) -> tuple[list[dict], dict]:
    """Per-seed utilities and paired statistics across algorithms.

    Returns the per-seed table (one row per source, one column per
    algorithm) and a summary with each algorithm's mean and sample standard
    deviation and, for every ordered pair ``(a, b)`` in ``algorithms``
    order, the mean/std of ``U_a - U_b`` and win/tie/loss counts.
    """
    if len(algorithms) < 2:
        raise ValueError("comparison needs at least two algorithms")
    if len(sources) < min_seeds:
        raise ValueError(f"comparison needs at least {min_seeds} seeds, got {len(sources)}")
    table = []
    for source in sources:
        inst = source.instance.with_capacities(capacity)
        row = {"instance": source.label, "seed": _seed_text(source.seed)}
        for a in algorithms:
            row[a] = evaluate(inst, place(inst, a, budget)).utility
        table.append(row)
    per_alg = {}
    for a in algorithms:
        values = [r[a] for r in table]
        per_alg[a] = {"mean": statistics.fmean(values), "std": statistics.stdev(values)}
    pairs = {}
    for a, b in itertools.combinations(algorithms, 2):
        diffs = [r[a] - r[b] for r in table]
        pairs[f"{a}-{b}"] = {
            "mean_diff": statistics.fmean(diffs),
            "std_diff": statistics.stdev(diffs),
            "wins": sum(d > 0 for d in diffs),
            "ties": sum(d == 0 for d in diffs),
            "losses": sum(d < 0 for d in diffs),
        }
    return table, {"capacity": capacity, "n": len(table), "algorithms": per_alg, "pairs": pairs}


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def manifest(command: str, config: ExperimentConfig | dict, **extra) -> dict:
    cfg = config.to_dict() if isinstance(config, ExperimentConfig) else dict(config)
    return {
        "command": command,
        "config": cfg,
        "versions": {
            "mobicache": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        **extra,
    }


def write_table(path, columns: Iterable[str], rows: Iterable[dict], meta: dict | None = None,
                notes: Iterable[str] = ()) -> None:
    """Write ``rows`` as tab-separated text.

    ``#``-prefixed lines carry the manifest (as compact sorted JSON) and any
    notes, followed by the column header and the data rows.
    """
    columns = list(columns)
    lines = []
    if meta is not None:
        lines.append("# manifest " + json.dumps(meta, sort_keys=True, separators=(",", ":")))
    lines += [f"# {n}" for n in notes]
    lines.append("\t".join(columns))
    for row in rows:
        lines.append("\t".join(_cell(row.get(c, "")) for c in columns))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_table(path) -> list[dict]:
    """Parse a file written by :func:`write_table` back into string rows."""
    lines = [l for l in Path(path).read_text(encoding="utf-8").splitlines() if not l.startswith("#")]
    header = lines[0].split("\t")
    return [dict(zip(header, l.split("\t"))) for l in lines[1:]]
