"""Command line entry point: ``mobicache <verb> [options]``.

Verbs: validate, place, evaluate, sweep, timeseries, ratio, compare,
generate, ingest.  Experiment verbs write ``<verb>.tsv`` and
``manifest.json`` into ``--out``; flags override values from ``--config``.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import fields
from pathlib import Path

from .experiments import (
    PER_USER_NOTE,
    RATIO_COLUMNS,
    SWEEP_COLUMNS,
    TIMESERIES_COLUMNS,
    ExperimentConfig,
    build_sources,
    load_config,
    manifest,
    run_capacity_sweep,
    run_comparison,
    run_ratio_study,
    run_time_series,
    write_table,
)
from .formats import dumps_placement, read_instance, read_placement, write_instance
from .metrics import evaluate
from .model import validate_placement
from .placement import ALGORITHMS, DEFAULT_BUDGET, ApproximationBoundError, BudgetExceededError, place
from .traces import (
    SyntheticConfig,
    assign_profiles,
    build_instance,
    generate_synthetic,
    preferences_from_listening,
    read_listening_log,
    read_mobility_log,
    slot_mobility_log,
)

log = logging.getLogger("mobicache")
_RANGE = re.compile(r"^(-?\d+)-(-?\d+)$")


def _int_list(text: str) -> list[int]:
    """Parse ``1,2,5`` or ranges like ``0-49`` (mixable: ``0-3,10``)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        m = _RANGE.match(part)
        if m:
            out.extend(range(int(m[1]), int(m[2]) + 1))
        else:
            out.append(int(part))
    return out


def _str_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _coerce(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def _key_values(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"expected KEY=VALUE, got {item!r}")
        out[key.strip()] = _coerce(value.strip())
    return out


def _experiment_config(args) -> ExperimentConfig:
    cfg = load_config(args.config).to_dict() if args.config else ExperimentConfig().to_dict()
    if args.instance:
        cfg["instances"] = args.instance
    if args.algorithms:
        cfg["algorithms"] = args.algorithms
    if args.capacities is not None:
        cfg["capacities"] = args.capacities
    if args.seeds is not None:
        cfg["seeds"] = args.seeds
    if args.budget is not None:
        cfg["budget"] = args.budget
    if args.workers is not None:
        cfg["workers"] = args.workers
    if args.out:
        cfg["out"] = args.out
    if args.slot_seconds is not None:
        cfg["slot_seconds"] = args.slot_seconds
    if args.synthetic:
        cfg["synthetic"] = {**cfg["synthetic"], **_key_values(args.synthetic)}
    return ExperimentConfig(**cfg)


def _finish(out: Path, meta: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def cmd_validate(args) -> int:
    inst = read_instance(args.instance)
    print(f"instance ok: {inst.n_stations} stations, {inst.n_users} users, "
          f"{inst.library_size} contents, {inst.n_slots} slots")
    if args.placement:
        validate_placement(inst, read_placement(args.placement, inst.n_stations))
        print("placement ok")
    return 0


def cmd_place(args) -> int:
    inst = read_instance(args.instance)
    text = dumps_placement(place(inst, args.algorithm, args.budget))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_evaluate(args) -> int:
    inst = read_instance(args.instance)
    if args.placement:
        placement = read_placement(args.placement, inst.n_stations)
    else:
        placement = place(inst, args.algorithm, args.budget)
    text = json.dumps(evaluate(inst, placement).to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args)
    rows = run_capacity_sweep(build_sources(cfg), cfg.algorithms, cfg.capacities, cfg.budget, cfg.workers)
    meta = manifest("sweep", cfg)
    out = Path(cfg.out)
    write_table(out / "sweep.tsv", SWEEP_COLUMNS, rows, meta, [PER_USER_NOTE])
    _finish(out, meta)
    print(f"wrote {len(rows)} rows to {out / 'sweep.tsv'}")
    return 0


def cmd_timeseries(args) -> int:
    cfg = _experiment_config(args)
    capacity = args.capacity if args.capacity is not None else cfg.capacities[0]
    rows = run_time_series(build_sources(cfg), cfg.algorithms, capacity, cfg.budget)
    meta = manifest("timeseries", cfg, capacity=capacity)
    out = Path(cfg.out)
    write_table(out / "timeseries.tsv", TIMESERIES_COLUMNS, rows, meta, ["slot is 1-based"])
    _finish(out, meta)
    print(f"wrote {len(rows)} rows to {out / 'timeseries.tsv'}")
    return 0


def cmd_ratio(args) -> int:
    cfg = _experiment_config(args)
    if not cfg.instances and cfg.random is None:
        cfg.random = {}
    rows, summary = run_ratio_study(build_sources(cfg), cfg.budget, cfg.workers, strict=False)
    meta = manifest("ratio", cfg, summary=summary)
    out = Path(cfg.out)
    notes = [f"{k} {json.dumps(v, sort_keys=True)}" for k, v in summary.items()]
    write_table(out / "ratio.tsv", RATIO_COLUMNS, rows, meta, notes)
    _finish(out, meta)
    print(json.dumps(summary, sort_keys=True, indent=2))
    if summary["violations"]:
        log.error("approximation bound violated on %d instance(s)", summary["violations"])
        return 1
    return 0


def cmd_compare(args) -> int:
    cfg = _experiment_config(args)
    capacity = args.capacity if args.capacity is not None else cfg.capacities[0]
    table, summary = run_comparison(build_sources(cfg), cfg.algorithms, capacity, cfg.budget)
    meta = manifest("compare", cfg, capacity=capacity)
    out = Path(cfg.out)
    write_table(out / "compare.tsv", ["instance", "seed", *cfg.algorithms], table, meta)
    stats_rows = [{"name": a, "kind": "algorithm", **v} for a, v in summary["algorithms"].items()]
    stats_rows += [{"name": p, "kind": "pair", **v} for p, v in summary["pairs"].items()]
    write_table(out / "compare_summary.tsv",
                ["kind", "name", "mean", "std", "mean_diff", "std_diff", "wins", "ties", "losses"],
                stats_rows, meta, [f"n {summary['n']}", "pair a-b reports utility(a) - utility(b) per seed"])
    _finish(out, meta)
    for r in stats_rows:
        print("\t".join(f"{k}={v}" for k, v in r.items()))
    return 0


def cmd_generate(args) -> int:
    base = {}
    if args.config:
        base = load_config(args.config).synthetic
    params = {**base, **_key_values(args.synthetic)}
    if args.seed is not None:
        params["seed"] = args.seed
    config = SyntheticConfig(**params)
    inst = generate_synthetic(config)
    comment = "synthetic " + json.dumps({f.name: getattr(config, f.name) for f in fields(config)},
                                        sort_keys=True)
    write_instance(args.out, inst, [comment])
    print(f"wrote {args.out}")
    return 0


def cmd_ingest(args) -> int:
    window = tuple(float(x) for x in args.window.split(",")) if args.window else None
    mobility = read_mobility_log(args.mobility)
    slotted = slot_mobility_log(mobility, args.slot_seconds, window)
    listening = read_listening_log(args.listening)
    prefs = preferences_from_listening(listening, args.top_n)
    costs = assign_profiles(len(slotted.devices), prefs.costs, args.seed)
    inst = build_instance(slotted, costs, args.capacity)
    comments = [f"ingest {json.dumps(slotted.stats, sort_keys=True)}"]
    comments += [f"station {f} {ap}" for f, ap in enumerate(slotted.aps)]
    comments += [f"user {i} {d}" for i, d in enumerate(slotted.devices)]
    comments += [f"content {l} {c}" for l, c in enumerate(prefs.contents)]
    write_instance(args.out, inst, comments)
    print(f"wrote {args.out}: {json.dumps(slotted.stats, sort_keys=True)}")
    return 0


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", action="append", help="instance file (repeatable)")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seeds", "--seed", type=_int_list, help="seeds, e.g. 0-49 or 1,2,3")
    p.add_argument("--algorithms", type=_str_list, help=f"comma list from {','.join(ALGORITHMS)}")
    p.add_argument("--capacities", type=_int_list, help="uniform capacities, e.g. 0,1,2")
    p.add_argument("--slot-seconds", type=float, help="slot length for raw logs (default 20)")
    p.add_argument("--budget", type=int, help=f"exact-search candidate budget (default {DEFAULT_BUDGET})")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--synthetic", action="append", metavar="KEY=VALUE",
                   help="override a synthetic generator field (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobicache", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance (and optionally a placement)")
    p.add_argument("--instance", required=True)
    p.add_argument("--placement")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("place", help="compute a placement")
    p.add_argument("--instance", required=True)
    p.add_argument("--algorithm", default="mobicacher", choices=sorted(ALGORITHMS))
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("evaluate", help="evaluate a placement file or algorithm")
    p.add_argument("--instance", required=True)
    p.add_argument("--placement")
    p.add_argument("--algorithm", default="mobicacher", choices=sorted(ALGORITHMS))
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    for name, func, helptext in (
        ("sweep", cmd_sweep, "utility across a capacity sweep"),
        ("timeseries", cmd_timeseries, "cumulative utility against time"),
        ("ratio", cmd_ratio, "greedy vs exhaustive optimum"),
        ("compare", cmd_compare, "paired algorithm comparison over seeds"),
    ):
        p = sub.add_parser(name, help=helptext)
        _experiment_flags(p)
        if name in ("timeseries", "compare"):
            p.add_argument("--capacity", type=int, help="single capacity (default: first of --capacities)")
        p.set_defaults(func=func)

    p = sub.add_parser("generate", help="write a synthetic instance file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON experiment config (its 'synthetic' block is used)")
    p.add_argument("--synthetic", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="raw mobility + listening logs to an instance file")
    p.add_argument("--mobility", required=True, help="timestamp<TAB>device<TAB>aps log")
    p.add_argument("--listening", required=True, help="user<TAB>content<TAB>plays log")
    p.add_argument("--out", required=True)
    p.add_argument("--window", help="START,END in log seconds (default: whole log)")
    p.add_argument("--slot-seconds", type=float, default=20.0)
    p.add_argument("--top-n", type=int, default=200)
    p.add_argument("--capacity", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="profile assignment seed")
    p.set_defaults(func=cmd_ingest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, BudgetExceededError, ApproximationBoundError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
