"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline;
they are also written to the terminal when output is captured.
"""

import time

import numpy as np
import pytest

from conftest import DATA, motivating_instance
from mobicache.cli import main
from mobicache.experiments import Source, run_capacity_sweep, run_comparison, run_ratio_study
from mobicache.metrics import evaluate, max_degree
from mobicache.model import Placement
from mobicache.placement import femtocacher_baseline, mobicacher, select_per_station
from mobicache.traces import (
    SyntheticConfig,
    generate_synthetic,
    preferences_from_listening,
    random_instance,
    read_listening_log,
    read_mobility_log,
    slot_mobility_log,
)

# pinned tolerances and budgets
WORKED_EXAMPLE_SECONDS = 1.0
BOUND_INSTANCES = 500
BOUND_SECONDS = 60.0
SORT_TABLES = 1000
SORT_SECONDS = 5.0
IDENTITY_PAIRS = 1000
IDENTITY_REL_TOL = 1e-9
SWEEP_INSTANCES = 20
MOBILITY_SEEDS = 50
# high mobility, heterogeneous tastes, short horizon; capacity 5 = 0.1 * |L|
MOBILITY_CONFIG = dict(cells=(8, 8), n_users=64, n_slots=10, n_contents=50, stay_probability=0.3,
                       preference_noise=1.0)
MOBILITY_CAPACITY = 5

ALGS = ["mobicacher", "femtocacher", "popularity"]


@pytest.fixture
def verdict(request, capsys):
    """Print ``PASS``/``FAIL`` for the criterion named in the test docstring."""
    details = []
    yield details
    failed = getattr(request.node, "rep_call", None) is None or request.node.rep_call.failed
    line = f"{'FAIL' if failed else 'PASS'} {request.node.function.__doc__.strip()}"
    if details:
        line += " | " + "; ".join(details)
    with capsys.disabled():
        print("\n" + line)


def test_c1_worked_example(verdict):
    """criterion 1: worked example exactness"""
    start = time.perf_counter()
    inst = motivating_instance(1)
    unaware = evaluate(inst, Placement([[0], [1]]))
    greedy = mobicacher(inst)
    aware = evaluate(inst, greedy)
    elapsed = time.perf_counter() - start
    verdict.append(f"costs {unaware.per_slot_cost} -> {unaware.total_cost}, mobicacher {aware.total_cost}")
    verdict.append(f"{elapsed:.3f}s")
    assert unaware.per_slot_cost == (16, 31)
    assert unaware.total_cost == 47
    assert (aware.total_cost, aware.utility) == (38, 28)
    assert greedy == Placement([[2], [2]])
    assert femtocacher_baseline(inst) == Placement([[0], [1]])
    assert elapsed < WORKED_EXAMPLE_SECONDS


def test_c2_approximation_bound(verdict):
    """criterion 2: U* <= F * U' on random instances"""
    start = time.perf_counter()
    sources = [Source(f"r{s}", s, random_instance(s)) for s in range(BOUND_INSTANCES)]
    rows, summary = run_ratio_study(sources, strict=False)
    elapsed = time.perf_counter() - start
    degrees = [max_degree(s.instance) for s in sources]
    verdict.append(f"{summary['evaluated']} evaluated, {summary['violations']} violations")
    verdict.append(f"max ratio {summary['max_ratio']:.4f}, F=3 instances {degrees.count(3)}")
    verdict.append(f"{elapsed:.1f}s")
    assert summary["evaluated"] >= BOUND_INSTANCES and summary["skipped"] == 0
    assert degrees.count(3) > 0
    assert summary["violations"] == 0
    for r in rows:
        assert r["optimal_utility"] <= r["max_degree"] * r["greedy_utility"]
    assert elapsed < BOUND_SECONDS


def test_c3_subproblem_optimality(verdict):
    """criterion 3: greedy selection equals sort oracle"""
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(SORT_TABLES):
        n_st, n_l = rng.integers(1, 6), rng.integers(1, 30)
        w = rng.integers(0, 20, size=(n_st, n_l))
        caps = rng.integers(0, n_l + 2, size=n_st).tolist()
        chosen = select_per_station(w.astype(float), caps)
        for f in range(n_st):
            oracle = sum(sorted(w[f].tolist(), reverse=True)[:caps[f]])
            got = sum(int(w[f, l]) for l in chosen.cached[f])
            mismatches += got != oracle or len(chosen.cached[f]) != min(caps[f], n_l)
    elapsed = time.perf_counter() - start
    verdict.append(f"{SORT_TABLES} tables, {mismatches} mismatches, {elapsed:.2f}s")
    assert mismatches == 0
    assert elapsed < SORT_SECONDS


def _random_placement(rng, inst):
    cached = []
    for cap in inst.capacities:
        k = int(rng.integers(0, min(cap, inst.library_size) + 1))
        cached.append(rng.choice(inst.library_size, size=k, replace=False).tolist())
    return Placement(cached)


def test_c4_cost_identity(verdict):
    """criterion 4: utility + total_cost = cost_constant"""
    rng = np.random.default_rng(4)
    int_bad = 0
    worst_rel = 0.0
    for seed in range(IDENTITY_PAIRS):
        inst = random_instance(seed)
        p = _random_placement(rng, inst)
        r = evaluate(inst, p)
        int_bad += r.utility + r.total_cost != r.cost_constant
        floaty = inst.with_costs(rng.random(inst.costs.shape) * 10)
        r = evaluate(floaty, p)
        rel = abs(r.utility + r.total_cost - r.cost_constant) / max(abs(r.cost_constant), 1e-300)
        worst_rel = max(worst_rel, rel)
    verdict.append(f"{IDENTITY_PAIRS} integer + {IDENTITY_PAIRS} float pairs")
    verdict.append(f"integer mismatches {int_bad}, worst float rel err {worst_rel:.2e}")
    assert int_bad == 0
    assert worst_rel <= IDENTITY_REL_TOL


def test_c5_monotone_and_saturating(verdict):
    """criterion 5: monotone capacity sweep, convergence at |L|"""
    sources = [Source(f"s{s}", s, generate_synthetic(SyntheticConfig(seed=s, n_contents=12, n_users=12)))
               for s in range(SWEEP_INSTANCES)]
    library = 12
    rows = run_capacity_sweep(sources, ALGS, list(range(library + 1)))
    drops = 0
    split_at_full = 0
    for s in sources:
        mine = [r for r in rows if r["instance"] == s.label]
        for a in ALGS:
            series = [r["utility"] for r in mine if r["algorithm"] == a]
            drops += sum(y < x for x, y in zip(series, series[1:]))
        split_at_full += len({r["utility"] for r in mine if r["capacity"] == library}) != 1
    verdict.append(f"{SWEEP_INSTANCES} instances x {len(ALGS)} algorithms, {drops} decreases, "
                   f"{split_at_full} disagreements at C=|L|")
    assert drops == 0
    assert split_at_full == 0


def test_c6_mobility_advantage(verdict):
    """criterion 6: mobicacher >= femtocacher >= popularity under high mobility"""
    assert MOBILITY_CAPACITY <= 0.25 * MOBILITY_CONFIG["n_contents"]
    assert MOBILITY_CONFIG["stay_probability"] <= 0.3
    sources = [Source(f"m{s}", s, generate_synthetic(SyntheticConfig(seed=s, **MOBILITY_CONFIG)))
               for s in range(MOBILITY_SEEDS)]
    table, summary = run_comparison(sources, ALGS, MOBILITY_CAPACITY)
    means = {a: summary["algorithms"][a]["mean"] for a in ALGS}
    verdict.append("means " + ", ".join(f"{a} {m:.3f}" for a, m in means.items()))
    for name, p in summary["pairs"].items():
        verdict.append(f"{name} diff {p['mean_diff']:.3f}+-{p['std_diff']:.3f} "
                       f"w/t/l {p['wins']}/{p['ties']}/{p['losses']}")
    assert means["mobicacher"] >= means["femtocacher"] >= means["popularity"]
    assert means["mobicacher"] > means["popularity"]


def test_c7_ingestion(verdict):
    """criterion 7: WTD slotting and the 0.05 preference"""
    s = slot_mobility_log(read_mobility_log(DATA / "wtd_small.tsv"), 20, (0, 40))
    named = [{s.devices[u]: {s.aps[f] for f in fs} for u, fs in rec.items() if fs} for rec in s.trace.slots]
    prefs = preferences_from_listening(read_listening_log(DATA / "listening_small.tsv"), top_n=2)
    value = prefs.costs[prefs.users.index("u1"), prefs.contents.index("s")]
    verdict.append(f"slots {named}, preference {value}")
    assert named == [{"A": {"ap1", "ap2"}, "B": {"ap1", "ap3"}}, {"A": {"ap2"}}]
    assert value == 0.05


def test_c8_determinism(verdict, tmp_path):
    """criterion 8: CLI reruns are byte-identical"""
    runs = {
        "sweep": ["--seeds", "0-4", "--capacities", "0-3"],
        "timeseries": ["--seeds", "0-4", "--capacity", "2"],
        "ratio": ["--seeds", "0-49"],
        "compare": ["--seeds", "0-9", "--capacity", "2", "--synthetic", "stay_probability=0.3"],
    }
    differing = []
    for verb, args in runs.items():
        outputs = []
        out = tmp_path / verb
        for _ in range(2):
            assert main([verb, *args, "--out", str(out)]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert outputs[0], verb
        if outputs[0] != outputs[1]:
            differing.append(verb)
    verdict.append(f"verbs {', '.join(runs)}; differing: {differing or 'none'}")
    assert not differing
