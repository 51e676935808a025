from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from mobicache.formats import read_instance
from mobicache.model import Instance, Placement, ReachabilityTrace

DATA = Path(__file__).parent / "data"

# Table of normalized costs of the two-cell example, rows = users, cols = O1..O3
MOTIVATING_COSTS = [[8, 1, 7], [1, 9, 7]]


def motivating_instance(capacity=1) -> Instance:
    return read_instance(DATA / "motivating.txt").with_capacities(capacity)


@pytest.fixture
def motivating():
    return motivating_instance()


@pytest.fixture
def data_dir():
    return DATA


@st.composite
def instances(draw, max_stations=3, max_contents=5, max_users=4, max_slots=4, max_capacity=3,
              integer_costs=True, max_overlap=None):
    n_st = draw(st.integers(1, max_stations))
    n_l = draw(st.integers(1, max_contents))
    n_u = draw(st.integers(1, max_users))
    n_t = draw(st.integers(1, max_slots))
    caps = draw(st.lists(st.integers(0, max_capacity), min_size=n_st, max_size=n_st))
    if integer_costs:
        cost = st.integers(0, 20).map(float)
    else:
        cost = st.floats(0, 1e3, allow_nan=False, allow_infinity=False)
    costs = draw(st.lists(st.lists(cost, min_size=n_l, max_size=n_l), min_size=n_u, max_size=n_u))
    overlap = n_st if max_overlap is None else min(max_overlap, n_st)
    reach_set = st.lists(st.integers(0, n_st - 1), max_size=overlap, unique=True)
    slots = draw(st.lists(st.lists(reach_set, min_size=n_u, max_size=n_u), min_size=n_t, max_size=n_t))
    trace = ReachabilityTrace(tuple({i: fs for i, fs in enumerate(rec)} for rec in slots))
    return Instance(caps, n_u, n_l, np.array(costs, dtype=float), trace)


@st.composite
def instance_and_placement(draw, **kw):
    inst = draw(instances(**kw))
    sets = []
    for cap in inst.capacities:
        k = min(cap, inst.library_size)
        sets.append(draw(st.lists(st.integers(0, inst.library_size - 1), max_size=k, unique=True)))
    return inst, Placement(sets)


def reference_utility(inst, placement) -> float:
    """Slot-by-slot, user-by-user utility straight from the definition."""
    total = 0.0
    for t in range(inst.n_slots):
        for i in range(inst.n_users):
            seen = set()
            for f in inst.trace.reach(t, i):
                seen |= placement.cached[f]
            total += sum(inst.costs[i, l] for l in seen)
    return total


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
