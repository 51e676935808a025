"""Cache placement algorithms.

* :func:`mobicacher` -- per-station greedy on sojourn-weighted costs.
* :func:`femtocacher_baseline` -- same selection, first-slot users only.
* :func:`popularity_cacher` -- every station caches the globally most
  requested contents.
* :func:`exact_optimal` -- exhaustive search, used as the optimality oracle.

All selections break ties by the smallest content id.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .metrics import evaluate, max_degree
from .model import Instance, Placement

__all__ = [
    "BudgetExceededError",
    "ApproximationBoundError",
    "RatioRecord",
    "DEFAULT_BUDGET",
    "sojourn_times",
    "mobility_weights",
    "top_k",
    "select_per_station",
    "mobicacher",
    "femtocacher_baseline",
    "popularity_cacher",
    "candidate_count",
    "exact_optimal",
    "approximation_report",
    "ALGORITHMS",
    "place",
]

DEFAULT_BUDGET = 10**7
RATIO_EPS = 1e-12


class BudgetExceededError(RuntimeError):
    """The exhaustive search would exceed its candidate budget."""

    def __init__(self, candidates: int, budget: int):
        super().__init__(f"exact search needs {candidates} candidate placements, budget is {budget}")
        self.candidates = candidates
        self.budget = budget


class ApproximationBoundError(AssertionError):
    """The optimum exceeds max_degree times the greedy utility."""


def sojourn_times(instance: Instance) -> np.ndarray:
    """Integer array ``T[i, f]``: number of slots in which user i reaches station f."""
    return instance.reach_matrix.sum(axis=0, dtype=np.int64)


def mobility_weights(instance: Instance) -> np.ndarray:
    """Per-station content weights ``w[f, l] = sum_i T[i, f] * c[i, l]``."""
    return sojourn_times(instance).T.astype(np.float64) @ instance.costs


def top_k(weights, k: int) -> list[int]:
    """Indices of the ``k`` largest weights, ties to the smaller index."""
    weights = np.asarray(weights)
    order = np.argsort(-weights, kind="stable")
    return sorted(int(l) for l in order[:max(k, 0)])


def _greedy_loop(weights, k: int) -> list[int]:
    # literal pass-per-slot loop; kept for differential testing against top_k
    remaining = list(range(len(weights)))
    chosen = []
    while len(chosen) < k and remaining:
        best = max(remaining, key=lambda l: (weights[l], -l))
        chosen.append(best)
        remaining.remove(best)
    return sorted(chosen)


def select_per_station(weights: np.ndarray, capacities, literal: bool = False) -> Placement:
    """Fill each station with its top-capacity contents under ``weights[f]``."""
    pick = _greedy_loop if literal else top_k
    return Placement([pick(weights[f], cap) for f, cap in enumerate(capacities)])


def mobicacher(instance: Instance, literal: bool = False) -> Placement:
    """Mobility-aware greedy placement.

    Each station independently caches the contents with the largest
    ``sum_i T[i, f] * c[i, l]``, where ``T[i, f]`` counts the slots user i
    spends within reach of station f.  The per-station objective is modular,
    so a sort is exactly the iterative argmax; ``literal=True`` runs the
    iterative loop instead.
    """
    return select_per_station(mobility_weights(instance), instance.capacities, literal)


def femtocacher_baseline(instance: Instance) -> Placement:
    """Mobility-unaware baseline: weights from the users present in the first slot."""
    first = instance.reach_matrix[0].astype(np.float64)  # (users, stations)
    return select_per_station(first.T @ instance.costs, instance.capacities)


def popularity_cacher(instance: Instance) -> Placement:
    popularity = instance.costs.sum(axis=0)
    return Placement([top_k(popularity, cap) for cap in instance.capacities])


def candidate_count(instance: Instance) -> int:
    """Number of capacity-feasible placements, counting partially filled caches."""
    n = instance.library_size
    total = 1
    for cap in instance.capacities:
        total *= sum(math.comb(n, k) for k in range(min(cap, n) + 1))
    return total


def _full_capacity_options(instance: Instance) -> list[np.ndarray]:
    n = instance.library_size
    options = []
    for cap in instance.capacities:
        combos = list(itertools.combinations(range(n), min(cap, n)))
        rows = np.zeros((len(combos), n), dtype=bool)
        for r, combo in enumerate(combos):
            rows[r, list(combo)] = True
        options.append(rows)
    return options


def exact_optimal(instance: Instance, budget: int = DEFAULT_BUDGET, chunk: int = 4096):
    """Exhaustively find a utility-maximizing placement.

    Utility never decreases when a cache gains a content, so only caches
    filled to ``min(C_f, |L|)`` are enumerated.  Candidates are scanned in
    lexicographic order of their per-station content tuples; the first
    maximizer wins.

    Returns
    -------
    placement : Placement
    utility : float

    Raises
    ------
    BudgetExceededError
        When :func:`candidate_count` exceeds ``budget``.
    """
    count = candidate_count(instance)
    if count > budget:
        raise BudgetExceededError(count, budget)

    if instance.n_stations == 0:
        return Placement([]), 0.0
    # collapse (slot, user) pairs sharing a reachable set; utility only
    # depends on which stations a demand can see
    r = instance.reach_matrix.reshape(instance.n_slots * instance.n_users, instance.n_stations)
    demand = np.tile(instance.costs, (instance.n_slots, 1))
    groups, inverse = np.unique(r, axis=0, return_inverse=True)
    weights = np.zeros((len(groups), instance.library_size))
    np.add.at(weights, inverse.ravel(), demand)
    groups = groups.astype(np.int64)

    options = _full_capacity_options(instance)
    sizes = [len(o) for o in options]
    total = math.prod(sizes)
    best_u, best_idx = -1.0, 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = np.unravel_index(idx, sizes)
        cache = np.stack([options[f][digits[f]] for f in range(len(options))], axis=1)
        # seen[n, g, l]: content l cached at some station of group g
        seen = np.einsum("gf,nfl->ngl", groups, cache.astype(np.int64)) > 0
        utils = (seen * weights).sum(axis=(1, 2))
        k = int(np.argmax(utils))
        if utils[k] > best_u:
            best_u, best_idx = float(utils[k]), int(idx[k])

    digits = np.unravel_index(best_idx, sizes)
    placement = Placement([np.flatnonzero(options[f][digits[f]]) for f in range(len(options))])
    return placement, best_u


@dataclass(frozen=True)
class RatioRecord:
    greedy_utility: float
    optimal_utility: float
    max_degree: int
    ratio: float


def approximation_report(instance: Instance, budget: int = DEFAULT_BUDGET) -> RatioRecord:
    """Compare mobicacher with the exhaustive optimum.

    Raises :class:`ApproximationBoundError` if the optimum exceeds
    ``max_degree`` times the greedy utility.
    """
    greedy = evaluate(instance, mobicacher(instance)).utility
    _, optimal = exact_optimal(instance, budget)
    degree = max_degree(instance)
    if optimal > 0:
        ratio = optimal / max(greedy, RATIO_EPS)
        # relative slack only absorbs float summation order, integer costs are exact
        if optimal > degree * greedy + 1e-9 * optimal:
            raise ApproximationBoundError(
                f"optimum {optimal} exceeds {degree} x greedy utility {greedy}"
            )
    else:
        ratio = 1.0
    return RatioRecord(greedy, optimal, degree, ratio)


ALGORITHMS = {
    "mobicacher": mobicacher,
    "femtocacher": femtocacher_baseline,
    "popularity": popularity_cacher,
    "exact": lambda instance, budget=DEFAULT_BUDGET: exact_optimal(instance, budget)[0],
}


def place(instance: Instance, algorithm: str, budget: int = DEFAULT_BUDGET) -> Placement:
    """Run a named algorithm (see :data:`ALGORITHMS`)."""
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    if algorithm == "exact":
        return fn(instance, budget)
    return fn(instance)
