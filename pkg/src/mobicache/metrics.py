"""Caching utility and backhaul cost of a placement.

The total network cost splits into a placement-independent constant (every
user paying for every content in every slot) minus the caching utility, the
cost saved by contents reachable in some nearby cache.  :func:`evaluate`
computes both sides independently so the identity can be checked.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import Instance, Placement, validate_placement

__all__ = [
    "EvaluationReport",
    "reachable_cached_set",
    "coverage",
    "evaluate",
    "max_degree",
]


@dataclass(frozen=True)
class EvaluationReport:
    """Result of evaluating one placement on one instance.

    ``per_slot_*`` series are indexed by 0-based slot; ``utility`` and
    ``total_cost`` are their left-to-right sums.
    """

    utility: float
    total_cost: float
    cost_constant: float
    per_slot_utility: tuple
    per_slot_cost: tuple
    max_degree: int

    @property
    def hit_ratio(self) -> float:
        """Cost-weighted fraction of demand served from a reachable cache."""
        return self.utility / self.cost_constant if self.cost_constant > 0 else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_slot_utility"] = list(self.per_slot_utility)
        d["per_slot_cost"] = list(self.per_slot_cost)
        d["hit_ratio"] = self.hit_ratio
        return d


def reachable_cached_set(instance: Instance, placement: Placement, slot: int, user: int) -> frozenset:
    """Union of the caches of all stations ``user`` can reach in ``slot``."""
    if not 0 <= slot < instance.n_slots:
        raise IndexError(f"slot {slot} out of range 0..{instance.n_slots - 1}")
    if not 0 <= user < instance.n_users:
        raise IndexError(f"user {user} out of range 0..{instance.n_users - 1}")
    out = frozenset()
    for f in instance.trace.reach(slot, user):
        out |= placement.cached[f]
    return out


def coverage(instance: Instance, placement: Placement) -> np.ndarray:
    """Boolean ``H[t, i, l]``: content l is cached at a station user i reaches in slot t."""
    rows = instance.n_slots * instance.n_users
    r = instance.reach_matrix.reshape(rows, instance.n_stations).astype(np.float64)
    b = placement.matrix(instance.library_size).astype(np.float64)
    hits = (r @ b) > 0
    return hits.reshape(instance.n_slots, instance.n_users, instance.library_size)


def evaluate(instance: Instance, placement: Placement) -> EvaluationReport:
    validate_placement(instance, placement)
    hits = coverage(instance, placement)
    costs = instance.costs
    per_slot_utility = []
    per_slot_cost = []
    for t in range(instance.n_slots):
        per_slot_utility.append(float(np.where(hits[t], costs, 0.0).sum()))
        per_slot_cost.append(float(np.where(hits[t], 0.0, costs).sum()))
    utility = 0.0
    total_cost = 0.0
    for u, c in zip(per_slot_utility, per_slot_cost):
        utility += u
        total_cost += c
    cost_constant = 0.0
    slot_constant = float(costs.sum())
    for _ in range(instance.n_slots):
        cost_constant += slot_constant
    return EvaluationReport(
        utility=utility,
        total_cost=total_cost,
        cost_constant=cost_constant,
        per_slot_utility=tuple(per_slot_utility),
        per_slot_cost=tuple(per_slot_cost),
        max_degree=max_degree(instance),
    )


def max_degree(instance: Instance) -> int:
    """Largest number of stations any user senses in a single slot, floored at 1."""
    r = instance.reach_matrix
    if r.size == 0:
        return 1
    return max(1, int(r.sum(axis=2).max()))
