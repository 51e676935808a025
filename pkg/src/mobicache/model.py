"""Problem-instance data model for mobility-aware cache placement.

An :class:`Instance` bundles base stations (with cache capacities counted in
unit-size contents), mobile users, a content library, the per user/content
normalized cost matrix and a slotted reachability trace.  A :class:`Placement`
holds the set of cached contents per station.

Everything is immutable once built and validated on construction.  Slot
indices are 0-based internally; reports convert to 1-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "InstanceError",
    "PlacementError",
    "BaseStation",
    "MobileUser",
    "ReachabilityTrace",
    "Instance",
    "Placement",
    "validate_instance",
    "validate_placement",
    "trace_from_lists",
]

DEFAULT_SLOT_SECONDS = 20.0


class InstanceError(ValueError):
    """Raised when an instance violates a structural invariant."""


class PlacementError(ValueError):
    """Raised when a placement is infeasible for its instance."""


@dataclass(frozen=True)
class BaseStation:
    id: int
    capacity: int


@dataclass(frozen=True)
class MobileUser:
    id: int


@dataclass(frozen=True, eq=False)
class ReachabilityTrace:
    """Per-slot reachable base stations of every user.

    Parameters
    ----------
    slots : sequence of mappings
        ``slots[t][i]`` is the set of station ids user ``i`` can sense in
        slot ``t``.  Users missing from a slot record reach nothing.
    slot_seconds : float
        Slot length, metadata only.
    """

    slots: tuple = ()
    slot_seconds: float = DEFAULT_SLOT_SECONDS

    def __post_init__(self):
        normalized = tuple(
            {int(u): frozenset(int(f) for f in fs) for u, fs in dict(rec).items()}
            for rec in self.slots
        )
        object.__setattr__(self, "slots", normalized)
        object.__setattr__(self, "slot_seconds", float(self.slot_seconds))

    @property
    def n_slots(self) -> int:
        return len(self.slots)

    def reach(self, slot: int, user: int) -> frozenset:
        return self.slots[slot].get(user, frozenset())

    def concat(self, other: "ReachabilityTrace") -> "ReachabilityTrace":
        return ReachabilityTrace(self.slots + other.slots, self.slot_seconds)

    def __eq__(self, other):
        if not isinstance(other, ReachabilityTrace):
            return NotImplemented
        if self.slot_seconds != other.slot_seconds or self.n_slots != other.n_slots:
            return False
        # empty sets and absent users are the same thing
        return all(
            {u: s for u, s in a.items() if s} == {u: s for u, s in b.items() if s}
            for a, b in zip(self.slots, other.slots)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Instance:
    """A complete cache placement problem.

    Parameters
    ----------
    capacities : sequence of int
        Cache capacity of each station; station ids are the positions.
    n_users : int
        Number of mobile users, ids ``0..n_users-1``.
    library_size : int
        Number of contents, ids ``0..library_size-1``.
    costs : array-like, shape (n_users, library_size)
        Normalized cost of each user/content pair (expected backhaul cost
        per slot when the content is not reachable in cache).
    trace : ReachabilityTrace
        Slotted reachability; must contain at least one slot.
    """

    capacities: tuple
    n_users: int
    library_size: int
    costs: np.ndarray
    trace: ReachabilityTrace = field(default_factory=ReachabilityTrace)

    def __post_init__(self):
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        object.__setattr__(self, "n_users", int(self.n_users))
        object.__setattr__(self, "library_size", int(self.library_size))
        costs = np.array(self.costs, dtype=np.float64, copy=True)
        if costs.size == 0:
            costs = costs.reshape(self.n_users, self.library_size)
        costs += 0.0  # folds -0.0 into 0.0
        costs.flags.writeable = False
        object.__setattr__(self, "costs", costs)
        if not isinstance(self.trace, ReachabilityTrace):
            object.__setattr__(self, "trace", ReachabilityTrace(self.trace))
        validate_instance(self)

    @property
    def n_stations(self) -> int:
        return len(self.capacities)

    @property
    def n_slots(self) -> int:
        return self.trace.n_slots

    @property
    def stations(self) -> list[BaseStation]:
        return [BaseStation(f, c) for f, c in enumerate(self.capacities)]

    @property
    def users(self) -> list[MobileUser]:
        return [MobileUser(i) for i in range(self.n_users)]

    @cached_property
    def reach_matrix(self) -> np.ndarray:
        """Boolean array ``R[t, i, f]``, true when user i senses station f in slot t."""
        r = np.zeros((self.n_slots, self.n_users, self.n_stations), dtype=bool)
        for t, rec in enumerate(self.trace.slots):
            for u, fs in rec.items():
                for f in fs:
                    r[t, u, f] = True
        r.flags.writeable = False
        return r

    def with_capacities(self, capacities) -> "Instance":
        """Copy with new capacities; a scalar applies to every station."""
        if np.isscalar(capacities):
            capacities = [int(capacities)] * self.n_stations
        return Instance(capacities, self.n_users, self.library_size, self.costs, self.trace)

    def with_costs(self, costs) -> "Instance":
        return Instance(self.capacities, self.n_users, self.library_size, costs, self.trace)

    def with_trace(self, trace: ReachabilityTrace) -> "Instance":
        return Instance(self.capacities, self.n_users, self.library_size, self.costs, trace)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.capacities == other.capacities
            and self.n_users == other.n_users
            and self.library_size == other.library_size
            and np.array_equal(self.costs, other.costs)
            and self.trace == other.trace
        )

    __hash__ = None


def validate_instance(instance: Instance) -> Instance:
    """Check every structural invariant of ``instance`` and return it.

    Raises
    ------
    InstanceError
        On dimension mismatch, negative or non-finite costs or capacities,
        an empty trace, or a trace referencing unknown users or stations.
        Messages carry the offending slot/user/content location.
    """
    if instance.library_size < 1:
        raise InstanceError(f"library size must be positive, got {instance.library_size}")
    if instance.n_users < 0:
        raise InstanceError(f"user count must be non-negative, got {instance.n_users}")
    for f, c in enumerate(instance.capacities):
        if c < 0:
            raise InstanceError(f"station {f}: negative capacity {c}")

    costs = instance.costs
    expected = (instance.n_users, instance.library_size)
    if costs.shape != expected:
        raise InstanceError(f"cost matrix has shape {costs.shape}, expected {expected}")
    bad = ~np.isfinite(costs) | (costs < 0)
    if bad.any():
        i, l = (int(x) for x in np.argwhere(bad)[0])
        raise InstanceError(f"cost of user {i} for content {l} is {costs[i, l]!r}; must be finite and >= 0")

    trace = instance.trace
    if trace.n_slots < 1:
        raise InstanceError("empty trace: at least one slot is required")
    if not (trace.slot_seconds > 0 and math.isfinite(trace.slot_seconds)):
        raise InstanceError(f"slot length must be positive, got {trace.slot_seconds}")
    for t, rec in enumerate(trace.slots):
        for u, fs in rec.items():
            if not 0 <= u < instance.n_users:
                raise InstanceError(f"slot {t}: unknown user {u}")
            for f in fs:
                if not 0 <= f < instance.n_stations:
                    raise InstanceError(f"slot {t}, user {u}: unknown station {f}")
    return instance


@dataclass(frozen=True)
class Placement:
    """Cached content ids per station, ``cached[f]`` being a frozenset."""

    cached: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "cached", tuple(frozenset(int(l) for l in s) for s in self.cached)
        )

    @classmethod
    def empty(cls, n_stations: int) -> "Placement":
        return cls([()] * n_stations)

    @classmethod
    def from_mapping(cls, n_stations: int, cached: Mapping[int, Iterable[int]]) -> "Placement":
        sets: list = [()] * n_stations
        for f, contents in cached.items():
            if not 0 <= f < n_stations:
                raise PlacementError(f"unknown station {f}")
            sets[f] = contents
        return cls(sets)

    @property
    def n_stations(self) -> int:
        return len(self.cached)

    def matrix(self, library_size: int) -> np.ndarray:
        """Boolean membership array ``B[f, l]``."""
        b = np.zeros((self.n_stations, library_size), dtype=bool)
        for f, s in enumerate(self.cached):
            if s:
                b[f, sorted(s)] = True
        return b

    def add(self, station: int, content: int) -> "Placement":
        sets = list(self.cached)
        sets[station] = sets[station] | {content}
        return Placement(sets)


def validate_placement(instance: Instance, placement: Placement) -> Placement:
    """Check that ``placement`` is feasible for ``instance`` and return it.

    Every station must appear, content ids must be in the library and no
    station may cache more than its capacity.
    """
    if placement.n_stations != instance.n_stations:
        raise PlacementError(
            f"placement covers {placement.n_stations} stations, instance has {instance.n_stations}"
        )
    for f, (contents, cap) in enumerate(zip(placement.cached, instance.capacities)):
        for l in contents:
            if not 0 <= l < instance.library_size:
                raise PlacementError(f"station {f}: content id {l} out of range")
        if len(contents) > cap:
            raise PlacementError(f"station {f}: caches {len(contents)} contents, capacity {cap}")
    return placement


def trace_from_lists(slots: Sequence[Sequence[Iterable[int]]], slot_seconds=DEFAULT_SLOT_SECONDS):
    """Build a trace from dense ``slots[t][i]`` station lists."""
    return ReachabilityTrace(
        tuple({i: fs for i, fs in enumerate(rec)} for rec in slots), slot_seconds
    )
