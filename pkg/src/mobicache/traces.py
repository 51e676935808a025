"""Mobility and preference inputs.

Parsers for WTD-style AP sighting logs and listening-count logs, slotting of
sightings into a :class:`~mobicache.model.ReachabilityTrace`, play-count
preference rows, and seeded synthetic instance generators used by the test
suite and the experiment harness.

Mobility log lines are ``timestamp<TAB>device_id<TAB>ap1[,ap2,...]`` (an
empty third field means nothing sensed).  Listening log lines are
``user_id<TAB>content_key<TAB>play_count``.
"""
from __future__ import annotations

import io
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .formats import FormatError
from .model import DEFAULT_SLOT_SECONDS, Instance, ReachabilityTrace

__all__ = [
    "MobilitySample",
    "RawMobilityLog",
    "SlottedTrace",
    "ListeningLog",
    "Preferences",
    "SyntheticConfig",
    "parse_mobility_log",
    "read_mobility_log",
    "slot_mobility_log",
    "parse_listening_log",
    "read_listening_log",
    "preferences_from_listening",
    "assign_profiles",
    "build_instance",
    "cell_stations",
    "zipf_preferences",
    "generate_synthetic",
    "random_instance",
    "sojourn_runs",
    "sojourn_cdf",
]

log = logging.getLogger(__name__)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & (2**64 - 1))


def _text_lines(source):
    if isinstance(source, str):
        return io.StringIO(source)
    return source


# -- mobility logs ----------------------------------------------------------

@dataclass(frozen=True)
class MobilitySample:
    timestamp: float
    device: str
    aps: frozenset


@dataclass(frozen=True)
class RawMobilityLog:
    samples: tuple
    lines_read: int = 0

    @property
    def devices(self) -> list[str]:
        return sorted({s.device for s in self.samples})

    @property
    def aps(self) -> list[str]:
        return sorted({ap for s in self.samples for ap in s.aps})


def parse_mobility_log(source) -> RawMobilityLog:
    """Parse tab-separated sighting records from a string or text stream.

    Blank lines and ``#`` comments are skipped.  Raises
    :class:`~mobicache.formats.FormatError` naming the line of a malformed
    record.
    """
    samples = []
    n = 0
    for lineno, raw in enumerate(_text_lines(source), 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        n += 1
        parts = line.split("\t")
        if len(parts) == 2:
            parts.append("")
        if len(parts) != 3 or not parts[1].strip():
            raise FormatError(f"line {lineno}: expected 'timestamp<TAB>device<TAB>aps'")
        try:
            ts = float(parts[0])
        except ValueError:
            raise FormatError(f"line {lineno}: bad timestamp {parts[0]!r}") from None
        if not math.isfinite(ts):
            raise FormatError(f"line {lineno}: bad timestamp {parts[0]!r}")
        aps = frozenset(a.strip() for a in parts[2].split(",") if a.strip())
        samples.append(MobilitySample(ts, parts[1].strip(), aps))
    samples.sort(key=lambda s: (s.device, s.timestamp))
    return RawMobilityLog(tuple(samples), n)


def read_mobility_log(path) -> RawMobilityLog:
    with open(path, encoding="utf-8") as fh:
        return parse_mobility_log(fh)


@dataclass(frozen=True)
class SlottedTrace:
    """A slotted trace plus the dense-id mappings used to build it.

    ``devices[i]`` is the device name of user ``i`` and ``aps[f]`` the AP
    name of station ``f``.  ``stats`` counts samples read, kept, dropped
    (outside the window) and distinct ids.
    """

    trace: ReachabilityTrace
    devices: tuple
    aps: tuple
    stats: dict = field(default_factory=dict)


def slot_mobility_log(log_: RawMobilityLog, slot_seconds: float = DEFAULT_SLOT_SECONDS,
                      window: tuple | None = None) -> SlottedTrace:
    """Discretize sightings into slots of ``slot_seconds`` over ``window``.

    Slot ``t`` (0-based) covers ``[start + t*s, start + (t+1)*s)``.  A
    device's reachable set in a slot is the union of the APs of all its
    samples in that slot; slots without samples are empty.  Every device and
    AP in the log receives an id (sorted by name), so devices that vanish
    from the window are kept with empty sets.

    ``window`` defaults to the whole slots spanning the first to the last sample.
    """
    if not slot_seconds > 0:
        raise ValueError("slot_seconds must be positive")
    if window is None:
        if not log_.samples:
            raise ValueError("a window is required for an empty log")
        first = min(s.timestamp for s in log_.samples)
        last = max(s.timestamp for s in log_.samples)
        window = (first, first + (math.floor((last - first) / slot_seconds) + 1) * slot_seconds)
    start, end = float(window[0]), float(window[1])
    if not end > start:
        raise ValueError(f"empty window [{start}, {end})")
    n_slots = math.ceil((end - start) / slot_seconds)

    devices = log_.devices
    aps = log_.aps
    dev_id = {d: i for i, d in enumerate(devices)}
    ap_id = {a: f for f, a in enumerate(aps)}
    slots = [defaultdict(set) for _ in range(n_slots)]
    kept = dropped = 0
    for s in log_.samples:
        if not start <= s.timestamp < end:
            dropped += 1
            continue
        t = min(int((s.timestamp - start) // slot_seconds), n_slots - 1)
        slots[t][dev_id[s.device]].update(ap_id[a] for a in s.aps)
        kept += 1
    if log_.samples and kept == 0:
        log.warning("no samples inside window [%s, %s); trace is empty", start, end)
    stats = {
        "records": len(log_.samples),
        "kept": kept,
        "dropped": dropped,
        "devices": len(devices),
        "aps": len(aps),
        "slots": n_slots,
    }
    trace = ReachabilityTrace(tuple(dict(s) for s in slots), slot_seconds)
    return SlottedTrace(trace, tuple(devices), tuple(aps), stats)


# -- listening logs ---------------------------------------------------------

@dataclass(frozen=True)
class ListeningLog:
    """Aggregated play counts keyed by ``(user, content)``."""

    plays: dict
    lines_read: int = 0

    @property
    def users(self) -> list[str]:
        return sorted({u for u, _ in self.plays})

    @property
    def contents(self) -> list[str]:
        return sorted({c for _, c in self.plays})


def parse_listening_log(source) -> ListeningLog:
    plays: Counter = Counter()
    n = 0
    for lineno, raw in enumerate(_text_lines(source), 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        n += 1
        parts = line.split("\t")
        if len(parts) != 3 or not parts[0].strip() or not parts[1].strip():
            raise FormatError(f"line {lineno}: expected 'user<TAB>content<TAB>play_count'")
        try:
            count = int(parts[2])
        except ValueError:
            raise FormatError(f"line {lineno}: bad play count {parts[2]!r}") from None
        if count < 1:
            raise FormatError(f"line {lineno}: play count must be >= 1, got {count}")
        plays[parts[0].strip(), parts[1].strip()] += count
    return ListeningLog(dict(plays), n)


def read_listening_log(path) -> ListeningLog:
    with open(path, encoding="utf-8") as fh:
        return parse_listening_log(fh)


@dataclass(frozen=True)
class Preferences:
    costs: np.ndarray
    users: tuple
    contents: tuple


def preferences_from_listening(log_: ListeningLog, top_n: int = 200) -> Preferences:
    """Preference rows from play counts.

    The library is the ``top_n`` contents by total plays (ties by key).  A
    user's preference for a library content is its play count divided by
    the user's plays over *all* contents, so rows may sum to less than one.
    """
    if not log_.plays:
        raise ValueError("listening log is empty")
    if top_n < 1:
        raise ValueError("top_n must be positive")
    totals: Counter = Counter()
    per_user: Counter = Counter()
    for (u, c), k in log_.plays.items():
        totals[c] += k
        per_user[u] += k
    library = sorted(totals, key=lambda c: (-totals[c], c))[:top_n]
    users = log_.users
    col = {c: l for l, c in enumerate(library)}
    row = {u: i for i, u in enumerate(users)}
    costs = np.zeros((len(users), len(library)))
    for (u, c), k in log_.plays.items():
        if c in col:
            costs[row[u], col[c]] = k / per_user[u]
    return Preferences(costs, tuple(users), tuple(library))


def assign_profiles(n_users: int, profiles, seed: int) -> np.ndarray:
    """Give each of ``n_users`` a profile row drawn uniformly with replacement."""
    profiles = np.asarray(profiles, dtype=np.float64)
    if profiles.ndim != 2 or len(profiles) == 0:
        raise ValueError("need at least one profile row")
    pick = _rng(seed).integers(0, len(profiles), size=n_users)
    return profiles[pick].copy()


def build_instance(slotted: SlottedTrace | ReachabilityTrace, costs, capacities) -> Instance:
    """Assemble an instance; a scalar capacity applies to every station."""
    if isinstance(slotted, SlottedTrace):
        trace, n_stations = slotted.trace, len(slotted.aps)
    else:
        trace = slotted
        n_stations = 1 + max((f for rec in trace.slots for fs in rec.values() for f in fs), default=-1)
    if np.isscalar(capacities):
        capacities = [int(capacities)] * n_stations
    costs = np.asarray(costs, dtype=np.float64)
    return Instance(capacities, costs.shape[0], costs.shape[1], costs, trace)


# -- synthetic instances ----------------------------------------------------

@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of a seeded synthetic instance.

    Users walk on a ``cells[0] x cells[1]`` grid: each slot they stay put
    with ``stay_probability`` and otherwise step to a uniformly chosen
    4-neighbour.  Cell ``k`` (row-major) reaches stations
    ``k, k+1, ..., k+stations_per_cell-1`` modulo ``n_stations``, so
    consecutive cells share stations once ``stations_per_cell > 1``.
    ``n_stations`` of 0 means one station per cell.
    """

    n_users: int = 20
    n_contents: int = 20
    n_slots: int = 10
    cells: tuple = (3, 3)
    n_stations: int = 0
    stations_per_cell: int = 1
    stay_probability: float = 0.5
    zipf_exponent: float = 0.8
    preference_noise: float = 0.5
    capacity: int = 3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(int(x) for x in self.cells))
        if self.n_stations == 0:
            object.__setattr__(self, "n_stations", self.cells[0] * self.cells[1])
        for name in ("n_users", "n_contents", "n_slots", "n_stations", "stations_per_cell"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if len(self.cells) != 2 or min(self.cells) < 1:
            raise ValueError(f"cells must be two positive dimensions, got {self.cells}")
        if self.stations_per_cell > self.n_stations:
            raise ValueError("stations_per_cell exceeds n_stations")
        if not 0.0 <= self.stay_probability <= 1.0:
            raise ValueError("stay_probability must lie in [0, 1]")
        if not 0.0 <= self.preference_noise <= 1.0:
            raise ValueError("preference_noise must lie in [0, 1]")
        if not self.zipf_exponent >= 0:
            raise ValueError("zipf_exponent must be non-negative")
        if self.capacity < 0:
            raise ValueError("capacity must be non-negative")


def cell_stations(config: SyntheticConfig, cell: int) -> frozenset:
    return frozenset((cell + j) % config.n_stations for j in range(config.stations_per_cell))


def _neighbours(cell: int, rows: int, cols: int) -> list[int]:
    r, c = divmod(cell, cols)
    out = []
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        rr, cc = r + dr, c + dc
        if 0 <= rr < rows and 0 <= cc < cols:
            out.append(rr * cols + cc)
    return out


def zipf_preferences(n_users: int, n_contents: int, exponent: float, noise: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Row-normalized Zipf preferences with per-user partial rank shuffles."""
    base = 1.0 / np.arange(1, n_contents + 1, dtype=np.float64) ** exponent
    k = int(round(noise * n_contents))
    rows = np.empty((n_users, n_contents))
    for i in range(n_users):
        rank = np.arange(n_contents)
        if k > 1:
            chosen = rng.choice(n_contents, size=k, replace=False)
            rank[chosen] = rank[rng.permutation(chosen)]
        row = base[rank]
        rows[i] = row / row.sum()
    return rows


def generate_synthetic(config: SyntheticConfig) -> Instance:
    rng = _rng(config.seed)
    rows, cols = config.cells
    n_cells = rows * cols
    positions = np.empty((config.n_slots, config.n_users), dtype=np.int64)
    positions[0] = rng.integers(0, n_cells, size=config.n_users)
    for t in range(1, config.n_slots):
        for i in range(config.n_users):
            here = int(positions[t - 1, i])
            if rng.random() < config.stay_probability:
                positions[t, i] = here
                continue
            options = _neighbours(here, rows, cols)
            positions[t, i] = options[rng.integers(len(options))] if options else here
    reach = [cell_stations(config, k) for k in range(n_cells)]
    trace = ReachabilityTrace(
        tuple({i: reach[int(c)] for i, c in enumerate(positions[t])} for t in range(config.n_slots))
    )
    costs = zipf_preferences(config.n_users, config.n_contents, config.zipf_exponent,
                             config.preference_noise, rng)
    return Instance([config.capacity] * config.n_stations, config.n_users,
                    config.n_contents, costs, trace)


def random_instance(seed: int, max_stations: int = 3, max_contents: int = 6, max_users: int = 4,
                    max_slots: int = 4, max_capacity: int = 2, max_overlap: int = 3,
                    max_cost: int = 9) -> Instance:
    """Small random instance with integer costs and arbitrary overlapping reach sets.

    Sizes are drawn uniformly from ``1..max_*``; each (slot, user) reaches a
    uniformly sized random subset of at most ``max_overlap`` stations.
    """
    rng = _rng(seed)
    n_st = int(rng.integers(1, max_stations + 1))
    n_l = int(rng.integers(1, max_contents + 1))
    n_u = int(rng.integers(1, max_users + 1))
    n_t = int(rng.integers(1, max_slots + 1))
    caps = rng.integers(0, max_capacity + 1, size=n_st)
    costs = rng.integers(0, max_cost + 1, size=(n_u, n_l)).astype(np.float64)
    slots = []
    for _ in range(n_t):
        rec = {}
        for i in range(n_u):
            k = int(rng.integers(0, min(max_overlap, n_st) + 1))
            rec[i] = rng.choice(n_st, size=k, replace=False).tolist()
        slots.append(rec)
    return Instance(caps, n_u, n_l, costs, ReachabilityTrace(tuple(slots)))


# -- sojourn statistics -----------------------------------------------------

def sojourn_runs(instance: Instance) -> list[int]:
    """Lengths of maximal consecutive-slot runs of a station in a user's reach."""
    r = instance.reach_matrix
    runs = []
    for i in range(instance.n_users):
        for f in range(instance.n_stations):
            length = 0
            for t in range(instance.n_slots):
                if r[t, i, f]:
                    length += 1
                elif length:
                    runs.append(length)
                    length = 0
            if length:
                runs.append(length)
    return runs


def sojourn_cdf(instance: Instance) -> list[tuple[int, float]]:
    """Empirical CDF of sojourn run lengths as ``(length, fraction <= length)``."""
    runs = sojourn_runs(instance)
    if not runs:
        return []
    counts = Counter(runs)
    out = []
    acc = 0
    for length in sorted(counts):
        acc += counts[length]
        out.append((length, acc / len(runs)))
    return out
