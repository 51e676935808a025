"""Line-oriented text formats for instances and placements.

Instance file::

    stations 2
    capacities 1 1
    users 2
    contents 3
    slots 2
    slot_seconds 20
    cost 0 0 8
    reach 0 0 0
    reach 1 0 1

``cost <user> <content> <value>`` lines default to 0 when absent and
``reach <slot> <user> <bs>[,<bs>...]`` lines default to the empty set.  All
ids, including slots, are 0-based.  Blank lines and lines starting with
``#`` are ignored.

Placement file: one ``cache <bs> <content>[,<content>...]`` line per station
(a station with no third field caches nothing).
"""
from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .model import Instance, InstanceError, Placement, PlacementError, ReachabilityTrace

__all__ = [
    "FormatError",
    "dumps_instance",
    "loads_instance",
    "read_instance",
    "write_instance",
    "dumps_placement",
    "loads_placement",
    "read_placement",
    "write_placement",
    "format_float",
]

_HEADERS = ("stations", "capacities", "users", "contents", "slots", "slot_seconds")


class FormatError(ValueError):
    """Malformed text input; the message names the line number."""


def format_float(x: float) -> str:
    """Shortest round-tripping text for ``x``; integral values drop the ``.0``."""
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def _lines(source) -> Iterable[tuple[int, list[str]]]:
    if isinstance(source, str):
        source = io.StringIO(source)
    for lineno, raw in enumerate(source, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def _ids(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x != ""]


def loads_instance(text: str | TextIO) -> Instance:
    header: dict = {}
    costs: dict = {}
    reach: dict = {}
    for lineno, parts in _lines(text):
        key = parts[0]
        try:
            if key in _HEADERS:
                if key in header:
                    raise FormatError(f"line {lineno}: duplicate '{key}' header")
                if key == "capacities":
                    header[key] = [int(x) for x in parts[1:]]
                elif key == "slot_seconds":
                    (value,) = parts[1:]
                    header[key] = float(value)
                else:
                    (value,) = parts[1:]
                    header[key] = int(value)
            elif key == "cost":
                _, u, l, v = parts
                costs[int(u), int(l)] = float(v)
            elif key == "reach":
                if len(parts) == 3:
                    parts = parts + [""]
                _, t, u, fs = parts
                reach.setdefault(int(t), {})[int(u)] = _ids(fs)
            else:
                raise FormatError(f"line {lineno}: unknown record '{key}'")
        except FormatError:
            raise
        except ValueError as exc:
            raise FormatError(f"line {lineno}: malformed '{key}' record ({exc})") from None

    missing = [h for h in _HEADERS if h not in header and h != "slot_seconds"]
    if missing:
        raise FormatError(f"missing header(s): {', '.join(missing)}")
    n_stations = header["stations"]
    if len(header["capacities"]) != n_stations:
        raise FormatError(
            f"'capacities' lists {len(header['capacities'])} values for {n_stations} stations"
        )
    n_users, n_contents, n_slots = header["users"], header["contents"], header["slots"]
    matrix = np.zeros((max(n_users, 0), max(n_contents, 0)))
    for (u, l), v in costs.items():
        if not (0 <= u < n_users and 0 <= l < n_contents):
            raise InstanceError(f"cost entry for user {u}, content {l} out of range")
        matrix[u, l] = v
    for t in reach:
        if not 0 <= t < n_slots:
            raise InstanceError(f"reach record for slot {t} outside 0..{n_slots - 1}")
    trace = ReachabilityTrace(
        tuple(reach.get(t, {}) for t in range(n_slots)),
        header.get("slot_seconds", 20.0),
    )
    return Instance(header["capacities"], n_users, n_contents, matrix, trace)


def dumps_instance(instance: Instance, comments: Iterable[str] = ()) -> str:
    out = [f"# {c}" for c in comments]
    out += [
        f"stations {instance.n_stations}",
        "capacities " + " ".join(str(c) for c in instance.capacities),
        f"users {instance.n_users}",
        f"contents {instance.library_size}",
        f"slots {instance.n_slots}",
        f"slot_seconds {format_float(instance.trace.slot_seconds)}",
    ]
    for u, l in zip(*np.nonzero(instance.costs)):
        out.append(f"cost {u} {l} {format_float(instance.costs[u, l])}")
    for t, rec in enumerate(instance.trace.slots):
        for u in sorted(rec):
            if rec[u]:
                out.append(f"reach {t} {u} " + ",".join(str(f) for f in sorted(rec[u])))
    return "\n".join(out) + "\n"


def read_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return loads_instance(fh)


def write_instance(path, instance: Instance, comments: Iterable[str] = ()) -> None:
    Path(path).write_text(dumps_instance(instance, comments), encoding="utf-8")


def loads_placement(text: str | TextIO, n_stations: int) -> Placement:
    cached: dict = {}
    for lineno, parts in _lines(text):
        if parts[0] != "cache" or len(parts) not in (2, 3):
            raise FormatError(f"line {lineno}: expected 'cache <bs_id> <content_id>[,...]'")
        try:
            f = int(parts[1])
            contents = _ids(parts[2]) if len(parts) == 3 else []
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        if f in cached:
            raise FormatError(f"line {lineno}: station {f} listed twice")
        if not 0 <= f < n_stations:
            raise PlacementError(f"line {lineno}: unknown station {f}")
        cached[f] = contents
    return Placement.from_mapping(n_stations, cached)


def dumps_placement(placement: Placement) -> str:
    lines = []
    for f, contents in enumerate(placement.cached):
        ids = ",".join(str(l) for l in sorted(contents))
        lines.append(f"cache {f} {ids}".rstrip())
    return "\n".join(lines) + "\n"


def read_placement(path, n_stations: int) -> Placement:
    with open(path, encoding="utf-8") as fh:
        return loads_placement(fh, n_stations)


def write_placement(path, placement: Placement) -> None:
    Path(path).write_text(dumps_placement(placement), encoding="utf-8")
