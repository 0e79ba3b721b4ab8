"""Network directory loading/saving and binary shortcut persistence.

A network directory holds five CSV files: stops.csv, trips.csv,
stop_times.csv, transfer_edges.csv, and meta.csv.  Shortcut sets go into a
small binary format (magic "ULSC") with a trailing checksum.
"""

from __future__ import annotations

import csv
import hashlib
import os
import struct
from fractions import Fraction
from typing import Optional

from .model import (
    PublicTransitNetwork,
    Stop,
    TransferGraph,
    Trip,
    partition_trips_into_routes,
    validate_network,
)
from .shortcuts import ShortcutGraph

SHORTCUT_MAGIC = b"ULSC"
SHORTCUT_VERSION = 1


class NetworkFormatError(Exception):
    """Base class for ingestion failures."""


class MissingFileError(NetworkFormatError):
    pass


class MalformedRowError(NetworkFormatError):
    def __init__(self, path: str, line: int, detail: str):
        super().__init__(f"{path}:{line}: {detail}")
        self.path = path
        self.line = line


class NetworkValidationError(NetworkFormatError):
    def __init__(self, violations):
        super().__init__("; ".join(str(v) for v in violations[:5]))
        self.violations = violations


class ShortcutFileError(Exception):
    pass


def _scale_time(w: int, scale: Fraction) -> int:
    q = Fraction(w) * scale
    return int(q + Fraction(1, 2))  # round half up; times are non-negative


def _read_rows(directory: str, name: str, columns: list[str]):
    path = os.path.join(directory, name)
    if not os.path.exists(path):
        raise MissingFileError(f"missing {name} in {directory}")
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRowError(path, 1, "empty file")
        if [h.strip() for h in header] != columns:
            raise MalformedRowError(path, 1, f"expected header {','.join(columns)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise MalformedRowError(path, lineno, f"expected {len(columns)} fields")
            yield path, lineno, row


def _int_field(path: str, lineno: int, name: str, raw: str, minimum: Optional[int] = 0) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise MalformedRowError(path, lineno, f"{name} is not an integer: {raw!r}")
    if minimum is not None and value < minimum:
        raise MalformedRowError(path, lineno, f"{name} must be >= {minimum}, got {value}")
    return value


def load_network(
    directory: str, transfer_time_scale: Fraction = Fraction(1)
) -> PublicTransitNetwork:
    """Load and validate a network directory; routes are derived, not read."""
    stops: list[Stop] = []
    for path, lineno, row in _read_rows(directory, "stops.csv", ["stop_id", "buffer_time"]):
        sid = _int_field(path, lineno, "stop_id", row[0])
        buf = _int_field(path, lineno, "buffer_time", row[1])
        stops.append(Stop(sid, buf))
    stops.sort(key=lambda s: s.id)

    declared_trips: list[int] = []
    for path, lineno, row in _read_rows(directory, "trips.csv", ["trip_id"]):
        declared_trips.append(_int_field(path, lineno, "trip_id", row[0]))

    events: dict[int, list[tuple[int, int, int, int]]] = {}
    for path, lineno, row in _read_rows(
        directory, "stop_times.csv", ["trip_id", "seq", "stop_id", "arrival", "departure"]
    ):
        tid = _int_field(path, lineno, "trip_id", row[0])
        seq = _int_field(path, lineno, "seq", row[1])
        sid = _int_field(path, lineno, "stop_id", row[2])
        arr = _int_field(path, lineno, "arrival", row[3])
        dep = _int_field(path, lineno, "departure", row[4])
        events.setdefault(tid, []).append((seq, sid, arr, dep))

    if sorted(events) != sorted(declared_trips):
        raise MalformedRowError(
            os.path.join(directory, "stop_times.csv"),
            1,
            "trip ids do not match trips.csv",
        )
    trips: list[Trip] = []
    for tid in sorted(events):
        rows = sorted(events[tid])
        trips.append(
            Trip(
                tid,
                tuple(r[1] for r in rows),
                tuple(r[2] for r in rows),
                tuple(r[3] for r in rows),
            )
        )

    meta_rows = list(_read_rows(directory, "meta.csv", ["vertex_count", "horizon"]))
    if len(meta_rows) != 1:
        raise MalformedRowError(os.path.join(directory, "meta.csv"), 2, "expected one row")
    path, lineno, row = meta_rows[0]
    vertex_count = _int_field(path, lineno, "vertex_count", row[0], minimum=len(stops))
    _int_field(path, lineno, "horizon", row[1])

    graph = TransferGraph(vertex_count)
    for path, lineno, row in _read_rows(
        directory, "transfer_edges.csv", ["from", "to", "transfer_time"]
    ):
        u = _int_field(path, lineno, "from", row[0])
        v = _int_field(path, lineno, "to", row[1])
        w = _int_field(path, lineno, "transfer_time", row[2])
        if u >= vertex_count or v >= vertex_count:
            raise MalformedRowError(path, lineno, f"edge ({u}, {v}) outside vertex range")
        graph.add_edge(u, v, _scale_time(w, transfer_time_scale))

    routes = partition_trips_into_routes(trips)
    net = PublicTransitNetwork(stops, trips, routes, graph)
    violations = validate_network(net)
    if violations:
        raise NetworkValidationError(violations)
    return net


def save_network(net: PublicTransitNetwork, directory: str) -> None:
    """Canonical CSV writer: sorted rows, stable headers."""
    os.makedirs(directory, exist_ok=True)

    def write(name: str, header: list[str], rows) -> None:
        with open(os.path.join(directory, name), "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            w.writerows(rows)

    write("stops.csv", ["stop_id", "buffer_time"], ((s.id, s.buffer_time) for s in net.stops))
    write("trips.csv", ["trip_id"], ((t.id,) for t in net.trips))
    write(
        "stop_times.csv",
        ["trip_id", "seq", "stop_id", "arrival", "departure"],
        (
            (t.id, p, t.stop_sequence[p], t.arrival_times[p], t.departure_times[p])
            for t in net.trips
            for p in range(len(t.stop_sequence))
        ),
    )
    write(
        "transfer_edges.csv",
        ["from", "to", "transfer_time"],
        net.transfer_graph.sorted_edges(),
    )
    horizon = max((t.arrival_times[-1] for t in net.trips), default=0)
    write(
        "meta.csv",
        ["vertex_count", "horizon"],
        [(net.transfer_graph.vertex_count, horizon)],
    )


def save_shortcuts(path: str, g: ShortcutGraph) -> None:
    edges = g.sorted_edges()
    body = SHORTCUT_MAGIC + struct.pack(
        "<III", SHORTCUT_VERSION, g.stop_count, len(edges)
    )
    body += b"".join(struct.pack("<III", u, v, w) for u, v, w in edges)
    checksum = hashlib.sha256(body).digest()[:8]
    with open(path, "wb") as f:
        f.write(body + checksum)


def load_shortcuts(path: str) -> ShortcutGraph:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 24 or data[:4] != SHORTCUT_MAGIC:
        raise ShortcutFileError("not a shortcut file (bad magic)")
    body, checksum = data[:-8], data[-8:]
    if hashlib.sha256(body).digest()[:8] != checksum:
        raise ShortcutFileError("checksum mismatch")
    version, stop_count, edge_count = struct.unpack_from("<III", body, 4)
    if version != SHORTCUT_VERSION:
        raise ShortcutFileError(f"unsupported version {version}")
    expected = 16 + 12 * edge_count
    if len(body) != expected:
        raise ShortcutFileError(f"truncated: {len(body)} bytes, expected {expected}")
    g = ShortcutGraph(stop_count)
    for i in range(edge_count):
        u, v, w = struct.unpack_from("<III", body, 16 + 12 * i)
        g.add(u, v, w)
    return g
