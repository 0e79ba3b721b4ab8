"""Timetable and transfer-graph data model.

A network is the 4-tuple (stops, trips, routes, transfer graph).  Stops are
the first ``len(stops)`` vertices of the transfer graph.  All times are flat
integer seconds from the start of the service horizon; unreachable times are
the ``INF`` sentinel and never participate in arithmetic except through
``sat_add``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

INF = 2**62
"""Sentinel for unreachable / unknown times and distances."""


def sat_add(*terms: int) -> int:
    """Sum that saturates at INF: adding anything to the sentinel yields it."""
    total = 0
    for t in terms:
        if t >= INF:
            return INF
        total += t
    return min(total, INF)


class ContractViolation(ValueError):
    """An operation was called with arguments violating its precondition."""


class InfeasibleJourney(ValueError):
    """A journey's intermediate transfer does not leave enough buffer time."""


@dataclass(frozen=True)
class Stop:
    id: int
    buffer_time: int = 0


@dataclass(frozen=True)
class Trip:
    """One vehicle run: ``stop_sequence[i]`` is served with ``arrival_times[i]``
    and ``departure_times[i]``."""

    id: int
    stop_sequence: tuple[int, ...]
    arrival_times: tuple[int, ...]
    departure_times: tuple[int, ...]


@dataclass(frozen=True)
class Route:
    """Maximal non-overtaking group of trips sharing one stop sequence.
    ``trip_ids`` are ordered by departure at the first stop."""

    id: int
    stop_sequence: tuple[int, ...]
    trip_ids: tuple[int, ...]


class TransferGraph:
    """Directed weighted graph; parallel edges collapse to the minimum weight."""

    __slots__ = ("vertex_count", "_out", "_in", "edge_count")

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int, int]] = ()):
        self.vertex_count = vertex_count
        self._out: list[dict[int, int]] = [{} for _ in range(vertex_count)]
        self._in: list[dict[int, int]] = [{} for _ in range(vertex_count)]
        self.edge_count = 0
        for u, v, w in edges:
            self.add_edge(u, v, w)

    def add_edge(self, u: int, v: int, w: int) -> None:
        if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
            raise ContractViolation(f"edge ({u}, {v}) outside vertex range")
        old = self._out[u].get(v)
        if old is None:
            self.edge_count += 1
            self._out[u][v] = w
            self._in[v][u] = w
        elif w < old:
            self._out[u][v] = w
            self._in[v][u] = w

    def out_edges(self, u: int) -> Iterator[tuple[int, int]]:
        return iter(self._out[u].items())

    def in_edges(self, v: int) -> Iterator[tuple[int, int]]:
        return iter(self._in[v].items())

    def weight(self, u: int, v: int) -> Optional[int]:
        return self._out[u].get(v)

    def edges(self) -> Iterator[tuple[int, int, int]]:
        for u, nbrs in enumerate(self._out):
            for v, w in nbrs.items():
                yield u, v, w

    def sorted_edges(self) -> list[tuple[int, int, int]]:
        return sorted(self.edges())

    def reversed(self) -> "TransferGraph":
        g = TransferGraph(self.vertex_count)
        for u, v, w in self.edges():
            g.add_edge(v, u, w)
        return g


@dataclass(frozen=True)
class TripLeg:
    """Riding ``trip_id`` from position ``board_index`` to ``alight_index``."""

    trip_id: int
    board_index: int
    alight_index: int

    def __post_init__(self):
        if self.board_index >= self.alight_index:
            raise ContractViolation("trip leg must board before alighting")


@dataclass(frozen=True)
class Transfer:
    """A transfer of ``time`` seconds.

    ``path`` is the vertex list when the concrete route through the transfer
    graph is known; ``None`` marks an opaque transfer (a precomputed shortcut
    or a one-to-many distance) whose underlying path was discarded.  The empty
    transfer is ``Transfer(0, ())``.
    """

    time: int
    path: Optional[tuple[int, ...]] = None

    @property
    def is_empty(self) -> bool:
        return self.time == 0 and self.path is not None and len(self.path) <= 1


EMPTY_TRANSFER = Transfer(0, ())


@dataclass(frozen=True)
class Journey:
    """Alternating sequence of transfers and trip legs.

    ``transfers`` has exactly ``len(legs) + 1`` entries; the first and last
    may be empty.  ``depart`` anchors the departure time for pure-transfer
    journeys (no legs); otherwise the departure is derived from the first leg.
    """

    legs: tuple[TripLeg, ...]
    transfers: tuple[Transfer, ...]
    depart: int = 0

    def __post_init__(self):
        if len(self.transfers) != len(self.legs) + 1:
            raise ContractViolation("journey must alternate transfers and legs")

    @property
    def trip_count(self) -> int:
        return len(self.legs)


@dataclass(frozen=True)
class ParetoLabel:
    departure_time: int
    arrival_time: int
    trip_count: int


def dominates(a: ParetoLabel, b: ParetoLabel, strict: bool = False) -> bool:
    """Weak domination: a departs no earlier, arrives no later, uses no more
    trips.  Strict additionally requires at least one strict inequality."""
    weak = (
        a.departure_time >= b.departure_time
        and a.arrival_time <= b.arrival_time
        and a.trip_count <= b.trip_count
    )
    if not weak or not strict:
        return weak
    return (
        a.departure_time > b.departure_time
        or a.arrival_time < b.arrival_time
        or a.trip_count < b.trip_count
    )


def overtakes(trip_a: Trip, trip_b: Trip) -> bool:
    """True iff trip_a is earlier than trip_b at one position and later at
    another (arrival or departure each count)."""
    if trip_a.stop_sequence != trip_b.stop_sequence:
        raise ContractViolation("overtakes() requires identical stop sequences")
    earlier = later = False
    for aa, ad, ba, bd in zip(
        trip_a.arrival_times,
        trip_a.departure_times,
        trip_b.arrival_times,
        trip_b.departure_times,
    ):
        if aa < ba or ad < bd:
            earlier = True
        if aa > ba or ad > bd:
            later = True
        if earlier and later:
            return True
    return False


def partition_trips_into_routes(trips: Sequence[Trip]) -> list[Route]:
    """Group trips into routes: identical stop sequence, pairwise
    non-overtaking, ordered by departure at the first stop."""
    by_sequence: dict[tuple[int, ...], list[Trip]] = {}
    for t in trips:
        by_sequence.setdefault(t.stop_sequence, []).append(t)

    routes: list[Route] = []
    for seq in sorted(by_sequence):
        group = sorted(by_sequence[seq], key=lambda t: (t.departure_times[0], t.id))
        buckets: list[list[Trip]] = []
        current: list[Trip] = []
        for t in group:
            if current and any(overtakes(t, o) or overtakes(o, t) for o in current):
                buckets.append(current)
                current = []
            current.append(t)
        if current:
            buckets.append(current)
        for bucket in buckets:
            for a in bucket:
                for b in bucket:
                    if a is not b:
                        assert not overtakes(a, b)
            routes.append(Route(len(routes), seq, tuple(t.id for t in bucket)))
    return routes


@dataclass
class PublicTransitNetwork:
    stops: list[Stop]
    trips: list[Trip]
    routes: list[Route]
    transfer_graph: TransferGraph
    # per stop: (route_id, position) pairs, consistent with routes
    routes_by_stop: list[list[tuple[int, int]]] = field(default_factory=list)

    def __post_init__(self):
        if not self.routes_by_stop:
            self.routes_by_stop = [[] for _ in self.stops]
            for r in self.routes:
                for pos, v in enumerate(r.stop_sequence):
                    if 0 <= v < len(self.stops):
                        self.routes_by_stop[v].append((r.id, pos))

    @property
    def stop_count(self) -> int:
        return len(self.stops)

    def buffer(self, stop: int) -> int:
        return self.stops[stop].buffer_time

    def trip(self, trip_id: int) -> Trip:
        return self.trips[trip_id]

    def is_stop(self, v: int) -> bool:
        return 0 <= v < len(self.stops)

    def event_times(self) -> list[int]:
        """Sorted distinct departure times across all trips."""
        times = {d for t in self.trips for d in t.departure_times[:-1]}
        return sorted(times)


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.where}: {self.detail}"


def validate_network(net: PublicTransitNetwork) -> list[Violation]:
    """Check every model invariant; returns an empty list iff well-formed."""
    out: list[Violation] = []

    n_stops = len(net.stops)
    if net.transfer_graph.vertex_count < n_stops:
        out.append(
            Violation(
                "stop-vertex-range",
                "transfer_graph",
                f"{n_stops} stops but only {net.transfer_graph.vertex_count} vertices",
            )
        )
    for i, s in enumerate(net.stops):
        if s.id != i:
            out.append(Violation("stop-id", f"stop {i}", f"id {s.id} not dense"))
        if s.buffer_time < 0:
            out.append(
                Violation("negative-buffer", f"stop {i}", f"buffer {s.buffer_time}")
            )

    for i, t in enumerate(net.trips):
        if t.id != i:
            out.append(Violation("trip-id", f"trip {i}", f"id {t.id} not dense"))
        k = len(t.stop_sequence)
        if k < 2:
            out.append(Violation("short-trip", f"trip {i}", f"{k} stops"))
        if len(t.arrival_times) != k or len(t.departure_times) != k:
            out.append(Violation("time-length", f"trip {i}", "time list length mismatch"))
            continue
        for p, v in enumerate(t.stop_sequence):
            if not net.is_stop(v):
                out.append(
                    Violation("bad-stop-ref", f"trip {i} position {p}", f"stop {v}")
                )
        for p in range(k):
            if t.arrival_times[p] > t.departure_times[p]:
                out.append(
                    Violation(
                        "arrival-after-departure",
                        f"trip {i} position {p}",
                        f"arr {t.arrival_times[p]} > dep {t.departure_times[p]}",
                    )
                )
        for p in range(k - 1):
            if t.departure_times[p] > t.arrival_times[p + 1]:
                out.append(
                    Violation(
                        "non-monotone-times",
                        f"trip {i} position {p}",
                        f"dep {t.departure_times[p]} > next arr {t.arrival_times[p + 1]}",
                    )
                )

    seen_trips: dict[int, int] = {}
    for r in net.routes:
        trips = [net.trips[t] for t in r.trip_ids if t < len(net.trips)]
        for tid in r.trip_ids:
            if tid in seen_trips:
                out.append(
                    Violation(
                        "trip-in-two-routes",
                        f"trip {tid}",
                        f"routes {seen_trips[tid]} and {r.id}",
                    )
                )
            seen_trips[tid] = r.id
        for t in trips:
            if t.stop_sequence != r.stop_sequence:
                out.append(
                    Violation("route-sequence", f"route {r.id}", f"trip {t.id} differs")
                )
        for a in range(len(trips)):
            for b in range(len(trips)):
                if a != b and trips[a].stop_sequence == trips[b].stop_sequence:
                    if overtakes(trips[a], trips[b]):
                        out.append(
                            Violation(
                                "overtaking",
                                f"route {r.id}",
                                f"trip {trips[a].id} overtakes {trips[b].id}",
                            )
                        )
        deps = [
            net.trips[t].departure_times[0]
            for t in r.trip_ids
            if t < len(net.trips)
        ]
        if deps != sorted(deps):
            out.append(Violation("route-trip-order", f"route {r.id}", "not by departure"))
    if len(seen_trips) != len(net.trips):
        missing = sorted(set(range(len(net.trips))) - set(seen_trips))
        out.append(Violation("unrouted-trips", "routes", f"trips {missing}"))

    for u, v, w in net.transfer_graph.edges():
        if w < 0:
            out.append(
                Violation("negative-transfer-time", f"edge ({u}, {v})", f"time {w}")
            )

    index: list[list[tuple[int, int]]] = [[] for _ in net.stops]
    for r in net.routes:
        for pos, v in enumerate(r.stop_sequence):
            if 0 <= v < n_stops:
                index[v].append((r.id, pos))
    for v in range(n_stops):
        if sorted(index[v]) != sorted(net.routes_by_stop[v]):
            out.append(Violation("stale-index", f"stop {v}", "routes_by_stop mismatch"))

    return out


def journey_signature(net: PublicTransitNetwork, j: Journey) -> ParetoLabel:
    """(departure, arrival, trip count) of a journey; raises
    InfeasibleJourney when an intermediate transfer leaves too little buffer."""
    if not j.legs:
        return ParetoLabel(j.depart, sat_add(j.depart, j.transfers[0].time), 0)

    first = j.legs[0]
    first_trip = net.trip(first.trip_id)
    board_stop = first_trip.stop_sequence[first.board_index]
    departure = (
        first_trip.departure_times[first.board_index]
        - net.buffer(board_stop)
        - j.transfers[0].time
    )

    for i in range(len(j.legs) - 1):
        leg_a, leg_b = j.legs[i], j.legs[i + 1]
        trip_a, trip_b = net.trip(leg_a.trip_id), net.trip(leg_b.trip_id)
        arr = trip_a.arrival_times[leg_a.alight_index]
        dep = trip_b.departure_times[leg_b.board_index]
        b_stop = trip_b.stop_sequence[leg_b.board_index]
        theta = j.transfers[i + 1].time
        if sat_add(arr, theta, net.buffer(b_stop)) > dep:
            raise InfeasibleJourney(
                f"transfer after leg {i}: {arr} + {theta} + buf({b_stop})="
                f"{net.buffer(b_stop)} > {dep}"
            )

    last = j.legs[-1]
    last_trip = net.trip(last.trip_id)
    arrival = sat_add(last_trip.arrival_times[last.alight_index], j.transfers[-1].time)
    return ParetoLabel(departure, arrival, len(j.legs))


def validate_journey(net: PublicTransitNetwork, j: Journey) -> list[str]:
    """Full structural check: leg indices, transfer endpoints, path edge
    existence and time sums (for non-opaque transfers), buffer feasibility."""
    problems: list[str] = []
    g = net.transfer_graph

    def check_path(tr: Transfer, where: str, start: Optional[int], end: Optional[int]):
        if tr.time < 0:
            problems.append(f"{where}: negative transfer time")
        if tr.path is None:
            return
        p = tr.path
        if len(p) <= 1:
            if tr.time != 0:
                problems.append(f"{where}: empty path with nonzero time")
            return
        if start is not None and p[0] != start:
            problems.append(f"{where}: path starts at {p[0]}, expected {start}")
        if end is not None and p[-1] != end:
            problems.append(f"{where}: path ends at {p[-1]}, expected {end}")
        total = 0
        for a, b in zip(p, p[1:]):
            w = g.weight(a, b)
            if w is None:
                problems.append(f"{where}: missing edge ({a}, {b})")
                return
            total += w
        if total != tr.time:
            problems.append(f"{where}: path time {total} != stated {tr.time}")

    for i, leg in enumerate(j.legs):
        if not (0 <= leg.trip_id < len(net.trips)):
            problems.append(f"leg {i}: unknown trip {leg.trip_id}")
            continue
        trip = net.trip(leg.trip_id)
        if not (0 <= leg.board_index < leg.alight_index < len(trip.stop_sequence)):
            problems.append(f"leg {i}: indices out of range")

    if problems:
        return problems

    for i, tr in enumerate(j.transfers):
        start = end = None
        if i > 0:
            leg = j.legs[i - 1]
            start = net.trip(leg.trip_id).stop_sequence[leg.alight_index]
        if i < len(j.legs):
            leg = j.legs[i]
            end = net.trip(leg.trip_id).stop_sequence[leg.board_index]
        check_path(tr, f"transfer {i}", start, end)

    try:
        journey_signature(net, j)
    except InfeasibleJourney as e:
        problems.append(str(e))
    return problems


def prune_pareto(labels: Iterable[ParetoLabel]) -> list[ParetoLabel]:
    """Keep one label per trip count (earliest arrival), drop dominated ones;
    result sorted by trip count with strictly decreasing arrival times."""
    best: dict[int, ParetoLabel] = {}
    for lab in labels:
        if lab.arrival_time >= INF:
            continue
        cur = best.get(lab.trip_count)
        if cur is None or lab.arrival_time < cur.arrival_time:
            best[lab.trip_count] = lab
    out: list[ParetoLabel] = []
    floor = INF
    for k in sorted(best):
        lab = best[k]
        if lab.arrival_time < floor:
            out.append(lab)
            floor = lab.arrival_time
    return out
