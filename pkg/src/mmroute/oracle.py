"""Ground truth and test instrumentation.

``ParetoOracle`` enumerates exact Pareto sets by label correction over
(vertex, trips used) states with full all-pairs transfer distances.  It
deliberately shares nothing with the production engines beyond the data
model: its Dijkstra is inlined here, it never sees the core graph, the
hierarchy, or the shortcut set.

``generate_network`` builds seeded random networks for property testing and
``verify_sufficiency`` replays sampled queries against the oracle.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .model import (
    INF,
    Journey,
    ParetoLabel,
    PublicTransitNetwork,
    Stop,
    Transfer,
    TransferGraph,
    Trip,
    TripLeg,
    partition_trips_into_routes,
    prune_pareto,
    sat_add,
    validate_network,
    EMPTY_TRANSFER,
)

DEFAULT_MAX_TRIPS = 8


def _distances(g: TransferGraph, source: int, reverse: bool = False) -> list[int]:
    # private single-source Dijkstra: the oracle must not lean on engine code
    dist = [INF] * g.vertex_count
    dist[source] = 0
    heap = [(0, source)]
    edges = g.in_edges if reverse else g.out_edges
    while heap:
        k, u = heapq.heappop(heap)
        if k > dist[u]:
            continue
        for v, w in edges(u):
            if k + w < dist[v]:
                dist[v] = k + w
                heapq.heappush(heap, (k + w, v))
    return dist


class ParetoOracle:
    """Exhaustive Pareto enumeration for fixed departure time queries."""

    def __init__(self, net: PublicTransitNetwork, max_trips: int = DEFAULT_MAX_TRIPS):
        self.net = net
        self.max_trips = max_trips
        self._fwd_rows: dict[int, list[int]] = {}
        self._bwd_rows: dict[int, list[int]] = {}

    def _row(self, v: int) -> list[int]:
        row = self._fwd_rows.get(v)
        if row is None:
            row = _distances(self.net.transfer_graph, v)
            self._fwd_rows[v] = row
        return row

    def _rev_row(self, v: int) -> list[int]:
        row = self._bwd_rows.get(v)
        if row is None:
            row = _distances(self.net.transfer_graph, v, reverse=True)
            self._bwd_rows[v] = row
        return row

    def query(
        self, s: int, t: int, dep: int, max_trips: Optional[int] = None
    ) -> list[ParetoLabel]:
        labels, _ = self._run(s, t, dep, max_trips, with_journeys=False)
        return labels

    def query_with_journeys(
        self, s: int, t: int, dep: int, max_trips: Optional[int] = None
    ) -> tuple[list[ParetoLabel], list[Journey]]:
        return self._run(s, t, dep, max_trips, with_journeys=True)

    def _run(self, s, t, dep, max_trips, with_journeys):
        net = self.net
        sc = net.stop_count
        cap = self.max_trips if max_trips is None else max_trips
        buf = [st.buffer_time for st in net.stops]
        ds = self._row(s)
        dts = self._rev_row(t)

        # W[v]: earliest time ready to be at stop v (before buffer) with k trips
        W = [sat_add(dep, ds[v]) for v in range(sc)]
        w_origin: list[list[int]] = [[-1] * sc]  # alight stop behind each W label
        arrs = [sat_add(dep, ds[t])]
        b_layers: list[tuple[list[int], dict[int, tuple[int, int, int, int]]]] = [
            ([INF] * sc, {})
        ]
        vias = [-1]

        for _k in range(1, cap + 1):
            B = [INF] * sc
            bpar: dict[int, tuple[int, int, int, int]] = {}
            for trip in net.trips:
                seq = trip.stop_sequence
                for i in range(len(seq) - 1):
                    v = seq[i]
                    if W[v] < INF and W[v] + buf[v] <= trip.departure_times[i]:
                        for j in range(i + 1, len(seq)):
                            a = trip.arrival_times[j]
                            if a < B[seq[j]]:
                                B[seq[j]] = a
                                bpar[seq[j]] = (trip.id, i, j, v)
                        break
            arr_k = INF
            via_k = -1
            for u in range(sc):
                if B[u] < INF:
                    cand = sat_add(B[u], dts[u])
                    if cand < arr_k:
                        arr_k = cand
                        via_k = u
            newW = [INF] * sc
            origin = [-1] * sc
            for u in range(sc):
                if B[u] < INF:
                    row = self._row(u)
                    for v in range(sc):
                        cand = sat_add(B[u], row[v])
                        if cand < newW[v]:
                            newW[v] = cand
                            origin[v] = u
            W = newW
            w_origin.append(origin)
            arrs.append(arr_k)
            b_layers.append((B, bpar))
            vias.append(via_k)

        labels = prune_pareto(
            ParetoLabel(dep, arrs[k], k) for k in range(len(arrs))
        )
        journeys: list[Journey] = []
        if with_journeys:
            for lab in labels:
                journeys.append(
                    self._backtrack(s, t, dep, lab, b_layers, w_origin, vias, buf)
                )
        return labels, journeys

    def _backtrack(self, s, t, dep, lab, b_layers, w_origin, vias, buf) -> Journey:
        net = self.net
        k = lab.trip_count
        if k == 0:
            theta = lab.arrival_time - dep
            tr = EMPTY_TRANSFER if theta == 0 and s == t else Transfer(theta)
            return Journey((), (tr,), dep)
        legs: list[TripLeg] = []
        via = vias[k]
        transfers: list[Transfer] = [Transfer(lab.arrival_time - b_layers[k][0][via])]
        cur = via
        kk = k
        while True:
            tid, i, j, bstop = b_layers[kk][1][cur]
            legs.insert(0, TripLeg(tid, i, j))
            trip = net.trips[tid]
            if kk == 1:
                transfers.insert(0, Transfer(trip.departure_times[i] - buf[bstop] - dep))
                break
            # ready label at the board stop with one fewer trip
            prev_origin = w_origin[kk - 1][bstop]
            prev_b = b_layers[kk - 1][0]
            ready = sat_add(prev_b[prev_origin], self._row(prev_origin)[bstop])
            transfers.insert(0, Transfer(ready - prev_b[prev_origin]))
            cur = prev_origin
            kk -= 1
        return Journey(tuple(legs), tuple(transfers), dep)


def enumerate_pareto(
    net: PublicTransitNetwork,
    s: int,
    t: int,
    dep: int,
    max_trips: int = DEFAULT_MAX_TRIPS,
) -> tuple[list[ParetoLabel], list[Journey]]:
    """One-shot oracle query; use :class:`ParetoOracle` for repeated queries."""
    return ParetoOracle(net, max_trips).query_with_journeys(s, t, dep)


# -- seeded network generation ------------------------------------------------


@dataclass
class GeneratorParams:
    seed: int = 0
    stop_count: int = 10
    extra_vertices: int = 10
    edge_density: float = 1.5  # expected out-degree over non-isolated vertices
    route_count: int = 5
    trips_per_route: int = 3
    horizon: int = 36000
    buffer_range: tuple[int, int] = (0, 120)
    isolated_probability: float = 0.0
    zero_edge_probability: float = 0.05
    transfer_time_scale: Fraction = Fraction(1)
    # "uniform": random ordered pairs (good for adversarial small instances);
    # "euclidean": k-nearest-neighbour graph over random points, which behaves
    # like a walking network and contracts well at larger sizes
    geometry: str = "uniform"

    def __post_init__(self):
        if self.stop_count < 2:
            raise ValueError("need at least two stops")
        if self.horizon < 3600:
            raise ValueError("horizon too small for trip generation")


def _scale_time(w: int, scale: Fraction) -> int:
    q = Fraction(w) * scale
    return int(q + Fraction(1, 2)) if q >= 0 else -int(-q + Fraction(1, 2))


def generate_network(params: GeneratorParams) -> PublicTransitNetwork:
    rng = random.Random(params.seed)
    sc = params.stop_count
    n = sc + params.extra_vertices

    stops = [Stop(i, rng.randint(*params.buffer_range)) for i in range(sc)]
    isolated = {i for i in range(sc) if rng.random() < params.isolated_probability}
    eligible = [v for v in range(n) if v not in isolated]

    edges: dict[tuple[int, int], int] = {}
    if len(eligible) >= 2 and params.geometry == "euclidean":
        k = max(1, round(params.edge_density))
        pos = {v: (rng.random(), rng.random()) for v in eligible}
        cell = max(0.02, (k / max(1, len(eligible))) ** 0.5)
        grid: dict[tuple[int, int], list[int]] = {}
        for v in eligible:
            x, y = pos[v]
            grid.setdefault((int(x / cell), int(y / cell)), []).append(v)
        for v in eligible:
            x, y = pos[v]
            cx, cy = int(x / cell), int(y / cell)
            ring = 1
            cand: list[int] = []
            while len(cand) <= k and ring < 2 / cell:
                cand = [
                    u
                    for dx in range(-ring, ring + 1)
                    for dy in range(-ring, ring + 1)
                    for u in grid.get((cx + dx, cy + dy), [])
                    if u != v
                ]
                ring += 1
            cand.sort(key=lambda u: ((pos[u][0] - x) ** 2 + (pos[u][1] - y) ** 2, u))
            for u in cand[:k]:
                d = ((pos[u][0] - x) ** 2 + (pos[u][1] - y) ** 2) ** 0.5
                w = _scale_time(max(1, int(d * 3000)), params.transfer_time_scale)
                edges.setdefault((v, u), w)
                edges.setdefault((u, v), w)
    elif len(eligible) >= 2:
        target = int(params.edge_density * len(eligible))
        for _ in range(target * 4):
            if len(edges) >= target:
                break
            u = rng.choice(eligible)
            v = rng.choice(eligible)
            if u == v or (u, v) in edges:
                continue
            w = 0 if rng.random() < params.zero_edge_probability else rng.randint(30, 600)
            edges[(u, v)] = _scale_time(w, params.transfer_time_scale)
    graph = TransferGraph(n, ((u, v, w) for (u, v), w in sorted(edges.items())))

    trips: list[Trip] = []
    for _r in range(params.route_count):
        length = rng.randint(2, max(2, min(6, sc)))
        seq = tuple(rng.sample(range(sc), length))
        # one shape per template; shifted copies can never overtake each other
        travel = [rng.randint(30, 900) for _ in range(length - 1)]
        dwell = [rng.randint(0, 60) for _ in range(length)]
        start = rng.randint(0, params.horizon // 2)
        for _i in range(params.trips_per_route):
            arr = [start]
            dep = [start + dwell[0]]
            for p in range(1, length):
                arr.append(dep[-1] + travel[p - 1])
                dep.append(arr[-1] + (dwell[p] if p < length - 1 else 0))
            trips.append(Trip(len(trips), seq, tuple(arr), tuple(dep)))
            start += rng.randint(60, 1800)

    routes = partition_trips_into_routes(trips)
    net = PublicTransitNetwork(stops, trips, routes, graph)
    violations = validate_network(net)
    assert not violations, violations
    return net


# -- sufficiency verification -------------------------------------------------


@dataclass
class SampleSpec:
    seed: int = 0
    max_pairs: int = 500
    all_pairs_limit: int = 25
    max_departures: Optional[int] = 8


@dataclass
class SufficiencyReport:
    checked: int = 0
    mismatches: list = field(default_factory=list)
    shortcut_count: int = 0
    used_shortcuts: set = field(default_factory=set)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def superfluous_count(self) -> int:
        return self.shortcut_count - len(self.used_shortcuts)


def sample_queries(
    net: PublicTransitNetwork, spec: SampleSpec
) -> list[tuple[int, int, int]]:
    """Deterministic (source, target, departure) sample per the spec's rules."""
    rng = random.Random(spec.seed)
    sc = net.stop_count
    if sc <= spec.all_pairs_limit:
        pairs = [(s, t) for s in range(sc) for t in range(sc) if s != t]
    else:
        pairs = []
        seen = set()
        while len(pairs) < spec.max_pairs:
            s = rng.randrange(sc)
            t = rng.randrange(sc)
            if s != t and (s, t) not in seen:
                seen.add((s, t))
                pairs.append((s, t))
    deps = net.event_times()
    deps = sorted({0, *deps, (deps[-1] + 1) if deps else 1})
    if spec.max_departures is not None and len(deps) > spec.max_departures:
        deps = sorted(rng.sample(deps, spec.max_departures))
    return [(s, t, d) for s, t in pairs for d in deps]


def verify_sufficiency(
    net: PublicTransitNetwork,
    shortcuts,
    spec: SampleSpec = SampleSpec(),
) -> SufficiencyReport:
    """Compare shortcut-restricted Pareto sets against the oracle on a sample."""
    from .ch import build_buckets, contract_full
    from .queries import Timetable, ultra_raptor_query

    sc = net.stop_count
    ch = contract_full(net.transfer_graph)
    fwd = build_buckets(ch, range(sc))
    bwd = build_buckets(ch, range(sc), reverse=True)
    tt = Timetable(net)
    oracle = ParetoOracle(net)
    report = SufficiencyReport(shortcut_count=len(shortcuts.edges))

    for s, t, dep in sample_queries(net, spec):
        expected = oracle.query(s, t, dep)
        got = ultra_raptor_query(net, shortcuts, fwd, bwd, ch, s, t, dep, tt=tt)
        report.checked += 1
        if got.labels != expected:
            report.mismatches.append((s, t, dep, expected, got.labels))
            continue
        for j in got.journeys:
            for i in range(1, len(j.legs)):
                prev = j.legs[i - 1]
                leg = j.legs[i]
                u = net.trips[prev.trip_id].stop_sequence[prev.alight_index]
                v = net.trips[leg.trip_id].stop_sequence[leg.board_index]
                if u != v:
                    report.used_shortcuts.add((u, v))
    return report
