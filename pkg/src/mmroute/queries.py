"""Point-to-point query engines.

Six engines over one network:

- ``raptor_query`` / ``csa_query``: stop-to-stop baselines that require a
  transitively closed stop transfer graph.
- ``mr_inf_query`` / ``mcsa_query``: multi-modal engines interleaving route or
  connection scans with Dijkstra searches on the core graph; exact over the
  full transfer graph.
- ``ultra_raptor_query`` / ``ultra_csa_query``: replace the core searches with
  precomputed shortcut edges plus bucket-based initial/final transfers.

RAPTOR-family engines return a :class:`QueryResult` with reconstructable
journeys; CSA-family engines return the earliest arrival time only.
"""

from __future__ import annotations

import time
from bisect import bisect_left
from dataclasses import dataclass
from typing import Optional

from .ch import BucketStore, ContractionHierarchy, CoreGraph, pruned_pair_query
from .graph import dijkstra
from .model import (
    INF,
    ContractViolation,
    EMPTY_TRANSFER,
    Journey,
    ParetoLabel,
    PublicTransitNetwork,
    Transfer,
    TransferGraph,
    TripLeg,
    sat_add,
)
from .shortcuts import ShortcutGraph

_ROUND_CAP = 30


@dataclass
class QueryResult:
    source: int
    target: int
    departure: int
    labels: list[ParetoLabel]
    journeys: list[Journey]


def reconstruct_journey(result: QueryResult, label: ParetoLabel) -> Journey:
    """The journey realizing ``label``; the label must belong to the result."""
    for lab, j in zip(result.labels, result.journeys):
        if lab == label:
            return j
    raise ContractViolation(f"label {label} not in result")


@dataclass
class ConnectionArray:
    """Elementary trip segments sorted ascending by departure time.

    Each entry is (dep_stop, arr_stop, dep_time, arr_time, trip_id).
    """

    connections: list[tuple[int, int, int, int, int]]

    def first_departing_at(self, t: int) -> int:
        lo, hi = 0, len(self.connections)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.connections[mid][2] < t:
                lo = mid + 1
            else:
                hi = mid
        return lo


def build_connections(net: PublicTransitNetwork) -> ConnectionArray:
    conns = []
    for t in net.trips:
        for p in range(len(t.stop_sequence) - 1):
            conns.append(
                (
                    t.stop_sequence[p],
                    t.stop_sequence[p + 1],
                    t.departure_times[p],
                    t.arrival_times[p + 1],
                    t.id,
                )
            )
    conns.sort(key=lambda c: (c[2], c[3], c[4]))
    return ConnectionArray(conns)


class Timetable:
    """Route-major view of the trips, built once and shared across queries."""

    def __init__(self, net: PublicTransitNetwork):
        self.net = net
        self.seqs: list[tuple[int, ...]] = []
        self.trip_ids: list[list[int]] = []
        self.deps: list[list[list[int]]] = []  # [route][position][trip]
        self.arrs: list[list[list[int]]] = []
        for r in net.routes:
            trips = [net.trips[t] for t in r.trip_ids]
            self.seqs.append(r.stop_sequence)
            self.trip_ids.append(list(r.trip_ids))
            self.deps.append(
                [[t.departure_times[p] for t in trips] for p in range(len(r.stop_sequence))]
            )
            self.arrs.append(
                [[t.arrival_times[p] for t in trips] for p in range(len(r.stop_sequence))]
            )
        self.board_routes: list[list[int]] = []
        for v in range(net.stop_count):
            rids = {
                rid
                for rid, pos in net.routes_by_stop[v]
                if pos < len(net.routes[rid].stop_sequence) - 1
            }
            self.board_routes.append(sorted(rids))
        self._conns: Optional[ConnectionArray] = None

    def connections(self) -> ConnectionArray:
        if self._conns is None:
            self._conns = build_connections(self.net)
        return self._conns


def _transfer(theta: int, start: int, end: int) -> Transfer:
    if theta == 0 and start == end:
        return EMPTY_TRANSFER
    return Transfer(theta)


class _RaptorEngine:
    """Round-based driver shared by the three RAPTOR-family engines.

    Per-round change layers (dicts) are kept next to the cumulative label
    arrays so that journeys can be backtracked after the fact.
    """

    def __init__(
        self,
        net: PublicTransitNetwork,
        tt: Timetable,
        s: int,
        t: int,
        dep: int,
        timings: Optional[dict] = None,
    ):
        self.net = net
        self.tt = tt
        self.s = s
        self.t = t
        self.dep = dep
        self.buf = [st.buffer_time for st in net.stops]
        self.stop_count = net.stop_count
        self.pt_val = [INF] * self._label_width()
        self.pt_origin = [-1] * self._label_width()
        self.pt_layers: list[dict[int, tuple[int, int]]] = []
        self.ra_val = [INF] * net.stop_count
        self.ra_layers: list[dict[int, tuple[int, int, int, int, int]]] = [{}]
        self.bound = INF
        self.bound_via = -1
        self.tl: list[tuple[int, int]] = []
        self.marked: set[int] = set()
        self.timings = timings
        self._ns = {"init": 0, "collect": 0, "scan": 0, "relax": 0}

    def _label_width(self) -> int:
        return self.net.transfer_graph.vertex_count

    # engine hooks ---------------------------------------------------------

    def _init(self) -> None:
        raise NotImplementedError

    def _relax(self, newly: list[int], layer: dict[int, tuple[int, int]]) -> None:
        raise NotImplementedError

    def _target_update(self, v: int, val: int) -> None:
        raise NotImplementedError

    # driver ---------------------------------------------------------------

    def run(self) -> QueryResult:
        clock = time.perf_counter_ns if self.timings is not None else None
        t0 = clock() if clock else 0
        self._init()
        if clock:
            self._ns["init"] += clock() - t0

        rounds = 0
        while self.marked:
            rounds += 1
            if rounds > _ROUND_CAP:
                raise RuntimeError("round cap exceeded while labels keep improving")
            t0 = clock() if clock else 0
            rids: dict[int, None] = {}
            for v in sorted(self.marked):
                for rid in self.tt.board_routes[v]:
                    rids[rid] = None
            self.marked = set()
            if clock:
                t1 = clock()
                self._ns["collect"] += t1 - t0
                t0 = t1

            ra_layer: dict[int, tuple[int, int, int, int, int]] = {}
            newly = self._scan(sorted(rids), ra_layer)
            self.ra_layers.append(ra_layer)
            if clock:
                t1 = clock()
                self._ns["scan"] += t1 - t0
                t0 = t1

            pt_layer: dict[int, tuple[int, int]] = {}
            self._relax(newly, pt_layer)
            self.pt_layers.append(pt_layer)
            self.tl.append((self.bound, self.bound_via))
            if clock:
                self._ns["relax"] += clock() - t0

        if self.timings is not None:
            for k, v in self._ns.items():
                self.timings[f"{k}_us"] = v // 1000
        return self._extract()

    def _scan(
        self, rids: list[int], layer: dict[int, tuple[int, int, int, int, int]]
    ) -> list[int]:
        tt = self.tt
        buf = self.buf
        newly: set[int] = set()
        for rid in rids:
            seq = tt.seqs[rid]
            deps = tt.deps[rid]
            arrs = tt.arrs[rid]
            tids = tt.trip_ids[rid]
            last = len(seq) - 1
            trip_idx = -1
            bpos = -1
            bstop = -1
            for pos, v in enumerate(seq):
                if trip_idx >= 0 and pos > 0:
                    val = arrs[pos][trip_idx]
                    if val < self.ra_val[v] and val < self.pt_val[v] and val < self.bound:
                        self.ra_val[v] = val
                        layer[v] = (val, tids[trip_idx], bpos, pos, bstop)
                        newly.add(v)
                        self._target_update(v, val)
                if pos < last and self.pt_val[v] < INF:
                    ready = self.pt_val[v] + buf[v]
                    j = bisect_left(deps[pos], ready)
                    if j < len(tids) and (trip_idx < 0 or j < trip_idx):
                        trip_idx = j
                        bpos = pos
                        bstop = v
            # a later board position of the same trip never helps, so per-route
            # state resets between routes only
        return sorted(newly)

    def _pt_update(
        self, x: int, val: int, origin: int, layer: dict[int, tuple[int, int]]
    ) -> bool:
        if val < self.pt_val[x] and val < self.bound:
            self.pt_val[x] = val
            self.pt_origin[x] = origin
            layer[x] = (val, origin)
            if x < self.stop_count:
                self.marked.add(x)
            return True
        return False

    # reconstruction -------------------------------------------------------

    def _lookup_ra(self, k: int, v: int) -> tuple[int, int, int, int, int]:
        for j in range(min(k, len(self.ra_layers) - 1), 0, -1):
            hit = self.ra_layers[j].get(v)
            if hit is not None:
                return hit
        raise RuntimeError(f"no trip label for stop {v} by round {k}")

    def _lookup_pt(self, k: int, v: int) -> tuple[int, int]:
        for j in range(min(k, len(self.pt_layers) - 1), -1, -1):
            hit = self.pt_layers[j].get(v)
            if hit is not None:
                return hit
        raise RuntimeError(f"no transfer label for vertex {v} by round {k}")

    def _extract(self) -> QueryResult:
        labels: list[ParetoLabel] = []
        journeys: list[Journey] = []
        prev = INF
        for k, (arr, via) in enumerate(self.tl):
            if arr < prev:
                labels.append(ParetoLabel(self.dep, arr, k))
                journeys.append(self._backtrack(k, arr, via))
                prev = arr
        return QueryResult(self.s, self.t, self.dep, labels, journeys)

    def _backtrack(self, k: int, arr: int, via: int) -> Journey:
        net = self.net
        if k == 0:
            return Journey((), (_transfer(arr - self.dep, self.s, self.t),), self.dep)
        legs: list[TripLeg] = []
        transfers: list[Transfer] = [_transfer(arr - self._lookup_ra(k, via)[0], via, self.t)]
        cur = via
        kk = k
        while True:
            _val, trip_id, bpos, apos, bstop = self._lookup_ra(kk, cur)
            legs.insert(0, TripLeg(trip_id, bpos, apos))
            trip = net.trips[trip_id]
            if kk == 1:
                theta0 = trip.departure_times[bpos] - self.buf[bstop] - self.dep
                transfers.insert(0, _transfer(theta0, self.s, bstop))
                break
            lt, ostop = self._lookup_pt(kk - 1, bstop)
            theta = lt - self._lookup_ra(kk - 1, ostop)[0]
            transfers.insert(0, _transfer(theta, ostop, bstop))
            cur = ostop
            kk -= 1
        return Journey(tuple(legs), tuple(transfers), self.dep)


class _TransitiveRaptor(_RaptorEngine):
    def _label_width(self) -> int:
        return self.net.stop_count

    def _init(self) -> None:
        if not (self.net.is_stop(self.s) and self.net.is_stop(self.t)):
            raise ContractViolation("transitive baseline supports stop-to-stop only")
        layer: dict[int, tuple[int, int]] = {}
        self._seed(self.s, self.dep, layer)
        for x, w in self.net.transfer_graph.out_edges(self.s):
            if x < self.stop_count:
                self._seed(x, self.dep + w, layer)
        self.pt_layers.append(layer)
        self.tl.append((self.bound, self.bound_via))

    def _seed(self, x: int, val: int, layer: dict[int, tuple[int, int]]) -> None:
        if val < self.pt_val[x]:
            self.pt_val[x] = val
            self.pt_origin[x] = self.s
            layer[x] = (val, self.s)
            self.marked.add(x)
            if x == self.t and val < self.bound:
                self.bound = val
                self.bound_via = self.s

    def _target_update(self, v: int, val: int) -> None:
        pass  # the target improves through the post-transfer labels instead

    def _relax(self, newly: list[int], layer: dict[int, tuple[int, int]]) -> None:
        g = self.net.transfer_graph
        for v in newly:
            base = self.ra_val[v]
            self._pt_target(v, base, v, layer)
            for x, w in g.out_edges(v):
                if x < self.stop_count:
                    self._pt_target(x, base + w, v, layer)

    def _pt_target(self, x: int, val: int, origin: int, layer) -> None:
        if self._pt_update(x, val, origin, layer) and x == self.t:
            self.bound = val
            self.bound_via = origin


class _MrInf(_RaptorEngine):
    def __init__(self, net, tt, core: CoreGraph, s, t, dep, timings=None):
        super().__init__(net, tt, s, t, dep, timings)
        self.core = core
        self.dt: list[int] = []

    def _init(self) -> None:
        fwd = dijkstra(self.net.transfer_graph, [(self.s, self.dep)])
        self.dt = dijkstra(self.net.transfer_graph, [(self.t, 0)], reverse=True).dist
        layer: dict[int, tuple[int, int]] = {}
        for v, val in enumerate(fwd.dist):
            if val < INF:
                self.pt_val[v] = val
                self.pt_origin[v] = self.s
                layer[v] = (val, self.s)
                if v < self.stop_count:
                    self.marked.add(v)
        self.bound = fwd.dist[self.t]
        self.bound_via = self.s
        self.pt_layers.append(layer)
        self.tl.append((self.bound, self.bound_via))

    def _target_update(self, v: int, val: int) -> None:
        cand = sat_add(val, self.dt[v])
        if cand < self.bound:
            self.bound = cand
            self.bound_via = v

    def _relax(self, newly: list[int], layer: dict[int, tuple[int, int]]) -> None:
        import heapq

        g = self.core.graph
        heap: list[tuple[int, int]] = []
        for v in newly:
            if self._pt_update(v, self.ra_val[v], v, layer):
                heap.append((self.ra_val[v], v))
        heapq.heapify(heap)
        while heap:
            k, x = heapq.heappop(heap)
            if k > self.pt_val[x]:
                continue
            origin = self.pt_origin[x]
            for y, w in g.out_edges(x):
                if self._pt_update(y, k + w, origin, layer):
                    heapq.heappush(heap, (k + w, y))


class _UltraRaptor(_RaptorEngine):
    def __init__(
        self,
        net,
        tt,
        shortcuts: ShortcutGraph,
        fwd_buckets: BucketStore,
        bwd_buckets: BucketStore,
        ch: ContractionHierarchy,
        s,
        t,
        dep,
        timings=None,
    ):
        super().__init__(net, tt, s, t, dep, timings)
        self.sg = shortcuts.transfer_graph()
        self.fwd_buckets = fwd_buckets
        self.bwd_buckets = bwd_buckets
        self.ch = ch
        self.dt_map: dict[int, int] = {}

    def _init(self) -> None:
        dst, fmap, bmap = pruned_pair_query(
            self.ch, self.fwd_buckets, self.bwd_buckets, self.s, self.t
        )
        self.dt_map = bmap
        layer: dict[int, tuple[int, int]] = {}
        for v in sorted(fmap):
            val = self.dep + fmap[v]
            self.pt_val[v] = val
            self.pt_origin[v] = self.s
            layer[v] = (val, self.s)
            self.marked.add(v)
        self.bound = sat_add(self.dep, dst)
        self.bound_via = self.s
        self.pt_layers.append(layer)
        self.tl.append((self.bound, self.bound_via))

    def _target_update(self, v: int, val: int) -> None:
        cand = sat_add(val, self.dt_map.get(v, INF))
        if cand < self.bound:
            self.bound = cand
            self.bound_via = v

    def _relax(self, newly: list[int], layer: dict[int, tuple[int, int]]) -> None:
        for v in newly:
            base = self.ra_val[v]
            self._pt_update(v, base, v, layer)
            for x, w in self.sg.out_edges(v):
                self._pt_update(x, base + w, v, layer)


def raptor_query(
    net: PublicTransitNetwork,
    s: int,
    t: int,
    dep: int,
    tt: Optional[Timetable] = None,
    timings: Optional[dict] = None,
) -> QueryResult:
    """Transitive RAPTOR baseline; ``net``'s transfer graph must be closed."""
    if s == t:
        if not net.is_stop(s):
            raise ContractViolation("transitive baseline supports stop-to-stop only")
        return QueryResult(s, t, dep, [ParetoLabel(dep, dep, 0)], [_walk_journey(dep, 0, s, t)])
    return _TransitiveRaptor(net, tt or Timetable(net), s, t, dep, timings).run()


def mr_inf_query(
    net: PublicTransitNetwork,
    core: CoreGraph,
    s: int,
    t: int,
    dep: int,
    tt: Optional[Timetable] = None,
    timings: Optional[dict] = None,
) -> QueryResult:
    """Exact multi-modal Pareto query over the full transfer graph."""
    if s == t:
        return QueryResult(s, t, dep, [ParetoLabel(dep, dep, 0)], [_walk_journey(dep, 0, s, t)])
    return _MrInf(net, tt or Timetable(net), core, s, t, dep, timings).run()


def ultra_raptor_query(
    net: PublicTransitNetwork,
    shortcuts: ShortcutGraph,
    fwd_buckets: BucketStore,
    bwd_buckets: BucketStore,
    ch: ContractionHierarchy,
    s: int,
    t: int,
    dep: int,
    tt: Optional[Timetable] = None,
    timings: Optional[dict] = None,
) -> QueryResult:
    """Shortcut-based query; Pareto sets match ``mr_inf_query`` exactly."""
    if s == t:
        return QueryResult(s, t, dep, [ParetoLabel(dep, dep, 0)], [_walk_journey(dep, 0, s, t)])
    return _UltraRaptor(
        net, tt or Timetable(net), shortcuts, fwd_buckets, bwd_buckets, ch, s, t, dep, timings
    ).run()


def _walk_journey(dep: int, theta: int, s: int, t: int) -> Journey:
    return Journey((), (_transfer(theta, s, t),), dep)


# -- connection scan engines --------------------------------------------------


def csa_query(
    net: PublicTransitNetwork,
    s: int,
    t: int,
    dep: int,
    tt: Optional[Timetable] = None,
    timings: Optional[dict] = None,
) -> int:
    """Transitive CSA baseline: earliest arrival only, INF if unreachable."""
    if not (net.is_stop(s) and net.is_stop(t)):
        raise ContractViolation("transitive baseline supports stop-to-stop only")
    clock = time.perf_counter_ns if timings is not None else None
    t0 = clock() if clock else 0
    conns = (tt or Timetable(net)).connections()
    sc = net.stop_count
    g = net.transfer_graph
    buf = [st.buffer_time for st in net.stops]
    arr = [INF] * sc
    arr[s] = dep
    for x, w in g.out_edges(s):
        if x < sc and dep + w < arr[x]:
            arr[x] = dep + w
    if clock:
        t1 = clock()
        timings["init_us"] = (t1 - t0) // 1000
        t0 = t1
    boarded: set[int] = set()
    start = conns.first_departing_at(dep)
    for ds, as_, dt_, at_, tid in conns.connections[start:]:
        if dt_ >= arr[t]:
            break
        if tid in boarded or sat_add(arr[ds], buf[ds]) <= dt_:
            boarded.add(tid)
            if at_ < arr[as_]:
                arr[as_] = at_
                for x, w in g.out_edges(as_):
                    if x < sc and at_ + w < arr[x]:
                        arr[x] = at_ + w
    if clock:
        timings["scan_us"] = (clock() - t0) // 1000
        timings.setdefault("collect_us", 0)
        timings.setdefault("relax_us", 0)
    return arr[t]


def mcsa_query(
    net: PublicTransitNetwork,
    core: CoreGraph,
    s: int,
    t: int,
    dep: int,
    tt: Optional[Timetable] = None,
    timings: Optional[dict] = None,
) -> int:
    """Multi-modal CSA: connection scan interleaved with core Dijkstra."""
    import heapq

    if s == t:
        return dep
    clock = time.perf_counter_ns if timings is not None else None
    t0 = clock() if clock else 0
    conns = (tt or Timetable(net)).connections()
    buf = [st.buffer_time for st in net.stops]
    fwd = dijkstra(net.transfer_graph, [(s, dep)])
    dt = dijkstra(net.transfer_graph, [(t, 0)], reverse=True).dist
    arr = list(fwd.dist)
    best = arr[t]
    cg = core.graph
    if clock:
        t1 = clock()
        timings["init_us"] = (t1 - t0) // 1000
        t0 = t1

    heap: list[tuple[int, int]] = []
    relax_ns = 0
    boarded: set[int] = set()
    start = conns.first_departing_at(dep)
    for ds, as_, dt_, at_, tid in conns.connections[start:]:
        if dt_ >= best:
            break
        if heap and heap[0][0] <= dt_:
            r0 = clock() if clock else 0
            while heap and heap[0][0] <= dt_:
                k, x = heapq.heappop(heap)
                if k > arr[x]:
                    continue
                for y, w in cg.out_edges(x):
                    if k + w < arr[y]:
                        arr[y] = k + w
                        heapq.heappush(heap, (k + w, y))
            if clock:
                relax_ns += clock() - r0
        if tid in boarded or sat_add(arr[ds], buf[ds]) <= dt_:
            boarded.add(tid)
            if at_ < arr[as_]:
                arr[as_] = at_
                heapq.heappush(heap, (at_, as_))
                cand = sat_add(at_, dt[as_])
                if cand < best:
                    best = cand
    if clock:
        timings["scan_us"] = (clock() - t0 - relax_ns) // 1000
        timings["relax_us"] = relax_ns // 1000
        timings.setdefault("collect_us", 0)
    return best


def ultra_csa_query(
    net: PublicTransitNetwork,
    shortcuts: ShortcutGraph,
    fwd_buckets: BucketStore,
    bwd_buckets: BucketStore,
    ch: ContractionHierarchy,
    s: int,
    t: int,
    dep: int,
    tt: Optional[Timetable] = None,
    timings: Optional[dict] = None,
) -> int:
    """Shortcut-based CSA; matches ``mcsa_query`` on every input."""
    if s == t:
        return dep
    clock = time.perf_counter_ns if timings is not None else None
    t0 = clock() if clock else 0
    conns = (tt or Timetable(net)).connections()
    sg = shortcuts.transfer_graph()
    buf = [st.buffer_time for st in net.stops]
    dst, fmap, bmap = pruned_pair_query(ch, fwd_buckets, bwd_buckets, s, t)
    arr = [INF] * net.stop_count
    for v, d in fmap.items():
        arr[v] = dep + d
    best = sat_add(dep, dst)
    if clock:
        t1 = clock()
        timings["init_us"] = (t1 - t0) // 1000
        t0 = t1

    relax_ns = 0
    boarded: set[int] = set()
    start = conns.first_departing_at(dep)
    for ds, as_, dt_, at_, tid in conns.connections[start:]:
        if dt_ >= best:
            break
        if tid in boarded or sat_add(arr[ds], buf[ds]) <= dt_:
            boarded.add(tid)
            if at_ < arr[as_]:
                arr[as_] = at_
                cand = sat_add(at_, bmap.get(as_, INF))
                if cand < best:
                    best = cand
                r0 = clock() if clock else 0
                for x, w in sg.out_edges(as_):
                    if at_ + w < arr[x]:
                        arr[x] = at_ + w
                if clock:
                    relax_ns += clock() - r0
    if clock:
        timings["scan_us"] = (clock() - t0 - relax_ns) // 1000
        timings["relax_us"] = relax_ns // 1000
        timings.setdefault("collect_us", 0)
    return best
