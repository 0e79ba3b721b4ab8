"""Transfer shortcut precomputation.

For every source stop, a two-round restricted range query enumerates all
journeys with exactly two trips and no initial or final transfer.  Each such
candidate's intermediate transfer becomes a shortcut edge unless a dominating
witness journey reaches the same stop first.  The union over all sources is
provably sufficient: every Pareto-optimal journey can be rewritten to use
only shortcut edges between trips.
"""

from __future__ import annotations

import bisect
import heapq
import multiprocessing
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Optional, Sequence

import networkx as nx

from .ch import CoreGraph
from .model import INF, PublicTransitNetwork, TransferGraph, sat_add


@dataclass
class PreprocessParams:
    witness_limit: int = 900  # extra relaxation budget past the last candidate; INF = unlimited
    core_degree: float = 14.0
    workers: int = 1
    drop_disconnected_pairs: bool = False
    keep_paths: bool = False


@dataclass
class ShortcutGraph:
    """Stop-to-stop shortcut edges; duplicates keep the minimum transfer time."""

    stop_count: int
    edges: dict[tuple[int, int], int] = field(default_factory=dict)
    paths: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)

    def add(self, u: int, v: int, time: int, path: Optional[Sequence[int]] = None) -> None:
        old = self.edges.get((u, v))
        if old is None or time < old:
            self.edges[(u, v)] = time
            if path is not None:
                self.paths[(u, v)] = tuple(path)

    def sorted_edges(self) -> list[tuple[int, int, int]]:
        return sorted((u, v, w) for (u, v), w in self.edges.items())

    def to_transfer_graph(self) -> TransferGraph:
        return TransferGraph(self.stop_count, self.sorted_edges())

    def transfer_graph(self) -> TransferGraph:
        """Cached graph view; only call once the edge set is final."""
        cached = getattr(self, "_tg", None)
        if cached is None or cached.edge_count != len(self.edges):
            cached = self.to_transfer_graph()
            self._tg = cached
        return cached

    def __len__(self) -> int:
        return len(self.edges)


def merge_worker_shortcuts(sets: Sequence[ShortcutGraph]) -> ShortcutGraph:
    """Order-independent union; duplicate edges keep the minimum time."""
    if not sets:
        return ShortcutGraph(0)
    out = ShortcutGraph(max(s.stop_count for s in sets))
    for s in sets:
        for (u, v), w in s.edges.items():
            out.add(u, v, w, s.paths.get((u, v)))
    return out


def zero_groups(net: PublicTransitNetwork, core: CoreGraph) -> list[list[int]]:
    """Partition of the stops into groups with mutual zero transfer distance.

    Groups are temporarily treated as a single stop while preprocessing runs,
    which prevents journeys with zero-length initial transfers from witnessing
    each other away cyclically.
    """
    g = nx.DiGraph()
    g.add_nodes_from(range(net.transfer_graph.vertex_count))
    for u, v, w in core.graph.edges():
        if w == 0:
            g.add_edge(u, v)
    stop_count = net.stop_count
    groups = []
    for comp in nx.strongly_connected_components(g):
        stops = sorted(v for v in comp if v < stop_count)
        if stops:
            groups.append(stops)
    groups.sort()
    return groups


@dataclass
class _RouteData:
    seq: tuple[int, ...]
    trip_ids: list[int]
    deps: list[list[int]]  # [position][trip]
    arrs: list[list[int]]


class _Ctx:
    """Immutable per-network state shared by all source searches."""

    def __init__(self, net: PublicTransitNetwork, core: CoreGraph):
        self.net = net
        self.n = net.transfer_graph.vertex_count
        self.stop_count = net.stop_count
        self.buf = [s.buffer_time for s in net.stops]
        self.core_adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for u, v, w in core.graph.edges():
            self.core_adj[u].append((v, w))
        for adj in self.core_adj:
            adj.sort()
        self.core = core

        self.routes: list[_RouteData] = []
        for r in net.routes:
            trips = [net.trips[t] for t in r.trip_ids]
            deps = [
                [t.departure_times[p] for t in trips] for p in range(len(r.stop_sequence))
            ]
            arrs = [
                [t.arrival_times[p] for t in trips] for p in range(len(r.stop_sequence))
            ]
            self.routes.append(_RouteData(r.stop_sequence, list(r.trip_ids), deps, arrs))

        # departure events per stop, excluding final positions
        ev: dict[int, set[tuple[int, int]]] = {}
        for rid, rd in enumerate(self.routes):
            for pos in range(len(rd.seq) - 1):
                v = rd.seq[pos]
                for dep in rd.deps[pos]:
                    ev.setdefault(v, set()).add((dep, rid))
        self.events_by_stop = {v: sorted(s) for v, s in ev.items()}

        # routes boardable at each stop (non-final positions only)
        self.board_routes: list[list[int]] = [[] for _ in range(self.stop_count)]
        for v in range(self.stop_count):
            rids = {rid for rid, pos in net.routes_by_stop[v] if pos < len(net.routes[rid].stop_sequence) - 1}
            self.board_routes[v] = sorted(rids)

        self.groups = zero_groups(net, core)
        self.group_of = {}
        for g in self.groups:
            for v in g:
                self.group_of[v] = g[0]


class _SourceRun:
    """One execution of the main loop for a single source stop group."""

    def __init__(self, ctx: _Ctx, members: list[int], params: PreprocessParams, emitted: ShortcutGraph):
        self.ctx = ctx
        self.members = set(members)
        self.params = params
        self.emitted = emitted
        n = ctx.n
        self.d = self._initial_distances(members)
        self.walk1 = [INF] * n
        self.o_stop = [-1] * n  # origin (first-leg alight stop) of the walk label
        self.o_time = [0] * n
        self.o_cand = [False] * n
        self.parent1 = [-1] * n
        self.walk2 = [INF] * n
        self.seed2: list[Optional[tuple[int, int, int]]] = [None] * n
        self.q1: list[tuple[int, int, bool]] = []
        self.q2: list[tuple[int, int, bool]] = []
        self.cand_q1 = 0
        self.cand_q2 = 0

    def _initial_distances(self, members: list[int]) -> list[int]:
        dist = [INF] * self.ctx.n
        heap = []
        for m in members:
            dist[m] = 0
            heap.append((0, m))
        heapq.heapify(heap)
        adj = self.ctx.core_adj
        while heap:
            k, u = heapq.heappop(heap)
            if k > dist[u]:
                continue
            for v, w in adj[u]:
                nd = k + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def run(self) -> None:
        ctx = self.ctx
        triplets: list[tuple[int, int, int, int, int]] = []
        for v, events in ctx.events_by_stop.items():
            dv = self.d[v]
            if dv >= INF:
                continue
            src = 1 if v in self.members else 0
            for dep, rid in events:
                key = dep - ctx.buf[v] - dv
                triplets.append((-key, src, v, dep, rid))
        triplets.sort()

        pending_routes: dict[int, None] = {}
        i = 0
        m = len(triplets)
        while i < m:
            neg_key, src, v, dep, rid = triplets[i]
            if not src:
                pending_routes[rid] = None
                i += 1
                continue
            # merge all source departures sharing this departure time into one
            # iteration so they witness each other
            routes_now = dict(pending_routes)
            routes_now[rid] = None
            i += 1
            while i < m and triplets[i][0] == neg_key and triplets[i][1] == 1:
                routes_now[triplets[i][4]] = None
                i += 1
            pending_routes.clear()
            self._iterate(-neg_key, sorted(routes_now))

    # -- one range-query iteration (two rounds) -------------------------------

    def _iterate(self, tau: int, routes: list[int]) -> None:
        ctx = self.ctx
        buf = ctx.buf
        d = self.d

        round1: dict[int, tuple[int, bool]] = {}
        for rid in routes:
            rd = ctx.routes[rid]
            seq = rd.seq
            last = len(seq) - 1
            trip_idx = -1
            cand = False
            for pos, v in enumerate(seq):
                if trip_idx >= 0 and pos > 0:
                    val = rd.arrs[pos][trip_idx]
                    limit = min(self.walk1[v], sat_add(tau, d[v]))
                    prev = round1.get(v)
                    if val < limit and (prev is None or val < prev[0]):
                        round1[v] = (val, cand)
                if pos < last and d[v] < INF:
                    ready = tau + d[v] + buf[v]
                    j = bisect_left(rd.deps[pos], ready)
                    if j < len(rd.trip_ids) and (trip_idx < 0 or j < trip_idx):
                        trip_idx = j
                        cand = v in self.members
        improved = self._relax_round1(tau, round1)

        routes2: dict[int, None] = {}
        for v in sorted(improved):
            for rid in ctx.board_routes[v]:
                routes2[rid] = None

        round2: dict[int, tuple[int, tuple[int, int, int, int], bool]] = {}
        for rid in sorted(routes2):
            rd = ctx.routes[rid]
            seq = rd.seq
            last = len(seq) - 1
            trip_idx = -1
            info: tuple[int, int, int, int] = (-1, -1, 0, 0)
            cand2 = False
            for pos, v in enumerate(seq):
                if trip_idx >= 0 and pos > 0:
                    val = rd.arrs[pos][trip_idx]
                    limit = min(self.walk2[v], self.walk1[v], sat_add(tau, d[v]))
                    prev = round2.get(v)
                    if val < limit and (prev is None or val < prev[0]):
                        round2[v] = (val, info, cand2)
                if pos < last and self.walk1[v] < INF:
                    ready = self.walk1[v] + buf[v]
                    j = bisect_left(rd.deps[pos], ready)
                    if j < len(rd.trip_ids) and (trip_idx < 0 or j < trip_idx):
                        trip_idx = j
                        u = self.o_stop[v]
                        theta = self.walk1[v] - self.o_time[v]
                        info = (u, v, theta, self.walk1[v])
                        cand2 = self.o_cand[v] and (
                            u == v or (u, v) not in self.emitted.edges
                        )
        self._relax_round2(tau, round2)

    def _relax_round1(self, tau: int, seeds: dict[int, tuple[int, bool]]) -> set[int]:
        """Dijkstra on the core from the round-1 arrivals; returns every stop
        whose label improved (scan or relaxation)."""
        improved: set[int] = set()
        had_cand = False
        for v in sorted(seeds):
            val, cand = seeds[v]
            if val < self.walk1[v]:
                self.walk1[v] = val
                self.o_stop[v] = v
                self.o_time[v] = val
                self.o_cand[v] = cand
                self.parent1[v] = -1
                heapq.heappush(self.q1, (val, v, cand))
                improved.add(v)
                if cand:
                    self.cand_q1 += 1
                    had_cand = True

        wl = self.params.witness_limit
        last_cand = None
        adj = self.ctx.core_adj
        stop_count = self.ctx.stop_count
        d = self.d
        while self.q1:
            k, v, flag = self.q1[0]
            if (
                had_cand
                and self.cand_q1 == 0
                and last_cand is not None
                and wl < INF
                and k > last_cand + wl
            ):
                break
            heapq.heappop(self.q1)
            if flag:
                self.cand_q1 -= 1
                last_cand = k
            if k > self.walk1[v]:
                continue
            ocand = self.o_cand[v]
            ostop = self.o_stop[v]
            otime = self.o_time[v]
            for x, w in adj[v]:
                nk = k + w
                if nk < self.walk1[x] and nk < sat_add(tau, d[x]):
                    self.walk1[x] = nk
                    self.o_stop[x] = ostop
                    self.o_time[x] = otime
                    self.o_cand[x] = ocand
                    self.parent1[x] = v
                    heapq.heappush(self.q1, (nk, x, ocand))
                    if ocand:
                        self.cand_q1 += 1
                    if x < stop_count:
                        improved.add(x)
        return improved

    def _relax_round2(
        self, tau: int, seeds: dict[int, tuple[int, tuple[int, int, int, int], bool]]
    ) -> None:
        had_cand = False
        for v in sorted(seeds):
            val, info, cand = seeds[v]
            if val < self.walk2[v]:
                self.walk2[v] = val
                self.seed2[v] = info[:3] if cand else None
                heapq.heappush(self.q2, (val, v, cand))
                if cand:
                    self.cand_q2 += 1
                    had_cand = True

        wl = self.params.witness_limit
        last_cand = None
        adj = self.ctx.core_adj
        d = self.d
        while self.q2:
            k, v, flag = self.q2[0]
            if (
                had_cand
                and self.cand_q2 == 0
                and last_cand is not None
                and wl < INF
                and k > last_cand + wl
            ):
                break
            heapq.heappop(self.q2)
            if flag:
                self.cand_q2 -= 1
                last_cand = k
            if k > self.walk2[v]:
                continue
            seed = self.seed2[v]
            if seed is not None and self.walk2[v] == k:
                self._emit(seed, v)
                self.seed2[v] = None
            for x, w in adj[v]:
                nk = k + w
                if nk < self.walk2[x] and nk < self.walk1[x] and nk < sat_add(tau, d[x]):
                    self.walk2[x] = nk
                    self.seed2[x] = None
                    heapq.heappush(self.q2, (nk, x, False))

    def _emit(self, seed: tuple[int, int, int], settled_stop: int) -> None:
        u, v, theta = seed
        if u == v:
            return  # empty intermediate transfer needs no edge
        if self.params.drop_disconnected_pairs and self.d[settled_stop] >= INF:
            return
        path = None
        if self.params.keep_paths:
            path = self._transfer_path(u, v)
        self.emitted.add(u, v, theta, path)

    def _transfer_path(self, u: int, v: int) -> tuple[int, ...]:
        hops = [v]
        while hops[-1] != u and self.parent1[hops[-1]] >= 0:
            hops.append(self.parent1[hops[-1]])
        hops.reverse()
        out = [hops[0]]
        for a, b in zip(hops, hops[1:]):
            out.extend(self.ctx.core.expand_edge(a, b)[1:])
        return tuple(out)


_POOL_CTX: Optional[tuple[_Ctx, PreprocessParams]] = None


def _pool_init(ctx: _Ctx, params: PreprocessParams) -> None:
    global _POOL_CTX
    _POOL_CTX = (ctx, params)


def _pool_block(block: list[list[int]]) -> ShortcutGraph:
    assert _POOL_CTX is not None
    ctx, params = _POOL_CTX
    return _run_block(ctx, block, params)


def _run_block(ctx: _Ctx, block: list[list[int]], params: PreprocessParams) -> ShortcutGraph:
    emitted = ShortcutGraph(ctx.stop_count)
    for members in block:
        _SourceRun(ctx, members, params, emitted).run()
    return emitted


def compute_shortcuts(
    net: PublicTransitNetwork,
    core: CoreGraph,
    params: PreprocessParams = PreprocessParams(),
) -> ShortcutGraph:
    """Run the shortcut search from every stop; see the module docstring.

    With one worker the result is deterministic.  With several, each worker
    keeps its own already-emitted set (which narrows its candidate notion) and
    the per-worker results are merged sequentially afterwards; the merged set
    may differ between worker counts but is always sufficient.
    """
    ctx = _Ctx(net, core)
    workers = max(1, params.workers)
    blocks: list[list[list[int]]] = [[] for _ in range(workers)]
    for i, group in enumerate(ctx.groups):
        blocks[i * workers // len(ctx.groups)].append(group)
    blocks = [b for b in blocks if b]

    if workers == 1 or len(blocks) <= 1:
        results = [_run_block(ctx, b, params) for b in blocks]
    else:
        mp = multiprocessing.get_context("fork")
        with mp.Pool(len(blocks), initializer=_pool_init, initargs=(ctx, params)) as pool:
            results = pool.map(_pool_block, blocks)
    merged = merge_worker_shortcuts(results) if results else ShortcutGraph(ctx.stop_count)
    merged.stop_count = ctx.stop_count
    return merged
