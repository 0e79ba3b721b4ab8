"""Contraction hierarchies: full construction, partial (core) contraction,
bidirectional point-to-point queries, and bucket-based one-to-many queries.

Shortcut edges remember the vertex they bypass, so any hierarchy or overlay
edge can be expanded back into a path of original transfer-graph edges.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .model import INF, TransferGraph

_WITNESS_SETTLE_LIMIT = 64


class _Contractor:
    """Shared machinery for full and partial contraction.

    Maintains the shrinking "current" graph plus, per contracted vertex, its
    recorded incident edges at contraction time (these become the hierarchy's
    upward/downward edge sets).
    """

    def __init__(self, graph: TransferGraph):
        n = graph.vertex_count
        self.n = n
        # current graph: vertex -> {neighbor: (weight, via)}; via < 0 = original edge
        self.fwd: list[dict[int, tuple[int, int]]] = [{} for _ in range(n)]
        self.bwd: list[dict[int, tuple[int, int]]] = [{} for _ in range(n)]
        for u, v, w in graph.edges():
            if u != v:
                self._add_edge(u, v, w, -1)
        self.edge_count = sum(len(d) for d in self.fwd)
        self.rank = [-1] * n  # contraction order; -1 = uncontracted
        self.rec_fwd: list[Optional[dict[int, tuple[int, int]]]] = [None] * n
        self.rec_bwd: list[Optional[dict[int, tuple[int, int]]]] = [None] * n
        self.deleted_neighbors = [0] * n
        self.contracted_count = 0

    def _add_edge(self, u: int, v: int, w: int, via: int) -> bool:
        old = self.fwd[u].get(v)
        if old is not None and old[0] <= w:
            return False
        self.fwd[u][v] = (w, via)
        self.bwd[v][u] = (w, via)
        return old is None

    def _witness_dists(self, source: int, skip: int, cutoff: int) -> dict[int, int]:
        """Bounded Dijkstra on the current graph avoiding ``skip``."""
        dist = {source: 0}
        heap = [(0, source)]
        settles = 0
        while heap and settles < _WITNESS_SETTLE_LIMIT:
            k, u = heapq.heappop(heap)
            if k > dist.get(u, INF):
                continue
            if k > cutoff:
                break
            settles += 1
            for v, (w, _via) in self.fwd[u].items():
                if v == skip:
                    continue
                nd = k + w
                if nd <= cutoff and nd < dist.get(v, INF):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def _shortcuts_for(self, v: int) -> list[tuple[int, int, int]]:
        """(u, x, weight) shortcuts required to remove v, witness-checked."""
        ins = self.bwd[v]
        outs = self.fwd[v]
        if not ins or not outs:
            return []
        max_out = max(w for w, _ in outs.values())
        needed = []
        for u, (w1, _) in sorted(ins.items()):
            dist = self._witness_dists(u, v, w1 + max_out)
            for x, (w2, _) in sorted(outs.items()):
                if x == u:
                    continue
                through = w1 + w2
                # unknown or longer witness: insert the shortcut (conservative)
                if dist.get(x, INF) > through:
                    needed.append((u, x, through))
        return needed

    def priority(self, v: int) -> tuple[int, list[tuple[int, int, int]]]:
        # edge difference plus contracted-neighbor count; lazily re-evaluated.
        # The shortcut list is returned so contraction can reuse it.
        shortcuts = self._shortcuts_for(v)
        degree = len(self.fwd[v]) + len(self.bwd[v])
        return len(shortcuts) - degree + self.deleted_neighbors[v], shortcuts

    def contract(self, v: int, shortcuts: Optional[list[tuple[int, int, int]]] = None) -> None:
        if shortcuts is None:
            shortcuts = self._shortcuts_for(v)
        self.rec_fwd[v] = dict(self.fwd[v])
        self.rec_bwd[v] = dict(self.bwd[v])
        for x in self.fwd[v]:
            del self.bwd[x][v]
            self.deleted_neighbors[x] += 1
        for u in self.bwd[v]:
            del self.fwd[u][v]
            self.deleted_neighbors[u] += 1
        self.edge_count -= len(self.fwd[v]) + len(self.bwd[v])
        self.fwd[v] = {}
        self.bwd[v] = {}
        for u, x, w in shortcuts:
            if self._add_edge(u, x, w, v):
                self.edge_count += 1
        self.rank[v] = self.contracted_count
        self.contracted_count += 1

    def run(
        self,
        contractible: Iterable[int],
        max_avg_degree: Optional[float] = None,
    ) -> None:
        heap = [(self.priority(v)[0], v) for v in sorted(contractible)]
        heapq.heapify(heap)
        while heap:
            if max_avg_degree is not None:
                remaining = self.n - self.contracted_count
                if remaining > 0 and self.edge_count / remaining > max_avg_degree:
                    break
            prio, v = heapq.heappop(heap)
            new_prio, shortcuts = self.priority(v)
            if heap and new_prio > heap[0][0]:
                heapq.heappush(heap, (new_prio, v))
                continue
            self.contract(v, shortcuts)


def _expand(
    rec_fwd: Sequence[Optional[dict[int, tuple[int, int]]]],
    rec_bwd: Sequence[Optional[dict[int, tuple[int, int]]]],
    u: int,
    x: int,
    via: int,
) -> list[int]:
    if via < 0:
        return [u, x]
    w1, via1 = rec_bwd[via][u]
    w2, via2 = rec_fwd[via][x]
    left = _expand(rec_fwd, rec_bwd, u, via, via1)
    right = _expand(rec_fwd, rec_bwd, via, x, via2)
    return left[:-1] + right


@dataclass
class ContractionHierarchy:
    """Full hierarchy: every vertex contracted, ``rank`` is the order.

    ``up[v]`` holds v's recorded out-edges (to later-contracted vertices);
    ``down_in[v]`` its recorded in-edges.  Forward searches relax ``up``,
    backward searches relax ``down_in`` against edge direction.
    """

    n: int
    rank: list[int]
    up: list[dict[int, tuple[int, int]]]
    down_in: list[dict[int, tuple[int, int]]]

    def forward_search(self, source: int, bound: int = INF) -> dict[int, int]:
        return self._search(self.up, source, bound)

    def backward_search(self, source: int, bound: int = INF) -> dict[int, int]:
        return self._search(self.down_in, source, bound)

    @staticmethod
    def _search(
        adj: list[dict[int, tuple[int, int]]], source: int, bound: int
    ) -> dict[int, int]:
        dist = {source: 0}
        heap = [(0, source)]
        settled: dict[int, int] = {}
        while heap:
            k, u = heapq.heappop(heap)
            if k > dist.get(u, INF) or u in settled:
                continue
            if k > bound:
                break
            settled[u] = k
            for v, (w, _) in adj[u].items():
                nd = k + w
                if nd <= bound and nd < dist.get(v, INF):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return settled

    def expand_path(self, u: int, x: int, via: int) -> list[int]:
        return _expand(self.up, self.down_in, u, x, via)

    def distance(self, s: int, t: int) -> int:
        """Up-down distance; equals the original graph distance."""
        fwd = self.forward_search(s)
        bwd = self.backward_search(t)
        best = INF
        for u, df in fwd.items():
            db = bwd.get(u)
            if db is not None and df + db < best:
                best = df + db
        return best


def contract_full(graph: TransferGraph) -> ContractionHierarchy:
    c = _Contractor(graph)
    c.run(range(graph.vertex_count))
    up = [c.rec_fwd[v] if c.rec_fwd[v] is not None else {} for v in range(c.n)]
    down_in = [c.rec_bwd[v] if c.rec_bwd[v] is not None else {} for v in range(c.n)]
    return ContractionHierarchy(c.n, list(c.rank), up, down_in)


@dataclass
class CoreGraph:
    """Distance-preserving overlay: non-stop vertices contracted until the
    average core degree exceeds the bound.  Stop-to-stop distances in
    ``graph`` equal the original distances."""

    core_vertices: list[int]
    graph: TransferGraph
    # expansion records for the contracted part
    _rec_fwd: list[Optional[dict[int, tuple[int, int]]]] = field(repr=False, default_factory=list)
    _rec_bwd: list[Optional[dict[int, tuple[int, int]]]] = field(repr=False, default_factory=list)
    _via: dict[tuple[int, int], int] = field(repr=False, default_factory=dict)

    def expand_edge(self, u: int, v: int) -> list[int]:
        """Original-graph vertex path realizing overlay edge (u, v)."""
        return _expand(self._rec_fwd, self._rec_bwd, u, v, self._via.get((u, v), -1))


def contract_core(
    graph: TransferGraph,
    keep: Iterable[int],
    max_avg_degree: float = 14.0,
) -> CoreGraph:
    keep_set = set(keep)
    c = _Contractor(graph)
    c.run(
        (v for v in range(graph.vertex_count) if v not in keep_set),
        max_avg_degree=max_avg_degree,
    )
    core = [v for v in range(graph.vertex_count) if c.rank[v] < 0]
    overlay = TransferGraph(graph.vertex_count)
    via_map: dict[tuple[int, int], int] = {}
    for u in core:
        for v, (w, via) in c.fwd[u].items():
            overlay.add_edge(u, v, w)
            if overlay.weight(u, v) == w:
                via_map[(u, v)] = via
    return CoreGraph(core, overlay, c.rec_fwd, c.rec_bwd, via_map)


@dataclass
class BucketStore:
    """Per-vertex sorted (distance, target) entries.

    ``reverse=False``: entry (d, t) in bucket[v] means d = d(v, t), collected
    from t's backward search space; used with forward searches.
    ``reverse=True``: entry means d = d(t, v), from t's forward space; used
    with backward searches.
    """

    reverse: bool
    buckets: list[list[tuple[int, int]]]


def build_buckets(
    ch: ContractionHierarchy, targets: Iterable[int], reverse: bool = False
) -> BucketStore:
    buckets: list[list[tuple[int, int]]] = [[] for _ in range(ch.n)]
    for t in sorted(targets):
        space = ch.forward_search(t) if reverse else ch.backward_search(t)
        for v, d in space.items():
            buckets[v].append((d, t))
    for b in buckets:
        b.sort()
    return BucketStore(reverse, buckets)


def bucket_query(
    ch: ContractionHierarchy, buckets: BucketStore, source: int
) -> dict[int, int]:
    """Exact shortest distances from ``source`` to every bucket target."""
    if buckets.reverse:
        raise ValueError("forward bucket query needs non-reverse buckets")
    return _combine(ch.forward_search(source), buckets)


def reverse_bucket_query(
    ch: ContractionHierarchy, buckets: BucketStore, target: int
) -> dict[int, int]:
    """Exact shortest distances from every bucket target to ``target``."""
    if not buckets.reverse:
        raise ValueError("reverse bucket query needs reverse buckets")
    return _combine(ch.backward_search(target), buckets)


def _combine(
    space: dict[int, int], buckets: BucketStore, bound: int = INF
) -> dict[int, int]:
    out: dict[int, int] = {}
    for u, du in space.items():
        for d, t in buckets.buckets[u]:
            total = du + d
            if total >= bound:
                break  # bucket sorted ascending: nothing better follows
            if total < out.get(t, INF):
                out[t] = total
    return out


def pruned_pair_query(
    ch: ContractionHierarchy,
    fwd_buckets: BucketStore,
    bwd_buckets: BucketStore,
    s: int,
    t: int,
) -> tuple[int, dict[int, int], dict[int, int]]:
    """d(s, t) plus the stops strictly closer than it.

    Returns ``(d(s, t), {v: d(s, v)}, {u: d(u, t)})`` where the maps contain
    exactly the stops whose distance is strictly below d(s, t) (all reachable
    stops when s and t are disconnected).  Stops at or beyond d(s, t) are
    omitted: transferring through them is never better than the direct
    transfer.
    """
    if s == t:
        return 0, {}, {}

    # pruned bidirectional search: each side stops once its head key exceeds
    # the tentative s-t distance
    df: dict[int, int] = {s: 0}
    db: dict[int, int] = {t: 0}
    settled_f: dict[int, int] = {}
    settled_b: dict[int, int] = {}
    heap_f: list[tuple[int, int]] = [(0, s)]
    heap_b: list[tuple[int, int]] = [(0, t)]
    best = INF

    def step(
        heap: list[tuple[int, int]],
        dist: dict[int, int],
        other: dict[int, int],
        settled: dict[int, int],
        adj: list[dict[int, tuple[int, int]]],
    ) -> None:
        nonlocal best
        k, u = heapq.heappop(heap)
        if k > dist.get(u, INF) or u in settled:
            return
        settled[u] = k
        other_d = other.get(u)
        if other_d is not None and k + other_d < best:
            best = k + other_d
        for v, (w, _) in adj[u].items():
            nd = k + w
            if nd < dist.get(v, INF):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))

    while heap_f or heap_b:
        if heap_f and heap_f[0][0] > best:
            heap_f = []
        if heap_b and heap_b[0][0] > best:
            heap_b = []
        if not heap_f and not heap_b:
            break
        use_fwd = bool(heap_f) and (not heap_b or heap_f[0][0] <= heap_b[0][0])
        if use_fwd:
            step(heap_f, df, db, settled_f, ch.up)
        else:
            step(heap_b, db, df, settled_b, ch.down_in)

    from_s = _strictly_closer(_combine(settled_f, fwd_buckets, best), best)
    to_t = _strictly_closer(_combine(settled_b, bwd_buckets, best), best)
    return best, from_s, to_t


def _strictly_closer(dists: dict[int, int], bound: int) -> dict[int, int]:
    return {v: d for v, d in dists.items() if d < bound}
