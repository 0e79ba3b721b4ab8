"""Dijkstra one-to-all / one-to-many search over transfer graphs.

One implementation serves every call site: multi-source with per-source time
offsets, and a pluggable stopping criterion evaluated at the queue head so
callers can bound the search (candidate counters, witness limits) without
touching the core loop.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .model import INF, TransferGraph


@dataclass
class DistanceMap:
    """Tentative distances plus parent vertices for path reconstruction.
    ``settled[v]`` is False for vertices the stop criterion cut off; their
    distances are upper bounds, not guaranteed shortest."""

    dist: list[int]
    parent: list[int]
    settled: list[bool]

    def path_to(self, v: int) -> Optional[list[int]]:
        """Vertex path from the responsible source to v, or None if unreached."""
        if self.dist[v] >= INF:
            return None
        path = [v]
        while self.parent[path[-1]] >= 0:
            path.append(self.parent[path[-1]])
        path.reverse()
        return path


# stop criterion: called with (queue-head key, head vertex) before settling;
# returning True halts the search there.
StopCriterion = Callable[[int, int], bool]


def dijkstra(
    graph: TransferGraph,
    sources: Iterable[tuple[int, int]],
    stop_criterion: Optional[StopCriterion] = None,
    reverse: bool = False,
) -> DistanceMap:
    """Multi-source Dijkstra from ``(vertex, offset)`` pairs.

    Ties in the priority queue break by vertex id, so runs are deterministic.
    With ``reverse=True`` edges are traversed backwards (distances *to* the
    sources).
    """
    n = graph.vertex_count
    dist = [INF] * n
    parent = [-1] * n
    settled = [False] * n
    heap: list[tuple[int, int]] = []
    for v, off in sources:
        if off < 0:
            raise ValueError("source offsets must be non-negative")
        if off < dist[v]:
            dist[v] = off
            heapq.heappush(heap, (off, v))

    edges = graph.in_edges if reverse else graph.out_edges
    while heap:
        key, u = heap[0]
        if key > dist[u]:
            heapq.heappop(heap)
            continue
        if stop_criterion is not None and stop_criterion(key, u):
            break
        heapq.heappop(heap)
        settled[u] = True
        for v, w in edges(u):
            nd = key + w
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    return DistanceMap(dist, parent, settled)


def stop_to_stop_distances(
    graph: TransferGraph, stop_count: int
) -> list[list[int]]:
    """All-pairs shortest distances between the first ``stop_count`` vertices."""
    return [
        dijkstra(graph, [(s, 0)]).dist[:stop_count] for s in range(stop_count)
    ]


def metric_closure_over_stops(graph: TransferGraph, stop_count: int) -> TransferGraph:
    """Stop-only transfer graph with a direct edge per connected stop pair.

    This is the transitively closed input the RAPTOR/CSA baselines require.
    """
    closed = TransferGraph(stop_count)
    for u, row in enumerate(stop_to_stop_distances(graph, stop_count)):
        for v, d in enumerate(row):
            if u != v and d < INF:
                closed.add_edge(u, v, d)
    return closed
