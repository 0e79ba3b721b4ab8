"""Shared fixtures: the TINY hand-built networks and small reference oracles.

TINY-1 layout (vertex 4 is a non-stop transfer vertex):

    trip T1: A(0) dep 28800 -> B(1) arr 29520
    walk:    B -> X(4) 60s, X -> C(2) 60s
    trip T2: C(2) dep 29700 -> D(3) arr 30600

The only two-trip candidate A->D uses the intermediate transfer B->C (120 s),
so preprocessing must emit exactly the shortcut (B, C, 120).  TINY-2 adds a
direct trip T3 A dep 28800 -> D arr 30300 which witnesses that candidate away.
"""

from __future__ import annotations

import heapq
import random

import pytest

from mmroute.model import (
    INF,
    PublicTransitNetwork,
    Stop,
    TransferGraph,
    Trip,
    partition_trips_into_routes,
    validate_network,
)

A, B, C, D, X = 0, 1, 2, 3, 4


def build_tiny(buf_c: int = 0, with_direct: bool = False) -> PublicTransitNetwork:
    stops = [Stop(0), Stop(1), Stop(2, buf_c), Stop(3)]
    trips = [
        Trip(0, (A, B), (28800, 29520), (28800, 29520)),
        Trip(1, (C, D), (29700, 30600), (29700, 30600)),
    ]
    if with_direct:
        trips.append(Trip(2, (A, D), (28800, 30300), (28800, 30300)))
    routes = partition_trips_into_routes(trips)
    graph = TransferGraph(5, [(B, X, 60), (X, C, 60)])
    net = PublicTransitNetwork(stops, trips, routes, graph)
    assert not validate_network(net)
    return net


@pytest.fixture
def tiny1() -> PublicTransitNetwork:
    return build_tiny()


@pytest.fixture
def tiny2() -> PublicTransitNetwork:
    return build_tiny(with_direct=True)


@pytest.fixture
def tiny1_buffered() -> PublicTransitNetwork:
    # buf(C)=300 makes the candidate infeasible: 29520 + 120 + 300 > 29700
    return build_tiny(buf_c=300)


def naive_dijkstra(graph: TransferGraph, source: int) -> list[int]:
    """Quadratic-scan single-source shortest paths, kept deliberately dumb."""
    n = graph.vertex_count
    dist = [INF] * n
    done = [False] * n
    dist[source] = 0
    for _ in range(n):
        u = -1
        best = INF
        for v in range(n):
            if not done[v] and dist[v] < best:
                best = dist[v]
                u = v
        if u < 0:
            break
        done[u] = True
        for v, w in graph.out_edges(u):
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
    return dist


def random_graph(rng: random.Random, n: int, edges: int, zero_frac: float = 0.0) -> TransferGraph:
    g = TransferGraph(n)
    for _ in range(edges):
        u = rng.randrange(n)
        v = rng.randrange(n)
        if u == v:
            continue
        w = 0 if rng.random() < zero_frac else rng.randint(1, 500)
        g.add_edge(u, v, w)
    return g
