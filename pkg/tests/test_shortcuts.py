import pytest

from mmroute.ch import contract_core
from mmroute.model import (
    INF,
    PublicTransitNetwork,
    Stop,
    TransferGraph,
    Trip,
    partition_trips_into_routes,
)
from mmroute.oracle import GeneratorParams, SampleSpec, generate_network, verify_sufficiency
from mmroute.shortcuts import (
    PreprocessParams,
    ShortcutGraph,
    compute_shortcuts,
    merge_worker_shortcuts,
    zero_groups,
)
from conftest import A, B, C, D, X, build_tiny


def _shortcuts(net, **kw):
    core = contract_core(net.transfer_graph, keep=range(net.stop_count))
    return compute_shortcuts(net, core, PreprocessParams(**kw))


class TestTinyCases:
    def test_tiny1_emits_the_intermediate_transfer(self, tiny1):
        sc = _shortcuts(tiny1)
        assert sc.edges == {(B, C): 120}

    def test_tiny2_direct_trip_witnesses_it_away(self, tiny2):
        assert _shortcuts(tiny2).edges == {}

    def test_infeasible_candidate_not_emitted(self, tiny1_buffered):
        assert _shortcuts(tiny1_buffered).edges == {}

    def test_keep_paths_records_the_walk(self, tiny1):
        sc = _shortcuts(tiny1, keep_paths=True)
        assert sc.paths[(B, C)] == (B, X, C)

    def test_witness_limit_zero_still_sufficient_on_tiny1(self, tiny1):
        # tiny1 has no witnesses at all, so tau-bar = 0 changes nothing
        assert _shortcuts(tiny1, witness_limit=0).edges == {(B, C): 120}


class TestShortcutGraph:
    def test_add_keeps_minimum(self):
        sc = ShortcutGraph(5)
        sc.add(1, 2, 300)
        sc.add(1, 2, 200, path=(1, 4, 2))
        sc.add(1, 2, 250)
        assert sc.edges == {(1, 2): 200}
        assert sc.paths[(1, 2)] == (1, 4, 2)
        assert len(sc) == 1

    def test_sorted_edges_and_graph_view(self):
        sc = ShortcutGraph(4)
        sc.add(2, 3, 10)
        sc.add(0, 1, 20)
        assert sc.sorted_edges() == [(0, 1, 20), (2, 3, 10)]
        g = sc.transfer_graph()
        assert g.vertex_count == 4 and g.weight(2, 3) == 10


class TestMerge:
    def test_empty(self):
        assert merge_worker_shortcuts([]).edges == {}

    def test_union_with_minimum(self):
        a = ShortcutGraph(5, {(0, 1): 100, (1, 2): 50})
        b = ShortcutGraph(5, {(0, 1): 80, (3, 4): 10})
        merged = merge_worker_shortcuts([a, b])
        assert merged.edges == {(0, 1): 80, (1, 2): 50, (3, 4): 10}

    def test_order_independent(self):
        a = ShortcutGraph(3, {(0, 1): 7})
        b = ShortcutGraph(3, {(0, 1): 9, (1, 2): 1})
        assert merge_worker_shortcuts([a, b]).edges == merge_worker_shortcuts([b, a]).edges


class TestZeroGroups:
    def _core(self, net):
        return contract_core(net.transfer_graph, keep=range(net.stop_count))

    def test_tiny1_all_singletons(self, tiny1):
        groups = zero_groups(tiny1, self._core(tiny1))
        assert groups == [[0], [1], [2], [3]]

    def test_mutual_zero_pair_grouped(self):
        stops = [Stop(i) for i in range(3)]
        trips = [Trip(0, (0, 2), (0, 100), (0, 100))]
        g = TransferGraph(3, [(0, 1, 0), (1, 0, 0)])
        net = PublicTransitNetwork(stops, trips, partition_trips_into_routes(trips), g)
        groups = zero_groups(net, self._core(net))
        assert groups == [[0, 1], [2]]

    def test_one_way_zero_edge_stays_split(self):
        stops = [Stop(i) for i in range(2)]
        trips = [Trip(0, (0, 1), (0, 100), (0, 100))]
        g = TransferGraph(2, [(0, 1, 0)])
        net = PublicTransitNetwork(stops, trips, partition_trips_into_routes(trips), g)
        assert zero_groups(net, self._core(net)) == [[0], [1]]

    def test_zero_path_through_non_stop(self):
        # 0 -> 2 -> 1 and back, all zero weight, vertex 2 is not a stop
        stops = [Stop(0), Stop(1)]
        trips = [Trip(0, (0, 1), (0, 100), (0, 100))]
        g = TransferGraph(3, [(0, 2, 0), (2, 1, 0), (1, 2, 0), (2, 0, 0)])
        net = PublicTransitNetwork(stops, trips, partition_trips_into_routes(trips), g)
        core = contract_core(net.transfer_graph, keep=range(2), max_avg_degree=14.0)
        assert zero_groups(net, core) == [[0, 1]]


class TestRandomInstances:
    PARAMS = dict(
        stop_count=15,
        extra_vertices=15,
        edge_density=3.0,
        route_count=8,
        trips_per_route=3,
        zero_edge_probability=0.1,
    )

    def _instance(self, seed):
        net = generate_network(GeneratorParams(seed=seed, **self.PARAMS))
        core = contract_core(net.transfer_graph, keep=range(net.stop_count))
        return net, core

    def test_single_worker_deterministic(self):
        net, core = self._instance(3)
        a = compute_shortcuts(net, core, PreprocessParams(workers=1))
        b = compute_shortcuts(net, core, PreprocessParams(workers=1))
        assert a.sorted_edges() == b.sorted_edges()

    def test_every_worker_count_is_sufficient(self):
        net, core = self._instance(23)
        for workers in (1, 2, 4):
            sc = compute_shortcuts(net, core, PreprocessParams(workers=workers))
            report = verify_sufficiency(net, sc, SampleSpec(max_departures=4))
            assert report.ok, (workers, report.mismatches[:3])

    def test_missing_shortcut_is_detected(self):
        net, core = self._instance(23)
        sc = compute_shortcuts(net, core, PreprocessParams())
        assert len(sc) > 0
        report = verify_sufficiency(net, ShortcutGraph(net.stop_count), SampleSpec(max_departures=4))
        assert not report.ok

    def test_unlimited_witnesses_never_add_shortcuts(self):
        for seed in range(6):
            net, core = self._instance(seed)
            full = compute_shortcuts(net, core, PreprocessParams(witness_limit=INF))
            none = compute_shortcuts(net, core, PreprocessParams(witness_limit=0))
            assert len(full) <= len(none), seed
            # the restricted run is still sufficient regardless of tau-bar
            report = verify_sufficiency(net, none, SampleSpec(max_departures=3))
            assert report.ok

    def test_keep_paths_yields_valid_walks(self):
        net, core = self._instance(23)
        sc = compute_shortcuts(net, core, PreprocessParams(keep_paths=True))
        g = net.transfer_graph
        for (u, v), w in sc.edges.items():
            path = sc.paths.get((u, v))
            if path is None:
                continue
            assert path[0] == u and path[-1] == v
            assert sum(g.weight(a, b) for a, b in zip(path, path[1:])) == w
