"""End-to-end acceptance suite.

Eight criteria, one test each, run in file order.  Every test prints a single
pass/fail summary line so the suite doubles as a report when run with -v.
Runtime is dominated by criterion 1/2 (a thousand random networks) and
criterion 7 (one medium instance with a thousand timed queries).
"""

import os
import random
import statistics
import time

import pytest

from mmroute.ch import (
    build_buckets,
    bucket_query,
    contract_core,
    contract_full,
    pruned_pair_query,
)
from mmroute.graph import dijkstra
from mmroute.io import load_network, load_shortcuts, save_network, save_shortcuts
from mmroute.model import INF, TransferGraph
from mmroute.oracle import (
    GeneratorParams,
    ParetoOracle,
    SampleSpec,
    generate_network,
    verify_sufficiency,
)
from mmroute.queries import (
    Timetable,
    mcsa_query,
    mr_inf_query,
    ultra_csa_query,
    ultra_raptor_query,
)
from mmroute.shortcuts import PreprocessParams, ShortcutGraph, compute_shortcuts
from conftest import A, B, C, D, X, build_tiny, random_graph

WITNESS_LIMITS = (0, 900, INF)


def _announce(capsys, criterion: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\ncriterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


# -- criteria 1 and 2: sufficiency over a thousand random networks -------------


def _instance_params(seed: int) -> GeneratorParams:
    rng = random.Random(seed * 2654435761 % 2**31)
    return GeneratorParams(
        seed=seed,
        stop_count=rng.randint(5, 50),
        extra_vertices=rng.randint(0, 100),
        edge_density=rng.choice([0.5, 1.0, 2.0, 3.0]),
        route_count=rng.randint(2, 8),
        trips_per_route=rng.randint(1, 4),
        isolated_probability=rng.choice([0.0, 0.1, 0.3]),
        zero_edge_probability=rng.choice([0.0, 0.05, 0.2]),
    )


def _check_instance(seed: int) -> tuple[int, int, int]:
    """(queries checked, Pareto mismatches, earliest-arrival mismatches)."""
    rng = random.Random(seed)
    net = generate_network(_instance_params(seed))
    sc_count = net.stop_count
    core = contract_core(net.transfer_graph, keep=range(sc_count))
    ch = contract_full(net.transfer_graph)
    fwd = build_buckets(ch, range(sc_count))
    bwd = build_buckets(ch, range(sc_count), reverse=True)
    tt = Timetable(net)
    oracle = ParetoOracle(net)

    pairs = [(rng.randrange(sc_count), rng.randrange(sc_count)) for _ in range(10)]
    events = net.event_times()
    deps = sorted(set(rng.sample(events, min(3, len(events))))) + [0]

    # the oracle and the core-based engines do not depend on the witness limit
    baseline = {}
    for s, t in pairs:
        for dep in deps:
            expected = oracle.query(s, t, dep)
            earliest = expected[-1].arrival_time if expected else INF
            mr = mr_inf_query(net, core, s, t, dep, tt=tt).labels
            mc = mcsa_query(net, core, s, t, dep, tt=tt)
            baseline[(s, t, dep)] = (expected, earliest, mr, mc)

    checked = bad_pareto = bad_earliest = 0
    for tau in WITNESS_LIMITS:
        shortcuts = compute_shortcuts(net, core, PreprocessParams(witness_limit=tau))
        for (s, t, dep), (expected, earliest, mr, mc) in baseline.items():
            checked += 1
            ur = ultra_raptor_query(net, shortcuts, fwd, bwd, ch, s, t, dep, tt=tt).labels
            if not (ur == mr == expected):
                bad_pareto += 1
            uc = ultra_csa_query(net, shortcuts, fwd, bwd, ch, s, t, dep, tt=tt)
            if not (uc == mc == earliest):
                bad_earliest += 1
    return checked, bad_pareto, bad_earliest


@pytest.fixture(scope="session")
def suite_results():
    checked = bad_pareto = bad_earliest = 0
    for seed in range(1000):
        c, b1, b2 = _check_instance(seed)
        checked += c
        bad_pareto += b1
        bad_earliest += b2
    return checked, bad_pareto, bad_earliest


def test_criterion_1_pareto_sufficiency(suite_results, capsys):
    checked, bad_pareto, _ = suite_results
    ok = bad_pareto == 0
    _announce(
        capsys, 1,
        ok,
        f"ultra-raptor == mr-inf == oracle on {checked} queries"
        f" (1000 networks x 3 witness limits), {bad_pareto} mismatches",
    )
    assert ok


def test_criterion_2_earliest_arrival(suite_results, capsys):
    checked, _, bad_earliest = suite_results
    ok = bad_earliest == 0
    _announce(
        capsys, 2,
        ok,
        f"ultra-csa == mcsa == oracle earliest arrival on {checked} queries,"
        f" {bad_earliest} mismatches",
    )
    assert ok


# -- criterion 3: substrate exactness -----------------------------------------


def test_criterion_3_substrate_exactness(capsys):
    rng = random.Random(333)
    bad = 0
    graphs = 0
    for _ in range(200):
        n = rng.randint(10, 500)
        g = random_graph(rng, n, int(2.5 * n), zero_frac=0.1)
        stops = list(range(max(2, n // 4)))
        ch = contract_full(g)
        core = contract_core(g, stops)
        fwd = build_buckets(ch, stops)
        bwd = build_buckets(ch, stops, reverse=True)
        graphs += 1

        sources = rng.sample(range(n), 4)
        for s in sources:
            dist = dijkstra(g, [(s, 0)]).dist
            for t in rng.sample(range(n), 8):
                if ch.distance(s, t) != dist[t]:
                    bad += 1
            got = bucket_query(ch, fwd, s)
            for t in stops:
                want = dist[t] if dist[t] < INF else None
                if got.get(t) != want:
                    bad += 1
        for s in rng.sample(stops, min(3, len(stops))):
            full = dijkstra(g, [(s, 0)]).dist
            over = dijkstra(core.graph, [(s, 0)]).dist
            for t in stops:
                if over[t] != full[t]:
                    bad += 1
        for _ in range(3):
            s, t = rng.randrange(n), rng.randrange(n)
            best, from_s, to_t = pruned_pair_query(ch, fwd, bwd, s, t)
            ds = dijkstra(g, [(s, 0)]).dist
            dt = dijkstra(g, [(t, 0)], reverse=True).dist
            if s != t and best != ds[t]:
                bad += 1
            if s != t:
                for v in stops:
                    if (ds[v] < best) != (v in from_s) or from_s.get(v, ds[v]) != ds[v]:
                        bad += 1
                    if (dt[v] < best) != (v in to_t) or to_t.get(v, dt[v]) != dt[v]:
                        bad += 1
    ok = bad == 0
    _announce(
        capsys, 3,
        ok,
        f"CH, core overlay, buckets and pruned pair queries exact on {graphs}"
        f" random graphs, {bad} deviations",
    )
    assert ok


# -- criterion 4: hand-built fixture ledger ------------------------------------


def test_criterion_4_fixture_ledger(capsys):
    def shortcuts_for(net):
        core = contract_core(net.transfer_graph, keep=range(net.stop_count))
        return compute_shortcuts(net, core, PreprocessParams())

    tiny1 = build_tiny()
    results = [
        shortcuts_for(tiny1).edges == {(B, C): 120},
        shortcuts_for(build_tiny(with_direct=True)).edges == {},
        shortcuts_for(build_tiny(buf_c=300)).edges == {},
        not verify_sufficiency(tiny1, ShortcutGraph(4)).ok,
    ]
    ok = all(results)
    _announce(
        capsys, 4,
        ok,
        "fixture shortcuts exact (emit / witnessed / infeasible) and the"
        f" sabotaged run is flagged; checks {results}",
    )
    assert ok


# -- criterion 5: witness limit trend ------------------------------------------


def test_criterion_5_witness_limit_trend(capsys):
    sizes_inf = []
    sizes_zero = []
    for seed in range(200):
        rng = random.Random(7000 + seed)
        net = generate_network(
            GeneratorParams(
                seed=5000 + seed,
                stop_count=rng.randint(8, 25),
                extra_vertices=rng.randint(5, 30),
                edge_density=rng.choice([1.5, 2.5, 4.0]),
                route_count=rng.randint(4, 10),
                trips_per_route=rng.randint(2, 5),
                zero_edge_probability=0.1,
            )
        )
        core = contract_core(net.transfer_graph, keep=range(net.stop_count))
        sizes_inf.append(len(compute_shortcuts(net, core, PreprocessParams(witness_limit=INF))))
        sizes_zero.append(len(compute_shortcuts(net, core, PreprocessParams(witness_limit=0))))
    mean_inf = statistics.mean(sizes_inf)
    mean_zero = statistics.mean(sizes_zero)
    per_instance = sum(a <= b for a, b in zip(sizes_inf, sizes_zero))
    ok = mean_inf <= mean_zero and per_instance >= 0.95 * len(sizes_inf)
    _announce(
        capsys, 5,
        ok,
        f"mean |E'| {mean_inf:.2f} at witness limit inf vs {mean_zero:.2f} at 0;"
        f" per-instance monotone on {per_instance}/200",
    )
    assert ok


# -- criterion 6: parallel determinism of correctness --------------------------


def test_criterion_6_parallel_determinism(capsys, tmp_path):
    mismatch_instances = 0
    nondeterministic = 0
    for seed in range(50):
        rng = random.Random(8000 + seed)
        net = generate_network(
            GeneratorParams(
                seed=6000 + seed,
                stop_count=rng.randint(8, 20),
                extra_vertices=rng.randint(5, 25),
                edge_density=rng.choice([1.5, 2.5]),
                route_count=rng.randint(4, 8),
                trips_per_route=rng.randint(2, 4),
                zero_edge_probability=0.1,
            )
        )
        core = contract_core(net.transfer_graph, keep=range(net.stop_count))
        spec = SampleSpec(max_departures=4)
        seen: set[tuple] = set()
        for workers in (1, 4, 8):
            sc = compute_shortcuts(net, core, PreprocessParams(workers=workers))
            key = tuple(sc.sorted_edges())
            if key not in seen:
                seen.add(key)
                if not verify_sufficiency(net, sc, spec).ok:
                    mismatch_instances += 1
                    break
        p1 = tmp_path / f"{seed}_a.bin"
        p2 = tmp_path / f"{seed}_b.bin"
        save_shortcuts(str(p1), compute_shortcuts(net, core, PreprocessParams(workers=1)))
        save_shortcuts(str(p2), compute_shortcuts(net, core, PreprocessParams(workers=1)))
        if p1.read_bytes() != p2.read_bytes():
            nondeterministic += 1
    ok = mismatch_instances == 0 and nondeterministic == 0
    _announce(
        capsys, 6,
        ok,
        f"50 instances x workers 1/4/8: {mismatch_instances} sufficiency failures,"
        f" {nondeterministic} non-deterministic single-worker runs",
    )
    assert ok


# -- criterion 7: performance smoke on one medium instance ---------------------


def test_criterion_7_performance_smoke(capsys):
    net = generate_network(
        GeneratorParams(
            seed=7,
            stop_count=2000,
            extra_vertices=18000,
            edge_density=3.0,
            route_count=1000,
            trips_per_route=5,
            horizon=86400,
            isolated_probability=0.02,
            geometry="euclidean",
        )
    )
    sc_count = net.stop_count
    core = contract_core(net.transfer_graph, keep=range(sc_count))
    workers = os.cpu_count() or 1
    shortcuts = compute_shortcuts(
        net, core, PreprocessParams(workers=min(8, workers))
    )
    ch = contract_full(net.transfer_graph)
    fwd = build_buckets(ch, range(sc_count))
    bwd = build_buckets(ch, range(sc_count), reverse=True)
    tt = Timetable(net)

    rng = random.Random(77)
    queries = [
        (rng.randrange(sc_count), rng.randrange(sc_count), rng.randrange(86400))
        for _ in range(1000)
    ]
    totals = {"ultra-raptor": 0, "mr-inf": 0, "ultra-csa": 0, "mcsa": 0}
    for s, t, dep in queries:
        t0 = time.perf_counter_ns()
        ur = ultra_raptor_query(net, shortcuts, fwd, bwd, ch, s, t, dep, tt=tt).labels
        t1 = time.perf_counter_ns()
        mr = mr_inf_query(net, core, s, t, dep, tt=tt).labels
        t2 = time.perf_counter_ns()
        uc = ultra_csa_query(net, shortcuts, fwd, bwd, ch, s, t, dep, tt=tt)
        t3 = time.perf_counter_ns()
        mc = mcsa_query(net, core, s, t, dep, tt=tt)
        t4 = time.perf_counter_ns()
        totals["ultra-raptor"] += t1 - t0
        totals["mr-inf"] += t2 - t1
        totals["ultra-csa"] += t3 - t2
        totals["mcsa"] += t4 - t3
        assert ur == mr, (s, t, dep)
        assert uc == mc, (s, t, dep)
    means_ms = {k: v / len(queries) / 1e6 for k, v in totals.items()}
    ok = (
        means_ms["ultra-raptor"] <= means_ms["mr-inf"]
        and means_ms["ultra-csa"] <= means_ms["mcsa"]
    )
    _announce(
        capsys, 7,
        ok,
        f"{len(shortcuts)} shortcuts; mean query ms over 1000 queries:"
        f" ultra-raptor {means_ms['ultra-raptor']:.2f} vs mr-inf {means_ms['mr-inf']:.2f},"
        f" ultra-csa {means_ms['ultra-csa']:.2f} vs mcsa {means_ms['mcsa']:.2f}",
    )
    assert ok


# -- criterion 8: persistence ---------------------------------------------------


def test_criterion_8_persistence(capsys, tmp_path):
    checks = []

    net = generate_network(GeneratorParams(seed=88, stop_count=15, extra_vertices=10))
    d = tmp_path / "net"
    save_network(net, str(d))
    loaded = load_network(str(d))
    checks.append(
        sorted(loaded.transfer_graph.edges()) == sorted(net.transfer_graph.edges())
        and [t.arrival_times for t in loaded.trips] == [t.arrival_times for t in net.trips]
    )
    d2 = tmp_path / "net2"
    save_network(loaded, str(d2))
    checks.append(
        all(
            (d / name).read_bytes() == (d2 / name).read_bytes()
            for name in os.listdir(d)
        )
    )

    sc = ShortcutGraph(4, {(B, C): 120})
    p = tmp_path / "sc.bin"
    save_shortcuts(str(p), sc)
    checks.append(load_shortcuts(str(p)).edges == sc.edges)
    p_empty = tmp_path / "empty.bin"
    save_shortcuts(str(p_empty), ShortcutGraph(4))
    checks.append(load_shortcuts(str(p_empty)).edges == {})

    data = bytearray(p.read_bytes())
    data[8] ^= 0x01
    p_bad = tmp_path / "bad.bin"
    p_bad.write_bytes(bytes(data))
    try:
        load_shortcuts(str(p_bad))
        checks.append(False)
    except Exception:
        checks.append(True)

    ok = all(checks)
    _announce(
        capsys, 8,
        ok,
        f"network and shortcut round trips plus corruption rejection; checks {checks}",
    )
    assert ok
