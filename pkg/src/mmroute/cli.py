"""Command line interface.

Subcommands: ``preprocess`` (compute and store shortcuts), ``query`` (run one
of six engines), ``verify`` (randomized sufficiency suite), ``bench`` (replay
a query file with per-phase timings and a rendered figure).

Exit codes: 0 success, 1 usage error, 2 verification mismatch.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from fractions import Fraction
from typing import Optional

from .ch import build_buckets, contract_core, contract_full
from .graph import metric_closure_over_stops
from .io import (
    NetworkFormatError,
    ShortcutFileError,
    load_network,
    load_shortcuts,
    save_shortcuts,
)
from .model import INF, ContractViolation, Journey, PublicTransitNetwork
from .oracle import GeneratorParams, SampleSpec, generate_network, verify_sufficiency
from .queries import (
    QueryResult,
    Timetable,
    csa_query,
    mcsa_query,
    mr_inf_query,
    raptor_query,
    ultra_csa_query,
    ultra_raptor_query,
)
from .report import render_bench_figure, write_bench_csv
from .shortcuts import PreprocessParams, compute_shortcuts

ALGORITHMS = ["raptor", "csa", "mr-inf", "mcsa", "ultra-raptor", "ultra-csa"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


def _witness_limit(raw: str) -> int:
    if raw.lower() in ("inf", "infinite", "infinity"):
        return INF
    value = int(raw)
    if value < 0:
        raise argparse.ArgumentTypeError("witness limit must be >= 0 or 'inf'")
    return value


def _build_parser() -> _Parser:
    parser = _Parser(prog="mmroute")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="compute transfer shortcuts")
    p.add_argument("--network", required=True)
    p.add_argument("--core-degree", type=float, default=14.0)
    p.add_argument("--witness-limit", type=_witness_limit, default=900)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--transfer-time-scale", type=Fraction, default=Fraction(1))
    p.add_argument("--drop-disconnected-pairs", action="store_true")
    p.add_argument("--keep-paths", action="store_true")
    p.add_argument("--out", required=True)

    q = sub.add_parser("query", help="run a point-to-point query")
    q.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    q.add_argument("--network", required=True)
    q.add_argument("--shortcuts")
    q.add_argument("--from", dest="source", type=int, required=True)
    q.add_argument("--to", dest="target", type=int, required=True)
    q.add_argument("--depart", type=int, required=True)
    q.add_argument("--core-degree", type=float, default=14.0)
    q.add_argument("--json", action="store_true")

    v = sub.add_parser("verify", help="randomized sufficiency verification")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--instances", type=int, default=20)
    v.add_argument("--witness-limit", type=_witness_limit, default=900)
    v.add_argument("--core-degree", type=float, default=14.0)

    b = sub.add_parser("bench", help="replay a query file with timings")
    b.add_argument("--network", required=True)
    b.add_argument("--queries", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--shortcuts")
    b.add_argument("--algorithms", default=None, help="comma-separated subset")
    b.add_argument("--core-degree", type=float, default=14.0)
    return parser


def _journey_dict(net: PublicTransitNetwork, j: Journey) -> dict:
    parts = []
    for i, tr in enumerate(j.transfers):
        if i > 0:
            leg = j.legs[i - 1]
            trip = net.trips[leg.trip_id]
            parts.append(
                {
                    "kind": "trip",
                    "trip": leg.trip_id,
                    "board_stop": trip.stop_sequence[leg.board_index],
                    "board_time": trip.departure_times[leg.board_index],
                    "alight_stop": trip.stop_sequence[leg.alight_index],
                    "alight_time": trip.arrival_times[leg.alight_index],
                }
            )
        if tr.time > 0 or tr.path:
            parts.append(
                {
                    "kind": "transfer",
                    "seconds": tr.time,
                    "path": list(tr.path) if tr.path is not None else None,
                }
            )
    return {"parts": parts}


def _describe_journey(net: PublicTransitNetwork, j: Journey) -> str:
    bits = []
    for part in _journey_dict(net, j)["parts"]:
        if part["kind"] == "trip":
            bits.append(
                f"trip {part['trip']} {part['board_stop']}@{part['board_time']}"
                f" -> {part['alight_stop']}@{part['alight_time']}"
            )
        else:
            where = "via " + "-".join(map(str, part["path"])) if part["path"] else "shortcut"
            bits.append(f"{where} transfer of {part['seconds']} seconds")
    return "; ".join(bits) if bits else "stay put"


def _run_query(args) -> int:
    net = load_network(args.network)
    alg = args.algorithm
    if alg in ("raptor", "csa"):
        closed = metric_closure_over_stops(net.transfer_graph, net.stop_count)
        closed_net = PublicTransitNetwork(net.stops, net.trips, net.routes, closed)
        if alg == "raptor":
            result = raptor_query(closed_net, args.source, args.target, args.depart)
        else:
            arrival = csa_query(closed_net, args.source, args.target, args.depart)
            return _emit_arrival(args, arrival)
    elif alg in ("mr-inf", "mcsa"):
        core = contract_core(net.transfer_graph, range(net.stop_count), args.core_degree)
        if alg == "mr-inf":
            result = mr_inf_query(net, core, args.source, args.target, args.depart)
        else:
            arrival = mcsa_query(net, core, args.source, args.target, args.depart)
            return _emit_arrival(args, arrival)
    else:
        if not args.shortcuts:
            sys.stderr.write("error: --shortcuts is required for ULTRA algorithms\n")
            return 1
        shortcuts = load_shortcuts(args.shortcuts)
        ch = contract_full(net.transfer_graph)
        fwd = build_buckets(ch, range(net.stop_count))
        bwd = build_buckets(ch, range(net.stop_count), reverse=True)
        if alg == "ultra-raptor":
            result = ultra_raptor_query(
                net, shortcuts, fwd, bwd, ch, args.source, args.target, args.depart
            )
        else:
            arrival = ultra_csa_query(
                net, shortcuts, fwd, bwd, ch, args.source, args.target, args.depart
            )
            return _emit_arrival(args, arrival)
    return _emit_result(args, net, result)


def _emit_arrival(args, arrival: int) -> int:
    if args.json:
        print(json.dumps({"arrival": None if arrival >= INF else arrival}))
    elif arrival >= INF:
        print("unreachable")
    else:
        print(f"arrival {arrival}")
    return 0


def _emit_result(args, net: PublicTransitNetwork, result: QueryResult) -> int:
    if args.json:
        payload = {
            "source": result.source,
            "target": result.target,
            "departure": result.departure,
            "labels": [
                {
                    "departure": lab.departure_time,
                    "arrival": lab.arrival_time,
                    "trips": lab.trip_count,
                }
                for lab in result.labels
            ],
            "journeys": [_journey_dict(net, j) for j in result.journeys],
        }
        print(json.dumps(payload))
    elif not result.labels:
        print("no journey")
    else:
        for lab, j in zip(result.labels, result.journeys):
            print(
                f"arrival {lab.arrival_time} with {lab.trip_count} trips: "
                f"{_describe_journey(net, j)}"
            )
    return 0


def _run_preprocess(args) -> int:
    net = load_network(args.network, transfer_time_scale=args.transfer_time_scale)
    core = contract_core(net.transfer_graph, range(net.stop_count), args.core_degree)
    params = PreprocessParams(
        witness_limit=args.witness_limit,
        core_degree=args.core_degree,
        workers=args.threads,
        drop_disconnected_pairs=args.drop_disconnected_pairs,
        keep_paths=args.keep_paths,
    )
    start = time.perf_counter()
    shortcuts = compute_shortcuts(net, core, params)
    elapsed = time.perf_counter() - start
    save_shortcuts(args.out, shortcuts)
    print(f"{len(shortcuts.edges)} shortcuts in {elapsed:.2f}s -> {args.out}")
    return 0


def _run_verify(args) -> int:
    rng = random.Random(args.seed)
    failures = 0
    for i in range(args.instances):
        params = GeneratorParams(
            seed=args.seed + i,
            stop_count=rng.randint(5, 20),
            extra_vertices=rng.randint(0, 30),
            edge_density=rng.choice([0.5, 1.0, 2.0]),
            route_count=rng.randint(2, 6),
            trips_per_route=rng.randint(1, 4),
            isolated_probability=rng.choice([0.0, 0.2]),
        )
        net = generate_network(params)
        core = contract_core(net.transfer_graph, range(net.stop_count), args.core_degree)
        shortcuts = compute_shortcuts(
            net, core, PreprocessParams(witness_limit=args.witness_limit)
        )
        report = verify_sufficiency(net, shortcuts, SampleSpec(seed=args.seed + i))
        status = "ok" if report.ok else f"{len(report.mismatches)} MISMATCHES"
        print(
            f"instance {i}: {report.checked} queries, {report.shortcut_count} shortcuts,"
            f" {report.superfluous_count} unused, {status}"
        )
        if not report.ok:
            failures += 1
            for s, t, dep, expected, got in report.mismatches[:3]:
                print(f"  {s}->{t}@{dep}: oracle {expected} vs ultra {got}")
    return 2 if failures else 0


def _run_bench(args) -> int:
    net = load_network(args.network)
    queries = []
    import csv as _csv

    with open(args.queries, newline="") as f:
        reader = _csv.DictReader(f)
        for row in reader:
            queries.append(
                (int(row["source"]), int(row["target"]), int(row["departure"]))
            )

    algorithms = (
        args.algorithms.split(",")
        if args.algorithms
        else (ALGORITHMS if args.shortcuts else ["raptor", "csa", "mr-inf", "mcsa"])
    )
    for alg in algorithms:
        if alg not in ALGORITHMS:
            sys.stderr.write(f"error: unknown algorithm {alg!r}\n")
            return 1
    if any(a.startswith("ultra") for a in algorithms) and not args.shortcuts:
        sys.stderr.write("error: --shortcuts is required for ULTRA algorithms\n")
        return 1

    tt = Timetable(net)
    closed_net = None
    closed_tt = None
    if any(a in ("raptor", "csa") for a in algorithms):
        closed = metric_closure_over_stops(net.transfer_graph, net.stop_count)
        closed_net = PublicTransitNetwork(net.stops, net.trips, net.routes, closed)
        closed_tt = Timetable(closed_net)
    core = None
    if any(a in ("mr-inf", "mcsa") for a in algorithms):
        core = contract_core(net.transfer_graph, range(net.stop_count), args.core_degree)
    ch = fwd = bwd = shortcuts = None
    if any(a.startswith("ultra") for a in algorithms):
        shortcuts = load_shortcuts(args.shortcuts)
        ch = contract_full(net.transfer_graph)
        fwd = build_buckets(ch, range(net.stop_count))
        bwd = build_buckets(ch, range(net.stop_count), reverse=True)

    rows = []
    for alg in algorithms:
        for s, t, dep in queries:
            timings: dict = {}
            start = time.perf_counter_ns()
            try:
                if alg == "raptor":
                    labels = len(raptor_query(closed_net, s, t, dep, tt=closed_tt, timings=timings).labels)
                elif alg == "csa":
                    labels = int(csa_query(closed_net, s, t, dep, tt=closed_tt, timings=timings) < INF)
                elif alg == "mr-inf":
                    labels = len(mr_inf_query(net, core, s, t, dep, tt=tt, timings=timings).labels)
                elif alg == "mcsa":
                    labels = int(mcsa_query(net, core, s, t, dep, tt=tt, timings=timings) < INF)
                elif alg == "ultra-raptor":
                    labels = len(
                        ultra_raptor_query(net, shortcuts, fwd, bwd, ch, s, t, dep, tt=tt, timings=timings).labels
                    )
                else:
                    labels = int(
                        ultra_csa_query(net, shortcuts, fwd, bwd, ch, s, t, dep, tt=tt, timings=timings) < INF
                    )
            except ContractViolation:
                continue  # stop-to-stop baseline fed a non-stop endpoint
            total_us = (time.perf_counter_ns() - start) // 1000
            rows.append(
                {
                    "algorithm": alg,
                    "source": s,
                    "target": t,
                    "departure": dep,
                    "labels": labels,
                    "total_us": total_us,
                    **{k: timings.get(k, 0) for k in ("init_us", "collect_us", "scan_us", "relax_us")},
                }
            )
    write_bench_csv(rows, args.out)
    figure = args.out.rsplit(".", 1)[0] + ".png"
    render_bench_figure(rows, figure)
    print(f"{len(rows)} measurements -> {args.out}, figure -> {figure}")
    return 0


def cli(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    try:
        if args.command == "preprocess":
            return _run_preprocess(args)
        if args.command == "query":
            return _run_query(args)
        if args.command == "verify":
            return _run_verify(args)
        if args.command == "bench":
            return _run_bench(args)
    except (NetworkFormatError, ShortcutFileError, ContractViolation, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    return 1


def entry() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    entry()
