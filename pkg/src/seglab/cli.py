"""Command-line entry point: simulate | serve | analyze | loadtest.

Exit codes: 0 success, 1 flag/input validation, 2 runtime or integrity
failure (corrupt logs, replay violations, loadtest invariant breaches).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import engine
from .engine import Placement, Policy, SimulationParams
from .gamelog import LogFormatError, ReplayError, read_log, write_log
from .grid import GridError, PRESET_NAMES, UtilityTable, preset
from .loadtest import BOT_POLICIES, run_loadtest
from .metrics import (
    adjacency_baseline,
    adjacency_score,
    latency_table,
    snapshot,
    time_series,
    transition_matrix,
)
from .output import atomic_write_text, heatmap_svg, line_chart_svg, write_csv, write_json
from .service import GameServer

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

METRIC_CHOICES = ("all", "series", "latency", "transitions", "adjacency", "summary")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags; remap
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s"
    )
    try:
        return args.func(args)
    except (GridError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (LogFormatError, ReplayError) as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="seglab",
        description="Segregation laboratory: batch simulation, live game service, log analysis.",
    )
    sub = p.add_subparsers(required=True)

    sim = sub.add_parser("simulate", help="run seeded simulation batches, emit CSV/JSON")
    sim.add_argument("--policy", choices=[pol.value for pol in Policy],
                     default="best-response")
    sim.add_argument("--preset", choices=PRESET_NAMES, default=None,
                     help="utility table preset (or use --table)")
    sim.add_argument("--table", type=Path, default=None,
                     help="JSON utility table {name, bins[11]}")
    sim.add_argument("--n", default="20",
                     help="agent count, or an inclusive sweep like 13-25")
    sim.add_argument("--runs", type=int, default=100)
    sim.add_argument("--periods", type=int, default=10_000)
    sim.add_argument("--full", action="store_true",
                     help="replication scale: 1000 runs x 100000 periods")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--record-every", type=int, default=1_000)
    sim.add_argument("--placement", choices=[pl.value for pl in Placement],
                     default="uniform")
    sim.add_argument("--out", type=Path, required=True, help="output directory")
    sim.add_argument("--trace", action="store_true",
                     help="also write the per-run sampled time series")
    sim.add_argument("--export-log", type=Path, default=None,
                     help="export run 0 of the first n as a replayable JSONL event log")
    sim.add_argument("--workers", type=int, default=None)
    sim.set_defaults(func=cmd_simulate)

    srv = sub.add_parser("serve", help="run the live multiplayer game service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8765)
    srv.add_argument("--data-dir", type=Path,
                     default=Path(os.environ.get("SEGLAB_DATA_DIR", "data")))
    srv.add_argument("--seed", type=int, default=0)
    srv.add_argument("--players", type=int, default=20,
                     help="expected roster size (13..36)")
    srv.add_argument("--min-players", type=int, default=13,
                     help="minimum roster to start a game (lower only for smoke tests)")
    srv.add_argument("--game-ms", type=int, default=120_000)
    srv.add_argument("--tick-ms", type=int, default=250)
    srv.set_defaults(func=cmd_serve)

    ana = sub.add_parser("analyze", help="replay JSONL logs and emit metric tables")
    ana.add_argument("logs", nargs="+", type=Path)
    ana.add_argument("--out", type=Path, required=True)
    ana.add_argument("--metric", choices=METRIC_CHOICES, action="append",
                     default=None, help="repeatable; default all")
    ana.add_argument("--sample-ms", type=int, default=1_000)
    ana.add_argument("--adjacency-trials", type=int, default=20_000)
    ana.add_argument("--adjacency-seed", type=int, default=1)
    ana.add_argument("--svg", action="store_true", help="emit SVG charts next to the CSVs")
    ana.set_defaults(func=cmd_analyze)

    lt = sub.add_parser("loadtest", help="drive a live service with scripted bots")
    lt.add_argument("--url", default="ws://127.0.0.1:8765/ws/main")
    lt.add_argument("--players", type=int, default=20)
    lt.add_argument("--policy", choices=BOT_POLICIES, default="random")
    lt.add_argument("--moves-per-sec", type=float, default=4.0,
                    help="aggregate move rate across all bots")
    lt.add_argument("--duration", type=float, default=120.0)
    lt.add_argument("--seed", type=int, default=0)
    lt.add_argument("--out", type=Path, default=None, help="write the JSON report here")
    lt.set_defaults(func=cmd_loadtest)

    return p


# --- simulate ---------------------------------------------------------------


def _parse_n(text: str) -> list[int]:
    if "-" in text:
        lo, hi = text.split("-", 1)
        lo, hi = int(lo), int(hi)
        if not 1 <= lo <= hi <= 36:
            raise ValueError(f"bad sweep {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def _load_table(args) -> UtilityTable:
    if args.table is not None:
        return UtilityTable.load(args.table)
    return preset(args.preset or "same")


def cmd_simulate(args) -> int:
    table = _load_table(args)
    ns = _parse_n(args.n)
    runs = 1000 if args.full and args.runs == 100 else args.runs
    periods = 100_000 if args.full and args.periods == 10_000 else args.periods

    run_rows: list[list] = []
    trace_rows: list[list] = []
    summaries = []
    for n in ns:
        params = SimulationParams(
            policy=Policy(args.policy),
            table=table,
            n_agents=n,
            periods=periods,
            runs=runs,
            seed=args.seed,
            record_every=args.record_every,
            placement=Placement(args.placement),
        )
        result = engine.batch(params, workers=args.workers)
        for row in result.rows:
            run_rows.append([
                row.run, args.policy, table.name, n, periods, row.seed,
                f"{row.segregation:.6f}", f"{row.avg_score:.6f}",
                f"{row.avg_neighbors:.6f}",
            ])
        s = result.summary
        summaries.append({
            "n": n, "policy": args.policy, "preset": table.name,
            "runs": runs, "periods": periods, "seed": args.seed,
            "meanSegregation": s.mean_segregation,
            "stdSegregation": s.std_segregation,
            "meanAvgScore": s.mean_avg_score,
            "stdAvgScore": s.std_avg_score,
            "meanAvgNeighbors": s.mean_avg_neighbors,
            "stdAvgNeighbors": s.std_avg_neighbors,
        })
        if args.trace:
            for run_index in range(runs):
                rr = engine.run(params, run_index)
                for k, snap in enumerate(rr.trace):
                    trace_rows.append([
                        run_index, n, k * args.record_every,
                        f"{snap.segregation:.6f}", f"{snap.avg_score:.6f}",
                        f"{snap.avg_neighbors:.6f}",
                    ])

    out: Path = args.out
    write_csv(
        out / "runs.csv",
        ["run", "policy", "preset", "n", "periods", "seed",
         "segregation", "avg_score", "avg_neighbors"],
        run_rows,
    )
    write_csv(
        out / "summary.csv",
        ["n", "policy", "preset", "runs", "periods",
         "mean_segregation", "std_segregation", "mean_avg_score",
         "std_avg_score", "mean_avg_neighbors", "std_avg_neighbors"],
        [[s["n"], s["policy"], s["preset"], s["runs"], s["periods"],
          f"{s['meanSegregation']:.6f}", f"{s['stdSegregation']:.6f}",
          f"{s['meanAvgScore']:.6f}", f"{s['stdAvgScore']:.6f}",
          f"{s['meanAvgNeighbors']:.6f}", f"{s['stdAvgNeighbors']:.6f}"]
         for s in summaries],
    )
    write_json(out / "summary.json", {
        "kernel": engine.kernel_backend(),
        "table": table.to_json(),
        "batches": summaries,
    })
    if args.trace:
        write_csv(
            out / "trace.csv",
            ["run", "n", "period", "segregation", "avg_score", "avg_neighbors"],
            trace_rows,
        )
    if args.export_log is not None:
        params = SimulationParams(
            policy=Policy(args.policy), table=table, n_agents=ns[0],
            periods=periods, runs=runs, seed=args.seed,
            record_every=args.record_every, placement=Placement(args.placement),
        )
        _, log = engine.run_logged(params, 0)
        args.export_log.parent.mkdir(parents=True, exist_ok=True)
        write_log(args.export_log, log)
    print(f"simulate: {len(ns)} batch(es) x {runs} runs x {periods} periods "
          f"[{engine.kernel_backend()} kernel] -> {out}")
    return EXIT_OK


# --- serve --------------------------------------------------------------------


def cmd_serve(args) -> int:
    if not 13 <= args.players <= 36:
        raise ValueError(f"--players must be 13..36, got {args.players}")
    server = GameServer(
        host=args.host,
        port=args.port,
        data_dir=args.data_dir,
        seed=args.seed,
        expected_players=args.players,
        min_players=args.min_players,
        game_ms=args.game_ms,
        tick_ms=args.tick_ms,
    )

    async def run() -> None:
        await server.start()
        print(f"serving on ws://{server.host}:{server.port} (data: {args.data_dir})")
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        import signal

        for sig in (signal.SIGINT, signal.SIGTERM):
            try:
                loop.add_signal_handler(sig, stop.set)
            except NotImplementedError:
                pass
        await stop.wait()
        await server.stop()
        print("stopped; logs flushed")

    asyncio.run(run())
    return EXIT_OK


# --- analyze -------------------------------------------------------------------


def cmd_analyze(args) -> int:
    metrics = set(args.metric or ["all"])
    if "all" in metrics:
        metrics = {"series", "latency", "transitions", "adjacency", "summary"}
    out: Path = args.out
    for log_path in args.logs:
        log = read_log(log_path)
        stem = log_path.stem
        table = log.header.table

        if "series" in metrics:
            series = time_series(log, sample_ms=args.sample_ms)
            write_csv(
                out / f"{stem}_series.csv",
                ["t_ms", "segregation", "avg_score", "avg_neighbors"],
                [[t, f"{s.segregation:.6f}", f"{s.avg_score:.6f}",
                  f"{s.avg_neighbors:.6f}"] for t, s in series],
            )
            if args.svg:
                atomic_write_text(out / f"{stem}_series.svg", line_chart_svg(
                    {
                        "segregation": [(t, s.segregation) for t, s in series],
                        "avg score": [(t, s.avg_score) for t, s in series],
                        "avg neighbors x10": [(t, s.avg_neighbors * 10) for t, s in series],
                    },
                    f"{stem}: time series",
                ))

        if "latency" in metrics:
            lat = latency_table(log)
            rows = []
            for (same, diff), cell in sorted(lat.cells.items()):
                mean = cell.mean_latency
                rows.append([same, diff, f"{cell.total_seconds:.3f}", cell.move_outs,
                             "" if mean is None else f"{mean:.3f}"])
            write_csv(
                out / f"{stem}_latency.csv",
                ["same", "different", "total_seconds", "move_outs", "mean_latency_s"],
                rows,
            )
            if args.svg:
                grid = [[math.nan] * 9 for _ in range(9)]
                for (same, diff), cell in lat.cells.items():
                    m = cell.mean_latency
                    if m is not None:
                        grid[same][diff] = m
                atomic_write_text(out / f"{stem}_latency.svg", heatmap_svg(
                    grid, list(range(9)), list(range(9)),
                    f"{stem}: mean seconds before moving (same x different)",
                ))

        if "transitions" in metrics:
            tm = transition_matrix(log)
            write_csv(
                out / f"{stem}_transitions.csv",
                ["out\\in", *tm.scores],
                [[s_out, *(f"{v:.6f}" for v in row)]
                 for s_out, row in zip(tm.scores, tm.matrix())],
            )
            if args.svg:
                atomic_write_text(out / f"{stem}_transitions.svg", heatmap_svg(
                    tm.matrix(), tm.scores, tm.scores,
                    f"{stem}: move-out score -> move-in score",
                ))

        final_grid, final_scores = None, None
        if "adjacency" in metrics or "summary" in metrics:
            from .gamelog import replay_final

            final_grid, final_scores = replay_final(log)

        if "adjacency" in metrics:
            seating = [e.agent for e in
                       sorted(log.header.roster, key=lambda e: e.seat)]
            observed = adjacency_score(final_grid, seating)
            baseline = adjacency_baseline(
                len(seating), args.adjacency_trials, args.adjacency_seed
            )
            write_csv(
                out / f"{stem}_adjacency.csv",
                ["n", "observed_pct", "baseline_pct", "baseline_trials"],
                [[len(seating), f"{observed:.4f}", f"{baseline:.4f}",
                  args.adjacency_trials]],
            )

        if "summary" in metrics:
            snap = snapshot(final_grid, table)
            write_json(out / f"{stem}_summary.json", {
                "log": str(log_path),
                "kind": log.header.kind,
                "players": len(log.header.roster),
                "events": len(log.events),
                "acceptedMoves": sum(1 for e in log.events if e.accepted),
                "endMs": log.end_ms,
                "final": {
                    "segregation": snap.segregation,
                    "avgScore": snap.avg_score,
                    "avgNeighbors": snap.avg_neighbors,
                },
                "endScores": {str(a): s for a, s in sorted(final_scores.items())},
            })
    print(f"analyze: {len(args.logs)} log(s) -> {out}")
    return EXIT_OK


# --- loadtest -------------------------------------------------------------------


def cmd_loadtest(args) -> int:
    report = asyncio.run(run_loadtest(
        url=args.url,
        players=args.players,
        policy=args.policy,
        moves_per_sec=args.moves_per_sec,
        duration_s=args.duration,
        seed=args.seed,
    ))
    doc = report.to_json()
    print(json.dumps(doc, indent=2))
    if args.out is not None:
        write_json(args.out, doc)
    if report.invariant_violations or not report.game_ended:
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
