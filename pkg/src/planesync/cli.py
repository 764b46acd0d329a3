"""Command-line entry points: scene-gen, relay, bench, navbench."""

from __future__ import annotations

import argparse
import asyncio
import dataclasses
import sys
from pathlib import Path

from .bench import (
    DEFAULT_REPEATS,
    load_scenario,
    render_csv,
    render_table,
    run_scenario,
    table_from_csv,
)
from .nav import PROBE_FEATURES, feature_latency_probe
from .scene import SceneSnapshot, dump_snapshot
from .synthesis import ScanState, World, full_scan, load_world, scan_step
from .wire import FramingProfile


def _write_out(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# --- scene-gen -------------------------------------------------------------


def _walk_scan(world: World) -> list:
    """Deterministic tour: visit each room's center and corners with a bounded
    sensing radius, manual-triggering a scan at every stop."""
    state = ScanState(visibility_radius=5.0, fov_deg=360.0, auto=False)
    emitted = []
    now = 0
    for room in world.rooms:
        x0, y0, z0 = room.origin
        L, W, _H = room.dimensions
        stops = [
            (x0 + L / 2, y0 + W / 2),
            (x0 + 0.5, y0 + 0.5),
            (x0 + L - 0.5, y0 + 0.5),
            (x0 + L - 0.5, y0 + W - 0.5),
            (x0 + 0.5, y0 + W - 0.5),
        ]
        for sx, sy in stops:
            state.position = (sx, sy, z0 + 1.6)
            state.trigger_pending = True
            emitted += scan_step(state, world, now)
            now += 1_000_000
    return emitted


def scene_gen_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="scene-gen", description="generate scene objects from a world file"
    )
    parser.add_argument("--world", required=True, help="world file path or builtin room name")
    parser.add_argument("--scan", choices=("full", "walk"), default="full")
    parser.add_argument("--out", default="-", help="dump file path, or - for stdout")
    args = parser.parse_args(argv)
    world = World(load_world(args.world))
    objects = full_scan(world) if args.scan == "full" else _walk_scan(world)
    snap = SceneSnapshot()
    for obj in objects:
        snap.upsert(obj)
    _write_out(dump_snapshot(snap), args.out)
    if args.out != "-":
        print(f"{len(objects)} objects -> {args.out}")
    return 0


# --- relay -----------------------------------------------------------------


def _addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


def relay_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="relay", description="session relay + browser gateway")
    parser.add_argument("--bind", type=_addr, default=("127.0.0.1", 47800))
    parser.add_argument("--gateway", type=_addr, default=("127.0.0.1", 8800))
    parser.add_argument("--limit", choices=("photon", "netcode"), default="photon")
    parser.add_argument("--framing", choices=("plain", "framed"), default="plain")
    parser.add_argument("--ui", default=None, help="static directory for the browser console")
    args = parser.parse_args(argv)

    async def serve() -> None:
        import uvicorn

        from .gateway import make_gateway_app
        from .runtime import UdpRelayServer

        framing = FramingProfile[args.framing.upper()]
        server = UdpRelayServer(args.bind, framing, args.limit)
        await server.start()
        relay_addr = (args.bind[0], server.port)
        print(f"relay: udp {relay_addr[0]}:{relay_addr[1]}  "
              f"gateway: ws://{args.gateway[0]}:{args.gateway[1]}/ws  "
              f"limit={args.limit} framing={args.framing}")
        app = make_gateway_app(relay_addr, framing, args.limit, static_dir=args.ui)
        config = uvicorn.Config(app, host=args.gateway[0], port=args.gateway[1], log_level="warning")
        try:
            await uvicorn.Server(config).serve()
        finally:
            await server.stop()

    try:
        asyncio.run(serve())
    except KeyboardInterrupt:
        pass
    return 0


# --- bench -----------------------------------------------------------------


def bench_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bench", description="transfer-latency benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run scenario files and write a CSV report")
    run_p.add_argument("--scenario", action="append", required=True,
                       help="scenario file path or packaged name (repeatable)")
    run_p.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    run_p.add_argument("--out", default="-", help="CSV path, or - for stdout")
    run_p.add_argument("--framing", choices=("plain", "framed", "both", "file"), default="file",
                       help="override the scenario file's framing profile")
    run_p.add_argument("--transport", choices=("sim", "real"), default="sim")

    tables_p = sub.add_parser("tables", help="render a CSV report as aligned tables")
    tables_p.add_argument("--in", dest="infile", required=True)

    args = parser.parse_args(argv)
    if args.command == "tables":
        text = sys.stdin.read() if args.infile == "-" else Path(args.infile).read_text()
        sys.stdout.write(table_from_csv(text))
        return 0

    reports = []
    for source in args.scenario:
        base = load_scenario(source)
        if args.framing == "both":
            variants = [FramingProfile.PLAIN, FramingProfile.FRAMED]
        elif args.framing in ("plain", "framed"):
            variants = [FramingProfile[args.framing.upper()]]
        else:
            variants = [base.framing]
        for framing in variants:
            scenario = dataclasses.replace(base, framing=framing)
            if args.transport == "real":
                from .runtime import run_scenario_real

                reports.append(run_scenario_real(scenario, repeats=args.repeats))
            else:
                reports.append(run_scenario(scenario, repeats=args.repeats))
    _write_out(render_csv(reports), args.out)
    if args.out != "-":
        sys.stdout.write(render_table(reports))
    return 0


# --- navbench ---------------------------------------------------------------


def navbench_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="navbench", description="feature latency probes")
    parser.add_argument("--feature", choices=PROBE_FEATURES + ("all",), default="all")
    parser.add_argument("--reps", type=int, default=100)
    parser.add_argument("--out", default="-", help="per-sample CSV (ms, one per line)")
    args = parser.parse_args(argv)
    features = PROBE_FEATURES if args.feature == "all" else (args.feature,)
    lines = []
    for feature in features:
        stats = feature_latency_probe(feature, reps=args.reps)
        lines += [f"{feature},{s:.6f}" for s in stats.samples_ms]
        print(f"{feature}: mean {stats.mean_ms:.4f} ms, std {stats.std_ms:.4f} ms "
              f"({args.reps} reps)")
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(bench_main())
