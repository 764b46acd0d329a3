"""Transfer-latency harness: scenarios, the virtual-time run loop, metrics.

A scenario is one relay plus one leader and N-1 followers, each behind an
emulated link. A run joins everyone, calibrates every participant's clock
against the relay with timestamp exchanges, has the leader scan and publish
the world in one burst, then drains until every object datagram is
acknowledged end to end. Metrics are taken on the first follower. Each
scenario is repeated with distinct seeds and aggregated.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .netsim import EmulatedNetwork, EventLoop, LinkProfile
from .node import CALIBRATION_EXCHANGES, ParticipantNode
from .relay import SessionHost
from .synthesis import World, full_scan, load_world
from .wire import FramingProfile, Role

DEFAULT_REPEATS = 5
SEED_LIST = (1, 2, 3, 4, 5)
VIRTUAL_TIMEOUT_US = 120_000_000
ROOM_SIZE_OBJECTS = 50  # normalization target


class ZeroObjects(ValueError):
    pass


class ScenarioTimeout(RuntimeError):
    pass


def normalized_room_transfer(total_time_s: float, total_objects: int) -> float:
    """Scale a transfer time to the standard 50-object room:
    total_time / total_objects * 50."""
    if total_objects < 1:
        raise ZeroObjects("total_objects must be >= 1")
    if total_time_s < 0:
        raise ValueError("total_time_s must be >= 0")
    return total_time_s * (ROOM_SIZE_OBJECTS / total_objects)


@dataclass(frozen=True)
class Scenario:
    name: str
    participants: int  # total, including the leader
    link: LinkProfile
    framing: FramingProfile
    limit_profile: str
    world: str
    # programmatic overrides (not part of the file schema)
    leader_link: LinkProfile | None = None
    follower_links: tuple[LinkProfile, ...] | None = None
    clock_offsets_us: tuple[int, ...] | None = None  # leader first

    def validate(self) -> None:
        if self.participants < 2:
            raise ValueError("need at least one leader and one follower")
        self.link.validate()
        if self.follower_links is not None and len(self.follower_links) != self.n_followers():
            raise ValueError("follower_links must cover every follower")
        if self.clock_offsets_us is not None and len(self.clock_offsets_us) != self.participants:
            raise ValueError("clock_offsets_us must cover every participant")

    def n_followers(self) -> int:
        return self.participants - 1


def _parse_link(doc: dict) -> LinkProfile:
    return LinkProfile(
        one_way_delay_ms=float(doc["delay_ms"]),
        jitter_ms=float(doc.get("jitter_ms", 0.0)),
        loss_fraction=float(doc.get("loss", 0.0)),
        bandwidth_kbps=float(doc.get("bandwidth_kbps", 1_000_000.0)),
        seed=int(doc.get("seed", 0)),
    )


def load_scenario(source: str | Path) -> Scenario:
    """Scenario file: JSON with name, participants, link{delay_ms, jitter_ms,
    loss, bandwidth_kbps, seed}, framing, limit_profile, world. A bare name
    resolves to a packaged scenario fixture."""
    path = Path(source)
    if not path.exists():
        candidate = resources.files("planesync").joinpath(f"scenarios/{source}.json")
        if candidate.is_file():
            path = Path(str(candidate))
        else:
            raise FileNotFoundError(f"no scenario file or fixture named {source!r}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    sc = Scenario(
        name=str(doc["name"]),
        participants=int(doc["participants"]),
        link=_parse_link(doc["link"]),
        framing=FramingProfile[str(doc["framing"]).upper()],
        limit_profile=str(doc["limit_profile"]),
        world=str(doc["world"]),
    )
    sc.validate()
    return sc


# --- one simulated run ---------------------------------------------------------


@dataclass
class RepMetrics:
    seed: int
    latencies_ms: list[float]
    window_s: float
    room50_s: float
    throughput_bps: float
    objects_received: int
    down_datagrams: int
    down_bytes: int
    up_datagrams: int
    up_bytes: int
    net_sent: int
    net_dropped: int
    schedule: list = field(default_factory=list)  # primary follower downlink


class _SimParticipant:
    def __init__(self, run: "_SimRun", index: int, role: Role, offset_us: int):
        self.run = run
        self.index = index
        self.addr = f"p{index}"
        self.offset_us = offset_us
        self.node = ParticipantNode(role, run.room_code, run.host.codec)
        self.calibrated = False
        run.network.attach(self.addr, self._on_datagram)

    def now_local(self) -> int:
        return self.run.loop.now_us + self.offset_us

    def send_all(self, datagrams) -> None:
        for d in datagrams:
            self.run.network.send(self.addr, self.run.relay_addr, d)

    def _on_datagram(self, data: bytes, _src) -> None:
        self.send_all(self.node.on_datagram(data, self.now_local()))

    # driver behaviors, each self-rescheduling on the virtual loop
    def join_task(self) -> None:
        if self.run.finished or self.node.joined or self.node.reject_reason is not None:
            return
        self.send_all(self.node.hello_datagram())
        self.run.loop.schedule_in(250_000, self.join_task)

    def heartbeat_task(self) -> None:
        if self.run.finished:
            return
        self.send_all(self.node.ping_datagram(self.now_local()))
        self.run.loop.schedule_in(1_000_000, self.heartbeat_task)

    def retransmit_task(self) -> None:
        if self.run.finished:
            return
        self.send_all(self.node.tick(self.now_local()))
        self.run.loop.schedule_in(25_000, self.retransmit_task)


class _SimRun:
    """One seeded run of a scenario on the virtual clock."""

    def __init__(self, scenario: Scenario, rep_seed: int):
        scenario.validate()
        self.scenario = scenario
        self.rep_seed = rep_seed
        self.room_code = "BENCH0"
        self.loop = EventLoop()
        self.network = EmulatedNetwork(self.loop)
        self.host = SessionHost(scenario.framing, scenario.limit_profile)
        self.relay_addr = "relay"
        self.network.attach(self.relay_addr, self._relay_datagram)
        self.finished = False
        self.published = False
        self._calibration_queue: list[_SimParticipant] = []

        def seeded(profile: LinkProfile) -> LinkProfile:
            return profile.with_seed(profile.seed * 1000 + rep_seed)

        offsets = scenario.clock_offsets_us or (0,) * scenario.participants
        leader_profile = seeded(scenario.leader_link or scenario.link)
        self.leader = _SimParticipant(self, 0, Role.LEADER, offsets[0])
        self.network.connect(self.leader.addr, self.relay_addr, leader_profile)
        self.network.connect(self.relay_addr, self.leader.addr, leader_profile)
        self.followers: list[_SimParticipant] = []
        for i in range(scenario.n_followers()):
            fl = scenario.follower_links[i] if scenario.follower_links else scenario.link
            profile = seeded(fl)
            p = _SimParticipant(self, i + 1, Role.FOLLOWER, offsets[i + 1])
            self.network.connect(p.addr, self.relay_addr, profile)
            self.network.connect(self.relay_addr, p.addr, profile)
            self.followers.append(p)
        self.participants = [self.leader] + self.followers

    def _relay_datagram(self, data: bytes, src) -> None:
        for out, dst in self.host.handle_datagram(data, src, self.loop.now_us):
            self.network.send(self.relay_addr, dst, out)

    def _relay_tick_task(self) -> None:
        if self.finished:
            return
        for out, dst in self.host.tick(self.loop.now_us):
            self.network.send(self.relay_addr, dst, out)
        self.loop.schedule_in(25_000, self._relay_tick_task)

    def _calibrate_next(self) -> None:
        if not self._calibration_queue:
            self.loop.schedule_in(100_000, self._publish)
            return
        p = self._calibration_queue.pop(0)

        def ping(k: int) -> None:
            if k >= CALIBRATION_EXCHANGES:
                p.node.finish_calibration()
                p.calibrated = True
                self._calibrate_next()
                return
            p.send_all(p.node.ping_datagram(p.now_local()))
            self.loop.schedule_in(50_000, lambda: ping(k + 1))

        ping(0)

    def _publish(self) -> None:
        leader_pid = self.leader.node.pid or 1
        rooms = (
            list(self.scenario.world)
            if isinstance(self.scenario.world, (list, tuple))
            else load_world(self.scenario.world)
        )
        world = World(rooms, creator=leader_pid)
        objects = full_scan(world, now_us=self.leader.node.rel_now_us(self.leader.now_local()))
        self.leader.send_all(self.leader.node.publish(objects, self.leader.now_local()))
        self.published = True
        self.published_objects = objects

    def _done(self) -> bool:
        if not self.published:
            return False
        sender = self.leader.node.sender
        if sender is None or sender.unacked:
            return False
        return all(s.drained() for s in self.host.sessions.values())

    def _degraded(self) -> bool:
        sender = self.leader.node.sender
        if sender is not None and sender.degraded:
            return True
        for s in self.host.sessions.values():
            if any(c.degraded for c in s.fwd.values()) or any(
                c.degraded for c in s.catchup.values()
            ):
                return True
        return False

    def run(self) -> RepMetrics:
        for i, p in enumerate(self.participants):
            self.loop.schedule_at(10_000 * (i + 1), p.join_task)
            self.loop.schedule_at(10_000 * (i + 1) + 5_000, p.heartbeat_task)
            self.loop.schedule_at(10_000 * (i + 1) + 7_000, p.retransmit_task)
        self.loop.schedule_at(0, self._relay_tick_task)

        def start_calibration_when_joined() -> None:
            if self.finished:
                return
            if all(p.node.joined for p in self.participants):
                self._calibration_queue = list(self.participants)
                self._calibrate_next()
            else:
                self.loop.schedule_in(10_000, start_calibration_when_joined)

        self.loop.schedule_at(20_000, start_calibration_when_joined)

        def supervise() -> None:
            if self.finished:
                return
            if self._degraded():
                self.finished = True
                self._failed = "degraded"
                return
            if self._done():
                self.finished = True
                return
            self.loop.schedule_in(20_000, supervise)

        self._failed = None
        self.loop.schedule_at(30_000, supervise)
        self.loop.run(until_us=VIRTUAL_TIMEOUT_US)
        if self._failed or not self.finished:
            raise ScenarioTimeout(
                f"{self.scenario.name}: {'session degraded' if self._failed else 'virtual timeout'}"
            )
        self.loop.run()  # drain in-flight deliveries
        return self._collect()

    def _collect(self) -> RepMetrics:
        primary = self.followers[0]
        st = primary.node.state
        latencies = []
        for oid, (_version, recv_rel) in sorted(st.recv_rel_us.items()):
            created = st.snapshot.objects[oid].created_us
            latencies.append((recv_rel - created) / 1000.0)
        if st.first_recv_rel_us is not None and st.last_recv_rel_us is not None:
            window_us = st.last_recv_rel_us - st.first_recv_rel_us
        else:
            window_us = 0
        window_s = window_us / 1e6
        received = len(st.recv_rel_us)
        room50 = normalized_room_transfer(window_s, received) if received else 0.0
        throughput = primary.node.obj_rx_bytes / max(window_us, 1) * 1e6
        totals = self.network.totals()
        return RepMetrics(
            seed=self.rep_seed,
            latencies_ms=latencies,
            window_s=window_s,
            room50_s=room50,
            throughput_bps=throughput,
            objects_received=received,
            down_datagrams=primary.node.rx_datagrams,
            down_bytes=primary.node.rx_bytes,
            up_datagrams=primary.node.tx_datagrams,
            up_bytes=primary.node.tx_bytes,
            net_sent=totals["sent"],
            net_dropped=totals["dropped"],
            schedule=self.network.links[(self.relay_addr, primary.addr)].schedule_log,
        )


def run_scenario_once(scenario: Scenario, rep_seed: int = 1) -> RepMetrics:
    return _SimRun(scenario, rep_seed).run()


def simulate(scenario: Scenario, rep_seed: int = 1) -> _SimRun:
    """Run one repetition and return the whole simulation (participants,
    relay, links) for inspection; metrics land on ``.metrics``."""
    run = _SimRun(scenario, rep_seed)
    run.metrics = run.run()
    return run


@dataclass
class MetricsReport:
    scenario: str
    framing: str
    participants: int
    repeats: int
    latency_mean_ms: float
    latency_std_ms: float
    room50_s: float
    throughput_bps: float
    loss_fraction: float
    down_datagrams: int
    down_bytes: int
    up_datagrams: int
    up_bytes: int
    reps: list[RepMetrics] = field(default_factory=list, repr=False, compare=False)


def run_scenario(scenario: Scenario, repeats: int = DEFAULT_REPEATS) -> MetricsReport:
    """Run ``repeats`` seeded repetitions and aggregate: latency stats pool
    every per-object sample, rates are averaged, totals are summed."""
    reps = [run_scenario_once(scenario, seed) for seed in SEED_LIST[:repeats]]
    pooled = [v for rep in reps for v in rep.latencies_ms]
    sent = sum(r.net_sent for r in reps)
    dropped = sum(r.net_dropped for r in reps)
    return MetricsReport(
        scenario=scenario.name,
        framing=scenario.framing.name.lower(),
        participants=scenario.participants,
        repeats=len(reps),
        latency_mean_ms=statistics.fmean(pooled) if pooled else 0.0,
        latency_std_ms=statistics.stdev(pooled) if len(pooled) > 1 else 0.0,
        room50_s=statistics.fmean(r.room50_s for r in reps),
        throughput_bps=statistics.fmean(r.throughput_bps for r in reps),
        loss_fraction=dropped / sent if sent else 0.0,
        down_datagrams=sum(r.down_datagrams for r in reps),
        down_bytes=sum(r.down_bytes for r in reps),
        up_datagrams=sum(r.up_datagrams for r in reps),
        up_bytes=sum(r.up_bytes for r in reps),
        reps=reps,
    )


# --- report rendering -----------------------------------------------------------

REPORT_COLUMNS = [
    "scenario",
    "framing",
    "participants",
    "repeats",
    "latency_mean_ms",
    "latency_std_ms",
    "room50_s",
    "throughput_Bps",
    "loss_fraction",
    "down_datagrams",
    "down_bytes",
    "up_datagrams",
    "up_bytes",
]


def _format_row(r: MetricsReport) -> list[str]:
    return [
        r.scenario,
        r.framing,
        str(r.participants),
        str(r.repeats),
        f"{r.latency_mean_ms:.4f}",
        f"{r.latency_std_ms:.4f}",
        f"{r.room50_s:.6f}",
        f"{r.throughput_bps:.1f}",
        f"{r.loss_fraction:.6f}",
        str(r.down_datagrams),
        str(r.down_bytes),
        str(r.up_datagrams),
        str(r.up_bytes),
    ]


def render_csv(reports: list[MetricsReport]) -> str:
    if not reports:
        raise ValueError("no reports to render")
    lines = [",".join(REPORT_COLUMNS)]
    lines += [",".join(_format_row(r)) for r in reports]
    return "\n".join(lines) + "\n"


def _table_from_rows(rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    out = []
    for n, row in enumerate(rows):
        out.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
        if n == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def render_table(reports: list[MetricsReport]) -> str:
    if not reports:
        raise ValueError("no reports to render")
    return _table_from_rows([REPORT_COLUMNS] + [_format_row(r) for r in reports])


def render_report(reports: list[MetricsReport]) -> tuple[str, str]:
    """Aligned text table plus CSV carrying the identical formatted values."""
    return render_table(reports), render_csv(reports)


def table_from_csv(text: str) -> str:
    rows = [line.split(",") for line in text.strip().splitlines() if line.strip()]
    if not rows:
        raise ValueError("empty report CSV")
    return _table_from_rows(rows)
