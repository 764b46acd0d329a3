"""Asyncio UDP drivers wrapping the sans-IO relay and participant cores.

The same state machines the virtual-time simulator drives run here against
real sockets and the wall clock: a datagram server hosting sessions, and a
participant endpoint with join/calibrate/publish helpers plus background
heartbeat and retransmission tasks.
"""

from __future__ import annotations

import asyncio
import time

from .node import Joined, JoinRejected, ParticipantNode
from .relay import SessionHost
from .scene import SceneObject
from .wire import FramingCodec, FramingProfile, Role

TICK_INTERVAL_S = 0.05
HELLO_RETRY_S = 0.25


def now_us() -> int:
    return time.monotonic_ns() // 1000


class JoinError(RuntimeError):
    def __init__(self, reason):
        super().__init__(f"join rejected: {reason}")
        self.reason = reason


class _RelayProtocol(asyncio.DatagramProtocol):
    def __init__(self, host: SessionHost):
        self.host = host
        self.transport: asyncio.DatagramTransport | None = None

    def connection_made(self, transport):
        self.transport = transport

    def datagram_received(self, data, addr):
        for out, dst in self.host.handle_datagram(data, addr, now_us()):
            self.transport.sendto(out, dst)


class UdpRelayServer:
    """Datagram relay bound to one UDP port, hosting any number of rooms."""

    def __init__(self, bind: tuple[str, int], framing: FramingProfile, limit_profile: str):
        self.bind = bind
        self.host = SessionHost(framing, limit_profile)
        self._protocol: _RelayProtocol | None = None
        self._transport = None
        self._tick_task: asyncio.Task | None = None

    @property
    def port(self) -> int:
        return self._transport.get_extra_info("sockname")[1]

    async def start(self) -> None:
        loop = asyncio.get_running_loop()
        self._transport, self._protocol = await loop.create_datagram_endpoint(
            lambda: _RelayProtocol(self.host), local_addr=self.bind
        )
        self._tick_task = asyncio.create_task(self._tick_loop())

    async def _tick_loop(self) -> None:
        while True:
            await asyncio.sleep(TICK_INTERVAL_S)
            for out, dst in self.host.tick(now_us()):
                self._transport.sendto(out, dst)

    async def stop(self) -> None:
        if self._tick_task:
            self._tick_task.cancel()
        if self._transport:
            self._transport.close()


class _ParticipantProtocol(asyncio.DatagramProtocol):
    def __init__(self, owner: "AsyncParticipant"):
        self.owner = owner

    def connection_made(self, transport):
        self.owner._transport = transport

    def datagram_received(self, data, addr):
        self.owner._on_datagram(data)


class AsyncParticipant:
    """One joined endpoint over real UDP; events arrive on ``events``."""

    def __init__(
        self,
        relay_addr: tuple[str, int],
        role: Role,
        room_code: str,
        framing: FramingProfile,
    ):
        self.relay_addr = relay_addr
        self.node = ParticipantNode(role, room_code, FramingCodec(framing))
        self.events: asyncio.Queue = asyncio.Queue()
        self._transport = None
        self._joined = asyncio.Event()
        self._rejected = asyncio.Event()
        self._tasks: list[asyncio.Task] = []

    async def open(self) -> None:
        loop = asyncio.get_running_loop()
        await loop.create_datagram_endpoint(
            lambda: _ParticipantProtocol(self), remote_addr=self.relay_addr
        )

    def _sendall(self, datagrams) -> None:
        for d in datagrams:
            self._transport.sendto(d)

    def _on_datagram(self, data: bytes) -> None:
        self._sendall(self.node.on_datagram(data, now_us()))
        for ev in self.node.drain_events():
            if isinstance(ev, Joined):
                self._joined.set()
            elif isinstance(ev, JoinRejected):
                self._rejected.set()
            self.events.put_nowait(ev)

    async def join(self, timeout: float = 5.0) -> int:
        """Send Hello (retrying against loss) until welcomed or rejected."""
        deadline = asyncio.get_running_loop().time() + timeout
        while True:
            if self.node.reject_reason is not None:
                raise JoinError(self.node.reject_reason)
            if self.node.joined:
                break
            self._sendall(self.node.hello_datagram())
            waiters = [
                asyncio.create_task(self._joined.wait()),
                asyncio.create_task(self._rejected.wait()),
            ]
            _done, pending = await asyncio.wait(
                waiters, timeout=HELLO_RETRY_S, return_when=asyncio.FIRST_COMPLETED
            )
            for t in pending:
                t.cancel()
            if asyncio.get_running_loop().time() > deadline and not self.node.joined:
                raise TimeoutError("join timed out")
        self._tasks.append(asyncio.create_task(self._heartbeat_loop()))
        self._tasks.append(asyncio.create_task(self._retransmit_loop()))
        return self.node.pid

    async def calibrate(self, exchanges: int = 8, spacing_s: float = 0.02) -> float:
        for _ in range(exchanges):
            self._sendall(self.node.ping_datagram(now_us()))
            await asyncio.sleep(spacing_s)
        await asyncio.sleep(2 * spacing_s)
        return self.node.finish_calibration()

    async def _heartbeat_loop(self) -> None:
        while True:
            self._sendall(self.node.ping_datagram(now_us()))
            await asyncio.sleep(1.0)

    async def _retransmit_loop(self) -> None:
        while True:
            await asyncio.sleep(TICK_INTERVAL_S)
            self._sendall(self.node.tick(now_us()))

    def publish(self, objects: list[SceneObject]) -> None:
        self._sendall(self.node.publish(objects, now_us()))

    def send_pose(self, position, yaw: float) -> None:
        self._sendall(self.node.pose_datagram(position, yaw))

    async def drained(self, timeout: float = 10.0) -> None:
        deadline = asyncio.get_running_loop().time() + timeout
        while self.node.sender is not None and self.node.sender.unacked:
            if asyncio.get_running_loop().time() > deadline:
                raise TimeoutError("publish not acknowledged")
            await asyncio.sleep(0.02)

    def close(self) -> None:
        for t in self._tasks:
            t.cancel()
        if self._transport:
            self._transport.close()


# --- wall-clock benchmark mode --------------------------------------------------
#
# Same workload as the virtual-time harness, but over loopback UDP and the
# monotonic clock. Useful as a smoke run of the real drivers; the emulated
# mode is the measurement tool.

async def _run_real_once(scenario, seed: int):
    from .bench import RepMetrics, normalized_room_transfer
    from .synthesis import World, full_scan, load_world

    server = UdpRelayServer(("127.0.0.1", 0), scenario.framing, scenario.limit_profile)
    await server.start()
    addr = ("127.0.0.1", server.port)
    room = "REAL00"
    participants = []
    try:
        leader = AsyncParticipant(addr, Role.LEADER, room, scenario.framing)
        await leader.open()
        await leader.join()
        participants.append(leader)
        for _ in range(scenario.n_followers()):
            f = AsyncParticipant(addr, Role.FOLLOWER, room, scenario.framing)
            await f.open()
            await f.join()
            participants.append(f)
        for p in participants:
            await p.calibrate()
        world = World(load_world(scenario.world), creator=leader.node.pid)
        objects = full_scan(world, now_us=leader.node.rel_now_us(now_us()))
        leader.publish(objects)
        await leader.drained()
        await asyncio.sleep(0.2)
        st = participants[1].node.state
        latencies = [
            (recv - st.snapshot.objects[oid].created_us) / 1000.0
            for oid, (_v, recv) in sorted(st.recv_rel_us.items())
        ]
        window_us = (st.last_recv_rel_us or 0) - (st.first_recv_rel_us or 0)
        received = len(st.recv_rel_us)
        return RepMetrics(
            seed=seed,
            latencies_ms=latencies,
            window_s=window_us / 1e6,
            room50_s=normalized_room_transfer(window_us / 1e6, received) if received else 0.0,
            throughput_bps=participants[1].node.obj_rx_bytes / max(window_us, 1) * 1e6,
            objects_received=received,
            down_datagrams=participants[1].node.rx_datagrams,
            down_bytes=participants[1].node.rx_bytes,
            up_datagrams=participants[1].node.tx_datagrams,
            up_bytes=participants[1].node.tx_bytes,
            net_sent=0,
            net_dropped=0,
        )
    finally:
        for p in participants:
            p.close()
        await server.stop()


def run_scenario_real(scenario, repeats: int = 1):
    """Wall-clock loopback variant of ``bench.run_scenario``."""
    import statistics

    from .bench import MetricsReport

    async def _all():
        return [await _run_real_once(scenario, seed) for seed in range(1, repeats + 1)]

    reps = asyncio.run(_all())
    pooled = [v for rep in reps for v in rep.latencies_ms]
    return MetricsReport(
        scenario=scenario.name,
        framing=scenario.framing.name.lower(),
        participants=scenario.participants,
        repeats=len(reps),
        latency_mean_ms=statistics.fmean(pooled) if pooled else 0.0,
        latency_std_ms=statistics.stdev(pooled) if len(pooled) > 1 else 0.0,
        room50_s=statistics.fmean(r.room50_s for r in reps),
        throughput_bps=statistics.fmean(r.throughput_bps for r in reps),
        loss_fraction=0.0,
        down_datagrams=sum(r.down_datagrams for r in reps),
        down_bytes=sum(r.down_bytes for r in reps),
        up_datagrams=sum(r.up_datagrams for r in reps),
        up_bytes=sum(r.up_bytes for r in reps),
        reps=reps,
    )
