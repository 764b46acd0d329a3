"""Participant state machine: join, clock calibration, publish, apply.

Sans-IO: methods take the local clock reading and return datagrams to send
toward the relay; drivers (the virtual-time simulator and the asyncio UDP
runtime) own sockets and timers. Events for the embedding layer accumulate
in ``events`` and are drained by the driver.
"""

from __future__ import annotations

from dataclasses import dataclass

from .netsim import best_offset
from .scene import SceneObject
from .sync import (
    EchoReceived,
    FollowerState,
    SenderContext,
    follower_apply,
    leader_publish,
    retransmit_tick,
)
from .wire import (
    Ack,
    FramingCodec,
    Heartbeat,
    Hello,
    ObjectUpdate,
    Reject,
    Role,
    Welcome,
)

CALIBRATION_EXCHANGES = 8
HEARTBEAT_INTERVAL_US = 1_000_000


@dataclass
class Joined:
    participant_id: int
    session_epoch_us: int


@dataclass
class JoinRejected:
    reason: object


class ParticipantNode:
    def __init__(self, role: Role, room_code: str, codec: FramingCodec):
        self.role = role
        self.room_code = room_code
        self.codec = codec
        self.pid: int | None = None
        self.epoch_us = 0
        self.joined = False
        self.reject_reason = None
        self.sender: SenderContext | None = None
        self.state = FollowerState()
        self.offset_est_us = 0.0
        self.exchanges: list[tuple[int, int, int, int]] = []
        self.events: list = []
        self.rx_datagrams = 0
        self.rx_bytes = 0
        self.obj_rx_datagrams = 0
        self.obj_rx_bytes = 0
        self.tx_datagrams = 0
        self.tx_bytes = 0
        self.decode_errors = 0

    # -- clocks ------------------------------------------------------------

    def rel_now_us(self, now_local_us: int) -> int:
        """Session-relative time: the local clock mapped onto the relay's
        (offset estimate is relay minus local), measured from the epoch."""
        return max(0, round(now_local_us + self.offset_est_us - self.epoch_us))

    def finish_calibration(self) -> float:
        """Keep the offset from the lowest round-trip exchange; with no
        usable exchange the estimate stays zero."""
        if self.exchanges:
            self.offset_est_us = best_offset(self.exchanges[-CALIBRATION_EXCHANGES:])
        return self.offset_est_us

    # -- outgoing ------------------------------------------------------------

    def _out(self, datagrams: list[bytes]) -> list[bytes]:
        for d in datagrams:
            self.tx_datagrams += 1
            self.tx_bytes += len(d)
        return datagrams

    def hello_datagram(self) -> list[bytes]:
        return self._out([self.codec.encode(Hello(self.role, self.room_code))])

    def ping_datagram(self, now_local_us: int) -> list[bytes]:
        return self._out([self.codec.encode(Heartbeat(send_time_us=now_local_us))])

    def pose_datagram(self, position, yaw: float) -> list[bytes]:
        from .wire import PoseUpdate

        if self.pid is None:
            return []
        return self._out([self.codec.encode(PoseUpdate(self.pid, position, yaw))])

    def publish(self, objects: list[SceneObject], now_local_us: int) -> list[bytes]:
        if self.sender is None:
            raise RuntimeError("cannot publish before joining")
        msgs = leader_publish(objects, self.sender, now_local_us)
        return self._out([self.sender.unacked[m.seq].datagram for m in msgs])

    def tick(self, now_local_us: int) -> list[bytes]:
        if self.sender is None:
            return []
        return self._out(retransmit_tick(self.sender, now_local_us))

    # -- incoming ------------------------------------------------------------

    def on_datagram(self, data: bytes, now_local_us: int) -> list[bytes]:
        self.rx_datagrams += 1
        self.rx_bytes += len(data)
        try:
            msg = self.codec.decode(data)
        except Exception:
            self.decode_errors += 1
            return []
        if isinstance(msg, Welcome):
            if not self.joined:
                self.pid = msg.participant_id
                self.epoch_us = msg.session_epoch_us
                self.state.participant_id = msg.participant_id
                if msg.leader_pid and msg.leader_pid != msg.participant_id:
                    self.state.set_stream_baseline(msg.leader_pid, msg.leader_seq_baseline)
                self.sender = SenderContext(msg.participant_id, self.codec)
                self.joined = True
                self.events.append(Joined(msg.participant_id, msg.session_epoch_us))
            return []
        if isinstance(msg, Reject):
            self.reject_reason = msg.reason
            self.events.append(JoinRejected(msg.reason))
            return []
        if isinstance(msg, Ack):
            if self.sender is not None:
                self.sender.on_ack(msg)
            return []
        if isinstance(msg, ObjectUpdate):
            self.obj_rx_datagrams += 1
            self.obj_rx_bytes += len(data)
        try:
            outgoing, events = follower_apply(
                self.state, msg, now_local_us, self.rel_now_us(now_local_us)
            )
        except Exception:
            self.decode_errors += 1
            return []
        for ev in events:
            if isinstance(ev, EchoReceived):
                hb = ev.heartbeat
                exchange = (hb.send_time_us, hb.echo_recv_us, hb.echo_send_us, now_local_us)
                rtt = (exchange[3] - exchange[0]) - (exchange[2] - exchange[1])
                if rtt >= 0:
                    self.exchanges.append(exchange)
                    if self.sender is not None:
                        self.sender.on_rtt_sample(rtt)
            self.events.append(ev)
        return self._out([self.codec.encode(m) for m in outgoing])

    def drain_events(self) -> list:
        out, self.events = self.events, []
        return out
