"""Reliability and apply logic for the one-writer scene stream.

Object datagrams are retransmitted until acknowledged; acknowledgements are
cumulative plus a 32-bit selective window. Sequence numbers are scoped to an
origin participant, so a relay's catch-up stream and the live stream coexist
at one receiver. Applies are idempotent and version-monotone per object id,
which makes duplicate and reordered delivery harmless.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scene import SceneObject, SceneSnapshot, decode_object, encode_object
from .wire import (
    Ack,
    DecodeError,
    FramingCodec,
    Heartbeat,
    MAX_RECORDS_PER_DATAGRAM,
    ObjectUpdate,
    PoseUpdate,
    WireMessage,
)

RTO_FLOOR_US = 50_000
RTO_CAP_US = 2_000_000
GIVE_UP_US = 30_000_000
ACK_WINDOW = 32


@dataclass
class _Tracked:
    datagram: bytes
    first_sent_us: int
    next_retx_us: int
    rto_us: int


class SenderContext:
    """Retransmission state for one outgoing object stream.

    Tracks framed datagram bytes so a resend is byte-identical to the
    original. ``origin`` is the participant id owning the sequence space.
    """

    def __init__(self, origin: int, codec: FramingCodec):
        self.origin = origin
        self.codec = codec
        self.next_seq = 1
        self.unacked: dict[int, _Tracked] = {}
        self.srtt_us = 0
        self.degraded = False

    def rto_us(self) -> int:
        return max(RTO_FLOOR_US, 2 * self.srtt_us)

    def on_rtt_sample(self, rtt_us: int) -> None:
        if rtt_us < 0:
            return
        if self.srtt_us == 0:
            self.srtt_us = rtt_us
        else:
            self.srtt_us = (7 * self.srtt_us + rtt_us) // 8

    def track(self, seq: int, datagram: bytes, now_us: int) -> None:
        rto = self.rto_us()
        self.unacked[seq] = _Tracked(datagram, now_us, now_us + rto, rto)

    def on_ack(self, ack: Ack) -> None:
        if ack.origin != self.origin:
            return
        for seq in [s for s in self.unacked if s <= ack.cumulative_seq]:
            del self.unacked[seq]
        for i in range(ACK_WINDOW):
            if ack.bitmap & (1 << i):
                self.unacked.pop(ack.cumulative_seq + 1 + i, None)

    def due(self, now_us: int) -> list[bytes]:
        """Datagrams to resend now; doubles each entry's backoff. Entries
        unacknowledged past the give-up horizon are dropped and the stream
        flagged degraded."""
        out = []
        for seq in sorted(self.unacked):
            entry = self.unacked[seq]
            if now_us - entry.first_sent_us >= GIVE_UP_US:
                self.degraded = True
                del self.unacked[seq]
                continue
            if now_us >= entry.next_retx_us:
                entry.rto_us = min(entry.rto_us * 2, RTO_CAP_US)
                entry.next_retx_us = now_us + entry.rto_us
                out.append(entry.datagram)
        return out


class ReceiverContext:
    """Dedup and ack state for one incoming object stream."""

    def __init__(self, baseline: int = 0):
        self.cumulative = baseline
        self.above: set[int] = set()

    def offer(self, seq: int) -> bool:
        """True when this seq is new; duplicates return False."""
        if seq <= self.cumulative or seq in self.above:
            return False
        self.above.add(seq)
        while self.cumulative + 1 in self.above:
            self.cumulative += 1
            self.above.discard(self.cumulative)
        return True

    def ack(self, origin: int) -> Ack:
        bitmap = 0
        for i in range(ACK_WINDOW):
            if self.cumulative + 1 + i in self.above:
                bitmap |= 1 << i
        return Ack(origin, self.cumulative, bitmap)


@dataclass
class ObjectApplied:
    obj: SceneObject
    recv_rel_us: int


@dataclass
class PoseSeen:
    participant_id: int
    position: tuple[float, float, float]
    yaw: float


@dataclass
class EchoReceived:
    heartbeat: Heartbeat


class FollowerState:
    """Receiving side of the scene stream: the mirrored snapshot plus
    per-origin ack state, peer poses, and receive-time bookkeeping."""

    def __init__(self, participant_id: int = 0):
        self.participant_id = participant_id
        self.snapshot = SceneSnapshot()
        self.receivers: dict[int, ReceiverContext] = {}
        self.peer_poses: dict[int, tuple[tuple[float, float, float], float]] = {}
        self.last_ack_sent: dict[int, Ack] = {}
        self.recv_rel_us: dict[int, tuple[int, int]] = {}  # id -> (version, t)
        self.first_recv_rel_us: int | None = None
        self.last_recv_rel_us: int | None = None

    def receiver(self, origin: int) -> ReceiverContext:
        if origin not in self.receivers:
            self.receivers[origin] = ReceiverContext()
        return self.receivers[origin]

    def set_stream_baseline(self, origin: int, baseline: int) -> None:
        if origin not in self.receivers and baseline > 0:
            self.receivers[origin] = ReceiverContext(baseline)


def leader_publish(
    objects: list[SceneObject], ctx: SenderContext, now_us: int
) -> list[ObjectUpdate]:
    """Partition objects into update datagrams of at most 20 records with
    consecutive sequence numbers, each retained for retransmission until
    acknowledged. Callers bump object versions before publishing."""
    if not objects:
        raise ValueError("publish requires at least one object")
    records = [encode_object(obj) for obj in objects]
    msgs = []
    for i in range(0, len(records), MAX_RECORDS_PER_DATAGRAM):
        msg = ObjectUpdate(
            ctx.origin, ctx.next_seq, tuple(records[i : i + MAX_RECORDS_PER_DATAGRAM])
        )
        ctx.next_seq += 1
        ctx.track(msg.seq, ctx.codec.encode(msg), now_us)
        msgs.append(msg)
    return msgs


def retransmit_tick(ctx: SenderContext, now_us: int) -> list[bytes]:
    """Framed datagrams due for retransmission."""
    return ctx.due(now_us)


def follower_apply(
    st: FollowerState,
    msg: WireMessage,
    now_local_us: int,
    now_rel_us: int | None = None,
) -> tuple[list[WireMessage], list]:
    """Apply one decoded message to follower state.

    Returns (outgoing messages, events). Object datagrams apply atomically:
    if any record fails to decode the whole datagram is rejected. Records are
    applied only when their version is newer than what the snapshot holds;
    duplicate datagrams are re-acknowledged without reapplying.
    """
    rel = now_rel_us if now_rel_us is not None else now_local_us
    if isinstance(msg, ObjectUpdate):
        try:
            decoded = [decode_object(r) for r in msg.records]
        except Exception as exc:
            raise DecodeError(f"corrupt record in datagram seq={msg.seq}: {exc}") from exc
        rc = st.receiver(msg.origin)
        events: list = []
        if rc.offer(msg.seq):
            for obj in decoded:
                if st.snapshot.upsert(obj):
                    st.recv_rel_us[obj.id] = (obj.version, rel)
                    if st.first_recv_rel_us is None:
                        st.first_recv_rel_us = rel
                    st.last_recv_rel_us = rel
                    events.append(ObjectApplied(obj, rel))
        ack = rc.ack(msg.origin)
        st.last_ack_sent[msg.origin] = ack
        return [ack], events
    if isinstance(msg, PoseUpdate):
        st.peer_poses[msg.participant_id] = (msg.position, msg.yaw)
        return [], [PoseSeen(msg.participant_id, msg.position, msg.yaw)]
    if isinstance(msg, Heartbeat):
        if msg.echo:
            return [], [EchoReceived(msg)]
        reply = Heartbeat(
            send_time_us=msg.send_time_us,
            echo=True,
            echo_recv_us=now_local_us,
            echo_send_us=now_local_us,
        )
        return [reply], []
    raise TypeError(f"follower_apply cannot handle {type(msg).__name__}")
