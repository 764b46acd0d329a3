"""Rendezvous and forwarding service for leader/follower sessions.

Sessions are keyed by room code. The relay enforces the single-writer rule
and the participant limit, fans object traffic out to followers verbatim
(bytes are never re-framed, so what a follower receives is byte-identical to
what the writer sent), answers heartbeats so peers can estimate clock offset
and round-trip time, and serves late joiners a catch-up copy of the current
environment from its per-id cache.

Reliability is hop-by-hop: the relay acknowledges the leader's stream itself
and takes over per-follower retransmission from its verbatim datagram log;
follower acknowledgements are additionally forwarded up to the leader.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scene import decode_object
from .sync import ReceiverContext, SenderContext
from .wire import (
    Ack,
    FramingCodec,
    FramingProfile,
    Heartbeat,
    Hello,
    MAX_RECORDS_PER_DATAGRAM,
    ObjectUpdate,
    PoseUpdate,
    Reject,
    RejectReason,
    Role,
    Welcome,
    encode_message,
    valid_room_code,
)

RELAY_PID = 0
EVICT_AFTER_US = 10_000_000
SESSION_LIMITS = {"photon": 20, "netcode": 50}

# addresses are opaque hashable transport identifiers
Outgoing = list  # list[tuple[bytes, address]]


@dataclass
class Participant:
    pid: int
    addr: object
    role: Role
    join_us: int
    last_heard_us: int
    welcome: Welcome = None  # type: ignore[assignment]
    fwd_datagrams: int = 0
    fwd_bytes: int = 0


@dataclass
class SessionStats:
    violations: int = 0
    decode_errors: int = 0
    evictions: int = 0


class Session:
    """One room: at most one leader, up to ``limit`` followers."""

    def __init__(self, room_code: str, limit: int, codec: FramingCodec, epoch_us: int):
        self.room_code = room_code
        self.limit = limit
        self.codec = codec
        self.epoch_us = epoch_us
        self.leader: Participant | None = None
        self.participants: dict[object, Participant] = {}
        self.next_pid = 1
        self.stats = SessionStats()
        # latest object record per id, for late-join catch-up
        self.cache: dict[int, tuple[int, bytes]] = {}
        # per-origin receive state for object streams arriving at the relay
        self.ingest: dict[int, ReceiverContext] = {}
        # verbatim datagram log per (origin, seq), for per-follower resends
        self.log: dict[tuple[int, int], bytes] = {}
        # per (follower addr, origin) retransmission state for forwarded streams
        self.fwd: dict[tuple[object, int], SenderContext] = {}
        # relay-origin catch-up stream per follower addr
        self.catchup: dict[object, SenderContext] = {}
        self.last_poses: dict[int, PoseUpdate] = {}

    # -- helpers ---------------------------------------------------------

    def followers(self) -> list[Participant]:
        return [p for p in self.participants.values() if p.role is Role.FOLLOWER]

    def _send(self, msg_bytes: bytes, dest: Participant, out: Outgoing) -> None:
        dest.fwd_datagrams += 1
        dest.fwd_bytes += len(msg_bytes)
        out.append((msg_bytes, dest.addr))

    def _emit(self, msg, dest: Participant, out: Outgoing) -> None:
        self._send(self.codec.frame(encode_message(msg)), dest, out)

    # -- join ------------------------------------------------------------

    def handle_hello(self, hello: Hello, src, now_us: int) -> Outgoing:
        out: Outgoing = []
        existing = self.participants.get(src)
        if existing is not None:
            # duplicate Hello (the original Welcome may have been lost)
            existing.last_heard_us = now_us
            self._emit(existing.welcome, existing, out)
            return out
        if hello.role is Role.LEADER:
            if self.leader is not None:
                out.append((self.codec.frame(encode_message(Reject(RejectReason.LEADER_EXISTS))), src))
                return out
        else:
            if len(self.followers()) >= self.limit:
                out.append((self.codec.frame(encode_message(Reject(RejectReason.SESSION_FULL))), src))
                return out
        pid = self.next_pid
        self.next_pid += 1
        leader_pid = self.leader.pid if self.leader else 0
        baseline = self.ingest[leader_pid].cumulative if leader_pid in self.ingest else 0
        part = Participant(pid=pid, addr=src, role=hello.role, join_us=now_us, last_heard_us=now_us)
        part.welcome = Welcome(
            participant_id=pid,
            session_epoch_us=self.epoch_us,
            leader_pid=pid if hello.role is Role.LEADER else leader_pid,
            leader_seq_baseline=0 if hello.role is Role.LEADER else baseline,
        )
        self.participants[src] = part
        if hello.role is Role.LEADER:
            self.leader = part
        self._emit(part.welcome, part, out)
        if hello.role is Role.FOLLOWER:
            self._catch_up(part, leader_pid, now_us, out)
        # everyone learns about the new pose source (spawn at the origin),
        # and the newcomer learns every known pose
        spawn = PoseUpdate(pid, (0.0, 0.0, 0.0), 0.0)
        self.last_poses[pid] = spawn
        spawn_bytes = self.codec.frame(encode_message(spawn))
        for other in self.participants.values():
            if other.addr != src:
                self._send(spawn_bytes, other, out)
        for pose in self.last_poses.values():
            if pose.participant_id != pid:
                self._emit(pose, part, out)
        return out

    def _catch_up(self, part: Participant, leader_pid: int, now_us: int, out: Outgoing) -> None:
        """Send the cached environment on a fresh relay-origin stream, plus
        verbatim copies of any leader datagrams beyond the baseline the
        newcomer's Welcome advertised."""
        records = [rec for _v, rec in (self.cache[i] for i in sorted(self.cache))]
        if records:
            ctx = SenderContext(RELAY_PID, self.codec)
            self.catchup[part.addr] = ctx
            for i in range(0, len(records), MAX_RECORDS_PER_DATAGRAM):
                msg = ObjectUpdate(
                    RELAY_PID, ctx.next_seq, tuple(records[i : i + MAX_RECORDS_PER_DATAGRAM])
                )
                ctx.next_seq += 1
                datagram = self.codec.encode(msg)
                ctx.track(msg.seq, datagram, now_us)
                self._send(datagram, part, out)
        if leader_pid in self.ingest:
            ingest = self.ingest[leader_pid]
            for seq in sorted(ingest.above):
                datagram = self.log.get((leader_pid, seq))
                if datagram is None:
                    continue
                tracker = self._fwd_ctx(part.addr, leader_pid)
                tracker.track(seq, datagram, now_us)
                self._send(datagram, part, out)

    def _fwd_ctx(self, addr, origin: int) -> SenderContext:
        key = (addr, origin)
        if key not in self.fwd:
            self.fwd[key] = SenderContext(origin, self.codec)
        return self.fwd[key]

    # -- traffic ---------------------------------------------------------

    def handle_object_update(self, msg: ObjectUpdate, datagram: bytes, src, now_us: int) -> Outgoing:
        out: Outgoing = []
        sender = self.participants.get(src)
        if sender is None or self.leader is None or src != self.leader.addr:
            self.stats.violations += 1
            return out
        try:
            decoded = [decode_object(r) for r in msg.records]
        except Exception:
            self.stats.decode_errors += 1
            return out
        ingest = self.ingest.setdefault(msg.origin, ReceiverContext())
        if ingest.offer(msg.seq):
            for obj, rec in zip(decoded, msg.records):
                cur = self.cache.get(obj.id)
                if cur is None or obj.version > cur[0]:
                    self.cache[obj.id] = (obj.version, rec)
            self.log[(msg.origin, msg.seq)] = datagram
            for follower in self.followers():
                self._fwd_ctx(follower.addr, msg.origin).track(msg.seq, datagram, now_us)
                self._send(datagram, follower, out)
        self._emit(ingest.ack(msg.origin), sender, out)
        return out

    def handle_pose(self, msg: PoseUpdate, datagram: bytes, src, now_us: int) -> Outgoing:
        out: Outgoing = []
        sender = self.participants.get(src)
        if sender is None:
            return out
        self.last_poses[sender.pid] = msg
        for other in self.participants.values():
            if other.addr != src:
                self._send(datagram, other, out)
        return out

    def handle_ack(self, msg: Ack, datagram: bytes, src, now_us: int) -> Outgoing:
        out: Outgoing = []
        sender = self.participants.get(src)
        if sender is None:
            return out
        if msg.origin == RELAY_PID:
            ctx = self.catchup.get(src)
            if ctx is not None:
                ctx.on_ack(msg)
            return out
        key = (src, msg.origin)
        if key in self.fwd:
            self.fwd[key].on_ack(msg)
        if self.leader is not None and src != self.leader.addr:
            self._send(datagram, self.leader, out)
        return out

    def handle_heartbeat(self, msg: Heartbeat, src, now_us: int) -> Outgoing:
        out: Outgoing = []
        sender = self.participants.get(src)
        if sender is None or msg.echo:
            return out
        reply = Heartbeat(
            send_time_us=msg.send_time_us, echo=True, echo_recv_us=now_us, echo_send_us=now_us
        )
        self._emit(reply, sender, out)
        return out

    # -- maintenance -----------------------------------------------------

    def tick(self, now_us: int) -> Outgoing:
        out: Outgoing = []
        for addr in [a for a, p in self.participants.items() if now_us - p.last_heard_us > EVICT_AFTER_US]:
            self._evict(addr)
        for (addr, _origin), ctx in list(self.fwd.items()):
            part = self.participants.get(addr)
            if part is None:
                continue
            for datagram in ctx.due(now_us):
                self._send(datagram, part, out)
            if ctx.degraded:
                self._evict(addr)
                self.stats.evictions += 1
        for addr, ctx in list(self.catchup.items()):
            part = self.participants.get(addr)
            if part is None:
                continue
            for datagram in ctx.due(now_us):
                self._send(datagram, part, out)
            if ctx.degraded:
                self._evict(addr)
                self.stats.evictions += 1
        self._prune_log()
        return out

    def _evict(self, addr) -> None:
        part = self.participants.pop(addr, None)
        if part is None:
            return
        if self.leader is not None and addr == self.leader.addr:
            self.leader = None
        self.last_poses.pop(part.pid, None)
        self.catchup.pop(addr, None)
        for key in [k for k in self.fwd if k[0] == addr]:
            del self.fwd[key]

    def _prune_log(self) -> None:
        still_needed = set()
        for ctx in self.fwd.values():
            still_needed.update((ctx.origin, seq) for seq in ctx.unacked)
        for origin, ingest in self.ingest.items():
            still_needed.update((origin, seq) for seq in ingest.above)
        for key in [k for k in self.log if k not in still_needed]:
            del self.log[key]

    def drained(self) -> bool:
        """No forwarded or catch-up datagram awaits acknowledgement."""
        return all(not c.unacked for c in self.fwd.values()) and all(
            not c.unacked for c in self.catchup.values()
        )


class SessionHost:
    """Routes datagrams to sessions: Hello by room code, the rest by the
    sender's address. All sessions share one framing profile and limit."""

    def __init__(self, framing: FramingProfile, limit_profile: str = "photon"):
        self.codec = FramingCodec(framing)
        self.limit = SESSION_LIMITS[limit_profile]
        self.sessions: dict[str, Session] = {}
        self.by_addr: dict[object, Session] = {}
        self.decode_errors = 0

    def session(self, room_code: str, now_us: int) -> Session:
        if room_code not in self.sessions:
            self.sessions[room_code] = Session(room_code, self.limit, self.codec, now_us)
        return self.sessions[room_code]

    def handle_datagram(self, data: bytes, src, now_us: int) -> Outgoing:
        try:
            msg = self.codec.decode(data)
        except Exception:
            self.decode_errors += 1
            return []
        if isinstance(msg, Hello):
            if not valid_room_code(msg.room_code):
                return [(self.codec.frame(encode_message(Reject(RejectReason.BAD_ROOM_CODE))), src)]
            session = self.session(msg.room_code, now_us)
            out = session.handle_hello(msg, src, now_us)
            if src in session.participants:
                self.by_addr[src] = session
            return out
        session = self.by_addr.get(src)
        if session is None:
            return []
        part = session.participants.get(src)
        if part is not None:
            part.last_heard_us = now_us
        if isinstance(msg, ObjectUpdate):
            return session.handle_object_update(msg, data, src, now_us)
        if isinstance(msg, PoseUpdate):
            return session.handle_pose(msg, data, src, now_us)
        if isinstance(msg, Ack):
            return session.handle_ack(msg, data, src, now_us)
        if isinstance(msg, Heartbeat):
            return session.handle_heartbeat(msg, src, now_us)
        return []

    def tick(self, now_us: int) -> Outgoing:
        out: Outgoing = []
        for session in self.sessions.values():
            before = set(session.participants)
            out.extend(session.tick(now_us))
            for addr in before - set(session.participants):
                self.by_addr.pop(addr, None)
        return out
