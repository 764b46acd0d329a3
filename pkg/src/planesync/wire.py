"""Datagram wire format: message codecs and the two framing profiles.

A datagram is ``magic(4) + version(1) + message``, where a message is a
1-byte type tag followed by its fixed-layout body. The *plain* profile sends
that as-is; the *framed* profile inserts a 4-byte length and a 16-byte
authentication tag and XORs the message with a keystream derived from the
room code — 20 bytes of overhead, mimicking a stack that encrypts its
payloads. The keystream/tag construction is a size-and-cost stand-in only,
NOT a secure cipher.
"""

from __future__ import annotations

import hashlib
import math
import string
import struct
from dataclasses import dataclass
from enum import IntEnum

from .scene import RECORD_SIZE

MAGIC = 0x43414D52
WIRE_VERSION = 0x01
MAX_DATAGRAM = 1400
MAX_RECORDS_PER_DATAGRAM = 20
FRAMED_OVERHEAD = 20

_PREFIX = struct.Struct("<IB")  # magic + wire version
ROOM_CODE_ALPHABET = string.ascii_uppercase + string.digits
ROOM_CODE_LEN = 6


class ProtocolError(Exception):
    pass


class DecodeError(ProtocolError):
    """Datagram or message bytes do not parse."""


class AuthFailure(ProtocolError):
    """Framed profile tag mismatch (tampered or foreign datagram)."""


class TooLarge(ProtocolError):
    """Framed datagram would exceed the MTU budget."""


class FramingProfile(IntEnum):
    PLAIN = 0
    FRAMED = 1


class MsgType(IntEnum):
    HELLO = 1
    WELCOME = 2
    OBJECT_UPDATE = 3
    POSE_UPDATE = 4
    ACK = 5
    HEARTBEAT = 6
    REJECT = 7


class Role(IntEnum):
    LEADER = 0
    FOLLOWER = 1


class RejectReason(IntEnum):
    LEADER_EXISTS = 1
    SESSION_FULL = 2
    BAD_ROOM_CODE = 3


@dataclass(frozen=True)
class Hello:
    role: Role
    room_code: str


@dataclass(frozen=True)
class Welcome:
    participant_id: int
    session_epoch_us: int
    leader_pid: int = 0  # 0 = no leader yet
    leader_seq_baseline: int = 0  # object seqs at/below this came via catch-up


@dataclass(frozen=True)
class ObjectUpdate:
    origin: int  # participant id owning this seq stream
    seq: int
    records: tuple[bytes, ...]  # 56-byte object records


@dataclass(frozen=True)
class PoseUpdate:
    participant_id: int
    position: tuple[float, float, float]
    yaw: float


@dataclass(frozen=True)
class Ack:
    origin: int  # stream being acknowledged
    cumulative_seq: int
    bitmap: int  # bit i => cumulative_seq + 1 + i received


@dataclass(frozen=True)
class Heartbeat:
    send_time_us: int
    echo: bool = False
    echo_recv_us: int = 0  # responder receive/reply stamps, for RTT and
    echo_send_us: int = 0  # clock-offset estimation


@dataclass(frozen=True)
class Reject:
    reason: RejectReason


WireMessage = Hello | Welcome | ObjectUpdate | PoseUpdate | Ack | Heartbeat | Reject

_HELLO = struct.Struct("<B6s")
_WELCOME = struct.Struct("<HQHI")
_OBJ_HEAD = struct.Struct("<HIB")
_POSE = struct.Struct("<H3ff")
_ACK = struct.Struct("<HII")
_HEARTBEAT = struct.Struct("<QBQQ")
_REJECT = struct.Struct("<B")


def valid_room_code(code: str) -> bool:
    return len(code) == ROOM_CODE_LEN and all(c in ROOM_CODE_ALPHABET for c in code)


def encode_message(msg: WireMessage) -> bytes:
    """Type tag + body."""
    if isinstance(msg, Hello):
        return bytes([MsgType.HELLO]) + _HELLO.pack(int(msg.role), msg.room_code.encode())
    if isinstance(msg, Welcome):
        return bytes([MsgType.WELCOME]) + _WELCOME.pack(
            msg.participant_id, msg.session_epoch_us, msg.leader_pid, msg.leader_seq_baseline
        )
    if isinstance(msg, ObjectUpdate):
        if not 1 <= len(msg.records) <= MAX_RECORDS_PER_DATAGRAM:
            raise ValueError(f"1..{MAX_RECORDS_PER_DATAGRAM} records per datagram")
        head = _OBJ_HEAD.pack(msg.origin, msg.seq, len(msg.records))
        return bytes([MsgType.OBJECT_UPDATE]) + head + b"".join(msg.records)
    if isinstance(msg, PoseUpdate):
        return bytes([MsgType.POSE_UPDATE]) + _POSE.pack(
            msg.participant_id, *msg.position, msg.yaw
        )
    if isinstance(msg, Ack):
        return bytes([MsgType.ACK]) + _ACK.pack(msg.origin, msg.cumulative_seq, msg.bitmap)
    if isinstance(msg, Heartbeat):
        return bytes([MsgType.HEARTBEAT]) + _HEARTBEAT.pack(
            msg.send_time_us, int(msg.echo), msg.echo_recv_us, msg.echo_send_us
        )
    if isinstance(msg, Reject):
        return bytes([MsgType.REJECT]) + _REJECT.pack(int(msg.reason))
    raise TypeError(f"not a wire message: {type(msg)!r}")


def decode_message(data: bytes) -> WireMessage:
    if not data:
        raise DecodeError("empty message")
    tag, body = data[0], data[1:]
    try:
        if tag == MsgType.HELLO:
            role, code = _HELLO.unpack(body)
            return Hello(Role(role), code.decode("ascii", "replace"))
        if tag == MsgType.WELCOME:
            pid, epoch, leader_pid, baseline = _WELCOME.unpack(body)
            return Welcome(pid, epoch, leader_pid, baseline)
        if tag == MsgType.OBJECT_UPDATE:
            origin, seq, count = _OBJ_HEAD.unpack_from(body)
            if count < 1 or count > MAX_RECORDS_PER_DATAGRAM:
                raise DecodeError(f"record count {count} out of range")
            records_blob = body[_OBJ_HEAD.size :]
            if len(records_blob) != count * RECORD_SIZE:
                raise DecodeError("record payload length mismatch")
            records = tuple(
                bytes(records_blob[i * RECORD_SIZE : (i + 1) * RECORD_SIZE])
                for i in range(count)
            )
            return ObjectUpdate(origin, seq, records)
        if tag == MsgType.POSE_UPDATE:
            pid, x, y, z, yaw = _POSE.unpack(body)
            if not all(math.isfinite(v) for v in (x, y, z, yaw)):
                raise DecodeError("non-finite pose")
            return PoseUpdate(pid, (x, y, z), yaw)
        if tag == MsgType.ACK:
            origin, cum, bitmap = _ACK.unpack(body)
            return Ack(origin, cum, bitmap)
        if tag == MsgType.HEARTBEAT:
            t, echo, t1, t2 = _HEARTBEAT.unpack(body)
            return Heartbeat(t, bool(echo), t1, t2)
        if tag == MsgType.REJECT:
            (reason,) = _REJECT.unpack(body)
            return Reject(RejectReason(reason))
    except struct.error as exc:
        raise DecodeError(f"bad message body: {exc}") from exc
    except ValueError as exc:
        raise DecodeError(str(exc)) from exc
    raise DecodeError(f"unknown message type {tag}")


class FramingCodec:
    """Frames messages into datagrams under one profile.

    The framed profile's keystream and tag are keyed with a fixed constant:
    the point is the per-datagram size and compute overhead of an encrypting
    stack, not confidentiality.
    """

    _KEY = hashlib.blake2b(b"framed-profile-v1", digest_size=32).digest()

    def __init__(self, profile: FramingProfile):
        self.profile = profile
        self._key = self._KEY

    def _keystream(self, n: int) -> bytes:
        out = bytearray()
        counter = 0
        while len(out) < n:
            out += hashlib.blake2b(
                counter.to_bytes(8, "little"), key=self._key, digest_size=64
            ).digest()
            counter += 1
        return bytes(out[:n])

    def _tag(self, ciphertext: bytes) -> bytes:
        return hashlib.blake2b(ciphertext, key=self._key, digest_size=16).digest()

    def frame(self, message: bytes) -> bytes:
        prefix = _PREFIX.pack(MAGIC, WIRE_VERSION)
        if self.profile is FramingProfile.PLAIN:
            out = prefix + message
        else:
            cipher = bytes(a ^ b for a, b in zip(message, self._keystream(len(message))))
            out = prefix + struct.pack("<I", len(cipher)) + self._tag(cipher) + cipher
        if len(out) > MAX_DATAGRAM:
            raise TooLarge(f"datagram {len(out)} exceeds {MAX_DATAGRAM}")
        return out

    def deframe(self, datagram: bytes) -> bytes:
        if len(datagram) < _PREFIX.size:
            raise DecodeError("datagram shorter than prefix")
        magic, version = _PREFIX.unpack_from(datagram)
        if magic != MAGIC:
            raise DecodeError(f"bad magic {magic:#x}")
        if version != WIRE_VERSION:
            raise DecodeError(f"unsupported wire version {version}")
        rest = datagram[_PREFIX.size :]
        if self.profile is FramingProfile.PLAIN:
            return rest
        if len(rest) < 4 + 16:
            raise DecodeError("framed datagram too short")
        (length,) = struct.unpack_from("<I", rest)
        tag = rest[4:20]
        cipher = rest[20:]
        if len(cipher) != length:
            raise DecodeError("framed length mismatch")
        if self._tag(cipher) != tag:
            raise AuthFailure("authentication tag mismatch")
        return bytes(a ^ b for a, b in zip(cipher, self._keystream(len(cipher))))

    def encode(self, msg: WireMessage) -> bytes:
        return self.frame(encode_message(msg))

    def decode(self, datagram: bytes) -> WireMessage:
        return decode_message(self.deframe(datagram))
