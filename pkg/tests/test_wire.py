import pytest

from planesync.scene import encode_object
from planesync.wire import (
    Ack,
    AuthFailure,
    DecodeError,
    FRAMED_OVERHEAD,
    FramingCodec,
    FramingProfile,
    Heartbeat,
    Hello,
    MAX_DATAGRAM,
    ObjectUpdate,
    PoseUpdate,
    Reject,
    RejectReason,
    Role,
    TooLarge,
    Welcome,
    decode_message,
    encode_message,
    valid_room_code,
)
from tests.test_scene import make_object

PLAIN = FramingCodec(FramingProfile.PLAIN)
FRAMED = FramingCodec(FramingProfile.FRAMED)

SAMPLES = [
    Hello(Role.LEADER, "ROOM42"),
    Hello(Role.FOLLOWER, "AB12CD"),
    Welcome(participant_id=3, session_epoch_us=1_000_000, leader_pid=1, leader_seq_baseline=5),
    ObjectUpdate(origin=1, seq=9, records=(encode_object(make_object()),)),
    ObjectUpdate(
        origin=2, seq=10, records=tuple(encode_object(make_object(id=i)) for i in range(20))
    ),
    PoseUpdate(participant_id=4, position=(1.0, -2.0, 0.5), yaw=0.75),
    Ack(origin=1, cumulative_seq=17, bitmap=0b1011),
    Heartbeat(send_time_us=123),
    Heartbeat(send_time_us=123, echo=True, echo_recv_us=200, echo_send_us=201),
    Reject(RejectReason.SESSION_FULL),
]


@pytest.mark.parametrize("msg", SAMPLES, ids=lambda m: type(m).__name__)
def test_message_codec_round_trip(msg):
    assert decode_message(encode_message(msg)) == msg


@pytest.mark.parametrize("msg", SAMPLES, ids=lambda m: type(m).__name__)
def test_plain_frame_is_five_bytes_plus_message(msg):
    body = encode_message(msg)
    datagram = PLAIN.frame(body)
    assert len(datagram) == 5 + len(body)
    assert datagram[:4] == (0x43414D52).to_bytes(4, "little")
    assert datagram[4] == 0x01
    assert PLAIN.deframe(datagram) == body


@pytest.mark.parametrize("msg", SAMPLES, ids=lambda m: type(m).__name__)
def test_framed_overhead_is_exactly_20(msg):
    body = encode_message(msg)
    assert len(FRAMED.frame(body)) == len(PLAIN.frame(body)) + FRAMED_OVERHEAD
    assert FRAMED.decode(FRAMED.frame(body)) == msg


def test_framed_tamper_detection():
    datagram = bytearray(FRAMED.encode(Heartbeat(send_time_us=55)))
    datagram[9] ^= 0x01  # inside the tag
    with pytest.raises(AuthFailure):
        FRAMED.deframe(bytes(datagram))
    datagram = bytearray(FRAMED.encode(Heartbeat(send_time_us=55)))
    datagram[-1] ^= 0x01  # inside the ciphertext
    with pytest.raises(AuthFailure):
        FRAMED.deframe(bytes(datagram))


def test_plain_rejects_bad_magic_and_version():
    datagram = bytearray(PLAIN.encode(Heartbeat(send_time_us=1)))
    bad_magic = bytes([0xFF]) + bytes(datagram[1:])
    with pytest.raises(DecodeError):
        PLAIN.deframe(bad_magic)
    datagram[4] = 0x02
    with pytest.raises(DecodeError):
        PLAIN.deframe(bytes(datagram))


def test_frame_too_large():
    with pytest.raises(TooLarge):
        PLAIN.frame(b"\x00" * (MAX_DATAGRAM + 1))


def test_largest_object_update_fits_mtu_budget():
    msg = ObjectUpdate(
        origin=1, seq=1, records=tuple(encode_object(make_object(id=i)) for i in range(20))
    )
    assert len(PLAIN.encode(msg)) < 1200
    assert len(FRAMED.encode(msg)) < 1200


def test_object_update_record_bounds():
    with pytest.raises(ValueError):
        encode_message(ObjectUpdate(origin=1, seq=1, records=()))
    with pytest.raises(ValueError):
        encode_message(
            ObjectUpdate(
                origin=1,
                seq=1,
                records=tuple(encode_object(make_object(id=i)) for i in range(21)),
            )
        )


def test_decode_rejects_truncated_records():
    body = encode_message(ObjectUpdate(origin=1, seq=1, records=(encode_object(make_object()),)))
    with pytest.raises(DecodeError):
        decode_message(body[:-3])


def test_room_code_validation():
    assert valid_room_code("ABC123")
    assert not valid_room_code("abc123")
    assert not valid_room_code("ABC12")
    assert not valid_room_code("ABC12!")
