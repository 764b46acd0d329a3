"""Planar scene objects, category/color mapping, and the fixed-width wire codec.

Every surface in the shared environment is one classified quad: a pose
(center + orientation), two half-extents, and bookkeeping fields. A quad
serializes to exactly 56 bytes, so a whole room is a few kilobytes.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import IntEnum

RECORD_SIZE = 56
SNAPSHOT_HEADER_SIZE = 16

# id(4) version(4) category(1) flags(1) center(3f) half_extents(2f)
# orientation(4f, w-x-y-z) created_us(8) creator(2), little-endian
_RECORD = struct.Struct("<IIBB3f2f4fQH")
_SNAPSHOT_HEADER = struct.Struct("<QII")

GRAY = "#808080"


class MalformedRecord(ValueError):
    """A 56-byte object record failed to decode."""


class SceneCategory(IntEnum):
    """Surface classification; the enum value doubles as the wire tag."""

    WALL = 0
    FLOOR = 1
    CEILING = 2
    PLATFORM_MEDIUM = 3
    PLATFORM_LARGE = 4
    UNCLASSIFIED = 5


CATEGORY_COLORS: dict[SceneCategory, str] = {
    SceneCategory.WALL: "#ffd700",
    SceneCategory.FLOOR: "#1e90ff",
    SceneCategory.CEILING: "#001f5b",
    SceneCategory.PLATFORM_MEDIUM: "#d62828",
    SceneCategory.PLATFORM_LARGE: "#4caf50",
    SceneCategory.UNCLASSIFIED: "#0d9488",
}


def f32(x: float) -> float:
    """Round to the nearest single-precision value (what the wire carries)."""
    return struct.unpack("<f", struct.pack("<f", x))[0]


def f32v(values) -> tuple[float, ...]:
    return tuple(f32(v) for v in values)


@dataclass(frozen=True)
class SceneObject:
    """One classified planar quad.

    ``orientation`` is a unit quaternion (w, x, y, z) mapping the quad's
    local +Z onto its outward normal; local X/Y span width/height, so the
    pose+extents representation cannot express a non-planar surface.
    ``created_us`` is microseconds since the session epoch, not wall clock.
    """

    id: int
    version: int
    category: SceneCategory
    center: tuple[float, float, float]
    half_extents: tuple[float, float]
    orientation: tuple[float, float, float, float]
    created_us: int
    creator: int

    def validate(self) -> None:
        if not (0 <= self.id <= 0xFFFFFFFF and 0 <= self.version <= 0xFFFFFFFF):
            raise ValueError("id/version out of u32 range")
        if self.half_extents[0] <= 0 or self.half_extents[1] <= 0:
            raise ValueError("half_extents must be positive")
        norm = math.sqrt(sum(c * c for c in self.orientation))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"orientation norm {norm} not within 1e-6 of 1")
        if not all(math.isfinite(v) for v in (*self.center, *self.half_extents)):
            raise ValueError("non-finite geometry")
        if not (0 <= self.created_us <= 0xFFFFFFFFFFFFFFFF and 0 <= self.creator <= 0xFFFF):
            raise ValueError("created_us/creator out of range")


def encode_object(obj: SceneObject) -> bytes:
    """Serialize to the 56-byte record. Equal objects yield identical bytes."""
    return _RECORD.pack(
        obj.id,
        obj.version,
        int(obj.category),
        0,
        *obj.center,
        *obj.half_extents,
        *obj.orientation,
        obj.created_us,
        obj.creator,
    )


def decode_object(data: bytes) -> SceneObject:
    """Inverse of :func:`encode_object`; rejects records that cannot be valid."""
    if len(data) != RECORD_SIZE:
        raise MalformedRecord(f"expected {RECORD_SIZE} bytes, got {len(data)}")
    (oid, version, tag, _flags, cx, cy, cz, hx, hy, qw, qx, qy, qz, created_us, creator) = (
        _RECORD.unpack(data)
    )
    if tag > 5:
        raise MalformedRecord(f"category tag {tag} out of range")
    floats = (cx, cy, cz, hx, hy, qw, qx, qy, qz)
    if not all(math.isfinite(v) for v in floats):
        raise MalformedRecord("non-finite float field")
    if qw * qw + qx * qx + qy * qy + qz * qz < 1e-12:
        raise MalformedRecord("zero-norm quaternion")
    return SceneObject(
        id=oid,
        version=version,
        category=SceneCategory(tag),
        center=(cx, cy, cz),
        half_extents=(hx, hy),
        orientation=(qw, qx, qy, qz),
        created_us=created_us,
        creator=creator,
    )


class SceneSnapshot:
    """Versioned collection of scene objects keyed by id."""

    def __init__(self, epoch_us: int = 0):
        self.epoch_us = epoch_us
        self.objects: dict[int, SceneObject] = {}

    @property
    def snapshot_version(self) -> int:
        return max((o.version for o in self.objects.values()), default=0)

    def upsert(self, obj: SceneObject) -> bool:
        """Apply ``obj`` if its version is newer than what we hold. Returns
        True when applied, False when discarded as stale."""
        current = self.objects.get(obj.id)
        if current is not None and obj.version <= current.version:
            return False
        self.objects[obj.id] = obj
        return True

    def __len__(self) -> int:
        return len(self.objects)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SceneSnapshot):
            return NotImplemented
        return self.epoch_us == other.epoch_us and self.objects == other.objects


def snapshot_size_bytes(snap: SceneSnapshot) -> int:
    """Serialized size: 16-byte header plus 56 bytes per object, exactly."""
    return SNAPSHOT_HEADER_SIZE + RECORD_SIZE * len(snap.objects)


def encode_snapshot(snap: SceneSnapshot) -> bytes:
    """Canonical byte form: header, then records in ascending id order."""
    head = _SNAPSHOT_HEADER.pack(snap.epoch_us, len(snap.objects), snap.snapshot_version)
    body = b"".join(encode_object(snap.objects[i]) for i in sorted(snap.objects))
    return head + body


def decode_snapshot(data: bytes) -> SceneSnapshot:
    if len(data) < SNAPSHOT_HEADER_SIZE:
        raise MalformedRecord("snapshot shorter than header")
    epoch_us, count, _version = _SNAPSHOT_HEADER.unpack_from(data)
    if len(data) != SNAPSHOT_HEADER_SIZE + count * RECORD_SIZE:
        raise MalformedRecord("snapshot length does not match object count")
    snap = SceneSnapshot(epoch_us)
    for i in range(count):
        off = SNAPSHOT_HEADER_SIZE + i * RECORD_SIZE
        snap.upsert(decode_object(data[off : off + RECORD_SIZE]))
    return snap


def display_color(obj: SceneObject, viewer: int) -> str:
    """Category color for the creator's own objects, gray for received ones."""
    if obj.creator != viewer:
        return GRAY
    return CATEGORY_COLORS[obj.category]


# --- quaternion helpers -----------------------------------------------------

def quat_axes(q: tuple[float, float, float, float]):
    """Local X (width), Y (height), Z (normal) axes of a quad, world frame."""
    w, x, y, z = q
    xa = (1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y))
    ya = (2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x))
    za = (2 * (x * z + w * y), 2 * (y * z - w * x), 1 - 2 * (x * x + y * y))
    return xa, ya, za


def quat_from_axes(xa, ya, za) -> tuple[float, float, float, float]:
    """Unit quaternion whose rotation sends e1/e2/e3 to the given orthonormal
    axes (matrix columns), normalized then rounded to f32 for the wire."""
    m00, m10, m20 = xa
    m01, m11, m21 = ya
    m02, m12, m22 = za
    tr = m00 + m11 + m22
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        w = 0.25 * s
        x = (m21 - m12) / s
        y = (m02 - m20) / s
        z = (m10 - m01) / s
    elif m00 > m11 and m00 > m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2
        w = (m21 - m12) / s
        x = 0.25 * s
        y = (m01 + m10) / s
        z = (m02 + m20) / s
    elif m11 > m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2
        w = (m02 - m20) / s
        x = (m01 + m10) / s
        y = 0.25 * s
        z = (m12 + m21) / s
    else:
        s = math.sqrt(1.0 + m22 - m00 - m11) * 2
        w = (m10 - m01) / s
        x = (m02 + m20) / s
        y = (m12 + m21) / s
        z = 0.25 * s
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    return f32v((w / norm, x / norm, y / norm, z / norm))  # type: ignore[return-value]


IDENTITY_QUAT = (1.0, 0.0, 0.0, 0.0)


# --- human-readable dump ----------------------------------------------------

def format_object_line(obj: SceneObject) -> str:
    """One object per line, fields in declaration order; floats round-trip."""
    nums = (*obj.center, *obj.half_extents, *obj.orientation)
    return " ".join(
        [str(obj.id), str(obj.version), obj.category.name]
        + [repr(v) for v in nums]
        + [str(obj.created_us), str(obj.creator)]
    )


def parse_object_line(line: str) -> SceneObject:
    parts = line.split()
    if len(parts) != 14:
        raise ValueError(f"expected 14 fields, got {len(parts)}")
    return SceneObject(
        id=int(parts[0]),
        version=int(parts[1]),
        category=SceneCategory[parts[2]],
        center=(float(parts[3]), float(parts[4]), float(parts[5])),
        half_extents=(float(parts[6]), float(parts[7])),
        orientation=(float(parts[8]), float(parts[9]), float(parts[10]), float(parts[11])),
        created_us=int(parts[12]),
        creator=int(parts[13]),
    )


def dump_snapshot(snap: SceneSnapshot) -> str:
    lines = [f"epoch {snap.epoch_us}"]
    lines += [format_object_line(snap.objects[i]) for i in sorted(snap.objects)]
    return "\n".join(lines) + "\n"


def load_snapshot_dump(text: str) -> SceneSnapshot:
    snap = SceneSnapshot()
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("epoch "):
            snap.epoch_us = int(line.split()[1])
            continue
        snap.upsert(parse_object_line(line))
    return snap
