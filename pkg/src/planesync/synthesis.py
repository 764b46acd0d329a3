"""Deterministic scene generation: declarative floor plans become scene objects.

Stands in for a headset's environment capture. A world is a set of rooms
(axis-aligned boxes with doorway cutouts and horizontal platforms); a
simulated operator walks around and "scans" objects into existence, either
on an auto-update interval or on an explicit manual trigger.

Coordinates are Z-up: x/y horizontal, z vertical. A room's origin is its
minimum corner. Wall sides are named by compass letter: S = y=y0, N = y=y0+W,
W = x=x0, E = x=x0+L. Wall normals point into the room.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace

from .scene import (
    IDENTITY_QUAT,
    SceneCategory,
    SceneObject,
    SceneSnapshot,
    f32,
    f32v,
    quat_from_axes,
    snapshot_size_bytes,
)

# Longest half-extent at or above this is a large platform.
PLATFORM_LARGE_HALF_EXTENT = 0.75

DEFAULT_AUTO_INTERVAL_S = 5.0

_WALL_AXES = {
    "S": ((-1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0)),
    "N": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, -1.0, 0.0)),
    "W": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)),
    "E": ((0.0, -1.0, 0.0), (0.0, 0.0, 1.0), (-1.0, 0.0, 0.0)),
}

_CEILING_QUAT = quat_from_axes((1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, -1.0))


class InvalidSpec(ValueError):
    """A room spec violates its geometric constraints."""


@dataclass(frozen=True)
class PlatformSpec:
    center: tuple[float, float, float]
    half_extents: tuple[float, float]
    yaw: float = 0.0
    size_class: SceneCategory | None = None


@dataclass(frozen=True)
class DoorSpec:
    side: str  # N | S | E | W
    offset: float  # along the wall from its minimum-coordinate end
    width: float
    height: float  # from the floor


@dataclass(frozen=True)
class RoomSpec:
    name: str
    origin: tuple[float, float, float]
    dimensions: tuple[float, float, float]  # length (x), width (y), height (z)
    platforms: tuple[PlatformSpec, ...] = ()
    doorways: tuple[DoorSpec, ...] = ()

    def validate(self) -> None:
        L, W, H = self.dimensions
        if L <= 0 or W <= 0 or H <= 0:
            raise InvalidSpec(f"room {self.name}: non-positive dimensions")
        x0, y0, z0 = self.origin
        for p in self.platforms:
            if p.half_extents[0] <= 0 or p.half_extents[1] <= 0:
                raise InvalidSpec(f"room {self.name}: non-positive platform extents")
            c, s = abs(math.cos(p.yaw)), abs(math.sin(p.yaw))
            ex = p.half_extents[0] * c + p.half_extents[1] * s
            ey = p.half_extents[0] * s + p.half_extents[1] * c
            if not (
                x0 <= p.center[0] - ex
                and p.center[0] + ex <= x0 + L
                and y0 <= p.center[1] - ey
                and p.center[1] + ey <= y0 + W
                and z0 <= p.center[2] <= z0 + H
            ):
                raise InvalidSpec(f"room {self.name}: platform outside room volume")
        for d in self.doorways:
            if d.side not in _WALL_AXES:
                raise InvalidSpec(f"room {self.name}: unknown wall side {d.side!r}")
            wall_len = L if d.side in ("N", "S") else W
            if d.width <= 0 or d.height <= 0:
                raise InvalidSpec(f"room {self.name}: non-positive doorway")
            if d.offset < 0 or d.offset + d.width > wall_len or d.height > H:
                raise InvalidSpec(f"room {self.name}: doorway outside wall extent")


def _wall_quad(spec: RoomSpec, side: str, u0: float, u1: float, z_lo: float, z_hi: float):
    """World center/extents for a wall piece spanning [u0,u1] along the wall
    and [z_lo,z_hi] vertically. u runs from the wall's min-coordinate end."""
    x0, y0, z0 = spec.origin
    L, W, _H = spec.dimensions
    um = (u0 + u1) / 2
    zm = z0 + (z_lo + z_hi) / 2
    if side == "S":
        center = (x0 + um, y0, zm)
    elif side == "N":
        center = (x0 + um, y0 + W, zm)
    elif side == "W":
        center = (x0, y0 + um, zm)
    else:
        center = (x0 + L, y0 + um, zm)
    return center, ((u1 - u0) / 2, (z_hi - z_lo) / 2)


def _wall_pieces(spec: RoomSpec, side: str):
    """Split one wall around its doorways: full-height segments between the
    openings plus one header piece above each opening."""
    L, W, H = spec.dimensions
    wall_len = L if side in ("N", "S") else W
    doors = sorted((d for d in spec.doorways if d.side == side), key=lambda d: d.offset)
    pieces = []
    cursor = 0.0
    for d in doors:
        if d.offset - cursor > 1e-9:
            pieces.append((cursor, d.offset, 0.0, H))
        if H - d.height > 1e-9:
            pieces.append((d.offset, d.offset + d.width, d.height, H))
        cursor = d.offset + d.width
    if wall_len - cursor > 1e-9:
        pieces.append((cursor, wall_len, 0.0, H))
    return pieces


def classify_platform(p: PlatformSpec) -> SceneCategory:
    if p.size_class is not None:
        return p.size_class
    if max(p.half_extents) < PLATFORM_LARGE_HALF_EXTENT:
        return SceneCategory.PLATFORM_MEDIUM
    return SceneCategory.PLATFORM_LARGE


def generate_room(
    spec: RoomSpec,
    ids: "itertools.count | None" = None,
    creator: int = 0,
    created_us: int = 0,
) -> list[SceneObject]:
    """Emit the quads for one room: walls (split around doorways), floor,
    ceiling, and one platform object each. All objects carry version 1."""
    spec.validate()
    if ids is None:
        ids = itertools.count(1)
    x0, y0, z0 = spec.origin
    L, W, H = spec.dimensions
    out: list[SceneObject] = []

    def emit(category, center, half_extents, quat):
        out.append(
            SceneObject(
                id=next(ids),
                version=1,
                category=category,
                center=f32v(center),  # type: ignore[arg-type]
                half_extents=f32v(half_extents),  # type: ignore[arg-type]
                orientation=quat,
                created_us=created_us,
                creator=creator,
            )
        )

    for side in ("N", "S", "E", "W"):
        quat = quat_from_axes(*_WALL_AXES[side])
        for u0, u1, zl, zh in _wall_pieces(spec, side):
            center, half = _wall_quad(spec, side, u0, u1, zl, zh)
            emit(SceneCategory.WALL, center, half, quat)
    emit(SceneCategory.FLOOR, (x0 + L / 2, y0 + W / 2, z0), (L / 2, W / 2), IDENTITY_QUAT)
    emit(SceneCategory.CEILING, (x0 + L / 2, y0 + W / 2, z0 + H), (L / 2, W / 2), _CEILING_QUAT)
    for p in spec.platforms:
        c, s = math.cos(p.yaw), math.sin(p.yaw)
        quat = quat_from_axes((c, s, 0.0), (-s, c, 0.0), (0.0, 0.0, 1.0))
        emit(classify_platform(p), p.center, p.half_extents, quat)
    return out


class World:
    """A set of rooms with their objects generated once (stable ids)."""

    def __init__(self, rooms: list[RoomSpec], creator: int = 0):
        self.rooms = list(rooms)
        ids = itertools.count(1)
        self.objects: list[SceneObject] = []
        for room in self.rooms:
            self.objects.extend(generate_room(room, ids=ids, creator=creator))

    def __len__(self) -> int:
        return len(self.objects)


@dataclass
class ScanState:
    """Scanning progress for one operator walking a world."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw: float = 0.0
    visibility_radius: float = 6.0
    fov_deg: float = 360.0
    auto: bool = True
    auto_interval_s: float = DEFAULT_AUTO_INTERVAL_S
    trigger_pending: bool = False
    emitted: set[int] = field(default_factory=set)
    last_emit_us: int | None = None

    def validate(self) -> None:
        if not (0 < self.fov_deg <= 360):
            raise ValueError("fov_deg must be in (0, 360]")
        if self.visibility_radius <= 0:
            raise ValueError("visibility_radius must be positive")
        if self.auto_interval_s <= 0:
            raise ValueError("auto interval must be positive")


def _visible(state: ScanState, obj: SceneObject) -> bool:
    dx = obj.center[0] - state.position[0]
    dy = obj.center[1] - state.position[1]
    dz = obj.center[2] - state.position[2]
    if dx * dx + dy * dy + dz * dz > state.visibility_radius**2:
        return False
    if state.fov_deg >= 360.0:
        return True
    if dx == 0.0 and dy == 0.0:
        return True
    bearing = math.atan2(dy, dx) - state.yaw
    bearing = math.atan2(math.sin(bearing), math.cos(bearing))  # wrap to (-pi, pi]
    return abs(bearing) <= math.radians(state.fov_deg) / 2


def scan_step(state: ScanState, world: World, now_us: int) -> list[SceneObject]:
    """Emit not-yet-seen objects inside the visibility wedge, stamped with the
    emission time (observation is what creates them). Auto mode throttles to
    one emission per interval; manual mode requires a pending trigger, which
    one call consumes."""
    state.validate()
    if state.auto:
        if (
            state.last_emit_us is not None
            and now_us - state.last_emit_us < state.auto_interval_s * 1e6
        ):
            return []
    else:
        if not state.trigger_pending:
            return []
        state.trigger_pending = False
    fresh = [
        obj for obj in world.objects if obj.id not in state.emitted and _visible(state, obj)
    ]
    if not fresh:
        return []
    state.emitted.update(obj.id for obj in fresh)
    state.last_emit_us = now_us
    return [replace(obj, created_us=now_us) for obj in fresh]


def full_scan(world: World, now_us: int = 0) -> list[SceneObject]:
    """Single-trigger scan with unbounded visibility: the whole world at once."""
    state = ScanState(
        visibility_radius=math.inf, fov_deg=360.0, auto=False, trigger_pending=True
    )
    return scan_step(state, world, now_us)


# --- canonical benchmark rooms ----------------------------------------------

def _grid_platforms(count, origin, L, W, z=0.75, margin=0.95):
    """Deterministic platform fill: a grid of mostly small quads with every
    fourth one large enough to classify as a large platform."""
    x0, y0, z0 = origin
    cols = max(1, math.ceil(math.sqrt(count * L / W)))
    rows = max(1, math.ceil(count / cols))
    out = []
    for i in range(count):
        r, c = divmod(i, cols)
        fx = (c + 0.5) / cols
        fy = (r + 0.5) / rows
        cx = x0 + margin + fx * (L - 2 * margin)
        cy = y0 + margin + fy * (W - 2 * margin)
        big = i % 4 == 0
        half = (0.8, 0.45) if big else (0.3, 0.25)
        out.append(PlatformSpec(center=(f32(cx), f32(cy), f32(z0 + z)), half_extents=half))
    return tuple(out)


def builtin_room(name: str) -> RoomSpec:
    """Three fixture rooms sized so a plain box plus its platforms yields
    30 / 90 / 130 objects."""
    if name == "personal":
        dims = (3.81, 3.02, 2.40)
        count = 24
    elif name == "living":
        dims = (7.0, 3.92, 2.97)
        count = 84
    elif name == "classroom":
        dims = (13.0, 9.2, 3.0)
        count = 124
    else:
        raise KeyError(f"unknown builtin room {name!r}")
    return RoomSpec(
        name=name,
        origin=(0.0, 0.0, 0.0),
        dimensions=dims,
        platforms=_grid_platforms(count, (0.0, 0.0, 0.0), dims[0], dims[1]),
    )


BUILTIN_ROOMS = ("personal", "living", "classroom")

# Hard ceilings for the construction benchmark, seconds per fixture room.
CONSTRUCTION_TIME_BUDGET_S = {"personal": 0.96, "living": 2.53, "classroom": 3.69}


def construction_benchmark(names=BUILTIN_ROOMS) -> list[dict]:
    """Build each fixture room with a full-visibility scan and time it,
    trigger to last object. Raises if a build misses its time budget."""
    rows = []
    for name in names:
        spec = builtin_room(name)
        t0 = time.perf_counter()
        world = World([spec])
        objects = full_scan(world)
        build_time = time.perf_counter() - t0
        snap = SceneSnapshot()
        for obj in objects:
            snap.upsert(obj)
        budget = CONSTRUCTION_TIME_BUDGET_S.get(name)
        if budget is not None and build_time >= budget:
            raise RuntimeError(f"{name}: build took {build_time:.3f}s, budget {budget}s")
        rows.append(
            {
                "room": name,
                "object_count": len(objects),
                "build_time_s": build_time,
                "size_bytes": snapshot_size_bytes(snap),
            }
        )
    return rows


# --- world files --------------------------------------------------------------

def parse_world_text(text: str) -> list[RoomSpec]:
    """Line-oriented world format::

        room <name> <ox> <oy> <oz> <LxWxH>
        platform <cx> <cy> <cz> <hx> <hz> <yaw> [medium|large]
        door <N|S|E|W> <offset> <width> <height>

    ``platform`` and ``door`` lines attach to the most recent ``room``.
    ``#`` starts a comment.
    """
    rooms: list[dict] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "room":
                name = parts[1]
                origin = tuple(float(v) for v in parts[2:5])
                dims = tuple(float(v) for v in parts[5].lower().split("x"))
                if len(dims) != 3:
                    raise ValueError("dimensions must be LxWxH")
                rooms.append({"name": name, "origin": origin, "dims": dims, "p": [], "d": []})
            elif kind == "platform":
                if not rooms:
                    raise ValueError("platform before any room")
                size_class = None
                if len(parts) == 8:
                    size_class = {
                        "medium": SceneCategory.PLATFORM_MEDIUM,
                        "large": SceneCategory.PLATFORM_LARGE,
                    }[parts[7]]
                rooms[-1]["p"].append(
                    PlatformSpec(
                        center=(float(parts[1]), float(parts[2]), float(parts[3])),
                        half_extents=(float(parts[4]), float(parts[5])),
                        yaw=float(parts[6]),
                        size_class=size_class,
                    )
                )
            elif kind == "door":
                if not rooms:
                    raise ValueError("door before any room")
                rooms[-1]["d"].append(
                    DoorSpec(
                        side=parts[1].upper(),
                        offset=float(parts[2]),
                        width=float(parts[3]),
                        height=float(parts[4]),
                    )
                )
            else:
                raise ValueError(f"unknown directive {kind!r}")
        except (IndexError, ValueError, KeyError) as exc:
            raise InvalidSpec(f"world line {lineno}: {exc}") from exc
    specs = [
        RoomSpec(
            name=r["name"],
            origin=r["origin"],
            dimensions=r["dims"],
            platforms=tuple(r["p"]),
            doorways=tuple(r["d"]),
        )
        for r in rooms
    ]
    for spec in specs:
        spec.validate()
    return specs


def format_world(rooms: list[RoomSpec]) -> str:
    lines = []
    for r in rooms:
        ox, oy, oz = r.origin
        L, W, H = r.dimensions
        lines.append(f"room {r.name} {ox:g} {oy:g} {oz:g} {L:g}x{W:g}x{H:g}")
        for d in r.doorways:
            lines.append(f"door {d.side} {d.offset:g} {d.width:g} {d.height:g}")
        for p in r.platforms:
            cls = ""
            if p.size_class is not None:
                cls = " medium" if p.size_class is SceneCategory.PLATFORM_MEDIUM else " large"
            lines.append(
                f"platform {p.center[0]:g} {p.center[1]:g} {p.center[2]:g} "
                f"{p.half_extents[0]:g} {p.half_extents[1]:g} {p.yaw:g}{cls}"
            )
    return "\n".join(lines) + "\n"


def load_world(ref: str) -> list[RoomSpec]:
    """Resolve a world reference: a builtin room name or a world-file path."""
    if ref in BUILTIN_ROOMS:
        return [builtin_room(ref)]
    with open(ref, "r", encoding="utf-8") as fh:
        return parse_world_text(fh.read())
