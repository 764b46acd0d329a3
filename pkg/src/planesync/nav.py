"""Navigation geometry: gaze cut-out window, proximity see-through, mini-map.

Pure functions over a scene snapshot plus small owned state, instrumented
with a latency probe. Conventions: Z-up world, yaw in radians with forward =
(cos yaw, sin yaw); cue azimuth is positive to the user's right.
"""

from __future__ import annotations

import math
import random
import statistics
import time
from dataclasses import dataclass, field, replace

from .scene import SceneCategory, SceneObject, SceneSnapshot, display_color, quat_axes
from .synthesis import World, builtin_room, full_scan

SEETHROUGH_DISTANCE_M = 3.0
HYSTERESIS_RELEASE_M = 3.2
SEETHROUGH_ALPHA = 0.70  # "30% transparent" rendered as 70% opacity
OPAQUE_ALPHA = 1.0

XRAY_DEFAULT_HALF_SIZE = 0.4
XRAY_HALF_SIZE_RANGE = (0.1, 1.0)


@dataclass
class UserPose:
    position: tuple[float, float, float]
    yaw: float = 0.0
    gaze: tuple[float, float, float] = (1.0, 0.0, 0.0)
    gaze_mode: str = "eye"  # "eye" | "head"

    def effective_gaze(self) -> tuple[float, float, float]:
        """Head mode derives gaze from yaw at zero pitch."""
        if self.gaze_mode == "head":
            return (math.cos(self.yaw), math.sin(self.yaw), 0.0)
        return self.gaze

    def validate(self) -> None:
        g = self.effective_gaze()
        norm = math.sqrt(sum(c * c for c in g))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"gaze norm {norm} not within 1e-6 of 1")


@dataclass
class XrayWindow:
    target_wall_id: int
    center: tuple[float, float, float]  # on the wall plane
    half_size: float
    last_update_us: int = 0
    enabled: bool = True


@dataclass
class MinimapConfig:
    camera_height: float = 10.0
    fov_deg: float = 60.0
    orientation_mode: str = "track_up"  # "track_up" | "north_up"

    def validate(self) -> None:
        if self.camera_height <= 0:
            raise ValueError("camera_height must be positive")
        if not 1.0 <= self.fov_deg <= 179.0:
            raise ValueError("fov_deg must be in [1, 179]")

    def half_width_m(self) -> float:
        return self.camera_height * math.tan(math.radians(self.fov_deg) / 2)


@dataclass
class TransparencyState:
    """Two-state alpha per wall id with a hysteresis band against flicker."""

    alphas: dict[int, float] = field(default_factory=dict)

    def alpha(self, wall_id: int) -> float:
        return self.alphas.get(wall_id, OPAQUE_ALPHA)


@dataclass(frozen=True)
class SoundCue:
    wall_id: int
    azimuth_rad: float  # bearing of the wall in the user's frame, + = right


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _clamp(v, lo, hi):
    return lo if v < lo else hi if v > hi else v


def _walls(snapshot: SceneSnapshot):
    return (o for o in snapshot.objects.values() if o.category is SceneCategory.WALL)


def ray_rectangle_hit(
    origin, direction, quad: SceneObject
) -> tuple[float, float, float] | None:
    """(t, u, v) for a ray hitting the quad inside its extents, else None.
    u/v are plane coordinates along the quad's width/height axes."""
    xa, ya, za = quat_axes(quad.orientation)
    denom = _dot(direction, za)
    if abs(denom) < 1e-12:
        return None
    t = _dot(_sub(quad.center, origin), za) / denom
    if t <= 1e-9:
        return None
    hit = (
        origin[0] + t * direction[0],
        origin[1] + t * direction[1],
        origin[2] + t * direction[2],
    )
    rel = _sub(hit, quad.center)
    u = _dot(rel, xa)
    v = _dot(rel, ya)
    if abs(u) > quad.half_extents[0] or abs(v) > quad.half_extents[1]:
        return None
    return t, u, v


def place_xray_window(
    pose: UserPose,
    snapshot: SceneSnapshot,
    half_size: float = XRAY_DEFAULT_HALF_SIZE,
    now_us: int = 0,
) -> XrayWindow | None:
    """Cast the gaze ray and center the window at the nearest wall hit,
    clamped so the window rectangle stays entirely on the wall. Returns None
    when the gaze hits no wall."""
    pose.validate()
    gaze = pose.effective_gaze()
    best = None
    best_wall = None
    for wall in _walls(snapshot):
        hit = ray_rectangle_hit(pose.position, gaze, wall)
        if hit is not None and (best is None or hit[0] < best[0]):
            best = hit
            best_wall = wall
    if best is None or best_wall is None:
        return None
    _t, u, v = best
    hx, hy = best_wall.half_extents
    cu = _clamp(u, -(hx - half_size), hx - half_size) if hx > half_size else 0.0
    cv = _clamp(v, -(hy - half_size), hy - half_size) if hy > half_size else 0.0
    xa, ya, _za = quat_axes(best_wall.orientation)
    c = best_wall.center
    center = (
        c[0] + cu * xa[0] + cv * ya[0],
        c[1] + cu * xa[1] + cv * ya[1],
        c[2] + cu * xa[2] + cv * ya[2],
    )
    return XrayWindow(best_wall.id, center, half_size, now_us)


def wall_distance(pose: UserPose, wall: SceneObject, mode: str = "center") -> float:
    """Distance from the user to a wall: to its center point by default, or
    to the closest point of its rectangle ("closest"), which behaves better
    for long walls."""
    if mode == "center":
        return math.dist(pose.position, wall.center)
    xa, ya, _za = quat_axes(wall.orientation)
    rel = _sub(pose.position, wall.center)
    u = _clamp(_dot(rel, xa), -wall.half_extents[0], wall.half_extents[0])
    v = _clamp(_dot(rel, ya), -wall.half_extents[1], wall.half_extents[1])
    c = wall.center
    closest = (
        c[0] + u * xa[0] + v * ya[0],
        c[1] + u * xa[1] + v * ya[1],
        c[2] + u * xa[2] + v * ya[2],
    )
    return math.dist(pose.position, closest)


def bearing_rad(pose: UserPose, point) -> float:
    """Horizontal bearing of a point in the user's frame; + = right."""
    rx = point[0] - pose.position[0]
    ry = point[1] - pose.position[1]
    fwd = (math.cos(pose.yaw), math.sin(pose.yaw))
    right = (math.sin(pose.yaw), -math.cos(pose.yaw))
    return math.atan2(rx * right[0] + ry * right[1], rx * fwd[0] + ry * fwd[1])


def update_transparency(
    pose: UserPose,
    snapshot: SceneSnapshot,
    st: TransparencyState,
    distance_mode: str = "center",
    near_m: float = SEETHROUGH_DISTANCE_M,
    release_m: float = HYSTERESIS_RELEASE_M,
    seethrough_alpha: float = SEETHROUGH_ALPHA,
) -> list[SoundCue]:
    """Walls within ``near_m`` go see-through; walls beyond ``release_m``
    return to opaque; inside the band the previous state holds. A cue fires
    once per opaque-to-seethrough transition, from the wall's direction."""
    cues: list[SoundCue] = []
    for wall in sorted(_walls(snapshot), key=lambda o: o.id):
        d = wall_distance(pose, wall, distance_mode)
        prev = st.alpha(wall.id)
        if d <= near_m:
            if prev == OPAQUE_ALPHA:
                cues.append(SoundCue(wall.id, bearing_rad(pose, wall.center)))
            st.alphas[wall.id] = seethrough_alpha
        elif d >= release_m:
            st.alphas[wall.id] = OPAQUE_ALPHA
        # in the band: keep previous state
    return cues


@dataclass(frozen=True)
class MapItem:
    id: int
    kind: str  # "object" | "avatar" | "self"
    center: tuple[float, float]  # normalized, [-1, 1] inside the footprint
    color: str = ""
    category: SceneCategory | None = None
    corners: tuple[tuple[float, float], ...] = ()
    heading_rad: float = 0.0


@dataclass
class MapFrame:
    computed_us: int
    half_width_m: float
    mode: str
    items: list[MapItem]


def _rotate(nx: float, ny: float, yaw: float) -> tuple[float, float]:
    """Rotate a map point by -yaw about the center (track-up framing)."""
    c, s = math.cos(yaw), math.sin(yaw)
    return (nx * c + ny * s, -nx * s + ny * c)


def project_point(
    pose: UserPose, cfg: MinimapConfig, point
) -> tuple[float, float]:
    """World point to normalized map coordinates for a downward camera at
    ``camera_height`` above the user."""
    w = cfg.half_width_m()
    nx = (point[0] - pose.position[0]) / w
    ny = (point[1] - pose.position[1]) / w
    if cfg.orientation_mode == "track_up":
        nx, ny = _rotate(nx, ny, pose.yaw)
    return (nx, ny)


def unproject_point(pose: UserPose, cfg: MinimapConfig, nx: float, ny: float):
    """Inverse of :func:`project_point` on the footprint (x, y only)."""
    if cfg.orientation_mode == "track_up":
        nx, ny = _rotate(nx, ny, -pose.yaw)
    w = cfg.half_width_m()
    return (pose.position[0] + nx * w, pose.position[1] + ny * w)


def project_minimap(
    pose: UserPose,
    snapshot: SceneSnapshot,
    peers: dict[int, tuple[tuple[float, float, float], float]],
    cfg: MinimapConfig,
    viewer: int = 0,
    now_us: int = 0,
) -> MapFrame:
    """Bird's-eye frame: every object and avatar whose center falls in the
    square footprint, in normalized coordinates, self always at the center.
    Track-up rotates the frame by -yaw; north-up leaves world orientation."""
    cfg.validate()
    w = cfg.half_width_m()
    track_up = cfg.orientation_mode == "track_up"
    items: list[MapItem] = [
        MapItem(id=viewer, kind="self", center=(0.0, 0.0), heading_rad=0.0 if track_up else pose.yaw)
    ]
    for obj in sorted(snapshot.objects.values(), key=lambda o: o.id):
        rx = obj.center[0] - pose.position[0]
        ry = obj.center[1] - pose.position[1]
        if abs(rx) > w or abs(ry) > w:
            continue
        xa, ya, _za = quat_axes(obj.orientation)
        hx, hy = obj.half_extents
        corners = []
        for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
            cx = obj.center[0] + su * hx * xa[0] + sv * hy * ya[0]
            cy = obj.center[1] + su * hx * xa[1] + sv * hy * ya[1]
            corners.append(project_point(pose, cfg, (cx, cy, 0.0)))
        items.append(
            MapItem(
                id=obj.id,
                kind="object",
                center=project_point(pose, cfg, obj.center),
                color=display_color(obj, viewer),
                category=obj.category,
                corners=tuple(corners),
            )
        )
    for pid, (pos, peer_yaw) in sorted(peers.items()):
        if pid == viewer:
            continue
        rx = pos[0] - pose.position[0]
        ry = pos[1] - pose.position[1]
        if abs(rx) > w or abs(ry) > w:
            continue
        items.append(
            MapItem(
                id=pid,
                kind="avatar",
                center=project_point(pose, cfg, pos),
                heading_rad=peer_yaw - pose.yaw if track_up else peer_yaw,
            )
        )
    return MapFrame(computed_us=now_us, half_width_m=w, mode=cfg.orientation_mode, items=items)


# --- latency probes -----------------------------------------------------------

PROBE_FEATURES = ("xray-display", "xray-move", "minimap")


@dataclass
class ProbeStats:
    feature: str
    samples_ms: list[float]
    mean_ms: float
    std_ms: float


def _probe_fixture() -> SceneSnapshot:
    snap = SceneSnapshot()
    for obj in full_scan(World([builtin_room("living")])):
        snap.upsert(obj)
    return snap


def _random_pose(rng: random.Random, snapshot: SceneSnapshot) -> UserPose:
    walls = [o for o in snapshot.objects.values() if o.category is SceneCategory.WALL]
    target = rng.choice(walls)
    pos = (rng.uniform(1.5, 5.5), rng.uniform(1.0, 3.0), 1.6)
    g = _sub(target.center, pos)
    norm = math.sqrt(_dot(g, g))
    gaze = (g[0] / norm, g[1] / norm, g[2] / norm)
    return UserPose(position=pos, yaw=rng.uniform(-math.pi, math.pi), gaze=gaze)


def _rotate_gaze(pose: UserPose, angle_rad: float) -> UserPose:
    g = pose.gaze
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return replace(pose, gaze=(g[0] * c - g[1] * s, g[0] * s + g[1] * c, g[2]))


def feature_latency_probe(feature: str, reps: int = 100, seed: int = 7) -> ProbeStats:
    """Time one feature update per repetition, in milliseconds.

    xray-display: enable toggle to a valid window. xray-move: a 45-degree
    gaze swing to the repositioned window. minimap: a 180-degree turn to the
    recomputed frame.
    """
    if feature not in PROBE_FEATURES:
        raise ValueError(f"unknown probe feature {feature!r}")
    snapshot = _probe_fixture()
    rng = random.Random(seed)
    peers = {9001 + i: ((1.0 + i, 1.0, 0.0), 0.3 * i) for i in range(3)}
    samples: list[float] = []
    for _ in range(reps):
        pose = _random_pose(rng, snapshot)
        if feature == "xray-display":
            t0 = time.perf_counter_ns()
            window = place_xray_window(pose, snapshot)
            dt = time.perf_counter_ns() - t0
            assert window is not None
        elif feature == "xray-move":
            place_xray_window(pose, snapshot)
            moved = _rotate_gaze(pose, math.radians(45))
            t0 = time.perf_counter_ns()
            place_xray_window(moved, snapshot)
            dt = time.perf_counter_ns() - t0
        else:
            cfg = MinimapConfig(camera_height=8.0, fov_deg=70.0, orientation_mode="track_up")
            project_minimap(pose, snapshot, peers, cfg)
            turned = replace(pose, yaw=pose.yaw + math.pi)
            t0 = time.perf_counter_ns()
            project_minimap(turned, snapshot, peers, cfg)
            dt = time.perf_counter_ns() - t0
        samples.append(dt / 1e6)
    return ProbeStats(
        feature=feature,
        samples_ms=samples,
        mean_ms=statistics.fmean(samples),
        std_ms=statistics.stdev(samples) if len(samples) > 1 else 0.0,
    )
