import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planesync.nav import (
    HYSTERESIS_RELEASE_M,
    MinimapConfig,
    OPAQUE_ALPHA,
    SEETHROUGH_ALPHA,
    SEETHROUGH_DISTANCE_M,
    TransparencyState,
    UserPose,
    feature_latency_probe,
    place_xray_window,
    project_minimap,
    project_point,
    unproject_point,
    update_transparency,
    wall_distance,
)
from planesync.scene import GRAY, SceneCategory, SceneObject, quat_axes, quat_from_axes
from planesync.synthesis import World, builtin_room


def wall(wall_id, center, half_extents, normal="-x"):
    axes = {
        "-x": ((0.0, -1.0, 0.0), (0.0, 0.0, 1.0), (-1.0, 0.0, 0.0)),
        "+x": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)),
        "+y": ((-1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0)),
    }[normal]
    return SceneObject(
        id=wall_id,
        version=1,
        category=SceneCategory.WALL,
        center=center,
        half_extents=half_extents,
        orientation=quat_from_axes(*axes),
        created_us=0,
        creator=0,
    )


def snap_of(*objects):
    from planesync.scene import SceneSnapshot

    snap = SceneSnapshot()
    for o in objects:
        snap.upsert(o)
    return snap


# --- X-ray window -----------------------------------------------------------


def test_axis_aligned_analytic_hit():
    snap = snap_of(wall(1, (3.0, 0.0, 1.2), (2.0, 1.2)))
    pose = UserPose(position=(0.0, 0.0, 1.2), gaze=(1.0, 0.0, 0.0))
    win = place_xray_window(pose, snap, half_size=0.4)
    assert win is not None
    assert win.target_wall_id == 1
    assert win.center == pytest.approx((3.0, 0.0, 1.2), abs=1e-9)


def test_nearest_wall_wins():
    snap = snap_of(
        wall(1, (7.0, 0.0, 1.2), (2.0, 1.2)), wall(2, (3.0, 0.0, 1.2), (2.0, 1.2))
    )
    pose = UserPose(position=(0.0, 0.0, 1.2), gaze=(1.0, 0.0, 0.0))
    win = place_xray_window(pose, snap)
    assert win.target_wall_id == 2


def test_window_clamped_inside_wall():
    # hit 0.1 m from the wall edge; a 0.5 m half-size window must sit 0.5 m in
    snap = snap_of(wall(1, (3.0, 0.0, 1.2), (2.0, 1.2)))
    target = (3.0, 1.9, 1.2)
    g = tuple((t - p) / math.dist(target, (0.0, 0.0, 1.2)) for t, p in zip(target, (0.0, 0.0, 1.2)))
    pose = UserPose(position=(0.0, 0.0, 1.2), gaze=g)
    win = place_xray_window(pose, snap, half_size=0.5)
    assert win.center[1] == pytest.approx(1.5, abs=1e-9)


def test_no_wall_hit_returns_none():
    snap = snap_of(wall(1, (3.0, 0.0, 1.2), (2.0, 1.2)))
    behind = UserPose(position=(5.0, 0.0, 1.2), gaze=(1.0, 0.0, 0.0))
    assert place_xray_window(behind, snap) is None
    parallel = UserPose(position=(0.0, 0.0, 1.2), gaze=(0.0, 1.0, 0.0))
    assert place_xray_window(parallel, snap) is None
    assert place_xray_window(behind, snap_of()) is None


def test_head_gaze_mode_follows_yaw():
    snap = snap_of(wall(1, (3.0, 0.0, 1.2), (2.0, 1.2)))
    pose = UserPose(
        position=(0.0, 0.0, 1.2), yaw=0.0, gaze=(0.0, 0.0, 1.0), gaze_mode="head"
    )
    win = place_xray_window(pose, snap)
    assert win is not None and win.center[2] == pytest.approx(1.2)


# brute-force oracle: hit test from corner geometry, no shared quat math path
def oracle_nearest_hit(origin, direction, walls):
    def sub(a, b):
        return (a[0] - b[0], a[1] - b[1], a[2] - b[2])

    def cross(a, b):
        return (
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        )

    def dot(a, b):
        return sum(x * y for x, y in zip(a, b))

    best = None
    for w in walls:
        xa, ya, _za = quat_axes(w.orientation)
        hx, hy = w.half_extents
        corners = []
        for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
            corners.append(
                tuple(w.center[k] + su * hx * xa[k] + sv * hy * ya[k] for k in range(3))
            )
        n = cross(sub(corners[1], corners[0]), sub(corners[3], corners[0]))
        denom = dot(n, direction)
        if abs(denom) < 1e-12:
            continue
        t = dot(n, sub(corners[0], origin)) / denom
        if t <= 1e-9:
            continue
        hit = tuple(origin[k] + t * direction[k] for k in range(3))
        inside = True
        for i in range(4):
            edge = sub(corners[(i + 1) % 4], corners[i])
            to_hit = sub(hit, corners[i])
            if dot(cross(edge, to_hit), n) < -1e-7:
                inside = False
                break
        if inside and (best is None or t < best[0]):
            best = (t, w.id)
    return best


@given(st.integers(0, 10_000))
@settings(max_examples=150, deadline=None)
def test_xray_matches_brute_force_oracle(seed):
    rng = random.Random(seed)
    world = World([builtin_room("living")])
    snap = snap_of(*world.objects)
    walls = [o for o in snap.objects.values() if o.category is SceneCategory.WALL]
    pose = UserPose(
        position=(rng.uniform(0.5, 6.5), rng.uniform(0.5, 3.4), rng.uniform(0.3, 2.5)),
        gaze=(0.0, 0.0, 0.0),
    )
    theta = rng.uniform(-math.pi, math.pi)
    pitch = rng.uniform(-0.5, 0.5)
    g = (math.cos(theta) * math.cos(pitch), math.sin(theta) * math.cos(pitch), math.sin(pitch))
    pose.gaze = g
    half_size = rng.uniform(0.1, 1.0)
    win = place_xray_window(pose, snap, half_size=half_size)
    expected = oracle_nearest_hit(pose.position, g, walls)
    if expected is None:
        assert win is None
        return
    assert win is not None
    assert win.target_wall_id == expected[1]
    # on-plane and inside-rectangle invariants
    target = snap.objects[win.target_wall_id]
    xa, ya, za = quat_axes(target.orientation)
    rel = tuple(win.center[k] - target.center[k] for k in range(3))
    dist_to_plane = sum(r * z for r, z in zip(rel, za))
    assert abs(dist_to_plane) < 1e-4
    u = sum(r * x for r, x in zip(rel, xa))
    v = sum(r * y for r, y in zip(rel, ya))
    assert abs(u) <= target.half_extents[0] + 1e-9
    assert abs(v) <= target.half_extents[1] + 1e-9


# --- see-through transparency --------------------------------------------------


def test_three_meter_rule_and_hysteresis():
    w = wall(1, (3.0, 0.0, 1.2), (2.0, 1.2))
    snap = snap_of(w)
    st_ = TransparencyState()

    def at(x):
        return UserPose(position=(x, 0.0, 1.2))

    cues = update_transparency(at(3.0 - 2.9), snap, st_)  # distance 2.9
    assert st_.alpha(1) == SEETHROUGH_ALPHA
    assert len(cues) == 1
    # retreat into the band: state holds
    update_transparency(at(3.0 - 3.1), snap, st_)
    assert st_.alpha(1) == SEETHROUGH_ALPHA
    # retreat past the release threshold: opaque again, no cue
    cues = update_transparency(at(3.0 - 3.3), snap, st_)
    assert st_.alpha(1) == OPAQUE_ALPHA
    assert cues == []
    # approach into the band from opaque: stays opaque
    update_transparency(at(3.0 - 3.1), snap, st_)
    assert st_.alpha(1) == OPAQUE_ALPHA


def test_cue_azimuth_wall_to_the_right():
    # facing +y, wall 2 m to the user's right (+x)
    w = wall(1, (2.0, 0.0, 1.2), (2.0, 1.2))
    snap = snap_of(w)
    pose = UserPose(position=(0.0, 0.0, 1.2), yaw=math.pi / 2)
    cues = update_transparency(pose, snap, TransparencyState())
    assert len(cues) == 1
    assert cues[0].azimuth_rad == pytest.approx(math.pi / 2, abs=1e-9)


def test_cue_fires_on_approach_only_once():
    w = wall(1, (2.0, 0.0, 1.2), (2.0, 1.2))
    snap = snap_of(w)
    st_ = TransparencyState()
    assert len(update_transparency(UserPose(position=(0.0, 0.0, 1.2)), snap, st_)) == 1
    assert update_transparency(UserPose(position=(0.5, 0.0, 1.2)), snap, st_) == []


def test_alpha_values_are_two_state_only():
    world = World([builtin_room("personal")])
    snap = snap_of(*world.objects)
    st_ = TransparencyState()
    rng = random.Random(5)
    for _ in range(60):
        pose = UserPose(position=(rng.uniform(0, 3.8), rng.uniform(0, 3.0), 1.5))
        update_transparency(pose, snap, st_)
        assert set(st_.alphas.values()) <= {OPAQUE_ALPHA, SEETHROUGH_ALPHA}


@given(st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_no_transition_inside_hysteresis_band(seed):
    rng = random.Random(seed)
    w = wall(1, (10.0, 0.0, 1.2), (2.0, 1.2))
    snap = snap_of(w)
    st_ = TransparencyState()
    start = rng.choice([2.0, 4.0])
    update_transparency(UserPose(position=(10.0 - start, 0.0, 1.2)), snap, st_)
    held = st_.alpha(1)
    for _ in range(20):
        d = rng.uniform(SEETHROUGH_DISTANCE_M + 1e-6, HYSTERESIS_RELEASE_M - 1e-6)
        cues = update_transparency(UserPose(position=(10.0 - d, 0.0, 1.2)), snap, st_)
        assert st_.alpha(1) == held
        assert cues == []


def test_replaying_path_reproduces_alpha_sequence():
    world = World([builtin_room("personal")])
    snap = snap_of(*world.objects)
    rng = random.Random(9)
    path = [(rng.uniform(0, 3.8), rng.uniform(0, 3.0), 1.5) for _ in range(40)]

    def run():
        st_ = TransparencyState()
        seq = []
        for p in path:
            update_transparency(UserPose(position=p), snap, st_)
            seq.append(dict(st_.alphas))
        return seq

    assert run() == run()


def test_closest_point_distance_mode():
    w = wall(1, (10.0, 0.0, 1.2), (9.0, 1.2))  # long wall spanning y in [-9, 9]
    head_on = UserPose(position=(2.0, 0.0, 1.2))
    assert wall_distance(head_on, w, "center") == pytest.approx(8.0)
    assert wall_distance(head_on, w, "closest") == pytest.approx(8.0)
    abeam = UserPose(position=(2.0, 8.0, 1.2))  # level with the wall's far end
    assert wall_distance(abeam, w, "center") == pytest.approx(math.hypot(8.0, 8.0))
    assert wall_distance(abeam, w, "closest") == pytest.approx(8.0)


# --- mini-map -----------------------------------------------------------------


def test_half_width_from_camera_and_fov():
    cfg = MinimapConfig(camera_height=10.0, fov_deg=60.0)
    assert cfg.half_width_m() == pytest.approx(10.0 * math.tan(math.radians(30.0)), abs=1e-12)
    assert cfg.half_width_m() == pytest.approx(5.7735, abs=1e-4)


def test_north_up_projection_of_north_peer():
    pose = UserPose(position=(4.0, 4.0, 0.0), yaw=0.3)
    cfg = MinimapConfig(camera_height=10.0, fov_deg=60.0, orientation_mode="north_up")
    nx, ny = project_point(pose, cfg, (4.0, 6.0, 0.0))
    assert (nx, ny) == pytest.approx((0.0, 0.34641), abs=1e-5)


def test_track_up_half_turn_flips_north_peer():
    pose = UserPose(position=(4.0, 4.0, 0.0), yaw=math.pi)
    cfg = MinimapConfig(camera_height=10.0, fov_deg=60.0, orientation_mode="track_up")
    nx, ny = project_point(pose, cfg, (4.0, 6.0, 0.0))
    assert (nx, ny) == pytest.approx((0.0, -0.34641), abs=1e-5)


@given(
    st.floats(-3.0, 3.0),
    st.floats(-3.0, 3.0),
    st.floats(-math.pi, math.pi),
    st.floats(1.0, 20.0),
    st.floats(10.0, 170.0),
    st.sampled_from(["track_up", "north_up"]),
)
@settings(max_examples=200)
def test_projection_invertible_on_footprint(px, py, yaw, height, fov, mode):
    pose = UserPose(position=(1.0, -2.0, 0.0), yaw=yaw)
    cfg = MinimapConfig(camera_height=height, fov_deg=fov, orientation_mode=mode)
    w = cfg.half_width_m()
    point = (pose.position[0] + px / 3.0 * w, pose.position[1] + py / 3.0 * w, 0.0)
    nx, ny = project_point(pose, cfg, point)
    back = unproject_point(pose, cfg, nx, ny)
    assert back[0] == pytest.approx(point[0], abs=1e-6)
    assert back[1] == pytest.approx(point[1], abs=1e-6)


@given(st.floats(-math.pi, math.pi))
@settings(max_examples=100)
def test_track_up_equals_rotated_north_up(yaw):
    pose = UserPose(position=(2.0, 3.0, 0.0), yaw=yaw)
    tu = MinimapConfig(camera_height=8.0, fov_deg=70.0, orientation_mode="track_up")
    nu = MinimapConfig(camera_height=8.0, fov_deg=70.0, orientation_mode="north_up")
    for point in [(2.5, 3.5, 0.0), (1.0, 2.0, 0.0), (4.0, 3.0, 0.0)]:
        tx, ty = project_point(pose, tu, point)
        nx, ny = project_point(pose, nu, point)
        c, s = math.cos(yaw), math.sin(yaw)
        rx, ry = nx * c + ny * s, -nx * s + ny * c  # rotate by -yaw
        assert (tx, ty) == pytest.approx((rx, ry), abs=1e-9)


def test_minimap_frame_contents():
    world = World([builtin_room("personal")], creator=1)
    snap = snap_of(*world.objects)
    pose = UserPose(position=(1.9, 1.5, 0.0), yaw=0.4)
    cfg = MinimapConfig(camera_height=6.0, fov_deg=80.0)
    peers = {2: ((2.5, 1.5, 0.0), 1.0), 3: ((100.0, 100.0, 0.0), 0.0)}
    frame = project_minimap(pose, snap, peers, cfg, viewer=5, now_us=7)
    self_items = [i for i in frame.items if i.kind == "self"]
    assert len(self_items) == 1 and self_items[0].center == (0.0, 0.0)
    avatars = [i for i in frame.items if i.kind == "avatar"]
    assert [a.id for a in avatars] == [2]  # peer 3 outside footprint
    objects = [i for i in frame.items if i.kind == "object"]
    assert objects and all(o.color == GRAY for o in objects)  # creator 1 != viewer 5
    own = project_minimap(pose, snap, peers, cfg, viewer=1, now_us=7)
    assert all(o.color != GRAY for o in own.items if o.kind == "object")
    assert frame.computed_us == 7
    for item in objects:
        assert -1.0 <= item.center[0] <= 1.0 and -1.0 <= item.center[1] <= 1.0


def test_minimap_config_validation():
    with pytest.raises(ValueError):
        MinimapConfig(camera_height=0.0).validate()
    with pytest.raises(ValueError):
        MinimapConfig(fov_deg=0.5).validate()
    with pytest.raises(ValueError):
        MinimapConfig(fov_deg=180.0).validate()


# --- latency probes --------------------------------------------------------------


@pytest.mark.parametrize(
    "feature,budget_ms",
    [("xray-display", 2 * 6.81), ("xray-move", 2 * 6.57), ("minimap", 2 * 5.99)],
)
def test_feature_probe_under_budget(feature, budget_ms):
    stats = feature_latency_probe(feature, reps=100)
    assert len(stats.samples_ms) == 100
    assert stats.mean_ms < budget_ms
    assert stats.std_ms >= 0


def test_probe_rejects_unknown_feature():
    with pytest.raises(ValueError):
        feature_latency_probe("teleport")
