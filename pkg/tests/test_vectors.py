import json
from pathlib import Path

from planesync.nav import MinimapConfig, UserPose, project_point
from planesync.vectors import generate_minimap_vectors

FIXTURE = Path(__file__).resolve().parent.parent / "frontend/tests/fixtures/minimap_vectors.json"


def test_checked_in_vectors_match_regeneration():
    doc = json.loads(FIXTURE.read_text())
    assert doc == generate_minimap_vectors(seed=doc["seed"])


def test_vectors_reproduce_through_projection():
    doc = json.loads(FIXTURE.read_text())
    tol = doc["tolerance"]
    for case in doc["cases"]:
        pose = UserPose(
            position=tuple(case["pose"]["position"]), yaw=case["pose"]["yaw"]
        )
        cfg = MinimapConfig(
            camera_height=case["config"]["camera_height"],
            fov_deg=case["config"]["fov_deg"],
            orientation_mode=case["config"]["mode"],
        )
        for point, expected in zip(case["points"], case["expected"]):
            nx, ny = project_point(pose, cfg, tuple(point))
            assert abs(nx - expected[0]) <= tol
            assert abs(ny - expected[1]) <= tol
