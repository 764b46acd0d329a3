"""Shared mini-map projection test vectors.

The browser console re-derives the projection math in TypeScript; these
vectors, generated from the reference implementation here, pin both sides to
the same answers within a stated tolerance.
"""

from __future__ import annotations

import argparse
import json
import math
import random

from .nav import MinimapConfig, UserPose, project_point

TOLERANCE = 1e-4


def generate_minimap_vectors(seed: int = 2024, cases: int = 40, points_per_case: int = 6) -> dict:
    rng = random.Random(seed)
    out = []
    for i in range(cases):
        pose = UserPose(
            position=(
                round(rng.uniform(-10.0, 10.0), 4),
                round(rng.uniform(-10.0, 10.0), 4),
                0.0,
            ),
            yaw=round(rng.uniform(-math.pi, math.pi), 6),
        )
        cfg = MinimapConfig(
            camera_height=round(rng.uniform(1.0, 20.0), 4),
            fov_deg=round(rng.uniform(10.0, 170.0), 4),
            orientation_mode="track_up" if i % 2 == 0 else "north_up",
        )
        w = cfg.half_width_m()
        points = []
        expected = []
        for _ in range(points_per_case):
            p = (
                round(pose.position[0] + rng.uniform(-w, w), 4),
                round(pose.position[1] + rng.uniform(-w, w), 4),
                0.0,
            )
            nx, ny = project_point(pose, cfg, p)
            points.append([p[0], p[1], p[2]])
            expected.append([nx, ny])
        out.append(
            {
                "pose": {"position": list(pose.position), "yaw": pose.yaw},
                "config": {
                    "camera_height": cfg.camera_height,
                    "fov_deg": cfg.fov_deg,
                    "mode": cfg.orientation_mode,
                },
                "half_width_m": w,
                "points": points,
                "expected": expected,
            }
        )
    return {"tolerance": TOLERANCE, "seed": seed, "cases": out}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="write mini-map projection test vectors")
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--cases", type=int, default=40)
    args = parser.parse_args(argv)
    doc = generate_minimap_vectors(seed=args.seed, cases=args.cases)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    print(f"wrote {len(doc['cases'])} cases to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
