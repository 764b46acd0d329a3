import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { halfWidthM, MapConfig, projectPoint, unprojectPoint } from "../src/projection.js";

interface VectorCase {
  pose: { position: [number, number, number]; yaw: number };
  config: { camera_height: number; fov_deg: number; mode: "track_up" | "north_up" };
  half_width_m: number;
  points: [number, number, number][];
  expected: [number, number][];
}

const here = dirname(fileURLToPath(import.meta.url));
const doc = JSON.parse(readFileSync(join(here, "fixtures/minimap_vectors.json"), "utf-8")) as {
  tolerance: number;
  cases: VectorCase[];
};

function cfgOf(c: VectorCase): MapConfig {
  return {
    cameraHeight: c.config.camera_height,
    fovDeg: c.config.fov_deg,
    mode: c.config.mode,
  };
}

describe("shared projection vectors", () => {
  it("has a meaningful corpus", () => {
    expect(doc.cases.length).toBeGreaterThanOrEqual(40);
    expect(doc.tolerance).toBe(1e-4);
  });

  it("reproduces every reference projection within tolerance", () => {
    for (const c of doc.cases) {
      const cfg = cfgOf(c);
      expect(Math.abs(halfWidthM(cfg) - c.half_width_m)).toBeLessThan(1e-6);
      c.points.forEach((point, i) => {
        const [nx, ny] = projectPoint(c.pose, cfg, point);
        expect(Math.abs(nx - c.expected[i][0])).toBeLessThanOrEqual(doc.tolerance);
        expect(Math.abs(ny - c.expected[i][1])).toBeLessThanOrEqual(doc.tolerance);
      });
    }
  });

  it("unprojects back to the original points", () => {
    for (const c of doc.cases) {
      const cfg = cfgOf(c);
      c.points.forEach((point) => {
        const [nx, ny] = projectPoint(c.pose, cfg, point);
        const [bx, by] = unprojectPoint(c.pose, cfg, nx, ny);
        expect(Math.abs(bx - point[0])).toBeLessThan(1e-6);
        expect(Math.abs(by - point[1])).toBeLessThan(1e-6);
      });
    }
  });
});
