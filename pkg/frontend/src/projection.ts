// Mini-map math mirrored from the reference implementation; the shared
// vector fixtures pin both sides to the same answers.

export interface PoseLike {
  position: [number, number, number];
  yaw: number;
}

export interface MapConfig {
  cameraHeight: number;
  fovDeg: number;
  mode: "track_up" | "north_up";
}

export function halfWidthM(cfg: MapConfig): number {
  return cfg.cameraHeight * Math.tan((cfg.fovDeg * Math.PI) / 360);
}

function rotate(nx: number, ny: number, yaw: number): [number, number] {
  // frame rotation by -yaw about the map center
  const c = Math.cos(yaw);
  const s = Math.sin(yaw);
  return [nx * c + ny * s, -nx * s + ny * c];
}

export function projectPoint(
  pose: PoseLike,
  cfg: MapConfig,
  point: [number, number] | [number, number, number],
): [number, number] {
  const w = halfWidthM(cfg);
  let nx = (point[0] - pose.position[0]) / w;
  let ny = (point[1] - pose.position[1]) / w;
  if (cfg.mode === "track_up") [nx, ny] = rotate(nx, ny, pose.yaw);
  return [nx, ny];
}

export function unprojectPoint(
  pose: PoseLike,
  cfg: MapConfig,
  nx: number,
  ny: number,
): [number, number] {
  if (cfg.mode === "track_up") [nx, ny] = rotate(nx, ny, -pose.yaw);
  const w = halfWidthM(cfg);
  return [pose.position[0] + nx * w, pose.position[1] + ny * w];
}

// Local X/Y axes of a quad from its (w, x, y, z) orientation; enough to draw
// its footprint corners on a top-down view.
export function quadAxes(
  q: [number, number, number, number],
): { xa: [number, number, number]; ya: [number, number, number] } {
  const [w, x, y, z] = q;
  return {
    xa: [1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)],
    ya: [2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x)],
  };
}

export function quadCorners(
  center: [number, number, number],
  halfExtents: [number, number],
  orientation: [number, number, number, number],
): [number, number][] {
  const { xa, ya } = quadAxes(orientation);
  const [hx, hy] = halfExtents;
  const signs: [number, number][] = [
    [-1, -1],
    [1, -1],
    [1, 1],
    [-1, 1],
  ];
  return signs.map(([su, sv]) => [
    center[0] + su * hx * xa[0] + sv * hy * ya[0],
    center[1] + su * hx * xa[1] + sv * hy * ya[1],
  ]);
}
