// Canvas renderers: bird's-eye main view, corner mini-map, cut-out overlay.

import type { MapConfig, PoseLike } from "./projection.js";
import { halfWidthM, projectPoint, quadCorners } from "./projection.js";
import type { ObjectEntry, ViewState } from "./state.js";
import { activeCues } from "./state.js";

export interface XrayView {
  enabled: boolean;
  halfSize: number;
  gazeMode: "eye" | "head";
  gaze: [number, number]; // unit, horizontal
}

const AVATAR_COLORS = ["#e91e63", "#9c27b0", "#3f51b5", "#009688", "#795548", "#607d8b"];

function avatarColor(pid: number): string {
  return AVATAR_COLORS[pid % AVATAR_COLORS.length];
}

function drawQuad(
  ctx: CanvasRenderingContext2D,
  entry: ObjectEntry,
  toScreen: (p: [number, number]) => [number, number],
): void {
  const corners = quadCorners(entry.obj.center, entry.obj.half_extents, entry.obj.orientation);
  ctx.beginPath();
  corners.forEach((c, i) => {
    const [sx, sy] = toScreen(c);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.closePath();
  const isWall = entry.obj.category === "wall";
  ctx.globalAlpha = isWall ? entry.alpha : 0.85;
  if (entry.obj.category === "floor") ctx.globalAlpha = 0.25;
  if (entry.obj.category === "ceiling") return; // top-down: ceilings only clutter
  ctx.fillStyle = entry.color;
  ctx.fill();
  ctx.globalAlpha = 1.0;
  ctx.strokeStyle = "#222";
  ctx.lineWidth = 0.75;
  ctx.stroke();
}

function drawAvatar(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  headingRad: number,
  color: string,
  r = 7,
): void {
  ctx.beginPath();
  ctx.arc(x, y, r, 0, Math.PI * 2);
  ctx.fillStyle = color;
  ctx.fill();
  ctx.beginPath();
  ctx.moveTo(x + Math.cos(headingRad) * r * 1.8, y + Math.sin(headingRad) * r * 1.8);
  ctx.lineTo(x + Math.cos(headingRad + 2.5) * r, y + Math.sin(headingRad + 2.5) * r);
  ctx.lineTo(x + Math.cos(headingRad - 2.5) * r, y + Math.sin(headingRad - 2.5) * r);
  ctx.closePath();
  ctx.fill();
}

// Walls are vertical quads: their footprint is the segment between the two
// distinct corner positions. Used for the cut-out overlay ray test.
function wallSegment(entry: ObjectEntry): [[number, number], [number, number]] {
  const corners = quadCorners(entry.obj.center, entry.obj.half_extents, entry.obj.orientation);
  let best: [[number, number], [number, number]] = [corners[0], corners[1]];
  let bestLen = -1;
  for (let i = 1; i < 4; i++) {
    const dx = corners[i][0] - corners[0][0];
    const dy = corners[i][1] - corners[0][1];
    const len = dx * dx + dy * dy;
    if (len > bestLen) {
      bestLen = len;
      best = [corners[0], corners[i]];
    }
  }
  return best;
}

function raySegmentHit(
  origin: [number, number],
  dir: [number, number],
  a: [number, number],
  b: [number, number],
): { t: number; point: [number, number] } | null {
  const ex = b[0] - a[0];
  const ey = b[1] - a[1];
  const denom = dir[0] * ey - dir[1] * ex;
  if (Math.abs(denom) < 1e-12) return null;
  const t = ((a[0] - origin[0]) * ey - (a[1] - origin[1]) * ex) / denom;
  const u = (dir[1] !== 0)
    ? ((origin[1] + t * dir[1]) - a[1]) / (ey || 1e-12)
    : ((origin[0] + t * dir[0]) - a[0]) / (ex || 1e-12);
  const hit: [number, number] = [origin[0] + t * dir[0], origin[1] + t * dir[1]];
  const s = Math.abs(ex) > Math.abs(ey) ? (hit[0] - a[0]) / ex : (hit[1] - a[1]) / ey;
  if (t <= 1e-9 || s < 0 || s > 1) return null;
  return { t, point: hit };
}

export function nearestWallHit(
  state: ViewState,
  origin: [number, number],
  dir: [number, number],
): { entry: ObjectEntry; point: [number, number]; t: number } | null {
  let best: { entry: ObjectEntry; point: [number, number]; t: number } | null = null;
  for (const entry of state.objects.values()) {
    if (entry.obj.category !== "wall") continue;
    const [a, b] = wallSegment(entry);
    const hit = raySegmentHit(origin, dir, a, b);
    if (hit && (best === null || hit.t < best.t)) {
      best = { entry, point: hit.point, t: hit.t };
    }
  }
  return best;
}

export function drawMain(
  canvas: HTMLCanvasElement,
  state: ViewState,
  xray: XrayView,
  pxPerMeter = 60,
): void {
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const [sx0, sy0] = state.self.position;
  const toScreen = (p: [number, number]): [number, number] => [
    canvas.width / 2 + (p[0] - sx0) * pxPerMeter,
    canvas.height / 2 - (p[1] - sy0) * pxPerMeter,
  ];
  const entries = [...state.objects.values()].sort((a, b) => {
    const order = (e: ObjectEntry) => (e.obj.category === "floor" ? 0 : e.obj.category === "wall" ? 2 : 1);
    return order(a) - order(b);
  });
  for (const entry of entries) drawQuad(ctx, entry, toScreen);

  // cut-out window through the wall under the gaze
  if (xray.enabled) {
    const hit = nearestWallHit(state, [sx0, sy0], xray.gaze);
    if (hit) {
      const [hx, hy] = toScreen(hit.point);
      ctx.beginPath();
      ctx.arc(hx, hy, xray.halfSize * pxPerMeter, 0, Math.PI * 2);
      ctx.fillStyle = "rgba(16, 20, 26, 0.9)"; // punch visually through the wall
      ctx.fill();
      ctx.strokeStyle = "#80dfff";
      ctx.lineWidth = 2;
      ctx.stroke();
      const [gx, gy] = toScreen([sx0 + xray.gaze[0] * hit.t, sy0 + xray.gaze[1] * hit.t]);
      ctx.beginPath();
      ctx.moveTo(canvas.width / 2, canvas.height / 2);
      ctx.lineTo(gx, gy);
      ctx.strokeStyle = "rgba(128, 223, 255, 0.35)";
      ctx.stroke();
    }
  }

  for (const [pid, pose] of state.peers) {
    const [px, py] = toScreen([pose.position[0], pose.position[1]]);
    drawAvatar(ctx, px, py, -pose.yaw, avatarColor(pid));
  }
  drawAvatar(ctx, canvas.width / 2, canvas.height / 2, -state.self.yaw, "#ffffff");

  // directional cue flashes at the rim, angle relative to facing
  const now = Date.now();
  for (const cue of activeCues(state, now)) {
    const angle = -(state.self.yaw + cue.azimuthRad);
    const r = Math.min(canvas.width, canvas.height) / 2 - 16;
    const cx = canvas.width / 2 + Math.cos(angle) * r;
    const cy = canvas.height / 2 - Math.sin(angle) * r * -1;
    ctx.beginPath();
    ctx.arc(cx, cy, 10 * (1 - (now - cue.atMs) / 1200), 0, Math.PI * 2);
    ctx.fillStyle = "rgba(255, 193, 7, 0.8)";
    ctx.fill();
  }
}

export function drawMinimap(
  canvas: HTMLCanvasElement,
  state: ViewState,
  cfg: MapConfig,
): void {
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "rgba(8, 10, 14, 0.92)";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#4a5568";
  ctx.strokeRect(0.5, 0.5, canvas.width - 1, canvas.height - 1);
  const pose: PoseLike = { position: state.self.position, yaw: state.self.yaw };
  const half = canvas.width / 2;
  const toScreen = (n: [number, number]): [number, number] => [
    half + n[0] * half,
    half - n[1] * half,
  ];
  const w = halfWidthM(cfg);
  for (const entry of state.objects.values()) {
    if (entry.obj.category === "ceiling") continue;
    const [cx, cy] = entry.obj.center;
    if (Math.abs(cx - pose.position[0]) > w || Math.abs(cy - pose.position[1]) > w) continue;
    const corners = quadCorners(entry.obj.center, entry.obj.half_extents, entry.obj.orientation);
    ctx.beginPath();
    corners.forEach((c, i) => {
      const [sx, sy] = toScreen(projectPoint(pose, cfg, c));
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.closePath();
    ctx.globalAlpha = entry.obj.category === "wall" ? entry.alpha : 0.8;
    ctx.fillStyle = entry.color;
    ctx.fill();
    ctx.globalAlpha = 1.0;
  }
  for (const [pid, peer] of state.peers) {
    const [cx, cy] = peer.position;
    if (Math.abs(cx - pose.position[0]) > w || Math.abs(cy - pose.position[1]) > w) continue;
    const [sx, sy] = toScreen(projectPoint(pose, cfg, [cx, cy]));
    const heading = cfg.mode === "track_up" ? peer.yaw - pose.yaw : peer.yaw;
    drawAvatar(ctx, sx, sy, -heading, avatarColor(pid), 4);
  }
  // self-avatar is always the map center; with track-up, "up" is facing
  const selfHeading = cfg.mode === "track_up" ? 0 : pose.yaw;
  drawAvatar(ctx, half, half, -selfHeading, "#ffffff", 5);
}
