// Keyboard steering: WASD moves, arrow keys or Q/E turn. Sampled on a fixed
// tick (at most 20 Hz) so every sample becomes at most one move command.

export interface SteerSample {
  dx: number;
  dy: number;
  yaw: number;
  moved: boolean;
}

export const MOVE_SPEED_MPS = 1.5;
export const TURN_SPEED_RPS = 2.0;
export const STEER_INTERVAL_MS = 50; // 20 Hz

export class Steering {
  private keys = new Set<string>();
  yaw = 0;

  attach(target: { addEventListener(t: string, cb: (e: KeyboardEvent) => void): void }): void {
    target.addEventListener("keydown", (e) => this.keys.add(e.key.toLowerCase()));
    target.addEventListener("keyup", (e) => this.keys.delete(e.key.toLowerCase()));
  }

  sample(dtS: number): SteerSample {
    let turn = 0;
    if (this.keys.has("arrowleft") || this.keys.has("q")) turn += 1;
    if (this.keys.has("arrowright") || this.keys.has("e")) turn -= 1;
    this.yaw += turn * TURN_SPEED_RPS * dtS;
    let forward = 0;
    let strafe = 0;
    if (this.keys.has("w") || this.keys.has("arrowup")) forward += 1;
    if (this.keys.has("s") || this.keys.has("arrowdown")) forward -= 1;
    if (this.keys.has("a")) strafe += 1;
    if (this.keys.has("d")) strafe -= 1;
    const step = MOVE_SPEED_MPS * dtS;
    const fx = Math.cos(this.yaw);
    const fy = Math.sin(this.yaw);
    // strafe left = +90 degrees from facing
    const lx = -fy;
    const ly = fx;
    const dx = (forward * fx + strafe * lx) * step;
    const dy = (forward * fy + strafe * ly) * step;
    return { dx, dy, yaw: this.yaw, moved: dx !== 0 || dy !== 0 || turn !== 0 };
  }
}
