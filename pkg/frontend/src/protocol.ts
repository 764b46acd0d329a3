// Gateway wire protocol: UTF-8, one JSON object per line, over a WebSocket.

export interface SceneObjectJson {
  id: number;
  version: number;
  category: string;
  center: [number, number, number];
  half_extents: [number, number];
  orientation: [number, number, number, number]; // w, x, y, z
  created_us: number;
  creator: number;
}

export type GatewayEvent =
  | {
      type: "session_info";
      participant_id: number;
      role: string;
      room_code: string;
      epoch_us: number;
      framing: string;
      limit: number;
    }
  | { type: "object_upsert"; object: SceneObjectJson; color: string; received: boolean }
  | { type: "pose"; participant_id: number; position: [number, number, number]; yaw: number }
  | { type: "wall_alpha"; wall_id: number; alpha: number }
  | { type: "sound_cue"; wall_id: number; azimuth_rad: number }
  | {
      type: "metrics_tick";
      rx_datagrams: number;
      rx_bytes: number;
      tx_datagrams: number;
      tx_bytes: number;
      objects: number;
    }
  | { type: "error"; reason: string; limit?: number; detail?: string };

export type Command =
  | { cmd: "join"; role: "leader" | "follower"; room_code: string }
  | { cmd: "move"; dx: number; dy: number; yaw: number }
  | { cmd: "publish_room"; spec: string }
  | { cmd: "toggle_update"; mode: "auto" | "manual" }
  | { cmd: "trigger_update" };

// Minimal socket surface shared by the browser WebSocket and the `ws`
// package, so the client is testable under node.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "message" | "close" | "error", cb: (ev: any) => void): void;
}

export class GatewayClient {
  private buffer = "";

  constructor(
    private socket: SocketLike,
    private onEvent: (ev: GatewayEvent) => void,
    private onClose: () => void = () => {},
  ) {
    socket.addEventListener("message", (ev) => this.feed(String(ev.data)));
    socket.addEventListener("close", () => this.onClose());
  }

  // A message may carry several lines or a partial one; frame on newlines.
  private feed(chunk: string): void {
    this.buffer += chunk;
    if (!this.buffer.includes("\n")) {
      // whole-message framing without a trailing newline
      if (this.buffer.trim().startsWith("{") && this.buffer.trim().endsWith("}")) {
        this.emitLine(this.buffer);
        this.buffer = "";
      }
      return;
    }
    const lines = this.buffer.split("\n");
    this.buffer = lines.pop() ?? "";
    for (const line of lines) this.emitLine(line);
  }

  private emitLine(line: string): void {
    const text = line.trim();
    if (!text) return;
    let parsed: GatewayEvent;
    try {
      parsed = JSON.parse(text) as GatewayEvent;
    } catch {
      return; // a malformed server line is dropped, never fatal
    }
    this.onEvent(parsed);
  }

  send(command: Command): void {
    this.socket.send(JSON.stringify(command) + "\n");
  }

  close(): void {
    this.socket.close();
  }
}

export function gatewayUrl(base: string): string {
  if (base.startsWith("ws://") || base.startsWith("wss://")) return base;
  return `ws://${base}/ws`;
}
