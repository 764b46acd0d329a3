// End-to-end: two console clients against a real relay process.

import { ChildProcess, spawn } from "node:child_process";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { WebSocket } from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import type { GatewayEvent } from "../src/protocol.js";
import { GatewayClient } from "../src/protocol.js";
import { initialState, reduce, ViewState } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));
const WORLD_TEXT = readFileSync(join(here, "fixtures/personal.world"), "utf-8");

const UDP_PORT = 20000 + Math.floor(Math.random() * 20000);
const WS_PORT = UDP_PORT + 1;
const WS_URL = `ws://127.0.0.1:${WS_PORT}/ws`;

let relay: ChildProcess;

function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

async function waitForGateway(timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const ok = await new Promise<boolean>((resolve) => {
      const probe = new WebSocket(WS_URL);
      probe.on("open", () => {
        probe.close();
        resolve(true);
      });
      probe.on("error", () => resolve(false));
    });
    if (ok) return;
    await sleep(200);
  }
  throw new Error("relay gateway never came up");
}

class Console {
  state: ViewState = initialState();
  events: GatewayEvent[] = [];
  client!: GatewayClient;

  async connect(): Promise<void> {
    const socket = new WebSocket(WS_URL);
    await new Promise<void>((resolve, reject) => {
      socket.on("open", () => resolve());
      socket.on("error", (e) => reject(e));
    });
    this.client = new GatewayClient(socket as any, (ev) => {
      this.events.push(ev);
      reduce(this.state, ev);
    });
  }

  async waitFor(pred: (c: Console) => boolean, timeoutMs = 10000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      if (pred(this)) return;
      await sleep(10);
    }
    throw new Error(
      `condition not met; events: ${this.events.map((e) => e.type).join(",")}`,
    );
  }
}

beforeAll(async () => {
  relay = spawn(
    "relay",
    [
      "--bind",
      `127.0.0.1:${UDP_PORT}`,
      "--gateway",
      `127.0.0.1:${WS_PORT}`,
      "--limit",
      "photon",
      "--framing",
      "plain",
    ],
    { stdio: "ignore" },
  );
  await waitForGateway();
});

afterAll(() => {
  relay?.kill();
});

describe("live session through the relay gateway", () => {
  const leader = new Console();
  const follower = new Console();

  it("leader joins and publishes a 30-object room", async () => {
    await leader.connect();
    leader.client.send({ cmd: "join", role: "leader", room_code: "LIVE01" });
    await leader.waitFor((c) => c.state.role === "leader");
    leader.client.send({ cmd: "publish_room", spec: WORLD_TEXT });
    await leader.waitFor((c) => c.state.objects.size === 30);
    for (const entry of leader.state.objects.values()) {
      expect(entry.received).toBe(false);
      expect(entry.color).not.toBe("#808080");
    }
  });

  it("late-joining follower renders the 30-object catch-up burst", async () => {
    await follower.connect();
    follower.client.send({ cmd: "join", role: "follower", room_code: "LIVE01" });
    await follower.waitFor((c) => c.state.objects.size === 30);
    const upserts = follower.events.filter((e) => e.type === "object_upsert");
    expect(upserts.length).toBe(30);
    for (const entry of follower.state.objects.values()) {
      expect(entry.received).toBe(true);
      expect(entry.color).toBe("#808080"); // someone else's objects render gray
    }
    // mirror agrees with the leader's own view, object for object
    for (const [id, entry] of leader.state.objects) {
      expect(follower.state.objects.get(id)!.obj).toEqual(entry.obj);
    }
  });

  it("reflects a leader move on the follower within the latency budget", async () => {
    const leaderPid = leader.state.participantId!;
    const before = follower.state.peers.get(leaderPid);
    const t0 = performance.now();
    leader.client.send({ cmd: "move", dx: 0.4, dy: 0.2, yaw: 0.3 });
    await follower.waitFor((c) => {
      const pose = c.state.peers.get(leaderPid);
      return pose !== undefined && pose !== before && Math.abs(pose.position[0] - 0.4) < 1e-4;
    });
    const elapsed = performance.now() - t0;
    // loopback round trip is ~1 ms; budget: 2 x RTT + 100 ms render allowance
    expect(elapsed).toBeLessThan(2 * 5 + 100);
  });

  it("second leader is turned away with a reason banner", async () => {
    const second = new Console();
    await second.connect();
    second.client.send({ cmd: "join", role: "leader", room_code: "LIVE01" });
    await second.waitFor((c) => c.state.lastError !== null);
    expect(second.state.lastError).toContain("LEADER_EXISTS");
    second.client.close();
  });
});
