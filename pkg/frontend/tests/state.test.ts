import { describe, expect, it } from "vitest";

import type { GatewayEvent, SceneObjectJson } from "../src/protocol.js";
import { initialState, reduce } from "../src/state.js";

function obj(id: number, version: number): SceneObjectJson {
  return {
    id,
    version,
    category: "wall",
    center: [1, 2, 1.2],
    half_extents: [2, 1.2],
    orientation: [1, 0, 0, 0],
    created_us: 100,
    creator: 1,
  };
}

function upsert(id: number, version: number, color = "#808080"): GatewayEvent {
  return { type: "object_upsert", object: obj(id, version), color, received: true };
}

describe("view state reducer", () => {
  it("applies session_info", () => {
    const s = initialState();
    reduce(s, {
      type: "session_info",
      participant_id: 3,
      role: "follower",
      room_code: "ROOM01",
      epoch_us: 123,
      framing: "plain",
      limit: 20,
    });
    expect(s.role).toBe("follower");
    expect(s.participantId).toBe(3);
    expect(s.limit).toBe(20);
    expect(s.eventLog.length).toBe(1);
  });

  it("upserts idempotently by version", () => {
    const s = initialState();
    reduce(s, upsert(1, 3));
    expect(s.objects.get(1)!.obj.version).toBe(3);
    // duplicate of the same version: no change
    reduce(s, upsert(1, 3, "#ffffff"));
    expect(s.objects.get(1)!.color).toBe("#808080");
    // stale version discarded
    reduce(s, upsert(1, 2, "#ffffff"));
    expect(s.objects.get(1)!.obj.version).toBe(3);
    // newer version applies
    reduce(s, upsert(1, 4, "#ffffff"));
    expect(s.objects.get(1)!.obj.version).toBe(4);
    expect(s.objects.get(1)!.color).toBe("#ffffff");
  });

  it("keeps wall alpha across an object re-upsert", () => {
    const s = initialState();
    reduce(s, upsert(1, 1));
    reduce(s, { type: "wall_alpha", wall_id: 1, alpha: 0.7 });
    expect(s.objects.get(1)!.alpha).toBe(0.7);
    reduce(s, upsert(1, 2));
    expect(s.objects.get(1)!.alpha).toBe(0.7);
  });

  it("tracks peers but never overwrites the predicted self pose", () => {
    const s = initialState();
    reduce(s, {
      type: "session_info",
      participant_id: 3,
      role: "follower",
      room_code: "R",
      epoch_us: 0,
      framing: "plain",
      limit: 20,
    });
    s.self.position = [5, 5, 0];
    reduce(s, { type: "pose", participant_id: 2, position: [1, 1, 0], yaw: 0.5 });
    reduce(s, { type: "pose", participant_id: 3, position: [9, 9, 0], yaw: 0 });
    expect(s.peers.get(2)!.position).toEqual([1, 1, 0]);
    expect(s.peers.has(3)).toBe(false);
    expect(s.self.position).toEqual([5, 5, 0]);
  });

  it("records cues and expires them", () => {
    const s = initialState();
    reduce(s, { type: "sound_cue", wall_id: 7, azimuth_rad: 1.57 }, 1000);
    expect(s.cues.length).toBe(1);
    reduce(s, { type: "sound_cue", wall_id: 8, azimuth_rad: -1.0 }, 5000);
    expect(s.cues.map((c) => c.wallId)).toEqual([8]);
  });

  it("formats errors with the session limit", () => {
    const s = initialState();
    reduce(s, { type: "error", reason: "SESSION_FULL", limit: 20 });
    expect(s.lastError).toBe("SESSION_FULL (limit 20)");
  });
});
