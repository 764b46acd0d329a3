// Console view state and the reducer applying gateway events.
//
// The object mirror applies upserts idempotently by version, exactly like a
// native follower: stale or duplicate versions never overwrite newer state.

import type { GatewayEvent, SceneObjectJson } from "./protocol.js";

export interface ObjectEntry {
  obj: SceneObjectJson;
  color: string;
  received: boolean;
  alpha: number;
}

export interface PeerPose {
  position: [number, number, number];
  yaw: number;
}

export interface CueFlash {
  wallId: number;
  azimuthRad: number;
  atMs: number;
}

export interface Metrics {
  rxDatagrams: number;
  rxBytes: number;
  txDatagrams: number;
  txBytes: number;
  objects: number;
}

export interface ViewState {
  role: "leader" | "follower" | null;
  roomCode: string | null;
  participantId: number | null;
  epochUs: number;
  limit: number | null;
  framing: string | null;
  objects: Map<number, ObjectEntry>;
  peers: Map<number, PeerPose>;
  self: PeerPose;
  cues: CueFlash[];
  eventLog: string[];
  metrics: Metrics | null;
  lastError: string | null;
}

export function initialState(): ViewState {
  return {
    role: null,
    roomCode: null,
    participantId: null,
    epochUs: 0,
    limit: null,
    framing: null,
    objects: new Map(),
    peers: new Map(),
    self: { position: [0, 0, 0], yaw: 0 },
    cues: [],
    eventLog: [],
    metrics: null,
    lastError: null,
  };
}

const LOG_LIMIT = 200;
const CUE_TTL_MS = 1200;

function log(state: ViewState, line: string): void {
  state.eventLog.push(line);
  if (state.eventLog.length > LOG_LIMIT) state.eventLog.shift();
}

export function reduce(state: ViewState, ev: GatewayEvent, nowMs = Date.now()): ViewState {
  switch (ev.type) {
    case "session_info": {
      state.role = ev.role === "leader" ? "leader" : "follower";
      state.roomCode = ev.room_code;
      state.participantId = ev.participant_id;
      state.epochUs = ev.epoch_us;
      state.limit = ev.limit;
      state.framing = ev.framing;
      state.lastError = null;
      log(state, `joined ${ev.room_code} as ${ev.role} (id ${ev.participant_id})`);
      break;
    }
    case "object_upsert": {
      const existing = state.objects.get(ev.object.id);
      if (existing && ev.object.version <= existing.obj.version) break; // stale
      state.objects.set(ev.object.id, {
        obj: ev.object,
        color: ev.color,
        received: ev.received,
        alpha: existing?.alpha ?? 1.0,
      });
      break;
    }
    case "pose": {
      if (ev.participant_id === state.participantId) break; // self is predicted
      state.peers.set(ev.participant_id, { position: ev.position, yaw: ev.yaw });
      break;
    }
    case "wall_alpha": {
      const entry = state.objects.get(ev.wall_id);
      if (entry) entry.alpha = ev.alpha;
      break;
    }
    case "sound_cue": {
      state.cues.push({ wallId: ev.wall_id, azimuthRad: ev.azimuth_rad, atMs: nowMs });
      state.cues = state.cues.filter((c) => nowMs - c.atMs < CUE_TTL_MS);
      log(state, `cue: wall ${ev.wall_id} at ${(ev.azimuth_rad * 57.2958).toFixed(0)} deg`);
      break;
    }
    case "metrics_tick": {
      state.metrics = {
        rxDatagrams: ev.rx_datagrams,
        rxBytes: ev.rx_bytes,
        txDatagrams: ev.tx_datagrams,
        txBytes: ev.tx_bytes,
        objects: ev.objects,
      };
      break;
    }
    case "error": {
      state.lastError =
        ev.reason + (ev.limit !== undefined ? ` (limit ${ev.limit})` : "") +
        (ev.detail ? `: ${ev.detail}` : "");
      log(state, `error: ${state.lastError}`);
      break;
    }
  }
  return state;
}

export function activeCues(state: ViewState, nowMs = Date.now()): CueFlash[] {
  return state.cues.filter((c) => nowMs - c.atMs < CUE_TTL_MS);
}
