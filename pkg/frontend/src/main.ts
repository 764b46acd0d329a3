// Console bootstrap: join a session from URL parameters, steer the avatar,
// operate the cut-out window and mini-map, and watch peers live.

import { Steering, STEER_INTERVAL_MS } from "./input.js";
import type { MapConfig } from "./projection.js";
import { GatewayClient, gatewayUrl } from "./protocol.js";
import { drawMain, drawMinimap, XrayView } from "./render.js";
import { initialState, reduce } from "./state.js";

const DEFAULT_WORLD = `# two rooms joined by a doorway
room alpha 0 0 0 5x4x2.6
door E 1.5 1.0 2.0
platform 1.5 1.2 0.75 0.3 0.2 0
platform 3.5 2.8 0.75 0.9 0.5 0
room beta 5 0 0 5x4x2.6
door W 1.5 1.0 2.0
platform 7.5 2.0 0.75 0.3 0.2 0.6
`;

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function params(): URLSearchParams {
  return new URLSearchParams(window.location.search);
}

function main(): void {
  const state = initialState();
  const mainCanvas = el<HTMLCanvasElement>("main-view");
  const miniCanvas = el<HTMLCanvasElement>("mini-map");
  const statusLine = el<HTMLDivElement>("status");
  const logList = el<HTMLUListElement>("event-log");

  const gatewayInput = el<HTMLInputElement>("gateway");
  gatewayInput.value = params().get("gateway") ?? window.location.host;
  const roomInput = el<HTMLInputElement>("room");
  roomInput.value = params().get("room") ?? "ROOM01";
  const roleSelect = el<HTMLSelectElement>("role");
  roleSelect.value = params().get("role") ?? "follower";
  const worldText = el<HTMLTextAreaElement>("world");
  worldText.value = DEFAULT_WORLD;

  const xray: XrayView = { enabled: false, halfSize: 0.4, gazeMode: "eye", gaze: [1, 0] };
  const mapCfg: MapConfig = { cameraHeight: 10, fovDeg: 60, mode: "track_up" };

  let client: GatewayClient | null = null;
  const steering = new Steering();
  steering.attach(window as any);

  function renderLog(): void {
    logList.innerHTML = "";
    for (const line of state.eventLog.slice(-12).reverse()) {
      const li = document.createElement("li");
      li.textContent = line;
      logList.appendChild(li);
    }
  }

  function renderStatus(): void {
    if (state.lastError) {
      statusLine.textContent = `error: ${state.lastError}`;
      statusLine.className = "status error";
      return;
    }
    if (state.participantId === null) {
      statusLine.textContent = "not joined";
      statusLine.className = "status";
      return;
    }
    const m = state.metrics;
    statusLine.className = "status ok";
    statusLine.textContent =
      `${state.role} #${state.participantId} in ${state.roomCode} | ` +
      `objects ${state.objects.size}, peers ${state.peers.size}` +
      (m ? ` | rx ${m.rxBytes} B / tx ${m.txBytes} B` : "");
  }

  el<HTMLButtonElement>("join").onclick = () => {
    if (client) return;
    const url = gatewayUrl(gatewayInput.value);
    const socket = new WebSocket(url);
    client = new GatewayClient(
      socket as any,
      (ev) => {
        reduce(state, ev);
        renderLog();
        renderStatus();
      },
      () => {
        client = null;
        state.lastError = "connection closed";
        renderStatus();
      },
    );
    socket.addEventListener("open", () => {
      client!.send({
        cmd: "join",
        role: roleSelect.value === "leader" ? "leader" : "follower",
        room_code: roomInput.value.trim().toUpperCase(),
      });
    });
  };

  el<HTMLButtonElement>("publish").onclick = () => {
    client?.send({ cmd: "publish_room", spec: worldText.value });
  };
  el<HTMLSelectElement>("update-mode").onchange = (e) => {
    const mode = (e.target as HTMLSelectElement).value === "manual" ? "manual" : "auto";
    client?.send({ cmd: "toggle_update", mode });
  };
  el<HTMLButtonElement>("trigger").onclick = () => {
    client?.send({ cmd: "trigger_update" });
  };

  el<HTMLInputElement>("xray-on").onchange = (e) => {
    xray.enabled = (e.target as HTMLInputElement).checked;
  };
  el<HTMLInputElement>("xray-size").oninput = (e) => {
    xray.halfSize = Number((e.target as HTMLInputElement).value);
  };
  el<HTMLSelectElement>("gaze-mode").onchange = (e) => {
    xray.gazeMode = (e.target as HTMLSelectElement).value === "head" ? "head" : "eye";
  };
  el<HTMLInputElement>("cam-height").oninput = (e) => {
    mapCfg.cameraHeight = Number((e.target as HTMLInputElement).value);
  };
  el<HTMLInputElement>("map-fov").oninput = (e) => {
    mapCfg.fovDeg = Number((e.target as HTMLInputElement).value);
  };
  el<HTMLSelectElement>("map-mode").onchange = (e) => {
    mapCfg.mode = (e.target as HTMLSelectElement).value === "north_up" ? "north_up" : "track_up";
  };

  // pointer-simulated gaze: the window follows the cursor in eye mode
  mainCanvas.addEventListener("mousemove", (e) => {
    const rect = mainCanvas.getBoundingClientRect();
    const mx = e.clientX - rect.left - mainCanvas.width / 2;
    const my = -(e.clientY - rect.top - mainCanvas.height / 2);
    const len = Math.hypot(mx, my);
    if (len > 1) xray.gaze = [mx / len, my / len];
  });

  // steering loop: client-side prediction plus at most one move per tick
  setInterval(() => {
    const sample = steering.sample(STEER_INTERVAL_MS / 1000);
    if (!sample.moved) return;
    state.self.position = [
      state.self.position[0] + sample.dx,
      state.self.position[1] + sample.dy,
      state.self.position[2],
    ];
    state.self.yaw = sample.yaw;
    client?.send({ cmd: "move", dx: sample.dx, dy: sample.dy, yaw: sample.yaw });
  }, STEER_INTERVAL_MS);

  function frame(): void {
    if (xray.gazeMode === "head") {
      xray.gaze = [Math.cos(state.self.yaw), Math.sin(state.self.yaw)];
    }
    drawMain(mainCanvas, state, xray);
    drawMinimap(miniCanvas, state, mapCfg);
    requestAnimationFrame(frame);
  }
  renderStatus();
  requestAnimationFrame(frame);
}

main();
