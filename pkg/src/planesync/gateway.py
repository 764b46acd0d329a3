"""Browser gateway: a WebSocket bridge speaking line-delimited JSON.

Each connection owns a full native participant (a real UDP endpoint talking
to the relay). Inbound commands are one JSON object per line: join, move,
publish_room, toggle_update, trigger_update. Outbound events mirror session
state: session_info, object_upsert, pose, wall_alpha, sound_cue,
metrics_tick, and error. Browsers cannot open datagram sockets, so this is
their way in.
"""

from __future__ import annotations

import asyncio
import json

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .nav import TransparencyState, UserPose, update_transparency
from .relay import SESSION_LIMITS
from .runtime import AsyncParticipant, JoinError, now_us
from .scene import SceneObject, SceneSnapshot, display_color
from .sync import ObjectApplied, PoseSeen
from .synthesis import InvalidSpec, ScanState, World, parse_world_text, scan_step
from .wire import FramingProfile, Role

METRICS_INTERVAL_S = 1.0


def object_to_json(obj: SceneObject) -> dict:
    return {
        "id": obj.id,
        "version": obj.version,
        "category": obj.category.name.lower(),
        "center": list(obj.center),
        "half_extents": list(obj.half_extents),
        "orientation": list(obj.orientation),
        "created_us": obj.created_us,
        "creator": obj.creator,
    }


class GatewayConnection:
    """State for one browser connection; all sends funnel through a queue so
    concurrent tasks never interleave on the socket."""

    def __init__(self, send_line, relay_addr, framing: FramingProfile, limit_profile: str):
        self._send_line = send_line
        self.relay_addr = relay_addr
        self.framing = framing
        self.limit_profile = limit_profile
        self.participant: AsyncParticipant | None = None
        self.position = (0.0, 0.0, 0.0)
        self.yaw = 0.0
        self.view = SceneSnapshot()
        self.transparency = TransparencyState()
        self.world: World | None = None
        self.scan = ScanState()
        self._tasks: list[asyncio.Task] = []

    async def emit(self, event: dict) -> None:
        await self._send_line(json.dumps(event))

    async def error(self, reason: str, **extra) -> None:
        await self.emit({"type": "error", "reason": reason, **extra})

    # -- command dispatch --------------------------------------------------

    async def handle_line(self, line: str) -> None:
        try:
            doc = json.loads(line)
            cmd = doc["cmd"]
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            await self.error("bad_command", detail=str(exc))
            return
        handler = getattr(self, f"_cmd_{cmd}", None)
        if handler is None:
            await self.error("unknown_command", command=str(cmd))
            return
        try:
            await handler(doc)
        except (KeyError, TypeError, ValueError) as exc:
            await self.error("bad_command", detail=str(exc))

    async def _cmd_join(self, doc: dict) -> None:
        if self.participant is not None:
            await self.error("already_joined")
            return
        role = Role.LEADER if str(doc["role"]).lower() == "leader" else Role.FOLLOWER
        room_code = str(doc["room_code"])
        participant = AsyncParticipant(self.relay_addr, role, room_code, self.framing)
        await participant.open()
        try:
            pid = await participant.join(timeout=5.0)
        except JoinError as exc:
            extra = {}
            if getattr(exc.reason, "name", "") == "SESSION_FULL":
                extra["limit"] = SESSION_LIMITS[self.limit_profile]
            await self.error(getattr(exc.reason, "name", str(exc.reason)), **extra)
            participant.close()
            return
        except TimeoutError:
            await self.error("relay_unreachable")
            participant.close()
            return
        self.participant = participant
        await participant.calibrate()
        await self.emit(
            {
                "type": "session_info",
                "participant_id": pid,
                "role": role.name.lower(),
                "room_code": room_code,
                "epoch_us": participant.node.epoch_us,
                "framing": self.framing.name.lower(),
                "limit": SESSION_LIMITS[self.limit_profile],
            }
        )
        self._tasks.append(asyncio.create_task(self._pump_events()))
        self._tasks.append(asyncio.create_task(self._metrics_loop()))

    async def _cmd_move(self, doc: dict) -> None:
        if self.participant is None:
            await self.error("not_joined")
            return
        dx, dy = float(doc["dx"]), float(doc["dy"])
        self.yaw = float(doc["yaw"])
        self.position = (self.position[0] + dx, self.position[1] + dy, self.position[2])
        self.participant.send_pose(self.position, self.yaw)
        await self._scan_and_publish()
        await self._nav_update()

    async def _cmd_publish_room(self, doc: dict) -> None:
        if not await self._require_leader():
            return
        try:
            rooms = parse_world_text(str(doc["spec"]))
        except InvalidSpec as exc:
            await self.error("bad_world_spec", detail=str(exc))
            return
        self.world = World(rooms, creator=self.participant.node.pid)
        self.scan.emitted.clear()
        self.scan.last_emit_us = None
        self.scan.trigger_pending = True
        await self._scan_and_publish(force=True)
        await self._nav_update()

    async def _cmd_toggle_update(self, doc: dict) -> None:
        if not await self._require_leader():
            return
        mode = str(doc["mode"]).lower()
        if mode not in ("auto", "manual"):
            await self.error("bad_command", detail=f"unknown update mode {mode!r}")
            return
        self.scan.auto = mode == "auto"

    async def _cmd_trigger_update(self, _doc: dict) -> None:
        if not await self._require_leader():
            return
        self.scan.trigger_pending = True
        await self._scan_and_publish(force=True)

    async def _require_leader(self) -> bool:
        if self.participant is None:
            await self.error("not_joined")
            return False
        if self.participant.node.role is not Role.LEADER:
            await self.error("not_leader")
            return False
        return True

    # -- scanning + nav ------------------------------------------------------

    async def _scan_and_publish(self, force: bool = False) -> None:
        node = self.participant.node if self.participant else None
        if node is None or node.role is not Role.LEADER or self.world is None:
            return
        self.scan.position = self.position
        self.scan.yaw = self.yaw
        if force and not self.scan.auto:
            self.scan.trigger_pending = True
        fresh = scan_step(self.scan, self.world, node.rel_now_us(now_us()))
        if not fresh:
            return
        self.participant.publish(fresh)
        for obj in fresh:
            self.view.upsert(obj)
            await self.emit(
                {
                    "type": "object_upsert",
                    "object": object_to_json(obj),
                    "color": display_color(obj, node.pid),
                    "received": False,
                }
            )

    async def _nav_update(self) -> None:
        before = dict(self.transparency.alphas)
        pose = UserPose(position=self.position, yaw=self.yaw)
        cues = update_transparency(pose, self.view, self.transparency)
        for wall_id, alpha in sorted(self.transparency.alphas.items()):
            if before.get(wall_id) != alpha:
                await self.emit({"type": "wall_alpha", "wall_id": wall_id, "alpha": alpha})
        for cue in cues:
            await self.emit(
                {"type": "sound_cue", "wall_id": cue.wall_id, "azimuth_rad": cue.azimuth_rad}
            )

    # -- background pumps ------------------------------------------------------

    async def _pump_events(self) -> None:
        node = self.participant.node
        while True:
            ev = await self.participant.events.get()
            if isinstance(ev, ObjectApplied):
                self.view.upsert(ev.obj)
                await self.emit(
                    {
                        "type": "object_upsert",
                        "object": object_to_json(ev.obj),
                        "color": display_color(ev.obj, node.pid),
                        "received": ev.obj.creator != node.pid,
                    }
                )
                await self._nav_update()
            elif isinstance(ev, PoseSeen):
                await self.emit(
                    {
                        "type": "pose",
                        "participant_id": ev.participant_id,
                        "position": list(ev.position),
                        "yaw": ev.yaw,
                    }
                )

    async def _metrics_loop(self) -> None:
        node = self.participant.node
        while True:
            await asyncio.sleep(METRICS_INTERVAL_S)
            await self.emit(
                {
                    "type": "metrics_tick",
                    "rx_datagrams": node.rx_datagrams,
                    "rx_bytes": node.rx_bytes,
                    "tx_datagrams": node.tx_datagrams,
                    "tx_bytes": node.tx_bytes,
                    "objects": len(self.view.objects),
                }
            )

    def close(self) -> None:
        for t in self._tasks:
            t.cancel()
        if self.participant is not None:
            self.participant.close()


def make_gateway_app(
    relay_addr: tuple[str, int],
    framing: FramingProfile,
    limit_profile: str,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="scene relay gateway")

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        out_queue: asyncio.Queue[str] = asyncio.Queue()

        async def send_line(line: str) -> None:
            await out_queue.put(line + "\n")

        async def sender() -> None:
            while True:
                await websocket.send_text(await out_queue.get())

        conn = GatewayConnection(send_line, relay_addr, framing, limit_profile)
        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await websocket.receive_text()
                for line in text.splitlines():
                    if line.strip():
                        await conn.handle_line(line)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            conn.close()

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
