"""Live serve mode: the scenario ticking on a thread, operators on websockets.

Wire protocol (JSON text frames):

  client -> server  {"id": <any>, "type": <command>, "payload": {...}}
      command is one of Pause | Resume | Restart | RemoteStop |
      DefineWorkflow | StartMission | TransitionRoute
  server -> client  {"type": "ack", "id": ..., "ok": bool, "reason": str, ...}
                    {"type": "snapshot", "payload": {...}}

Acks are queued per client and never dropped.  Snapshots come from a single
latest-value slot, so a slow client skips frames instead of lagging behind.
"""
from __future__ import annotations

import asyncio
import json
import threading
import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .runner import ScenarioRunner


class SimThread:
    """Paces the runner at wall speed: one tick every dt / speed seconds."""

    def __init__(self, runner: ScenarioRunner, speed: float = 1.0) -> None:
        if speed <= 0:
            raise ValueError("speed must be > 0")
        self.runner = runner
        self.runner.build_snapshots = True
        self.speed = speed
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True)

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5.0)

    @property
    def finished(self) -> bool:
        return self.runner._finalized is not None

    def _loop(self) -> None:
        interval = self.runner.dt / self.speed
        next_wall = time.monotonic()
        while (not self._stop.is_set()
               and self.runner.world.tick < self.runner.n_ticks):
            self.runner.step_tick()
            next_wall += interval
            delay = next_wall - time.monotonic()
            if delay > 0:
                # cap the sleep so a stop request lands quickly
                self._stop.wait(min(delay, 0.25))
            else:
                # behind schedule: drop the debt instead of bursting
                next_wall = time.monotonic()
        self.runner.finalize()


def create_app(runner: ScenarioRunner, speed: float = 1.0) -> FastAPI:
    sim = SimThread(runner, speed)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        sim.start()
        yield
        sim.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.runner = runner
    app.state.sim = sim

    @app.get("/health")
    async def health() -> dict:
        return {"ok": True, "tick": runner.world.tick,
                "sim_time": runner.world.time, "finished": sim.finished}

    @app.get("/state")
    async def state() -> dict:
        snap = runner.snapshot()
        return snap if snap is not None else {"type": "snapshot",
                                              "payload": None}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        operator = ws.query_params.get("operator", "console")
        loop = asyncio.get_running_loop()
        acks: asyncio.Queue = asyncio.Queue()

        async def sender() -> None:
            last_tick = -1
            while True:
                try:
                    msg = await asyncio.wait_for(acks.get(), timeout=0.05)
                    await ws.send_text(json.dumps(msg))
                    continue
                except asyncio.TimeoutError:
                    pass
                snap = runner.snapshot()
                if snap is not None and snap["payload"]["tick"] != last_tick:
                    last_tick = snap["payload"]["tick"]
                    await ws.send_text(json.dumps(snap))

        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    command = json.loads(text)
                    if not isinstance(command, dict):
                        raise ValueError("frame must be an object")
                except ValueError as exc:
                    await ws.send_text(json.dumps(
                        {"type": "ack", "id": None, "ok": False,
                         "reason": f"bad frame: {exc}"}))
                    continue
                runner.enqueue_console(
                    command, operator,
                    reply=lambda ack: loop.call_soon_threadsafe(
                        acks.put_nowait, ack))
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()

    return app


def serve(runner: ScenarioRunner, host: str = "127.0.0.1", port: int = 8733,
          speed: float = 1.0) -> None:
    """Blocking uvicorn entry used by the CLI."""
    import uvicorn

    uvicorn.run(create_app(runner, speed), host=host, port=port,
                log_level="warning")
