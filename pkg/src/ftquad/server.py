"""Live telemetry/steering server.

Runs one environment with a loaded policy+estimator at real-time 50 Hz,
broadcasts JSON state messages at 25 Hz over a websocket, and applies
schema-validated control messages (velocity commands, fault injection,
pause/resume/reset) at control-step boundaries. The first connected client
steers; later clients are read-only. Static console assets are served from
the same port.
"""

from __future__ import annotations

import asyncio
import json
import os
import time
from dataclasses import replace

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, HTMLResponse
from fastapi.staticfiles import StaticFiles

from . import faults
from .env import CONTROL_DT, EnvConfig, QuadrupedVecEnv
from .femnet import history_flatten, history_push, sigmoid

SCHEMA_VERSION = 1
BROADCAST_EVERY = 2  # every other control step -> 25 Hz
CLIENT_GRACE_S = 5.0

COMMAND_BOUNDS = ((-1.0, 1.0), (-0.5, 0.5), (-1.0, 1.0))


class ControlError(ValueError):
    pass


class SimSession:
    """Single-robot session stepped by the serve loop; no network inside."""

    def __init__(self, agent, env_cfg: EnvConfig | None = None, seed: int = 0):
        cfg = env_cfg or EnvConfig()
        cfg = replace(
            cfg,
            n_envs=1,
            seed=seed,
            p_fault=0.0,
            terrain_curriculum=False,
            fault_curriculum=False,
        )
        self.agent = agent
        self.env = QuadrupedVecEnv(cfg)
        self.obs, _ = self.env.reset()
        self.env.command[:] = 0.0
        self.history = np.zeros(
            (1, agent.femnet.history_frames, agent.obs_dim), dtype=np.float32
        )
        self.history = history_push(self.history, self.obs)
        self.paused = False
        self.tick = 0
        self._last_reward = 0.0
        self._last_f_est = np.zeros(12)

    def apply_control(self, msg: dict) -> dict:
        """Validate and apply one control message; raises ControlError."""
        if not isinstance(msg, dict) or "type" not in msg:
            raise ControlError("message must be an object with a 'type' field")
        mtype = msg["type"]
        if mtype == "command":
            cmd = []
            for key, (lo, hi) in zip(("vx", "vy", "wz"), COMMAND_BOUNDS):
                try:
                    v = float(msg.get(key, 0.0))
                except (TypeError, ValueError):
                    raise ControlError(f"{key} must be a number")
                if not lo <= v <= hi:
                    raise ControlError(f"{key}={v} outside [{lo}, {hi}]")
                cmd.append(v)
            self.env.command[0] = cmd
        elif mtype == "fault":
            joint = msg.get("joint")
            if not isinstance(joint, int) or not 0 <= joint < 12:
                raise ControlError("joint must be an integer in [0, 11]")
            kind = msg.get("kind", faults.LOCKED)
            if kind not in (faults.LOCKED, faults.WEAKENED):
                raise ControlError(f"unknown fault kind {kind!r}")
            q_cen = msg.get("q_cen")
            if q_cen is None:
                q_cen = float(self.env.model.q_def[joint])
            spec = faults.FaultSpec(
                faulty=True,
                joint_index=joint,
                kind=kind,
                q_cen=float(q_cen),
                k_tau=float(msg.get("k_tau", 0.0)),
            )
            self.env.set_fault(0, spec)
        elif mtype == "clear_fault":
            self.env.set_fault(0, faults.NO_FAULT)
        elif mtype == "pause":
            self.paused = True
        elif mtype == "resume":
            self.paused = False
        elif mtype == "reset":
            cmd = self.env.command[0].copy()
            fault_spec = self.env.fault_spec(0)
            self.obs, _ = self.env.reset()
            self.env.command[0] = cmd
            self.env.set_fault(0, fault_spec)
            self.history[:] = 0.0
            self.history = history_push(self.history, self.obs)
        else:
            raise ControlError(f"unknown message type {mtype!r}")
        return {"v": SCHEMA_VERSION, "type": "ack", "applied": mtype}

    def step(self) -> None:
        """Advance one 50 Hz control step (no-op while paused)."""
        if self.paused:
            return
        hist_flat = history_flatten(self.history)
        action, fem_out = self.agent.act_inference(self.obs, hist_flat)
        self._last_f_est = sigmoid(fem_out.f_logits)[0]
        obs, _, reward, done, info = self.env.step(action)
        self._last_reward = float(reward[0])
        if done[0]:
            self.history[:] = 0.0
        self.obs = obs
        self.history = history_push(self.history, self.obs)
        self.tick += 1

    def state_message(self) -> dict:
        env = self.env
        st = env.state
        v_body = st.linear_velocity_body()[0]
        return {
            "v": SCHEMA_VERSION,
            "type": "state",
            "t": round(self.tick * CONTROL_DT, 6),
            "base_position": [round(float(v), 5) for v in st.base_position[0]],
            "base_orientation": [round(float(v), 6) for v in st.base_orientation[0]],
            "q": [round(float(v), 5) for v in st.q[0]],
            "contacts": st.foot_contact[0].astype(int).tolist(),
            "commanded": [round(float(v), 4) for v in env.command[0]],
            "actual": [round(float(v), 4) for v in v_body],
            "f_true": env.fault_matrix()[0].astype(int).tolist(),
            "f_est": [round(float(p), 4) for p in self._last_f_est],
            "reward": round(self._last_reward, 6),
            "paused": self.paused,
        }


def default_static_dir() -> str | None:
    """frontend/dist at the repo root, when built."""
    here = os.path.dirname(os.path.abspath(__file__))
    for up in (os.path.join(here, "..", "..", "frontend", "dist"),):
        cand = os.path.normpath(up)
        if os.path.isdir(cand):
            return cand
    return None


def build_app(session: SimSession, static_dir: str | None = None):
    app = FastAPI()
    clients: list = []
    steering: dict = {"ws": None}
    last_disconnect = {"t": None}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        clients.append(ws)
        if steering["ws"] is None:
            steering["ws"] = ws
        last_disconnect["t"] = None
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps(
                        {"v": SCHEMA_VERSION, "type": "error",
                         "message": "invalid JSON"}))
                    continue
                if steering["ws"] is not ws:
                    await ws.send_text(json.dumps(
                        {"v": SCHEMA_VERSION, "type": "error",
                         "message": "read-only client"}))
                    continue
                try:
                    reply = session.apply_control(msg)
                except ControlError as e:
                    reply = {"v": SCHEMA_VERSION, "type": "error",
                             "message": str(e)}
                await ws.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            pass
        finally:
            if ws in clients:
                clients.remove(ws)
            if steering["ws"] is ws:
                steering["ws"] = clients[0] if clients else None
            if not clients:
                last_disconnect["t"] = time.monotonic()

    async def sim_loop():
        next_t = time.monotonic()
        while True:
            now = time.monotonic()
            if (
                not clients
                and last_disconnect["t"] is not None
                and now - last_disconnect["t"] > CLIENT_GRACE_S
            ):
                session.paused = True
            session.step()
            if session.tick % BROADCAST_EVERY == 0 and clients:
                text = json.dumps(session.state_message())
                for ws in list(clients):
                    try:
                        await ws.send_text(text)
                    except Exception:
                        pass
            next_t += CONTROL_DT
            await asyncio.sleep(max(0.0, next_t - time.monotonic()))

    @app.on_event("startup")
    async def _start():
        app.state.sim_task = asyncio.create_task(sim_loop())

    @app.on_event("shutdown")
    async def _stop():
        app.state.sim_task.cancel()

    if static_dir:
        app.mount("/assets", StaticFiles(directory=static_dir), name="assets")

        @app.get("/")
        async def index():
            return FileResponse(os.path.join(static_dir, "index.html"))
    else:

        @app.get("/")
        async def index_fallback():
            return HTMLResponse(
                "<html><body><h3>ftquad serve</h3>"
                "<p>No console build found; connect to ws://HOST:PORT/ws"
                " for the JSON state stream.</p></body></html>"
            )

    return app


def serve(agent, port: int = 8800, host: str = "127.0.0.1",
          env_cfg: EnvConfig | None = None, static_dir: str | None = None,
          seed: int = 0):
    import uvicorn

    session = SimSession(agent, env_cfg=env_cfg, seed=seed)
    if static_dir is None:
        static_dir = default_static_dir()
    app = build_app(session, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
