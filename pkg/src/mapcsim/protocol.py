"""Length-prefixed JSON protocol exposing the environment to external
agents over a local stream socket or stdio.

Framing: a 4-byte big-endian unsigned length followed by that many bytes
of UTF-8 JSON. Requests and replies:

    {"cmd": "reset", "seed": <u64>}
        -> {"obs": [f64 x 3N], "mask": [0|1 x Z], "n": N, "z": Z}
    {"cmd": "step", "action": <u32>}
        -> {"obs": [...], "mask": [...], "reward": f64,
            "terminated": bool, "truncated": bool, "info": {...}}
    {"cmd": "close"}
        -> {"ok": true}

Failures are replied as {"error": <code>, "msg": <text>} and leave the
environment state unchanged. Floats are rendered in full (round-trip)
precision. One connection owns one environment instance; commands on a
connection are handled strictly in order.
"""

from __future__ import annotations

import json
import os
import socket
import struct
import threading

from .config import ScenarioConfig
from .env import MapcEnv, MaskedActionError

_HEADER = struct.Struct(">I")
MAX_MESSAGE = 64 * 1024 * 1024


class ProtocolError(RuntimeError):
    def __init__(self, code: str, msg: str):
        super().__init__(f"{code}: {msg}")
        self.code = code


def _read_exact(read, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = read(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def read_message(read) -> dict | None:
    """Read one framed JSON message; None on clean EOF."""
    header = _read_exact(read, _HEADER.size)
    if header is None:
        return None
    (length,) = _HEADER.unpack(header)
    if length > MAX_MESSAGE:
        raise ProtocolError("oversized", f"message of {length} bytes refused")
    body = _read_exact(read, length)
    if body is None:
        return None
    return json.loads(body.decode("utf-8"))


def write_message(write, doc: dict) -> None:
    body = json.dumps(doc, separators=(",", ":")).encode("utf-8")
    write(_HEADER.pack(len(body)) + body)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


class EnvSession:
    """Handles the command stream for one environment instance."""

    def __init__(self, scenario: ScenarioConfig):
        self.env = MapcEnv(scenario)
        self._was_reset = False

    def handle(self, msg: dict) -> tuple[dict, bool]:
        """Returns (reply, keep_going)."""
        if not isinstance(msg, dict) or "cmd" not in msg:
            return {"error": "bad_request", "msg": "expected an object with a 'cmd' field"}, True
        cmd = msg["cmd"]
        if cmd == "close":
            return {"ok": True}, False
        if cmd == "reset":
            if "seed" not in msg:
                return {"error": "bad_request", "msg": "reset requires a seed"}, True
            try:
                obs, mask = self.env.reset(int(msg["seed"]))
            except Exception as exc:  # scenario construction can fail
                return {"error": "reset_failed", "msg": str(exc)}, True
            self._was_reset = True
            return {
                "obs": obs.tolist(),
                "mask": mask.astype(int).tolist(),
                "n": self.env.sta_count,
                "z": self.env.action_count,
            }, True
        if cmd == "step":
            if not self._was_reset:
                return {"error": "not_reset", "msg": "reset before stepping"}, True
            if "action" not in msg:
                return {"error": "bad_request", "msg": "step requires an action"}, True
            try:
                step = self.env.step(int(msg["action"]))
            except MaskedActionError as exc:
                return {"error": "masked_action", "msg": str(exc)}, True
            except RuntimeError as exc:
                return {"error": "episode_over", "msg": str(exc)}, True
            return {
                "obs": step.observation.tolist(),
                "mask": step.mask.astype(int).tolist(),
                "reward": float(step.reward),
                "terminated": bool(step.terminated),
                "truncated": bool(step.truncated),
                "info": _jsonable(step.info),
            }, True
        return {"error": "bad_request", "msg": f"unknown command {cmd!r}"}, True


def serve_connection(scenario: ScenarioConfig, read, write) -> None:
    session = EnvSession(scenario)
    while True:
        msg = read_message(read)
        if msg is None:
            return
        reply, keep_going = session.handle(msg)
        write_message(write, reply)
        if not keep_going:
            return


class EnvServer:
    """Unix-socket server; every accepted connection gets its own
    environment instance on its own thread."""

    def __init__(self, scenario: ScenarioConfig, socket_path: str):
        self.scenario = scenario
        self.socket_path = socket_path
        self._sock: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._stopping = threading.Event()

    def __enter__(self) -> "EnvServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    def start(self) -> None:
        if os.path.exists(self.socket_path):
            os.unlink(self.socket_path)
        self._sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        self._sock.bind(self.socket_path)
        self._sock.listen()

    def serve_forever(self) -> None:
        assert self._sock is not None, "start() first"
        while not self._stopping.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return  # socket closed
            t = threading.Thread(target=self._serve_client, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def serve_in_background(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, daemon=True)
        t.start()
        return t

    def _serve_client(self, conn: socket.socket) -> None:
        with conn:
            serve_connection(self.scenario, conn.recv, conn.sendall)

    def stop(self) -> None:
        self._stopping.set()
        if self._sock is not None:
            self._sock.close()
            self._sock = None
        if os.path.exists(self.socket_path):
            os.unlink(self.socket_path)


def serve_stdio(scenario: ScenarioConfig) -> None:
    import sys

    def write(data: bytes) -> None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()

    serve_connection(scenario, sys.stdin.buffer.read, write)


class EnvClient:
    """Blocking client for one environment connection."""

    def __init__(self, socket_path: str):
        self._sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        self._sock.connect(socket_path)

    def _roundtrip(self, doc: dict) -> dict:
        write_message(self._sock.sendall, doc)
        reply = read_message(self._sock.recv)
        if reply is None:
            raise ProtocolError("closed", "server closed the connection")
        if "error" in reply:
            raise ProtocolError(reply["error"], reply.get("msg", ""))
        return reply

    def reset(self, seed: int) -> dict:
        return self._roundtrip({"cmd": "reset", "seed": seed})

    def step(self, action: int) -> dict:
        return self._roundtrip({"cmd": "step", "action": action})

    def close(self) -> None:
        try:
            self._roundtrip({"cmd": "close"})
        finally:
            self._sock.close()
