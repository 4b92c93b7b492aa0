"""IoT REST gateway: per-robot command queues, result store, HTTP front end.

The store is the single source of truth; the HTTP server and the in-process
client are two doors into it. Robots pull commands (polling), execute them,
and post results back; the round-trip cost of that polling is exactly what
the latency harness measures.
"""

from __future__ import annotations

import json
import threading
import time as _wall
from collections import deque
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Callable, Optional
from urllib.parse import parse_qs, urlparse

from .behaviors import CMD_READ_TOUCH, COMMAND_CODES

ACK_BYTE = b"\xff"
DEFAULT_PORT = 8080
PORT_ENV_VAR = "VESTBED_PORT"


class GatewayError(Exception):
    pass


class UnknownCode(GatewayError):
    pass


class UnknownSeq(GatewayError):
    pass


class DuplicateResult(GatewayError):
    pass


class NotFetched(GatewayError):
    pass


class GatewayUnreachable(GatewayError):
    pass


class RoundTripTimeout(GatewayError):
    pass


@dataclass
class CommandEnvelope:
    robot_id: str
    seq: int
    code: int
    args: Any = None
    issued_at: float = 0.0
    fetched_at: Optional[float] = None
    completed_at: Optional[float] = None

    def wire(self) -> dict:
        return {"robot": self.robot_id, "seq": self.seq,
                "code": self.code, "args": self.args}


@dataclass
class _RobotState:
    next_seq: int = 0
    queue: deque = field(default_factory=deque)          # unfetched envelopes
    envelopes: dict = field(default_factory=dict)        # seq -> envelope
    results: dict = field(default_factory=dict)          # seq -> data


class GatewayStore:
    """In-memory gateway state, safe to share between HTTP threads and the sim."""

    def __init__(self, time_fn: Callable[[], float] = _wall.time,
                 journal_dir: Optional[str] = None) -> None:
        self._time_fn = time_fn
        self._robots: dict[str, _RobotState] = {}
        self._lock = threading.RLock()
        self._journal_dir = Path(journal_dir) if journal_dir else None
        if self._journal_dir:
            self._journal_dir.mkdir(parents=True, exist_ok=True)

    def _robot(self, robot_id: str) -> _RobotState:
        if robot_id not in self._robots:
            self._robots[robot_id] = _RobotState()
        return self._robots[robot_id]

    def _journal(self, robot_id: str, record: dict) -> None:
        if self._journal_dir is None:
            return
        path = self._journal_dir / f"{robot_id}.jsonl"
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def robot_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._robots)

    def post_command(self, robot_id: str, code: int, args: Any = None) -> int:
        if code not in COMMAND_CODES:
            raise UnknownCode(f"command code {code} not in registry")
        with self._lock:
            state = self._robot(robot_id)
            env = CommandEnvelope(robot_id, state.next_seq, code, args,
                                  issued_at=self._time_fn())
            state.next_seq += 1
            state.queue.append(env)
            state.envelopes[env.seq] = env
            self._journal(robot_id, {"op": "command", "seq": env.seq,
                                     "code": code, "args": args,
                                     "at": env.issued_at})
            return env.seq

    def read_touch(self, robot_id: str) -> tuple[bytes, int]:
        """The single-purpose endpoint: queue a read-touch command, ack 0xFF.

        Returns (ack byte, assigned seq); HTTP carries the seq as a header so
        the one-byte body stays bit-exact.
        """
        seq = self.post_command(robot_id, CMD_READ_TOUCH)
        return ACK_BYTE, seq

    def get_command(self, robot_id: str) -> Optional[dict]:
        with self._lock:
            state = self._robot(robot_id)  # robots self-register on first poll
            if not state.queue:
                return None
            env = state.queue.popleft()
            env.fetched_at = self._time_fn()
            self._journal(robot_id, {"op": "fetch", "seq": env.seq,
                                     "at": env.fetched_at})
            return env.wire()

    def set_data(self, robot_id: str, seq: int, data: Any) -> None:
        with self._lock:
            state = self._robots.get(robot_id)
            env = state.envelopes.get(seq) if state else None
            if env is None:
                raise UnknownSeq(f"{robot_id} seq {seq} was never issued")
            if env.fetched_at is None:
                raise NotFetched(f"{robot_id} seq {seq} was not fetched")
            if seq in state.results:
                raise DuplicateResult(f"{robot_id} seq {seq} already has a result")
            env.completed_at = self._time_fn()
            state.results[seq] = data
            self._journal(robot_id, {"op": "data", "seq": seq, "data": data,
                                     "at": env.completed_at})

    def get_data(self, robot_id: str, seq: int) -> dict:
        with self._lock:
            state = self._robots.get(robot_id)
            env = state.envelopes.get(seq) if state else None
            if env is None:
                raise UnknownSeq(f"{robot_id} seq {seq} was never issued")
            if seq not in state.results:
                return {"status": "pending", "fetched": env.fetched_at is not None}
            return {"status": "complete", "data": state.results[seq],
                    "issued_at": env.issued_at, "fetched_at": env.fetched_at,
                    "completed_at": env.completed_at}

    def envelope(self, robot_id: str, seq: int) -> CommandEnvelope:
        with self._lock:
            return self._robots[robot_id].envelopes[seq]

    def has_result(self, robot_id: str, seq: int) -> bool:
        with self._lock:
            state = self._robots.get(robot_id)
            return bool(state) and seq in state.results


class InProcessGatewayClient:
    """Robot-side bridge used in virtual-time runs.

    The symmetric delay models the Internet hop: each store access costs one
    delay before (request flight) and one after (response flight), spent as
    virtual time on the simulator clock.
    """

    def __init__(self, store: GatewayStore, sched, delay: float = 0.0) -> None:
        self.store = store
        self.sched = sched
        self.delay = delay
        self.online = True

    def _lag(self) -> None:
        if self.delay > 0:
            self.sched.sleep(self.delay)

    def _check(self) -> None:
        if not self.online:
            raise GatewayUnreachable("simulated outage")

    def get_command(self, robot_id: str) -> Optional[dict]:
        self._check()
        self._lag()
        env = self.store.get_command(robot_id)
        self._lag()
        return env

    def set_data(self, robot_id: str, seq: int, data: Any) -> None:
        self._check()
        self._lag()
        self.store.set_data(robot_id, seq, data)
        self._lag()


class HttpGatewayClient:
    """Robot-side client speaking real HTTP (for realtime demo runs)."""

    def __init__(self, base_url: str, timeout: float = 5.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _request(self, method: str, path: str, body: Optional[dict] = None):
        import urllib.error
        import urllib.request
        data = json.dumps(body).encode() if body is not None else None
        req = urllib.request.Request(self.base_url + path, data=data, method=method)
        if data is not None:
            req.add_header("Content-Type", "application/json")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = resp.read()
                return resp.status, payload
        except (urllib.error.URLError, OSError) as exc:
            raise GatewayUnreachable(str(exc)) from exc

    def get_command(self, robot_id: str) -> Optional[dict]:
        status, payload = self._request("GET", f"/api/getcommand?robot={robot_id}")
        if status == 204 or not payload:
            return None
        return json.loads(payload)

    def set_data(self, robot_id: str, seq: int, data: Any) -> None:
        self._request("POST", "/api/setdata",
                      {"robot": robot_id, "seq": seq, "data": data})


def measure_roundtrip(store: GatewayStore, sched, robot_id: str, code: int,
                      args: Any = None, timeout: float = 10.0) -> float:
    """Issue one command and run the sim until its result lands.

    Returns completed_at - issued_at in virtual seconds.
    """
    seq = store.post_command(robot_id, code, args)
    deadline = sched.now + timeout
    while not store.has_result(robot_id, seq):
        if sched.now > deadline or not sched.step():
            raise RoundTripTimeout(f"code {code} seq {seq}")
    env = store.envelope(robot_id, seq)
    return env.completed_at - env.issued_at


# -- HTTP front end ----------------------------------------------------------


def make_handler(store: GatewayStore, delay: float = 0.0):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _delay(self) -> None:
            if delay > 0:
                _wall.sleep(delay)

        def _send_json(self, status: int, obj: Any) -> None:
            body = json.dumps(obj).encode()
            self._delay()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _send_bytes(self, payload: bytes, seq: Optional[int] = None) -> None:
            self._delay()
            self.send_response(200)
            self.send_header("Content-Type", "application/octet-stream")
            self.send_header("Content-Length", str(len(payload)))
            self.send_header("Access-Control-Allow-Origin", "*")
            if seq is not None:
                self.send_header("X-Command-Seq", str(seq))
                self.send_header("Access-Control-Expose-Headers", "X-Command-Seq")
            self.end_headers()
            self.wfile.write(payload)

        def _send_empty(self, status: int) -> None:
            self._delay()
            self.send_response(status)
            self.send_header("Content-Length", "0")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length", "0"))
            if length == 0:
                return {}
            return json.loads(self.rfile.read(length))

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            self._delay()
            url = urlparse(self.path)
            query = {k: v[0] for k, v in parse_qs(url.query).items()}
            robot = query.get("robot", "")
            if url.path == "/api/getcommand":
                env = store.get_command(robot)
                if env is None:
                    self._send_empty(204)  # no command waiting
                else:
                    self._send_json(200, env)
            elif url.path == "/api/readtouch":
                ack, seq = store.read_touch(robot)
                self._send_bytes(ack, seq)
            elif url.path == "/api/getdata":
                try:
                    seq = int(query.get("seq", "-1"))
                    self._send_json(200, store.get_data(robot, seq))
                except UnknownSeq as exc:
                    self._send_json(404, {"error": str(exc)})
            elif url.path == "/api/robots":
                self._send_json(200, store.robot_ids())
            else:
                self._send_json(404, {"error": "no such route"})

        def do_POST(self):
            self._delay()
            url = urlparse(self.path)
            try:
                body = self._read_body()
            except (ValueError, json.JSONDecodeError):
                self._send_json(400, {"error": "bad JSON body"})
                return
            if url.path == "/api/command":
                try:
                    seq = store.post_command(body["robot"], body["code"],
                                             body.get("args"))
                    self._send_json(200, {"seq": seq})
                except UnknownCode as exc:
                    self._send_json(400, {"error": str(exc)})
                except KeyError as exc:
                    self._send_json(400, {"error": f"missing field {exc}"})
            elif url.path == "/api/setdata":
                try:
                    store.set_data(body["robot"], body["seq"], body.get("data"))
                    self._send_json(200, {"status": "ok"})
                except UnknownSeq as exc:
                    self._send_json(404, {"error": str(exc)})
                except (DuplicateResult, NotFetched) as exc:
                    self._send_json(409, {"error": str(exc)})
                except KeyError as exc:
                    self._send_json(400, {"error": f"missing field {exc}"})
            else:
                self._send_json(404, {"error": "no such route"})

    return Handler


class GatewayServer:
    """Threaded HTTP server wrapping a GatewayStore."""

    def __init__(self, store: GatewayStore, port: int = DEFAULT_PORT,
                 delay: float = 0.0, host: str = "127.0.0.1") -> None:
        self.store = store
        self.httpd = ThreadingHTTPServer((host, port), make_handler(store, delay))
        self.port = self.httpd.server_address[1]
        self._thread: Optional[threading.Thread] = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)
