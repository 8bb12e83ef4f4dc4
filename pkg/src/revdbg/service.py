"""Newline-delimited JSON protocol over a local TCP socket.

On connect the server sends a hello line with the schema version.  Each
request is one line ``{"id": n, "cmd": {...}}``; each response is one line
``{"id": n, "view": {...}}`` or ``{"id": n, "error": "..."}``.

Commands:
  {"op": "create", "source": str, "entry": str, "log": str?}  -> view (new session)
  {"op": "apply", "session": sid, "text": "step <0.0.0> 1"}   -> view
  {"op": "snapshot", "session": sid}                          -> view
  {"op": "close", "session": sid}                             -> {"closed": sid}

Commands of one session run strictly one at a time.
"""

from __future__ import annotations

import json
import socketserver
import threading

from .session import (
    CommandError, SCHEMA_VERSION, SessionManager, UnknownSessionError,
)
from .syntax import ParseError
from .reversible import MalformedLogError


class DebugService:
    def __init__(self):
        self.manager = SessionManager()
        self._locks = {}
        self._global = threading.Lock()

    def _lock_for(self, sid):
        with self._global:
            return self._locks.setdefault(sid, threading.Lock())

    def handle(self, cmd):
        if not isinstance(cmd, dict):
            raise CommandError("cmd must be an object")
        op = cmd.get("op")
        if op == "create":
            with self._global:
                sid = self.manager.create_session(
                    cmd.get("source", ""), cmd.get("entry", ""),
                    log_text=cmd.get("log"))
            view = self.manager.snapshot(sid)
            return {"view": view}
        if op == "apply":
            sid = cmd.get("session")
            with self._lock_for(sid):
                return {"view": self.manager.apply_command(sid, cmd.get("text", ""))}
        if op == "snapshot":
            sid = cmd.get("session")
            with self._lock_for(sid):
                return {"view": self.manager.snapshot(sid)}
        if op == "close":
            sid = cmd.get("session")
            with self._lock_for(sid):
                self.manager.close(sid)
            return {"closed": sid}
        raise CommandError(f"unknown op {op!r}")


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        hello = {"hello": {"schema": SCHEMA_VERSION, "service": "revdbg"}}
        self.wfile.write((json.dumps(hello) + "\n").encode())
        for raw in self.rfile:
            raw = raw.strip()
            if not raw:
                continue
            rid = None
            try:
                msg = json.loads(raw)
                rid = msg.get("id")
                result = self.server.service.handle(msg.get("cmd"))
                reply = {"id": rid, **result}
            except (CommandError, UnknownSessionError, ParseError,
                    MalformedLogError, json.JSONDecodeError) as exc:
                reply = {"id": rid, "error": str(exc)}
            self.wfile.write((json.dumps(reply) + "\n").encode())
            self.wfile.flush()


class DebugServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, host="127.0.0.1", port=0):
        super().__init__((host, port), _Handler)
        self.service = DebugService()

    @property
    def port(self):
        return self.server_address[1]


def serve(host="127.0.0.1", port=4715, setup=None):
    """Run the server until interrupted; setup(service) may preload sessions."""
    server = DebugServer(host, port)
    if setup is not None:
        setup(server.service)
    print(f"listening on {host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    finally:
        server.server_close()
