import json
import socket
import threading

import pytest

from conftest import program_source
from revdbg.service import DebugServer, DebugService
from revdbg.session import SCHEMA_VERSION


@pytest.fixture
def server():
    srv = DebugServer(port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        self.fh = self.sock.makefile("rwb")
        self.n = 0
        self.hello = json.loads(self.fh.readline())

    def call(self, cmd):
        self.n += 1
        self.fh.write((json.dumps({"id": self.n, "cmd": cmd}) + "\n").encode())
        self.fh.flush()
        reply = json.loads(self.fh.readline())
        assert reply["id"] == self.n
        return reply

    def close(self):
        self.sock.close()


class TestProtocol:
    def test_hello_reports_schema(self, server):
        c = Client(server.port)
        assert c.hello == {"hello": {"schema": SCHEMA_VERSION,
                                     "service": "revdbg"}}
        c.close()

    def test_create_apply_snapshot_close(self, server):
        c = Client(server.port)
        reply = c.call({"op": "create", "source": program_source("stock"),
                        "entry": "main()"})
        view = reply["view"]
        sid = view["session"]
        assert view["mode"] == "user"
        reply = c.call({"op": "apply", "session": sid,
                        "text": "step <0.0.0> 2"})
        assert reply["view"]["outcome"] == "done"
        snap = c.call({"op": "snapshot", "session": sid})["view"]
        assert snap == reply["view"]
        assert c.call({"op": "close", "session": sid}) == {"id": c.n,
                                                           "closed": sid}
        c.close()

    def test_errors_are_reported_not_fatal(self, server):
        c = Client(server.port)
        assert "error" in c.call({"op": "nope"})
        assert "error" in c.call({"op": "snapshot", "session": "s99"})
        reply = c.call({"op": "create", "source": "junk(", "entry": "main()"})
        assert "error" in reply
        # the connection still works afterwards
        reply = c.call({"op": "create", "source": program_source("fact"),
                        "entry": "fact(3)"})
        assert "view" in reply
        c.close()

    def test_replay_session_over_protocol(self, server):
        c = Client(server.port)
        sid = c.call({"op": "create", "source": program_source("stock"),
                      "entry": "main()"})["view"]["session"]
        c.call({"op": "apply", "session": sid, "text": "trace 2"})
        view = c.call({"op": "apply", "session": sid, "text": "replay"})["view"]
        assert view["mode"] == "replay"
        assert view["attached_log"]
        c.close()


class TestServiceDirect:
    def test_bad_cmd_type(self):
        service = DebugService()
        from revdbg.session import CommandError
        with pytest.raises(CommandError):
            service.handle("not an object")
