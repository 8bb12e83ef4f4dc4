"""Debug sessions: command application, snapshots and the state view.

A session owns one controlled state plus a whole-state undo/redo ring.
The ring is a UI convenience that restores an earlier session state
wholesale; it is unrelated to the semantic backward steps, which go
through the controller and respect causality.

Views are plain JSON-ready dictionaries derived deterministically from
the session (processes sorted by pid, bindings by name, mailbox by id),
versioned by SCHEMA_VERSION.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import controller as ct
from . import expressions as ex
from . import pretty as pp
from . import causality
from .reversible import (
    RecH, SelfH, SendH, SeqH, SpawnH, _fwd_candidates_for, hist_items,
    to_reversible,
)
from .syntax import Call, Lit, ParseError, is_value, parse_expr
from .syntax import parse_program
from .systems import (
    RecA, Scheduler, SendA, SpawnA, action_to_json, init_system,
    probe_process, receive_candidates, run_trace,
)

SCHEMA_VERSION = 1

MODE_USER = "user"
MODE_REPLAY = "replay"

RING_DEPTH = 100


class CommandError(Exception):
    pass


class UnknownSessionError(Exception):
    pass


def parse_entry(text):
    """Entry point syntax: ``name(arg, ...)`` with literal arguments,
    or ``name/0``."""
    text = text.strip()
    if "/" in text and "(" not in text:
        name, _, arity = text.partition("/")
        if arity != "0":
            raise CommandError("name/arity entries must have arity 0; "
                               "pass arguments as name(arg1, ...)")
        return name, ()
    try:
        call = parse_expr(text if "(" in text else text + "()")
    except ParseError as exc:
        raise CommandError(f"bad entry point: {exc}") from exc
    if not (isinstance(call, Call) and call.module is None
            and isinstance(call.fn, Lit)):
        raise CommandError("entry point must be a plain function call")
    for a in call.args:
        if not is_value(a):
            raise CommandError("entry arguments must be literal values")
    return call.fn.value.name, tuple(call.args)


@dataclass
class Settings:
    seed: int = 0
    policy: str = "random"
    fuel: int = 100000
    max_steps: int = 100000


@dataclass
class Session:
    id: str
    source: str
    program: object
    entry_name: str
    entry_args: tuple
    mode: str
    settings: Settings
    cs: ct.ControlledState
    attached_log: dict = field(default_factory=dict)
    last_outcome: object = None
    last_error: object = None
    last_detail: object = None
    ring: list = field(default_factory=list)
    ring_pos: int = -1

    def initial_rev(self, log):
        sys0 = init_system(self.program, self.entry_name, self.entry_args)
        return to_reversible(sys0, log)


class SessionManager:
    def __init__(self):
        self._sessions = {}
        self._counter = 0

    def create_session(self, source, entry, log_text=None, settings=None):
        """Parse, set up the initial controlled state and register it."""
        program = parse_program(source)
        name, args = parse_entry(entry)
        settings = settings or Settings()
        log = causality.decode_log(log_text) if log_text else {}
        mode = MODE_REPLAY if log else MODE_USER
        self._counter += 1
        sid = f"s{self._counter}"
        session = Session(
            id=sid, source=source, program=program,
            entry_name=name, entry_args=args, mode=mode, settings=settings,
            cs=ct.ControlledState(system=None), attached_log=log,
        )
        session.cs = ct.ControlledState(system=session.initial_rev(log))
        session.ring = [session.cs]
        session.ring_pos = 0
        self._sessions[sid] = session
        return sid

    def get(self, sid):
        s = self._sessions.get(sid)
        if s is None:
            raise UnknownSessionError(f"no session {sid!r}")
        return s

    def close(self, sid):
        self.get(sid)
        del self._sessions[sid]

    def snapshot(self, sid):
        return state_view(self.get(sid))

    def apply_command(self, sid, text):
        """Run one command; on error the stored state is untouched."""
        session = self.get(sid)
        words = text.split()
        if not words:
            raise CommandError("empty command")
        verb = words[0]
        if verb != "inspect":
            session.last_detail = None
        if verb == "trace":
            _cmd_trace(session, words[1:])
        elif verb == "replay":
            _cmd_replay(session, words[1:])
        elif verb == "reset":
            _cmd_reset(session)
        elif verb == "undo":
            _cmd_undo(session)
        elif verb == "redo":
            _cmd_redo(session)
        elif verb == "inspect":
            _cmd_inspect(session, words[1:])
        else:
            _cmd_request(session, text)
        return state_view(session)


def _remember(session, cs):
    session.ring = session.ring[: session.ring_pos + 1]
    session.ring.append(cs)
    if len(session.ring) > RING_DEPTH:
        session.ring = session.ring[-RING_DEPTH:]
    session.ring_pos = len(session.ring) - 1
    session.cs = cs


def _cmd_request(session, text):
    try:
        requests = ct.parse_requests(text)
    except ct.RequestError as exc:
        raise CommandError(str(exc)) from exc
    _validate_requests(session, requests)
    cs = session.cs
    for req in reversed(requests):
        cs = ct.push_request(cs, req)
    cs, outcome = ct.run_controlled(session.program, cs,
                                    fuel=session.settings.fuel)
    # unsatisfied goals are reported and dropped: later commands should
    # not silently resume them
    cs = ct.ControlledState(system=cs.system, stack=(),
                            trace_out=cs.trace_out, audit=cs.audit)
    session.last_outcome = outcome
    session.last_error = _last_block_reason(cs) if outcome == ct.BLOCKED else None
    _remember(session, cs)


def _validate_requests(session, requests):
    rs = session.cs.system
    known_msgids = set(rs.gamma)
    for events in rs.log.values():
        known_msgids |= {e.msgid for e in events if isinstance(e, (SendA, RecA))}
    known_pids = set(rs.procs)
    for events in rs.log.values():
        known_pids |= {e.pid for e in events if isinstance(e, SpawnA)}
    for proc in rs.procs.values():
        for item in hist_items(proc.hist):
            if isinstance(item, (SendH, RecH)):
                known_msgids.add(item.msgid)
            elif isinstance(item, SpawnH):
                known_pids.add(item.child)
    for req in requests:
        if req.pid not in known_pids:
            raise CommandError(f"unknown process {req.pid}")
        kind = req.goal[0]
        if kind in (ct.GOAL_SEND, ct.GOAL_REC) and req.goal[1] not in known_msgids:
            raise CommandError(f"unknown message id {req.goal[1]}")
        if kind == ct.GOAL_SPAWN and req.goal[1] not in known_pids:
            raise CommandError(f"unknown process {req.goal[1]}")


def _cmd_trace(session, args):
    seed = session.settings.seed
    if args:
        if not args[0].isdigit():
            raise CommandError("trace takes an optional numeric seed")
        seed = int(args[0])
    sys0 = init_system(session.program, session.entry_name, session.entry_args)
    final, log, derivation = run_trace(
        session.program, sys0,
        Scheduler(seed=seed, policy=session.settings.policy),
        max_steps=session.settings.max_steps,
        origin=_origin(session))
    session.attached_log = log
    session.last_outcome = ct.DONE
    session.last_error = None
    # the session state itself is untouched; replay switches to the new log


def _cmd_replay(session, args):
    if args:
        raise CommandError("replay takes no arguments")
    if not session.attached_log:
        raise CommandError("no recorded log; run trace first")
    session.mode = MODE_REPLAY
    session.last_outcome = None
    session.last_error = None
    _remember(session, ct.ControlledState(
        system=session.initial_rev(session.attached_log)))


def _cmd_reset(session):
    log = session.attached_log if session.mode == MODE_REPLAY else {}
    session.last_outcome = None
    session.last_error = None
    _remember(session, ct.ControlledState(system=session.initial_rev(log)))


def _cmd_undo(session):
    if session.ring_pos <= 0:
        raise CommandError("nothing to undo")
    session.ring_pos -= 1
    session.cs = session.ring[session.ring_pos]


def _cmd_redo(session):
    if session.ring_pos + 1 >= len(session.ring):
        raise CommandError("nothing to redo")
    session.ring_pos += 1
    session.cs = session.ring[session.ring_pos]


def _cmd_inspect(session, args):
    """Reveal the full stored snapshot of one history item."""
    from .systems import parse_pid
    if len(args) != 2 or not args[1].isdigit():
        raise CommandError("usage: inspect PID INDEX")
    try:
        pid = parse_pid(args[0])
    except ValueError as exc:
        raise CommandError(str(exc)) from exc
    proc = session.cs.system.procs.get(pid)
    if proc is None:
        raise CommandError(f"unknown process {pid}")
    index = int(args[1])
    items = list(hist_items(proc.hist))
    if index >= len(items):
        raise CommandError(f"{pid} has only {len(items)} history items")
    item = items[index]
    detail = {
        "pid": str(pid),
        "index": index,
        "kind": type(item).__name__.removesuffix("H").lower(),
        "env": [[name, pp.pretty(item.env[name])]
                for name in sorted(item.env)],
        "expr": pp.pretty(item.expr),
        "stack_depth": len(item.stack),
    }
    if isinstance(item, SendH):
        detail.update(id=item.msgid, to=str(item.target),
                      value=pp.pretty(item.value))
    elif isinstance(item, RecH):
        detail.update(id=item.msgid, sender=str(item.sender),
                      value=pp.pretty(item.value))
    elif isinstance(item, SpawnH):
        detail.update(child=str(item.child))
    session.last_detail = detail


def _last_block_reason(cs):
    for entry in reversed(cs.audit):
        if entry[0] == "blocked":
            return entry[1]
    return None


def _origin(session):
    args = ",".join(pp.pretty(a) for a in session.entry_args)
    return f"{session.entry_name}({args})"


# --- views ---

def _history_summary(proc):
    out = []
    for item in hist_items(proc.hist):
        if isinstance(item, SeqH):
            out.append({"kind": "seq"})
        elif isinstance(item, SendH):
            out.append({"kind": "send", "id": item.msgid, "to": str(item.target),
                        "value": pp.pretty(item.value)})
        elif isinstance(item, RecH):
            out.append({"kind": "rec", "id": item.msgid, "from": str(item.sender),
                        "value": pp.pretty(item.value)})
        elif isinstance(item, SpawnH):
            out.append({"kind": "spawn", "pid": str(item.child)})
        elif isinstance(item, SelfH):
            out.append({"kind": "self"})
    return out


def _proc_status(program, rs, proc):
    state, payload = probe_process(program, proc, rs.next_future)
    if state == "done":
        return "terminated", None
    if state == "stuck":
        return "stuck", str(payload)
    if state == "rec":
        pending = rs.log.get(proc.pid, ())
        if pending and isinstance(pending[0], RecA):
            if any(c[1].msgid == pending[0].msgid
                   for c in _fwd_candidates_for(program, rs, proc.pid)
                   if isinstance(c[1], RecA)):
                return "runnable", None
            return "blocked", f"waiting for logged message {pending[0].msgid}"
        _, redex = ex.decompose(proc.expr)
        if receive_candidates(rs.gamma, proc.env, redex.clauses, proc.pid):
            return "runnable", None
        return "blocked", "no matching message in flight"
    return "runnable", None


def _stack_depth(stack):
    return len(stack)


def state_view(session):
    """Serializable projection of the whole session state."""
    rs = session.cs.system
    program = session.program
    processes = []
    for pid in sorted(rs.procs):
        proc = rs.procs[pid]
        status, status_detail = _proc_status(program, rs, proc)
        pos = ex.redex_position(proc.env, proc.expr, proc.stack)
        entry = {
            "pid": str(pid),
            "status": status,
            "line": pos[0] if pos else None,
            "col": pos[1] if pos else None,
            "expr": pp.pretty(proc.expr),
            "bindings": [[name, pp.pretty(proc.env[name])]
                         for name in sorted(proc.env)],
            "stack_depth": _stack_depth(proc.stack),
            "history": _history_summary(proc),
            "log": [action_to_json(e) for e in rs.log.get(pid, ())],
            "output": proc.outbuf,
        }
        if status_detail:
            entry["status_detail"] = status_detail
        processes.append(entry)
    mailbox = [{"id": m.msgid, "from": str(m.sender), "to": str(m.target),
                "value": pp.pretty(m.value)}
               for m in sorted(rs.gamma.values(), key=lambda m: m.msgid)]
    view = {
        "schema": SCHEMA_VERSION,
        "session": session.id,
        "mode": session.mode,
        "entry": _origin(session),
        "outcome": session.last_outcome,
        "error": session.last_error,
        "processes": processes,
        "mailbox": mailbox,
        "requests": [str(r) for r in session.cs.stack],
        "source": session.source,
    }
    if session.attached_log:
        view["attached_log"] = causality.log_to_json(session.attached_log)
    if session.last_detail is not None:
        view["detail"] = session.last_detail
    return view
