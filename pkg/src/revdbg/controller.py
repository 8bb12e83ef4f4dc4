"""Controlled stepping: a request stack drives the reversible semantics.

The top request names a process, a goal and a direction.  While the
process can move in that direction it is stepped (the request is popped as
soon as a step's satisfied-set contains the goal); when it cannot move,
the blocking dependency is resolved by pushing a sub-request on top:

  * a forward receive whose logged message is not in flight pushes a
    send request for the logged sender;
  * a forward request for a process not yet in the pool pushes a spawn
    request for its logged parent;
  * undoing a send whose message was already consumed pushes an undo
    of the receive on the receiver;
  * undoing a spawn pushes a roll-to-creation of the child, which pops
    by itself once the child's history is empty.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .reversible import (
    MARK_STEP, bwd_step, fwd_step, mark_rec, mark_send, mark_spawn, mark_var,
    SendH, SpawnH, _bwd_candidate_for, _fwd_candidates_for,
)
from .systems import Pid, RecA, SendA, SpawnA, parse_pid


FWD = "fwd"
BWD = "bwd"

GOAL_STEP = "step"
GOAL_SEND = "send"
GOAL_REC = "rec"
GOAL_SPAWN = "spawn"
GOAL_CREATION = "creation"
GOAL_VAR = "var"


class RequestError(Exception):
    pass


@dataclass(frozen=True)
class Request:
    pid: Pid
    goal: tuple      # (kind,) or (kind, detail)
    direction: str

    def mark(self):
        kind = self.goal[0]
        if kind == GOAL_STEP:
            return MARK_STEP
        if kind == GOAL_SEND:
            return mark_send(self.goal[1])
        if kind == GOAL_REC:
            return mark_rec(self.goal[1])
        if kind == GOAL_SPAWN:
            return mark_spawn(self.goal[1])
        if kind == GOAL_VAR:
            return mark_var(self.goal[1])
        return None  # roll-to-creation pops via the empty-history rule

    def __str__(self):
        arrow = "fwd" if self.direction == FWD else "bwd"
        kind = self.goal[0]
        if kind == GOAL_STEP:
            body = "step"
        elif kind == GOAL_CREATION:
            body = "creation"
        else:
            body = f"{kind} {self.goal[1]}"
        return f"{{{self.pid}, {body}, {arrow}}}"


@dataclass(frozen=True)
class ControlledState:
    system: object                 # RevSystem
    stack: tuple = ()              # Requests, top first
    trace_out: tuple = ()          # (pid, action, direction) of steps taken
    audit: tuple = ()              # ('push'|'pop'|'step', payload) events


DONE = "done"
BLOCKED = "blocked"
FUEL = "fuel"


def satisfies(req, pid, action, sat, direction):
    """Whether an uncontrolled transition discharges the request."""
    if req.pid != pid or req.direction != direction:
        return False
    mark = req.mark()
    return mark is not None and mark in sat


def sender_of(log, msgid):
    """Pid whose pending log still carries send(msgid); None when absent."""
    for pid in sorted(log):
        for ev in log[pid]:
            if isinstance(ev, SendA) and ev.msgid == msgid:
                return pid
    return None


def parent_of(log, pid):
    """Pid whose pending log still carries spawn(pid); None when absent."""
    for q in sorted(log):
        for ev in log[q]:
            if isinstance(ev, SpawnA) and ev.pid == pid:
                return q
    return None


def _push(cs, req, reason):
    if req in cs.stack:
        raise _Blocked(f"circular dependency on {req}")
    return replace(cs, stack=(req,) + cs.stack,
                   audit=cs.audit + (("push", str(req), reason),))


class _Blocked(Exception):
    pass


def controlled_step(program, cs):
    """One rewrite of the controlled semantics.

    Returns (new state, what-happened) where what-happened is 'step',
    'push', 'pop', 'done' or 'blocked'.
    """
    if not cs.stack:
        return cs, DONE
    req = cs.stack[0]
    try:
        if req.direction == FWD:
            return _fwd_rules(program, cs, req)
        return _bwd_rules(program, cs, req)
    except _Blocked as exc:
        return replace(cs, audit=cs.audit + (("blocked", str(exc)),)), BLOCKED


def _take_fwd(program, cs, req, cands):
    mark = req.mark()
    satisfying = [c for c in cands if mark in c[2]]
    pool = satisfying or cands
    pid, action, sat, pick = min(
        pool, key=lambda c: c[1].msgid if isinstance(c[1], RecA) else -1)
    rs2, action, sat = fwd_step(program, cs.system, pid, pick=pick)
    cs = replace(cs, system=rs2,
                 trace_out=cs.trace_out + ((pid, action, FWD),),
                 audit=cs.audit + (("step", str(pid), str(action), FWD),))
    if satisfies(req, pid, action, sat, FWD):
        return replace(cs, stack=cs.stack[1:],
                       audit=cs.audit + (("pop", str(req)),)), "pop"
    return cs, "step"


def _fwd_rules(program, cs, req):
    rs = cs.system
    if req.goal[0] == GOAL_CREATION or req.goal[0] == GOAL_VAR:
        raise _Blocked(f"{req.goal[0]} goals are backward-only")
    proc = rs.procs.get(req.pid)
    if proc is None:
        parent = parent_of(rs.log, req.pid)
        if parent is None:
            raise _Blocked(f"{req.pid} does not exist and no log spawns it")
        sub = Request(parent, (GOAL_SPAWN, req.pid), FWD)
        return _push(cs, sub, f"{req.pid} not in the pool"), "push"
    cands = _fwd_candidates_for(program, rs, req.pid)
    if cands:
        return _take_fwd(program, cs, req, cands)
    pending = rs.log.get(req.pid, ())
    if pending and isinstance(pending[0], RecA):
        msgid = pending[0].msgid
        sender = sender_of(rs.log, msgid)
        if sender is None:
            raise _Blocked(f"message {msgid} has no pending sender in the log")
        sub = Request(sender, (GOAL_SEND, msgid), FWD)
        return _push(cs, sub, f"message {msgid} not in flight"), "push"
    raise _Blocked(f"{req.pid} cannot move forward")


def _bwd_rules(program, cs, req):
    rs = cs.system
    proc = rs.procs.get(req.pid)
    if proc is None:
        raise _Blocked(f"{req.pid} does not exist")
    cand = _bwd_candidate_for(rs, req.pid)
    if cand is not None:
        pid, action, sat = cand
        rs2, action, sat = bwd_step(rs, pid)
        cs = replace(cs, system=rs2,
                     trace_out=cs.trace_out + ((pid, action, BWD),),
                     audit=cs.audit + (("step", str(pid), str(action), BWD),))
        if satisfies(req, pid, action, sat, BWD):
            return replace(cs, stack=cs.stack[1:],
                           audit=cs.audit + (("pop", str(req)),)), "pop"
        return cs, "step"
    if proc.hist is None:
        if req.goal[0] == GOAL_CREATION:
            return replace(cs, stack=cs.stack[1:],
                           audit=cs.audit + (("pop", str(req)),)), "pop"
        raise _Blocked(f"{req.pid} is back at its creation; {req} unsatisfiable")
    head = proc.hist[0]
    if isinstance(head, SendH):
        sub = Request(head.target, (GOAL_REC, head.msgid), BWD)
        return _push(cs, sub,
                     f"message {head.msgid} already received"), "push"
    if isinstance(head, SpawnH):
        sub = Request(head.child, (GOAL_CREATION,), BWD)
        return _push(cs, sub, f"child {head.child} has history"), "push"
    raise _Blocked(f"{req.pid} cannot move backward")


def run_controlled(program, cs, fuel=100000):
    """Iterate controlled steps until the stack empties or nothing applies."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    for _ in range(fuel):
        cs, status = controlled_step(program, cs)
        if status == DONE:
            return cs, DONE
        if status == BLOCKED:
            return cs, BLOCKED
    return cs, FUEL


def push_request(cs, req):
    return replace(cs, stack=(req,) + cs.stack,
                   audit=cs.audit + (("push", str(req), "user"),))


# --- textual request language (CLI and protocol surface) ---

_REQUEST_FORMS = {
    "step": (GOAL_STEP, FWD), "back": (GOAL_STEP, BWD),
    "replay-send": (GOAL_SEND, FWD), "roll-send": (GOAL_SEND, BWD),
    "replay-rec": (GOAL_REC, FWD), "roll-rec": (GOAL_REC, BWD),
    "replay-spawn": (GOAL_SPAWN, FWD), "roll-spawn": (GOAL_SPAWN, BWD),
    "roll-var": (GOAL_VAR, BWD), "roll-creation": (GOAL_CREATION, BWD),
}


def parse_requests(text):
    """Parse one textual command into the request(s) it pushes."""
    words = text.split()
    if not words:
        raise RequestError("empty request")
    verb = words[0]
    if verb not in _REQUEST_FORMS:
        raise RequestError(f"unknown request {verb!r}")
    kind, direction = _REQUEST_FORMS[verb]
    if len(words) < 2:
        raise RequestError(f"{verb} needs a process id")
    try:
        pid = parse_pid(words[1])
    except ValueError as exc:
        raise RequestError(str(exc)) from exc
    if kind == GOAL_STEP:
        count = 1
        if len(words) == 3:
            if not words[2].isdigit() or int(words[2]) < 1:
                raise RequestError("step count must be a positive integer")
            count = int(words[2])
        elif len(words) > 3:
            raise RequestError(f"too many arguments for {verb}")
        return [Request(pid, (GOAL_STEP,), direction)] * count
    if kind == GOAL_CREATION:
        if len(words) != 2:
            raise RequestError(f"{verb} takes only a process id")
        return [Request(pid, (GOAL_CREATION,), direction)]
    if len(words) != 3:
        raise RequestError(f"{verb} needs a process id and an argument")
    arg = words[2]
    if kind in (GOAL_SEND, GOAL_REC):
        if not arg.isdigit():
            raise RequestError("message id must be a non-negative integer")
        return [Request(pid, (kind, int(arg)), direction)]
    if kind == GOAL_SPAWN:
        try:
            return [Request(pid, (GOAL_SPAWN, parse_pid(arg)), direction)]
        except ValueError as exc:
            raise RequestError(str(exc)) from exc
    # variable rollback
    if not arg or not (arg[0].isupper() or arg[0] == "_"):
        raise RequestError(f"{arg!r} is not a variable name")
    return [Request(pid, (GOAL_VAR, arg), direction)]
