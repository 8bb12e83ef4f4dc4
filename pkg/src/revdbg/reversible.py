"""Reversible semantics: forward steps that save undo information, and
backward steps that restore it.

Forward steps behave like the tracing semantics but additionally prepend
a history item holding the pre-step (environment, expression, stack) plus
whatever the step consumed or produced.  When the acting process has a
pending log, send/receive/spawn steps draw their message ids and child
pids from it (replay); otherwise fresh ids are allocated.

Backward steps pop the newest history item, restore the saved triple and
move the undone event back to the front of the process log, so a later
redo is forced to reproduce it.  Undo is only offered when it is causally
safe: a send is undone only while its message is still in flight, a spawn
only once the child's own history is empty.

Histories are stored as cons pairs ``(item, tail)`` shared across system
values, which keeps stepping and whole-system comparison cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import expressions as ex
from .systems import (
    NotEnabledError, Pid, RecA, SelfA, SendA, SeqA, SpawnA, StdProcess,
    TaggedMsg, freeze_value, probe_process, receive_candidates,
)
from .syntax import PidVal, is_value
from .systems import _spawn_child_expr  # shared spawn completion


class MalformedLogError(Exception):
    def __init__(self, message, line=None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


# --- history items: each stores the pre-step (env, expr, stack) ---

@dataclass(frozen=True)
class SeqH:
    env: dict
    expr: object
    stack: tuple
    outlen: int


@dataclass(frozen=True)
class SendH:
    env: dict
    expr: object
    stack: tuple
    target: Pid
    value: object
    msgid: int


@dataclass(frozen=True)
class RecH:
    env: dict
    expr: object
    stack: tuple
    sender: Pid
    value: object
    msgid: int


@dataclass(frozen=True)
class SpawnH:
    env: dict
    expr: object
    stack: tuple
    child: Pid


@dataclass(frozen=True)
class SelfH:
    env: dict
    expr: object
    stack: tuple


def hist_items(h):
    while h is not None:
        yield h[0]
        h = h[1]


def hist_len(h):
    n = 0
    while h is not None:
        n += 1
        h = h[1]
    return n


@dataclass(frozen=True)
class RevProcess:
    pid: Pid
    hist: object  # None or (item, tail)
    env: dict
    expr: object
    stack: tuple
    outbuf: str = ""

    def terminated(self):
        return is_value(self.expr) and not self.stack


@dataclass(frozen=True)
class RevSystem:
    log: dict                   # Pid -> tuple of pending events (the front replays next)
    gamma: dict                 # msgid -> TaggedMsg
    procs: dict                 # Pid -> RevProcess
    next_pid: int = field(default=1, compare=False)
    next_msgid: int = field(default=0, compare=False)
    next_future: int = field(default=0, compare=False)


MARK_STEP = ("s",)


def mark_send(msgid):
    return ("send", msgid)


def mark_rec(msgid):
    return ("rec", msgid)


def mark_spawn(pid):
    return ("spawn", pid)


def mark_var(name):
    return ("var", name)


def validate_log(log):
    """Well-formedness: unique ids, unique spawns, every rec has a send."""
    sends = set()
    recs = set()
    spawns = set()
    for pid in log:
        for ev in log[pid]:
            if isinstance(ev, SendA):
                if ev.msgid in sends:
                    raise MalformedLogError(f"duplicate send id {ev.msgid}")
                sends.add(ev.msgid)
            elif isinstance(ev, RecA):
                if ev.msgid in recs:
                    raise MalformedLogError(f"duplicate rec id {ev.msgid}")
                recs.add(ev.msgid)
            elif isinstance(ev, SpawnA):
                if ev.pid in spawns:
                    raise MalformedLogError(f"duplicate spawn of {ev.pid}")
                spawns.add(ev.pid)
            else:
                raise MalformedLogError(f"event {ev} may not appear in a log")
    dangling = recs - sends
    if dangling:
        raise MalformedLogError(
            f"rec of message {min(dangling)} has no matching send")


def _normalize_log(log):
    return {pid: tuple(events) for pid, events in log.items() if events}


def to_reversible(sys, log=None):
    """Lift a standard system into the reversible semantics.

    With a log the session replays it; without one it is user-driven.
    """
    log = _normalize_log(log or {})
    validate_log(log)
    procs = {}
    for pid, p in sys.procs.items():
        procs[pid] = RevProcess(pid, None, p.env, p.expr, p.stack, p.outbuf)
    max_msg = -1
    max_pid = sys.next_pid - 1
    for pid, events in log.items():
        max_pid = max(max_pid, pid.n)
        for ev in events:
            if isinstance(ev, (SendA, RecA)):
                max_msg = max(max_msg, ev.msgid)
            else:
                max_pid = max(max_pid, ev.pid.n)
    return RevSystem(
        log=log,
        gamma=dict(sys.gamma),
        procs=procs,
        next_pid=max_pid + 1,
        next_msgid=max(sys.next_msgid, max_msg + 1),
        next_future=sys.next_future,
    )


def strip_reversible(rs):
    """Forget histories and log: the underlying standard system."""
    from .systems import StdSystem
    procs = {pid: StdProcess(pid, p.env, p.expr, p.stack, p.outbuf)
             for pid, p in rs.procs.items()}
    return StdSystem(gamma=dict(rs.gamma), procs=procs,
                     next_pid=rs.next_pid, next_msgid=rs.next_msgid,
                     next_future=rs.next_future)


# --- forward ---

def _fwd_candidates_for(program, rs, pid):
    """Enabled forward entries of one process: (pid, action, satset, pick)."""
    proc = rs.procs[pid]
    pending = rs.log.get(pid, ())
    state, payload = probe_process(program, proc, rs.next_future)
    if state in ("done", "stuck"):
        return []
    if state == "rec":
        clauses = payload
        if pending:
            head = pending[0]
            if not isinstance(head, RecA):
                return []
            msg = rs.gamma.get(head.msgid)
            if msg is None or msg.target != pid:
                return []
            if ex.match_clauses("receive", clauses, proc.env, msg.value) is None:
                return []
            sat = frozenset({MARK_STEP, mark_rec(head.msgid)})
            return [(pid, RecA(head.msgid), sat, head.msgid)]
        out = []
        for m in receive_candidates(rs.gamma, proc.env, clauses, pid):
            sat = frozenset({MARK_STEP, mark_rec(m.msgid)})
            out.append((pid, RecA(m.msgid), sat, m.msgid))
        return out
    label = payload[3]
    if isinstance(label, ex.Tau):
        return [(pid, SeqA(), frozenset({MARK_STEP}), None)]
    if isinstance(label, ex.SelfLabel):
        return [(pid, SelfA(), frozenset({MARK_STEP}), None)]
    if isinstance(label, ex.SendLabel):
        if pending:
            head = pending[0]
            if not isinstance(head, SendA):
                return []
            msgid = head.msgid
        else:
            msgid = rs.next_msgid
        sat = frozenset({MARK_STEP, mark_send(msgid)})
        return [(pid, SendA(msgid), sat, None)]
    # spawn labels
    if pending:
        head = pending[0]
        if not isinstance(head, SpawnA):
            return []
        child = head.pid
    else:
        child = Pid(rs.next_pid)
    sat = frozenset({MARK_STEP, mark_spawn(child)})
    return [(pid, SpawnA(child), sat, None)]


def fwd_enabled(program, rs):
    """All enabled forward transitions with the requests each would satisfy."""
    out = []
    for pid in sorted(rs.procs):
        out.extend(_fwd_candidates_for(program, rs, pid))
    return out


def _pop_log(rs_log, pid):
    pending = rs_log[pid][1:]
    log = dict(rs_log)
    if pending:
        log[pid] = pending
    else:
        del log[pid]
    return log


def fwd_step(program, rs, pid, pick=None):
    """One forward step; returns (system, action, satisfied set)."""
    cands = _fwd_candidates_for(program, rs, pid)
    if not cands:
        raise NotEnabledError(f"{pid} has no forward step")
    if pick is not None:
        cands = [c for c in cands if isinstance(c[1], RecA) and c[1].msgid == pick]
        if not cands:
            raise NotEnabledError(f"{pid} cannot receive message {pick}")
    elif len(cands) > 1:
        raise NotEnabledError(f"{pid} has several matching messages; pick one")
    _, action, sat, _ = cands[0]
    proc = rs.procs[pid]
    pre = (proc.env, proc.expr, proc.stack)
    pending = rs.log.get(pid, ())

    if isinstance(action, RecA):
        msg = rs.gamma[action.msgid]
        m = ex.match_clauses("receive", _receive_clauses(proc), proc.env, msg.value)
        sigma, body, _ = m
        env1, expr1, stack1, label = ex.step_expr(
            program, proc.env, proc.expr, proc.stack, rs.next_future)
        new_expr = ex.subst_future(expr1, label.kappa.n, body)
        item = RecH(*pre, sender=msg.sender, value=msg.value, msgid=action.msgid)
        gamma = dict(rs.gamma)
        del gamma[action.msgid]
        procs = dict(rs.procs)
        procs[pid] = RevProcess(pid, (item, proc.hist), {**env1, **sigma},
                                new_expr, stack1, proc.outbuf)
        log = _pop_log(rs.log, pid) if pending else rs.log
        return replace(rs, log=log, gamma=gamma, procs=procs,
                       next_future=rs.next_future + 1), action, sat

    env1, expr1, stack1, label = ex.step_expr(
        program, proc.env, proc.expr, proc.stack, rs.next_future)

    if isinstance(action, SeqA):
        item = SeqH(*pre, outlen=len(proc.outbuf))
        procs = dict(rs.procs)
        procs[pid] = RevProcess(pid, (item, proc.hist), env1, expr1, stack1,
                                proc.outbuf + label.output)
        return replace(rs, procs=procs), action, sat

    if isinstance(action, SelfA):
        item = SelfH(*pre)
        new_expr = ex.subst_future(expr1, label.kappa.n, PidVal(pid.n))
        procs = dict(rs.procs)
        procs[pid] = RevProcess(pid, (item, proc.hist), env1, new_expr, stack1,
                                proc.outbuf)
        return replace(rs, procs=procs,
                       next_future=rs.next_future + 1), action, sat

    if isinstance(action, SendA):
        msgid = action.msgid
        if msgid in rs.gamma:
            raise NotEnabledError(f"message id {msgid} already in flight")
        target = Pid(label.target.n)
        msg = TaggedMsg(pid, target, label.payload, msgid)
        item = SendH(*pre, target=target, value=label.payload, msgid=msgid)
        gamma = dict(rs.gamma)
        gamma[msgid] = msg
        procs = dict(rs.procs)
        procs[pid] = RevProcess(pid, (item, proc.hist), env1, expr1, stack1,
                                proc.outbuf)
        log = _pop_log(rs.log, pid) if pending else rs.log
        return replace(rs, log=log, gamma=gamma, procs=procs,
                       next_msgid=max(rs.next_msgid, msgid + 1)), action, sat

    if isinstance(action, SpawnA):
        child_pid = action.pid
        if child_pid in rs.procs:
            raise NotEnabledError(f"pid {child_pid} already in use")
        child = RevProcess(child_pid, None, {}, _spawn_child_expr(label), ())
        new_expr = ex.subst_future(expr1, label.kappa.n, PidVal(child_pid.n))
        item = SpawnH(*pre, child=child_pid)
        procs = dict(rs.procs)
        procs[pid] = RevProcess(pid, (item, proc.hist), env1, new_expr, stack1,
                                proc.outbuf)
        procs[child_pid] = child
        log = _pop_log(rs.log, pid) if pending else rs.log
        return replace(rs, log=log, procs=procs,
                       next_pid=max(rs.next_pid, child_pid.n + 1),
                       next_future=rs.next_future + 1), action, sat

    raise AssertionError(action)


def _receive_clauses(proc):
    _, redex = ex.decompose(proc.expr)
    return redex.clauses


# --- backward ---

def _bwd_candidate_for(rs, pid):
    proc = rs.procs[pid]
    if proc.hist is None:
        return None
    item = proc.hist[0]
    if isinstance(item, SeqH):
        intro = frozenset(mark_var(x) for x in set(proc.env) - set(item.env))
        return (pid, SeqA(), frozenset({MARK_STEP}) | intro)
    if isinstance(item, SelfH):
        return (pid, SelfA(), frozenset({MARK_STEP}))
    if isinstance(item, SendH):
        if item.msgid not in rs.gamma:
            return None  # already received: undo the receive first
        return (pid, SendA(item.msgid),
                frozenset({MARK_STEP, mark_send(item.msgid)}))
    if isinstance(item, RecH):
        intro = frozenset(mark_var(x) for x in set(proc.env) - set(item.env))
        return (pid, RecA(item.msgid),
                frozenset({MARK_STEP, mark_rec(item.msgid)}) | intro)
    if isinstance(item, SpawnH):
        child = rs.procs.get(item.child)
        if child is None or child.hist is not None:
            return None  # child must be rolled back to creation first
        return (pid, SpawnA(item.child),
                frozenset({MARK_STEP, mark_spawn(item.child)}))
    raise AssertionError(item)


def bwd_enabled(rs):
    """Per process, the unique causally safe undo (history head)."""
    out = []
    for pid in sorted(rs.procs):
        c = _bwd_candidate_for(rs, pid)
        if c is not None:
            out.append(c)
    return out


def bwd_step(rs, pid):
    """Undo the newest step of a process; returns (system, action, satset)."""
    cand = _bwd_candidate_for(rs, pid)
    if cand is None:
        raise NotEnabledError(f"{pid} has no backward step")
    _, action, sat = cand
    proc = rs.procs[pid]
    item, tail = proc.hist

    if isinstance(item, SeqH):
        procs = dict(rs.procs)
        procs[pid] = RevProcess(pid, tail, item.env, item.expr, item.stack,
                                proc.outbuf[:item.outlen])
        return replace(rs, procs=procs), action, sat

    if isinstance(item, SelfH):
        procs = dict(rs.procs)
        procs[pid] = RevProcess(pid, tail, item.env, item.expr, item.stack,
                                proc.outbuf)
        return replace(rs, procs=procs), action, sat

    if isinstance(item, SendH):
        gamma = dict(rs.gamma)
        del gamma[item.msgid]
        procs = dict(rs.procs)
        procs[pid] = RevProcess(pid, tail, item.env, item.expr, item.stack,
                                proc.outbuf)
        log = dict(rs.log)
        log[pid] = (SendA(item.msgid),) + log.get(pid, ())
        return replace(rs, log=log, gamma=gamma, procs=procs), action, sat

    if isinstance(item, RecH):
        gamma = dict(rs.gamma)
        gamma[item.msgid] = TaggedMsg(item.sender, pid, item.value, item.msgid)
        procs = dict(rs.procs)
        procs[pid] = RevProcess(pid, tail, item.env, item.expr, item.stack,
                                proc.outbuf)
        log = dict(rs.log)
        log[pid] = (RecA(item.msgid),) + log.get(pid, ())
        return replace(rs, log=log, gamma=gamma, procs=procs), action, sat

    if isinstance(item, SpawnH):
        procs = dict(rs.procs)
        del procs[item.child]
        procs[pid] = RevProcess(pid, tail, item.env, item.expr, item.stack,
                                proc.outbuf)
        log = dict(rs.log)
        log[pid] = (SpawnA(item.child),) + log.get(pid, ())
        return replace(rs, log=log, procs=procs), action, sat

    raise AssertionError(item)


def replay_derivation(program, sys, derivation):
    """Re-execute recorded transitions under the reversible semantics.

    Starts from the standard system, installs the derivation's own log and
    forces its scheduling order; the result carries full histories.
    """
    from .systems import system_log
    rs = to_reversible(sys, system_log(derivation))
    for pid, action in derivation.steps:
        pick = action.msgid if isinstance(action, RecA) else None
        rs, got, _ = fwd_step(program, rs, pid, pick=pick)
        if got != action:
            raise NotEnabledError(f"replay diverged: {got} instead of {action}")
    return rs


def freeze_rev_system(rs):
    """Hashable key of (log, mailbox, pool); allocators excluded."""
    return (
        tuple(sorted((p.n, freeze_value(evs)) for p, evs in rs.log.items())),
        tuple(sorted((mid, freeze_value(m)) for mid, m in rs.gamma.items())),
        tuple(sorted((p.n, _freeze_rev_proc(proc)) for p, proc in rs.procs.items())),
    )


def _freeze_rev_proc(proc):
    items = tuple(freeze_value(i) for i in hist_items(proc.hist))
    return (items, freeze_value(proc.env), freeze_value(proc.expr),
            freeze_value(proc.stack), proc.outbuf)
