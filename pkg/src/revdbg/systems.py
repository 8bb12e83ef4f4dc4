"""System semantics: global mailbox, process pool, tracing and scheduling.

A system pairs a global mailbox (a multiset of tagged in-flight messages)
with a pool of processes.  Stepping a process completes the side effects
its expression step requested: sends enqueue tagged messages, receives
consume a chosen message and resume the matching clause, spawns allocate
a pid and add a child process, self binds the caller's own pid.

Each system step is labeled with the acting pid and an action; filtering
the send/receive/spawn actions per process yields the system log used for
deterministic replay.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from . import expressions as ex
from .syntax import Atom, Call, Lit, PidVal, is_value


class UnknownEntryError(Exception):
    pass


class NotEnabledError(Exception):
    pass


class StepLimitError(Exception):
    def __init__(self, system, log, derivation):
        self.system = system
        self.log = log
        self.derivation = derivation
        super().__init__("step limit exceeded")


@dataclass(frozen=True, order=True)
class Pid:
    n: int

    def __str__(self):
        return f"<0.{self.n}.0>"


def parse_pid(text):
    text = text.strip()
    if text.startswith("<") and text.endswith(">"):
        parts = text[1:-1].split(".")
        if len(parts) == 3 and all(p.isdigit() for p in parts):
            return Pid(int(parts[1]))
        raise ValueError(f"bad pid {text!r}")
    if text.isdigit():
        return Pid(int(text))
    raise ValueError(f"bad pid {text!r}")


@dataclass(frozen=True)
class TaggedMsg:
    sender: Pid
    target: Pid
    value: object
    msgid: int


# --- actions (also the event vocabulary of logs) ---

@dataclass(frozen=True)
class SeqA:
    def __str__(self):
        return "seq"


@dataclass(frozen=True)
class SendA:
    msgid: int

    def __str__(self):
        return f"send({self.msgid})"


@dataclass(frozen=True)
class RecA:
    msgid: int

    def __str__(self):
        return f"rec({self.msgid})"


@dataclass(frozen=True)
class SpawnA:
    pid: Pid

    def __str__(self):
        return f"spawn({self.pid})"


@dataclass(frozen=True)
class SelfA:
    def __str__(self):
        return "self"


LOGGED_ACTIONS = (SendA, RecA, SpawnA)


def action_to_json(a):
    if isinstance(a, SeqA):
        return {"k": "seq"}
    if isinstance(a, SendA):
        return {"k": "send", "id": a.msgid}
    if isinstance(a, RecA):
        return {"k": "rec", "id": a.msgid}
    if isinstance(a, SpawnA):
        return {"k": "spawn", "pid": str(a.pid)}
    if isinstance(a, SelfA):
        return {"k": "self"}
    raise TypeError(f"not an action: {a!r}")


def action_from_json(obj):
    kind = obj.get("k")
    if kind == "seq":
        return SeqA()
    if kind == "send":
        return SendA(int(obj["id"]))
    if kind == "rec":
        return RecA(int(obj["id"]))
    if kind == "spawn":
        return SpawnA(parse_pid(obj["pid"]))
    if kind == "self":
        return SelfA()
    raise ValueError(f"unknown event kind {kind!r}")


@dataclass(frozen=True)
class StdProcess:
    pid: Pid
    env: dict
    expr: object
    stack: tuple
    outbuf: str = ""

    def terminated(self):
        return is_value(self.expr) and not self.stack


@dataclass(frozen=True)
class StdSystem:
    gamma: dict                 # msgid -> TaggedMsg
    procs: dict                 # Pid -> StdProcess
    next_pid: int = field(default=1, compare=False)
    next_msgid: int = field(default=0, compare=False)
    next_future: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Derivation:
    origin: str
    steps: tuple  # of (Pid, action)


def entry_call(program, name, args=(), module=None):
    fd = program.lookup(name, len(args), module=module)
    if fd is None:
        raise UnknownEntryError(f"no function {name}/{len(args)} in program")
    mod = Atom(module) if module else None
    # carry the definition's position so the initial redex highlights it
    return Call(mod, Lit(Atom(name), pos=fd.pos), tuple(args), pos=fd.pos)


def init_system(program, name, args=(), module=None):
    """Initial system: one process evaluating the entry call, empty mailbox."""
    call = entry_call(program, name, args, module)
    p0 = Pid(0)
    proc = StdProcess(p0, {}, call, ())
    return StdSystem(gamma={}, procs={p0: proc})


def messages_for(gamma, pid):
    return sorted((m for m in gamma.values() if m.target == pid),
                  key=lambda m: m.msgid)


def receive_candidates(gamma, env, clauses, pid):
    """Matching in-flight messages for a blocked receive, ordered by id."""
    out = []
    for m in messages_for(gamma, pid):
        if ex.match_clauses("receive", clauses, env, m.value) is not None:
            out.append(m)
    return out


def probe_process(program, proc, next_future=0):
    """Classify the next move of a process.

    Returns ('done'|'stuck', None) for terminal states, ('rec', clauses)
    when the redex is a receive, or ('step', step-result) with the
    completed expression step otherwise.
    """
    if proc.terminated():
        return "done", None
    try:
        if not is_value(proc.expr):
            _, redex = ex.decompose(proc.expr)
            if isinstance(redex, ex.Receive):
                return "rec", redex.clauses
        result = ex.step_expr(program, proc.env, proc.expr, proc.stack,
                              next_future)
    except ex.StuckError as exc:
        return "stuck", exc
    if isinstance(result[3], ex.SendLabel) \
            and not isinstance(result[3].target, PidVal):
        return "stuck", ex.StuckError("message target is not a pid")
    return "step", result


def _label_kind(label):
    if isinstance(label, ex.Tau):
        return "seq"
    if isinstance(label, ex.SendLabel):
        return "send"
    if isinstance(label, (ex.SpawnLabel, ex.SpawnBodyLabel)):
        return "spawn"
    if isinstance(label, ex.SelfLabel):
        return "self"
    raise AssertionError(label)


def enabled_actions(program, sys):
    """All (pid, kind, msgid-or-None) triples that can fire now."""
    entries = []
    for pid in sorted(sys.procs):
        proc = sys.procs[pid]
        state, payload = probe_process(program, proc, sys.next_future)
        if state == "rec":
            for m in receive_candidates(sys.gamma, proc.env, payload, pid):
                entries.append((pid, "rec", m.msgid))
        elif state == "step":
            entries.append((pid, _label_kind(payload[3]), None))
    return entries


def _spawn_child_expr(label):
    if isinstance(label, ex.SpawnLabel):
        return Call(label.module, Lit(label.fname), tuple(label.args))
    return label.body


def step_system(program, sys, pid, pick=None, forced=None):
    """One tracing-semantics step of the chosen process.

    pick selects the message id for receives; forced overrides the fresh
    message id / child pid (used when re-executing recorded transitions).
    Returns (new system, action).
    """
    proc = sys.procs.get(pid)
    if proc is None:
        raise NotEnabledError(f"no process {pid}")
    state, payload = probe_process(program, proc, sys.next_future)

    if state == "rec":
        if pick is None:
            raise NotEnabledError("receive needs a chosen message id")
        msg = sys.gamma.get(pick)
        if msg is None or msg.target != pid:
            raise NotEnabledError(f"message {pick} not deliverable to {pid}")
        m = ex.match_clauses("receive", payload, proc.env, msg.value)
        if m is None:
            raise NotEnabledError(f"message {pick} matches no clause")
        sigma, body, _ = m
        env1, expr1, stack1, label = ex.step_expr(
            program, proc.env, proc.expr, proc.stack, sys.next_future)
        new_expr = ex.subst_future(expr1, label.kappa.n, body)
        new_proc = replace(proc, env={**env1, **sigma}, expr=new_expr,
                           stack=stack1)
        gamma = dict(sys.gamma)
        del gamma[pick]
        procs = dict(sys.procs)
        procs[pid] = new_proc
        return replace(sys, gamma=gamma, procs=procs,
                       next_future=sys.next_future + 1), RecA(pick)

    if state != "step":
        raise NotEnabledError(f"process {pid} cannot step ({state})")
    if pick is not None:
        raise NotEnabledError(f"{pid} is not at a receive")
    env1, expr1, stack1, label = payload

    if isinstance(label, ex.Tau):
        new_proc = replace(proc, env=env1, expr=expr1, stack=stack1,
                           outbuf=proc.outbuf + label.output)
        procs = dict(sys.procs)
        procs[pid] = new_proc
        return replace(sys, procs=procs), SeqA()

    if isinstance(label, ex.SendLabel):
        msgid = forced if forced is not None else sys.next_msgid
        if msgid in sys.gamma:
            raise NotEnabledError(f"message id {msgid} already in flight")
        msg = TaggedMsg(pid, Pid(label.target.n), label.payload, msgid)
        gamma = dict(sys.gamma)
        gamma[msgid] = msg
        procs = dict(sys.procs)
        procs[pid] = replace(proc, env=env1, expr=expr1, stack=stack1)
        return replace(sys, gamma=gamma, procs=procs,
                       next_msgid=max(sys.next_msgid, msgid + 1)), SendA(msgid)

    if isinstance(label, (ex.SpawnLabel, ex.SpawnBodyLabel)):
        child_pid = forced if forced is not None else Pid(sys.next_pid)
        if child_pid in sys.procs:
            raise NotEnabledError(f"pid {child_pid} already in use")
        child = StdProcess(child_pid, {}, _spawn_child_expr(label), ())
        new_expr = ex.subst_future(expr1, label.kappa.n, PidVal(child_pid.n))
        procs = dict(sys.procs)
        procs[pid] = replace(proc, env=env1, expr=new_expr, stack=stack1)
        procs[child_pid] = child
        return replace(sys, procs=procs,
                       next_pid=max(sys.next_pid, child_pid.n + 1),
                       next_future=sys.next_future + 1), SpawnA(child_pid)

    if isinstance(label, ex.SelfLabel):
        new_expr = ex.subst_future(expr1, label.kappa.n, PidVal(pid.n))
        procs = dict(sys.procs)
        procs[pid] = replace(proc, env=env1, expr=new_expr, stack=stack1)
        return replace(sys, procs=procs,
                       next_future=sys.next_future + 1), SelfA()

    raise AssertionError(label)


def apply_transition(program, sys, pid, action):
    """Re-execute a recorded transition, reusing its ids."""
    if isinstance(action, RecA):
        sys2, got = step_system(program, sys, pid, pick=action.msgid)
    elif isinstance(action, SendA):
        sys2, got = step_system(program, sys, pid, forced=action.msgid)
    elif isinstance(action, SpawnA):
        sys2, got = step_system(program, sys, pid, forced=action.pid)
    else:
        sys2, got = step_system(program, sys, pid)
    if got != action:
        raise NotEnabledError(f"expected {action}, process took {got}")
    return sys2


class Scheduler:
    """Deterministic choice among enabled entries.

    'random' draws uniformly from a seeded generator; 'roundrobin' cycles
    pids in ascending order and picks the lowest message id for receives.
    """

    def __init__(self, seed=0, policy="random"):
        if policy not in ("random", "roundrobin"):
            raise ValueError(f"unknown policy {policy!r}")
        self.seed = seed
        self.policy = policy
        self._rng = random.Random(seed)
        self._cursor = -1

    def pick(self, entries):
        if self.policy == "random":
            return entries[self._rng.randrange(len(entries))]
        pids = sorted({e[0] for e in entries})
        nxt = next((p for p in pids if p.n > self._cursor), pids[0])
        self._cursor = nxt.n
        mine = [e for e in entries if e[0] == nxt]
        return min(mine, key=lambda e: (e[1], -1 if e[2] is None else e[2]))


def system_log(derivation):
    """Per-process spawn/send/rec projection of a derivation."""
    log = {}
    for pid, action in derivation.steps:
        if isinstance(action, LOGGED_ACTIONS):
            log.setdefault(pid, []).append(action)
    return {pid: tuple(events) for pid, events in log.items()}


def run_trace(program, sys, scheduler=None, max_steps=100000, origin=""):
    """Drive a system to a terminal state, recording log and derivation."""
    scheduler = scheduler or Scheduler()
    steps = []
    for _ in range(max_steps):
        entries = enabled_actions(program, sys)
        if not entries:
            d = Derivation(origin, tuple(steps))
            return sys, system_log(d), d
        pid, _kind, pick = scheduler.pick(entries)
        sys, action = step_system(program, sys, pid, pick=pick)
        steps.append((pid, action))
    d = Derivation(origin, tuple(steps))
    raise StepLimitError(sys, system_log(d), d)


def freeze_value(v):
    """Hashable structural key for an AST value or expression."""
    if isinstance(v, tuple):
        return tuple(freeze_value(x) for x in v)
    if isinstance(v, dict):
        return tuple(sorted((k, freeze_value(x)) for k, x in v.items()))
    if hasattr(v, "__dataclass_fields__"):
        fields = []
        for name, f in v.__dataclass_fields__.items():
            if not f.compare:
                continue
            fields.append((name, freeze_value(getattr(v, name))))
        return (type(v).__name__, tuple(fields))
    return v


def freeze_system(sys):
    """Hashable key of a system's observable state (allocators excluded)."""
    return (
        tuple(sorted((mid, freeze_value(m)) for mid, m in sys.gamma.items())),
        tuple(sorted((p.n, freeze_value(proc)) for p, proc in sys.procs.items())),
    )
