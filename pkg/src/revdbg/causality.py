"""Happened-before analysis, causal equivalence and log/derivation files.

Two transitions are ordered when they belong to the same process, when one
spawns the process performing the other, or when one sends the message the
other receives; the order is closed transitively.  Derivations that only
differ by swapping adjacent unordered transitions are causally equivalent,
which this module decides directly: equal per-process projections plus
both sequences linearizing the shared order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .systems import (
    Derivation, LOGGED_ACTIONS, Pid, RecA, SendA, SpawnA,
    action_from_json, action_to_json, parse_pid,
)
from .reversible import MalformedLogError


class IllegalDerivationError(Exception):
    pass


class NotCoinitialError(Exception):
    pass


@dataclass(frozen=True)
class Transition:
    index: int
    pid: Pid
    action: object


@dataclass
class HBGraph:
    transitions: list
    edges: list          # direct (i, j) pairs
    reach: list          # reach[i] = bitmask of transitively later indices

    def happened_before(self, i, j):
        return bool(self.reach[i] >> j & 1)

    def independent(self, i, j):
        return not self.happened_before(i, j) and not self.happened_before(j, i)

    def future(self, i):
        """Indices causally after i, including i itself."""
        mask = self.reach[i] | (1 << i)
        return {j for j in range(len(self.transitions)) if mask >> j & 1}


def validate_derivation(d):
    """Structural legality: unique ids, sends before their receives,
    spawned processes act only after their spawn.  Fragments may start
    with any number of pre-existing processes."""
    sends = {}
    recs = set()
    spawned = {}
    actors = set()
    for i, (pid, action) in enumerate(d.steps):
        actors.add(pid)
        if isinstance(action, SendA):
            if action.msgid in sends:
                raise IllegalDerivationError(f"message {action.msgid} sent twice")
            sends[action.msgid] = i
        elif isinstance(action, RecA):
            if action.msgid in recs:
                raise IllegalDerivationError(f"message {action.msgid} received twice")
            if action.msgid not in sends:
                raise IllegalDerivationError(
                    f"message {action.msgid} received before being sent")
            recs.add(action.msgid)
        elif isinstance(action, SpawnA):
            if action.pid in spawned:
                raise IllegalDerivationError(f"{action.pid} spawned twice")
            if action.pid in actors:
                raise IllegalDerivationError(f"{action.pid} acted before its spawn")
            spawned[action.pid] = i


def happened_before(d):
    """The happened-before graph of a derivation, closure included."""
    validate_derivation(d)
    steps = list(d.steps)
    n = len(steps)
    transitions = [Transition(i, pid, a) for i, (pid, a) in enumerate(steps)]
    edges = []
    last_of = {}
    first_of = {}
    send_at = {}
    for i, (pid, action) in enumerate(steps):
        if pid in last_of:
            edges.append((last_of[pid], i))
        last_of[pid] = i
        first_of.setdefault(pid, i)
        if isinstance(action, SendA):
            send_at[action.msgid] = i
    for i, (pid, action) in enumerate(steps):
        if isinstance(action, SpawnA):
            j = first_of.get(action.pid)
            if j is not None:
                edges.append((i, j))
        elif isinstance(action, RecA):
            edges.append((send_at[action.msgid], i))
    succ = [[] for _ in range(n)]
    for i, j in edges:
        succ[i].append(j)
    reach = [0] * n
    for i in range(n - 1, -1, -1):  # all edges increase the index
        mask = 0
        for j in succ[i]:
            mask |= (1 << j) | reach[j]
        reach[i] = mask
    return HBGraph(transitions, edges, reach)


def independent(d, i, j):
    if i == j:
        raise ValueError("a transition is not independent of itself")
    g = happened_before(d)
    return g.independent(i, j)


def _projections(d):
    proj = {}
    for pid, action in d.steps:
        proj.setdefault(pid, []).append(action)
    return {pid: tuple(actions) for pid, actions in proj.items()}


def causally_equivalent(d1, d2):
    """Whether d2 is a reordering of d1 by swaps of independent neighbours."""
    if d1.origin != d2.origin:
        raise NotCoinitialError(
            f"derivations start from different systems: "
            f"{d1.origin!r} vs {d2.origin!r}")
    validate_derivation(d2)
    if len(d1.steps) != len(d2.steps):
        return False
    if _projections(d1) != _projections(d2):
        return False
    g = happened_before(d1)
    # position of d1's k-th transition of each process within d2
    pos2 = {}
    counters = {}
    order1 = {}
    for i, (pid, _) in enumerate(d1.steps):
        k = counters.get(pid, 0)
        counters[pid] = k + 1
        order1[(pid, k)] = i
    counters = {}
    for j, (pid, _) in enumerate(d2.steps):
        k = counters.get(pid, 0)
        counters[pid] = k + 1
        pos2[order1[(pid, k)]] = j
    n = len(d1.steps)
    for i in range(n):
        mask = g.reach[i]
        j = 0
        while mask:
            if mask & 1 and pos2[i] >= pos2[j]:
                return False
            mask >>= 1
            j += 1
    return True


# --- log files: one JSON object per line, pids ascending ---

def log_to_json(log):
    lines = []
    for pid in sorted(log):
        lines.append({"pid": str(pid),
                      "events": [action_to_json(e) for e in log[pid]]})
    return lines


def encode_log(log):
    return "".join(json.dumps(line) + "\n" for line in log_to_json(log))


def decode_log(text):
    log = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedLogError(f"bad JSON: {exc.msg}", lineno) from exc
        if not isinstance(obj, dict) or "pid" not in obj or "events" not in obj:
            raise MalformedLogError("expected {\"pid\": ..., \"events\": [...]}",
                                    lineno)
        try:
            pid = parse_pid(obj["pid"])
        except ValueError as exc:
            raise MalformedLogError(str(exc), lineno) from exc
        if pid in log:
            raise MalformedLogError(f"several lines for {pid}", lineno)
        events = []
        for ev in obj["events"]:
            try:
                action = action_from_json(ev)
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedLogError(f"bad event {ev!r}", lineno) from exc
            if not isinstance(action, LOGGED_ACTIONS):
                raise MalformedLogError(
                    f"event kind {ev.get('k')!r} may not appear in a log", lineno)
            events.append(action)
        if events:
            log[pid] = tuple(events)
    validate_log_or_fail(log)
    return log


def validate_log_or_fail(log):
    from .reversible import validate_log
    validate_log(log)


def fifo_violations(log):
    """Per-pair FIFO check over a log; advisory only.

    The multiset-mailbox semantics allows messages between one sender and
    one receiver to overtake each other; a real Erlang node does not.
    Returns (sender, receiver, overtaken-id, overtaking-id) tuples where
    the receiver consumed the later-sent message first.
    """
    sender_of_msg = {}
    send_rank = {}
    for pid in log:
        rank = 0
        for ev in log[pid]:
            if isinstance(ev, SendA):
                sender_of_msg[ev.msgid] = pid
                send_rank[ev.msgid] = rank
                rank += 1
    violations = []
    for receiver in sorted(log):
        last_rank = {}  # sender -> (rank, msgid) of the latest delivery
        for ev in log[receiver]:
            if not isinstance(ev, RecA) or ev.msgid not in sender_of_msg:
                continue
            sender = sender_of_msg[ev.msgid]
            rank = send_rank[ev.msgid]
            if sender in last_rank and last_rank[sender][0] > rank:
                violations.append((sender, receiver, ev.msgid,
                                   last_rank[sender][1]))
            if sender not in last_rank or rank > last_rank[sender][0]:
                last_rank[sender] = (rank, ev.msgid)
    return violations


def encode_derivation(d):
    lines = [json.dumps({"origin": d.origin})]
    for pid, action in d.steps:
        lines.append(json.dumps({"pid": str(pid), "a": action_to_json(action)}))
    return "".join(line + "\n" for line in lines)


def decode_derivation(text):
    lines = [raw for raw in text.splitlines() if raw.strip()]
    if not lines:
        raise MalformedLogError("empty derivation file", 1)
    try:
        header = json.loads(lines[0])
        origin = header["origin"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise MalformedLogError("bad derivation header", 1) from exc
    steps = []
    for lineno, raw in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(raw)
            steps.append((parse_pid(obj["pid"]), action_from_json(obj["a"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedLogError(f"bad derivation step", lineno) from exc
    return Derivation(origin, tuple(steps))
