"""Command line interface.

  revdbg run FILE -e ENTRY [--seed S --policy P]   run to completion
  revdbg trace FILE -e ENTRY -o LOG                record a log
  revdbg replay FILE -e ENTRY -l LOG               replay a recorded log
  revdbg debug FILE -e ENTRY [-l LOG]              interactive session
  revdbg lint LOG                                  validate a log file
  revdbg serve FILE -e ENTRY [-l LOG] [--port N]   JSON protocol server
"""

from __future__ import annotations

import argparse
import sys

from . import causality
from . import pretty as pp
from .reversible import MalformedLogError, fwd_enabled, fwd_step, to_reversible
from .session import CommandError, SessionManager, parse_entry
from .syntax import ParseError, parse_program
from .systems import Scheduler, StepLimitError, init_system, run_trace


def _load(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _build_initial(args):
    source = _load(args.file)
    program = parse_program(source)
    name, entry_args = parse_entry(args.entry)
    return source, program, init_system(program, name, entry_args)


def _print_final(sys0, final, show_outputs=True):
    root = final.procs[min(final.procs)]
    if root.terminated():
        print(pp.pretty(root.expr))
    else:
        print(f"(root process did not finish: {pp.pretty(root.expr)})")
    if show_outputs:
        for pid in sorted(final.procs):
            out = final.procs[pid].outbuf
            if out:
                print(f"--- output {pid} ---")
                sys.stdout.write(out if out.endswith("\n") else out + "\n")


def cmd_run(args):
    _, program, sys0 = _build_initial(args)
    try:
        final, _log, _d = run_trace(
            program, sys0, Scheduler(seed=args.seed, policy=args.policy),
            max_steps=args.max_steps)
    except StepLimitError as exc:
        print("step limit exceeded", file=sys.stderr)
        _print_final(sys0, exc.system)
        return 1
    _print_final(sys0, final)
    return 0


def cmd_trace(args):
    source, program, sys0 = _build_initial(args)
    try:
        final, log, derivation = run_trace(
            program, sys0, Scheduler(seed=args.seed, policy=args.policy),
            max_steps=args.max_steps, origin=args.entry)
    except StepLimitError as exc:
        print("step limit exceeded; partial log written", file=sys.stderr)
        final, log, derivation = exc.system, exc.log, exc.derivation
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(causality.encode_log(log))
    if args.derivation:
        with open(args.derivation, "w", encoding="utf-8") as fh:
            fh.write(causality.encode_derivation(derivation))
    events = sum(len(v) for v in log.values())
    print(f"traced {len(derivation.steps)} steps, "
          f"{events} logged events, {len(final.procs)} processes")
    _print_final(sys0, final)
    return 0


def replay_to_end(program, rs, seed=0):
    """Drive the reversible semantics forward until nothing is enabled."""
    import random
    rng = random.Random(seed)
    steps = []
    while True:
        entries = fwd_enabled(program, rs)
        if not entries:
            return rs, steps
        pid, action, _sat, pick = entries[rng.randrange(len(entries))]
        rs, action, _ = fwd_step(program, rs, pid, pick=pick)
        steps.append((pid, action))


def cmd_replay(args):
    _, program, sys0 = _build_initial(args)
    log = causality.decode_log(_load(args.log))
    rs = to_reversible(sys0, log)
    rs, steps = replay_to_end(program, rs, seed=args.seed)
    leftover = sum(len(v) for v in rs.log.values())
    print(f"replayed {len(steps)} steps; "
          f"{'log fully consumed' if leftover == 0 else f'{leftover} events left'}")
    from .reversible import strip_reversible
    _print_final(sys0, strip_reversible(rs))
    return 0 if leftover == 0 else 1


def cmd_lint(args):
    try:
        log = causality.decode_log(_load(args.log))
    except MalformedLogError as exc:
        print(f"invalid log: {exc}")
        return 1
    events = sum(len(v) for v in log.values())
    print(f"ok: {len(log)} processes, {events} events")
    if args.fifo:
        violations = causality.fifo_violations(log)
        for sender, receiver, overtaken, overtaking in violations:
            print(f"warning: {receiver} consumed message {overtaking} from "
                  f"{sender} before the earlier-sent {overtaken} "
                  f"(fine here, impossible on a real node)")
        if violations:
            return 0  # advisory: the log is still valid
        print("fifo: per-pair delivery order holds")
    return 0


def cmd_debug(args):
    source = _load(args.file)
    manager = SessionManager()
    log_text = _load(args.log) if args.log else None
    sid = manager.create_session(source, args.entry, log_text=log_text)
    print(f"session {sid} ({manager.get(sid).mode} mode); "
          f"'help' lists commands, 'quit' exits")
    _print_summary(manager.snapshot(sid))
    while True:
        try:
            line = input("revdbg> ").strip()
        except EOFError:
            print()
            return 0
        if not line:
            continue
        if line in ("quit", "exit", "q"):
            return 0
        if line == "help":
            _print_help()
            continue
        try:
            if line == "view":
                view = manager.snapshot(sid)
            else:
                view = manager.apply_command(sid, line)
        except (CommandError, MalformedLogError) as exc:
            print(f"error: {exc}")
            continue
        _print_summary(view)


def _print_help():
    print("""commands:
  step PID [N]        back PID [N]
  replay-send PID L   replay-rec PID L   replay-spawn PID PID'
  roll-send PID L     roll-rec PID L     roll-spawn PID PID'
  roll-var PID X      roll-creation PID
  inspect PID INDEX   reveal the stored snapshot of a history item
  trace [SEED]        record a log from the initial state
  replay              restart in replay mode with the recorded log
  reset               restart the current mode
  undo / redo         move through the session snapshot ring
  view                print the current state""")


def _print_summary(view):
    if view.get("outcome"):
        line = f"[{view['outcome']}]"
        if view.get("error"):
            line += f" {view['error']}"
        print(line)
    for proc in view["processes"]:
        where = f" @{proc['line']}:{proc['col']}" if proc["line"] else ""
        binds = ", ".join(f"{n}={v}" for n, v in proc["bindings"])
        print(f"  {proc['pid']} {proc['status']}{where}  hist={len(proc['history'])}"
              f" log={len(proc['log'])}")
        print(f"    expr: {_clip(proc['expr'])}")
        if binds:
            print(f"    env:  {_clip(binds)}")
        if proc["output"]:
            print(f"    out:  {proc['output']!r}")
    if view["mailbox"]:
        msgs = ", ".join(f"{m['id']}:{m['from']}->{m['to']} {m['value']}"
                         for m in view["mailbox"])
        print(f"  mailbox: {_clip(msgs)}")
    if view["requests"]:
        print(f"  requests: {', '.join(view['requests'])}")
    detail = view.get("detail")
    if detail:
        binds = ", ".join(f"{n}={v}" for n, v in detail["env"])
        print(f"  snapshot {detail['pid']} history[{detail['index']}] "
              f"({detail['kind']}):")
        print(f"    expr: {_clip(detail['expr'])}")
        if binds:
            print(f"    env:  {_clip(binds)}")


def _clip(text, width=100):
    return text if len(text) <= width else text[: width - 3] + "..."


def cmd_serve(args):
    from .service import serve

    def setup(service):
        if args.file:
            source = _load(args.file)
            log_text = _load(args.log) if args.log else None
            sid = service.manager.create_session(source, args.entry,
                                                 log_text=log_text)
            print(f"serving session {sid} on port {args.port}")

    serve(port=args.port, setup=setup)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="revdbg",
                                     description="causal-consistent reversible debugger")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, entry_required=True):
        p.add_argument("file", help="source file")
        p.add_argument("-e", "--entry", required=entry_required,
                       help="entry point, e.g. 'main()' or 'fact(5)'")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--policy", choices=("random", "roundrobin"),
                       default="random")
        p.add_argument("--max-steps", type=int, default=100000)

    p = sub.add_parser("run", help="run a program to completion")
    common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("trace", help="run and record a replayable log")
    common(p)
    p.add_argument("-o", "--output", required=True, help="log file to write")
    p.add_argument("--derivation", help="also write the full derivation")
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("replay", help="replay a recorded log")
    common(p)
    p.add_argument("-l", "--log", required=True, help="log file to replay")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("debug", help="interactive debugging session")
    common(p)
    p.add_argument("-l", "--log", help="start in replay mode with this log")
    p.set_defaults(fn=cmd_debug)

    p = sub.add_parser("lint", help="validate a log file")
    p.add_argument("log", help="log file to check")
    p.add_argument("--fifo", action="store_true",
                   help="also warn when per-pair delivery order is violated")
    p.set_defaults(fn=cmd_lint)

    p = sub.add_parser("serve", help="serve the JSON debugging protocol")
    p.add_argument("file", nargs="?", help="source file for the default session")
    p.add_argument("-e", "--entry", default="main()")
    p.add_argument("-l", "--log")
    p.add_argument("--port", type=int, default=4715)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, MalformedLogError, CommandError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
