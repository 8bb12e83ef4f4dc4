"""Small-step semantics of expressions over (environment, expression, stack).

One step reduces the leftmost-innermost redex under eager evaluation.
Sequential redexes step silently; send/receive/spawn/self redexes emit a
label carrying what the system level needs to finish the step (the actual
side effect happens there, with a future variable standing in for the
result that is only known system-side).

The stack holds evaluation contexts: `if`/`case`/`receive` and function
calls park their surrounding context (calls also park the environment)
so clause bodies, which may be expression sequences, always evaluate in
statement position.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import pretty as pp
from .syntax import (
    Atom, Call, Case, Closure, Cons, Fun, FutureVar, Hole, If, Lit,
    Match, Nil, Op, PidVal, Receive, Send, Seq, Tup, Var,
    free_var_names, is_value, list_to_values,
)


class StuckError(Exception):
    """No evaluation rule applies; carries the offending redex."""

    def __init__(self, reason, redex=None, pos=None):
        self.reason = reason
        self.redex = redex
        self.pos = pos
        detail = f" at {pos[0]}:{pos[1]}" if pos else ""
        super().__init__(f"{reason}{detail}")


class BifError(Exception):
    pass


# --- stack frames ---

@dataclass(frozen=True)
class SeqFrame:
    ctx: object  # expression with one Hole


@dataclass(frozen=True)
class CallFrame:
    env: dict
    ctx: object


# --- step labels ---

@dataclass(frozen=True)
class Tau:
    output: str = ""


@dataclass(frozen=True)
class SendLabel:
    target: object
    payload: object


@dataclass(frozen=True)
class ReceiveLabel:
    kappa: FutureVar
    clauses: tuple


@dataclass(frozen=True)
class SpawnLabel:
    kappa: FutureVar
    module: object  # Atom or None
    fname: Atom
    args: tuple


@dataclass(frozen=True)
class SpawnBodyLabel:
    kappa: FutureVar
    body: object


@dataclass(frozen=True)
class SelfLabel:
    kappa: FutureVar


# --- substitutions ---

def subst_env(node, env):
    """Apply an environment to a term (used on patterns: ``pat θ``)."""
    if not env:
        return node
    if isinstance(node, Var):
        return env.get(node.name, node)
    if isinstance(node, Tup):
        return Tup(tuple(subst_env(e, env) for e in node.elems), pos=node.pos)
    if isinstance(node, Cons):
        return Cons(subst_env(node.head, env), subst_env(node.tail, env),
                    pos=node.pos)
    return node


def subst_future(node, n, replacement):
    """Replace the future variable #n# by a value or clause body."""
    if isinstance(node, FutureVar):
        return replacement if node.n == n else node
    if isinstance(node, Tup):
        return Tup(tuple(subst_future(e, n, replacement) for e in node.elems),
                   pos=node.pos)
    if isinstance(node, Cons):
        return Cons(subst_future(node.head, n, replacement),
                    subst_future(node.tail, n, replacement), pos=node.pos)
    if isinstance(node, Seq):
        return Seq(tuple(subst_future(e, n, replacement) for e in node.exprs),
                   pos=node.pos)
    if isinstance(node, Match):
        return Match(node.pattern, subst_future(node.expr, n, replacement),
                     pos=node.pos)
    if isinstance(node, Send):
        return Send(subst_future(node.target, n, replacement),
                    subst_future(node.message, n, replacement), pos=node.pos)
    if isinstance(node, Case):
        return Case(subst_future(node.scrutinee, n, replacement), node.clauses,
                    pos=node.pos)
    if isinstance(node, Call):
        return Call(node.module, subst_future(node.fn, n, replacement),
                    tuple(subst_future(a, n, replacement) for a in node.args),
                    pos=node.pos)
    if isinstance(node, Op):
        return Op(node.name,
                  tuple(subst_future(a, n, replacement) for a in node.args),
                  pos=node.pos)
    return node


# --- pattern matching and clause selection ---

def match_pattern(pat, value):
    """Minimal bindings making the (pre-substituted) pattern equal the value."""
    bindings = {}

    def walk(p, v):
        if isinstance(p, Var):
            if p.name == "_":
                return True
            if p.name in bindings:
                return bindings[p.name] == v
            bindings[p.name] = v
            return True
        if isinstance(p, Lit):
            return isinstance(v, Lit) and _lit_eq(p.value, v.value)
        if isinstance(p, Nil):
            return isinstance(v, Nil)
        if isinstance(p, Cons):
            return (isinstance(v, Cons) and walk(p.head, v.head)
                    and walk(p.tail, v.tail))
        if isinstance(p, Tup):
            return (isinstance(v, Tup) and len(p.elems) == len(v.elems)
                    and all(walk(a, b) for a, b in zip(p.elems, v.elems)))
        # values substituted into the pattern by the environment
        return p == v

    if walk(pat, value):
        return bindings
    return None


def _lit_eq(a, b):
    # exact term equality: pattern literals do not coerce across types
    return type(a) is type(b) and a == b


def match_clauses(mode, clauses, env, scrutinee):
    """First clause whose pattern matches and whose guard holds.

    mode 'case'/'receive': scrutinee is one value, clauses are unary.
    mode 'fun': scrutinee is a list of argument values.
    Returns (bindings, body, index) or None.
    """
    if mode == "fun":
        args = list(scrutinee)
    for idx, clause in enumerate(clauses):
        if mode == "fun":
            if len(clause.patterns) != len(args):
                continue
            pat = Tup(clause.patterns)
            val = Tup(tuple(args))
        else:
            pat = clause.patterns[0]
            val = scrutinee
        sigma = match_pattern(subst_env(pat, env), val)
        if sigma is None:
            continue
        if clause.guard is not None:
            guard_env = {**env, **sigma}
            if not guard_holds(clause.guard, guard_env):
                continue
        return sigma, clause.body, idx
    return None


def eval_guard(guards, env):
    """Index (1-based in the rules; 0-based here) of the first true guard."""
    for idx, g in enumerate(guards):
        if guard_holds(g, env):
            return idx
    return None


def guard_holds(guard, env):
    try:
        v = _eval_guard_expr(guard, env)
    except BifError:
        return False  # a failing guard counts as false
    return isinstance(v, Lit) and v.value == Atom("true")


def _eval_guard_expr(e, env):
    if isinstance(e, Lit) or isinstance(e, (Nil, PidVal, Closure)):
        return e
    if isinstance(e, Var):
        if e.name in env:
            return env[e.name]
        raise BifError(f"unbound variable {e.name} in guard")
    if isinstance(e, Tup):
        return Tup(tuple(_eval_guard_expr(x, env) for x in e.elems))
    if isinstance(e, Cons):
        return Cons(_eval_guard_expr(e.head, env), _eval_guard_expr(e.tail, env))
    if isinstance(e, Op):
        if e.name in ("andalso", "orelse"):
            first = _eval_guard_expr(e.args[0], env)
            if not (isinstance(first, Lit) and first.value in (Atom("true"), Atom("false"))):
                raise BifError("non-boolean operand")
            if e.name == "andalso" and first.value == Atom("false"):
                return first
            if e.name == "orelse" and first.value == Atom("true"):
                return first
            return _eval_guard_expr(e.args[1], env)
        return eval_bif(e.name, [_eval_guard_expr(a, env) for a in e.args])
    raise BifError("illegal guard expression")


# --- built-in operators ---

_TRUE = Lit(Atom("true"))
_FALSE = Lit(Atom("false"))


def _bool(b):
    return _TRUE if b else _FALSE


def _num(v):
    if isinstance(v, Lit) and isinstance(v.value, (int, float)) \
            and not isinstance(v.value, bool):
        return v.value
    raise BifError(f"not a number: {pp.pretty(v)}")


def _type_rank(v):
    if isinstance(v, Lit):
        if isinstance(v.value, (int, float)):
            return 0
        if isinstance(v.value, Atom):
            return 1
        return 6  # strings
    if isinstance(v, Closure):
        return 2
    if isinstance(v, PidVal):
        return 3
    if isinstance(v, Tup):
        return 4
    return 5  # lists (Nil / Cons)


def compare_values(a, b):
    """Total order over all values; -1, 0 or 1."""
    ra, rb = _type_rank(a), _type_rank(b)
    if ra != rb:
        return -1 if ra < rb else 1
    if ra == 0:
        x, y = a.value, b.value
        return -1 if x < y else (1 if x > y else 0)
    if ra == 1:
        x, y = a.value.name, b.value.name
        return -1 if x < y else (1 if x > y else 0)
    if ra == 6:
        x, y = a.value, b.value
        return -1 if x < y else (1 if x > y else 0)
    if ra == 2:
        x, y = pp.pretty(a.fun), pp.pretty(b.fun)
        return -1 if x < y else (1 if x > y else 0)
    if ra == 3:
        return -1 if a.n < b.n else (1 if a.n > b.n else 0)
    if ra == 4:
        if len(a.elems) != len(b.elems):
            return -1 if len(a.elems) < len(b.elems) else 1
        for x, y in zip(a.elems, b.elems):
            c = compare_values(x, y)
            if c:
                return c
        return 0
    # lists, element-wise; Nil sorts before Cons
    while True:
        if isinstance(a, Nil) and isinstance(b, Nil):
            return 0
        if isinstance(a, Nil):
            return -1
        if isinstance(b, Nil):
            return 1
        if not isinstance(a, Cons) or not isinstance(b, Cons):
            return compare_values(a, b)  # improper tails
        c = compare_values(a.head, b.head)
        if c:
            return c
        a, b = a.tail, b.tail


def eval_bif(op, args):
    """Built-in operators on values; raises BifError on type errors."""
    if op in ("+", "-", "*", "/", "div", "rem"):
        if op == "-" and len(args) == 1:
            return Lit(-_num(args[0]))
        if len(args) != 2:
            raise BifError(f"bad arity for {op}")
        x, y = _num(args[0]), _num(args[1])
        if op == "+":
            return Lit(x + y)
        if op == "-":
            return Lit(x - y)
        if op == "*":
            return Lit(x * y)
        if op == "/":
            if y == 0:
                raise BifError("division by zero")
            return Lit(x / y)
        if not isinstance(x, int) or not isinstance(y, int):
            raise BifError(f"{op} needs integers")
        if y == 0:
            raise BifError("division by zero")
        if op == "div":
            return Lit(int(x / y))  # truncates toward zero
        return Lit(x - int(x / y) * y)
    if op in ("==", "/=", "<", "=<", ">", ">="):
        c = compare_values(args[0], args[1])
        return _bool({"==": c == 0, "/=": c != 0, "<": c < 0,
                      "=<": c <= 0, ">": c > 0, ">=": c >= 0}[op])
    if op in ("and", "or", "xor", "not", "andalso", "orelse"):
        bools = []
        for a in args:
            if isinstance(a, Lit) and a.value == Atom("true"):
                bools.append(True)
            elif isinstance(a, Lit) and a.value == Atom("false"):
                bools.append(False)
            else:
                raise BifError(f"not a boolean: {pp.pretty(a)}")
        if op == "not":
            return _bool(not bools[0])
        if op in ("and", "andalso"):
            return _bool(bools[0] and bools[1])
        if op in ("or", "orelse"):
            return _bool(bools[0] or bools[1])
        return _bool(bools[0] != bools[1])
    if op == "++":
        a, b = args
        if isinstance(a, Lit) and isinstance(a.value, str) \
                and isinstance(b, Lit) and isinstance(b.value, str):
            return Lit(a.value + b.value)
        elems = list_to_values(a)
        if elems is None:
            raise BifError("++ needs a proper list on the left")
        tail = b
        for v in reversed(elems):
            tail = Cons(v, tail)
        return tail
    raise BifError(f"unknown operator {op}")


def format_io(fmt, args):
    """io:format with ~p and ~n directives; returns the produced text."""
    out = []
    i = 0
    pending = list(args)
    while i < len(fmt):
        c = fmt[i]
        if c == "~" and i + 1 < len(fmt):
            d = fmt[i + 1]
            if d == "n":
                out.append("\n")
                i += 2
                continue
            if d == "p" or d == "w":
                if not pending:
                    raise BifError("io:format: missing argument")
                out.append(pp.pretty(pending.pop(0)))
                i += 2
                continue
            raise BifError(f"io:format: unsupported directive ~{d}")
        out.append(c)
        i += 1
    return "".join(out)


# --- evaluation contexts ---

_HOLE = Hole()


def decompose(e):
    """Split a non-value expression into (context-with-hole, redex)."""
    if isinstance(e, Var):
        return _HOLE, e
    if isinstance(e, Seq):
        if not is_value(e.exprs[0]):
            ctx, redex = decompose(e.exprs[0])
            return Seq((ctx,) + e.exprs[1:], pos=e.pos), redex
        return _HOLE, e
    if isinstance(e, Tup):
        for i, x in enumerate(e.elems):
            if not is_value(x):
                ctx, redex = decompose(x)
                return Tup(e.elems[:i] + (ctx,) + e.elems[i + 1:], pos=e.pos), redex
        raise AssertionError("tuple of values is a value")
    if isinstance(e, Cons):
        if not is_value(e.head):
            ctx, redex = decompose(e.head)
            return Cons(ctx, e.tail, pos=e.pos), redex
        if not is_value(e.tail):
            ctx, redex = decompose(e.tail)
            return Cons(e.head, ctx, pos=e.pos), redex
        raise AssertionError("list of values is a value")
    if isinstance(e, Match):
        if not is_value(e.expr):
            ctx, redex = decompose(e.expr)
            return Match(e.pattern, ctx, pos=e.pos), redex
        return _HOLE, e
    if isinstance(e, Case):
        if not is_value(e.scrutinee):
            ctx, redex = decompose(e.scrutinee)
            return Case(ctx, e.clauses, pos=e.pos), redex
        return _HOLE, e
    if isinstance(e, (If, Receive, Fun)):
        return _HOLE, e
    if isinstance(e, Send):
        if not is_value(e.target):
            ctx, redex = decompose(e.target)
            return Send(ctx, e.message, pos=e.pos), redex
        if not is_value(e.message):
            ctx, redex = decompose(e.message)
            return Send(e.target, ctx, pos=e.pos), redex
        return _HOLE, e
    if isinstance(e, Call):
        if _is_spawn_of_literal_fun(e):
            return _HOLE, e  # special form: the fun is not evaluated
        if not isinstance(e.fn, Lit) and not is_value(e.fn):
            ctx, redex = decompose(e.fn)
            return Call(e.module, ctx, e.args, pos=e.pos), redex
        for i, a in enumerate(e.args):
            if not is_value(a):
                ctx, redex = decompose(a)
                return Call(e.module, e.fn, e.args[:i] + (ctx,) + e.args[i + 1:],
                            pos=e.pos), redex
        return _HOLE, e
    if isinstance(e, Op):
        limit = 1 if e.name in ("andalso", "orelse") else len(e.args)
        for i, a in enumerate(e.args[:limit]):
            if not is_value(a):
                ctx, redex = decompose(a)
                return Op(e.name, e.args[:i] + (ctx,) + e.args[i + 1:],
                          pos=e.pos), redex
        return _HOLE, e
    raise AssertionError(f"cannot decompose {e!r}")


def _is_spawn_of_literal_fun(e):
    return (e.module is None and isinstance(e.fn, Lit)
            and e.fn.value == Atom("spawn") and len(e.args) == 1
            and isinstance(e.args[0], Fun)
            and not free_var_names(e.args[0]))


def plug(ctx, filler):
    """Fill the unique hole of a context."""
    if isinstance(ctx, Hole):
        return filler
    if isinstance(ctx, Seq):
        return Seq(_plug_seq(ctx.exprs, filler), pos=ctx.pos)
    if isinstance(ctx, Tup):
        return Tup(_plug_seq(ctx.elems, filler), pos=ctx.pos)
    if isinstance(ctx, Cons):
        if _has_hole(ctx.head):
            return Cons(plug(ctx.head, filler), ctx.tail, pos=ctx.pos)
        return Cons(ctx.head, plug(ctx.tail, filler), pos=ctx.pos)
    if isinstance(ctx, Match):
        return Match(ctx.pattern, plug(ctx.expr, filler), pos=ctx.pos)
    if isinstance(ctx, Case):
        return Case(plug(ctx.scrutinee, filler), ctx.clauses, pos=ctx.pos)
    if isinstance(ctx, Send):
        if _has_hole(ctx.target):
            return Send(plug(ctx.target, filler), ctx.message, pos=ctx.pos)
        return Send(ctx.target, plug(ctx.message, filler), pos=ctx.pos)
    if isinstance(ctx, Call):
        if _has_hole(ctx.fn):
            return Call(ctx.module, plug(ctx.fn, filler), ctx.args, pos=ctx.pos)
        return Call(ctx.module, ctx.fn, _plug_seq(ctx.args, filler), pos=ctx.pos)
    if isinstance(ctx, Op):
        return Op(ctx.name, _plug_seq(ctx.args, filler), pos=ctx.pos)
    raise AssertionError(f"no hole in {ctx!r}")


def _plug_seq(items, filler):
    out = []
    done = False
    for x in items:
        if not done and _has_hole(x):
            out.append(plug(x, filler))
            done = True
        else:
            out.append(x)
    if not done:
        raise AssertionError("no hole in item sequence")
    return tuple(out)


def _has_hole(e):
    if isinstance(e, Hole):
        return True
    if isinstance(e, Seq):
        return any(_has_hole(x) for x in e.exprs)
    if isinstance(e, Tup):
        return any(_has_hole(x) for x in e.elems)
    if isinstance(e, Cons):
        return _has_hole(e.head) or _has_hole(e.tail)
    if isinstance(e, Match):
        return _has_hole(e.expr)
    if isinstance(e, Case):
        return _has_hole(e.scrutinee)
    if isinstance(e, Send):
        return _has_hole(e.target) or _has_hole(e.message)
    if isinstance(e, Call):
        return _has_hole(e.fn) or any(_has_hole(a) for a in e.args)
    if isinstance(e, Op):
        return any(_has_hole(a) for a in e.args)
    return False


# --- the step function ---

def capture_closure(env, fun):
    names = sorted(free_var_names(fun) & set(env))
    return Closure(tuple((n, env[n]) for n in names), fun)


def closure_env(closure):
    return dict(closure.env)


def step_expr(program, env, expr, stack, next_future=0):
    """One expression step; returns (env', expr', stack', label).

    Raises StuckError when no rule applies.  The caller guarantees the
    triple is not terminal (a value with an empty stack).
    """
    if is_value(expr):
        if not stack:
            raise AssertionError("step_expr on a terminal triple")
        frame = stack[0]
        rest = stack[1:]
        if isinstance(frame, SeqFrame):
            return env, plug(frame.ctx, expr), rest, Tau()
        return dict(frame.env), plug(frame.ctx, expr), rest, Tau()

    ctx, redex = decompose(expr)

    if isinstance(redex, Var):
        if redex.name not in env:
            raise StuckError(f"unbound variable {redex.name}", redex, redex.pos)
        return env, plug(ctx, env[redex.name]), stack, Tau()

    if isinstance(redex, Seq):
        rest = redex.exprs[1:]
        new = rest[0] if len(rest) == 1 else Seq(rest, pos=redex.pos)
        return env, plug(ctx, new), stack, Tau()

    if isinstance(redex, Match):
        sigma = match_pattern(subst_env(redex.pattern, env), redex.expr)
        if sigma is None:
            raise StuckError(
                f"no match of right hand side value {pp.pretty(redex.expr)}",
                redex, redex.pos)
        return {**env, **sigma}, plug(ctx, redex.expr), stack, Tau()

    if isinstance(redex, Case):
        m = match_clauses("case", redex.clauses, env, redex.scrutinee)
        if m is None:
            raise StuckError(
                f"no case clause matching {pp.pretty(redex.scrutinee)}",
                redex, redex.pos)
        sigma, body, _ = m
        return {**env, **sigma}, body, (SeqFrame(ctx),) + stack, Tau()

    if isinstance(redex, If):
        idx = eval_guard([c.guard for c in redex.clauses], env)
        if idx is None:
            raise StuckError("no true branch in if expression", redex, redex.pos)
        return env, redex.clauses[idx].body, (SeqFrame(ctx),) + stack, Tau()

    if isinstance(redex, Receive):
        kappa = FutureVar(next_future)
        return env, kappa, (SeqFrame(ctx),) + stack, \
            ReceiveLabel(kappa, redex.clauses)

    if isinstance(redex, Send):
        return env, plug(ctx, redex.message), stack, \
            SendLabel(redex.target, redex.message)

    if isinstance(redex, Fun):
        return env, plug(ctx, capture_closure(env, redex)), stack, Tau()

    if isinstance(redex, Op):
        return _step_op(env, ctx, redex, stack)

    if isinstance(redex, Call):
        return _step_call(program, env, ctx, redex, stack, next_future)

    raise AssertionError(f"unhandled redex {redex!r}")


def _step_op(env, ctx, redex, stack):
    if redex.name in ("andalso", "orelse"):
        first = redex.args[0]
        if not isinstance(first, Lit) or first.value not in (Atom("true"), Atom("false")):
            raise StuckError(f"bad boolean in {redex.name}", redex, redex.pos)
        truth = first.value == Atom("true")
        if redex.name == "andalso":
            result = redex.args[1] if truth else _FALSE
        else:
            result = _TRUE if truth else redex.args[1]
        return env, plug(ctx, result), stack, Tau()
    try:
        value = eval_bif(redex.name, list(redex.args))
    except BifError as exc:
        raise StuckError(str(exc), redex, redex.pos) from exc
    return env, plug(ctx, value), stack, Tau()


def _step_call(program, env, ctx, redex, stack, next_future):
    fn = redex.fn
    args = redex.args
    kappa = FutureVar(next_future)

    if redex.module is None and isinstance(fn, Lit) and isinstance(fn.value, Atom):
        name = fn.value.name
        if name == "self" and not args:
            return env, plug(ctx, kappa), stack, SelfLabel(kappa)
        if name == "spawn":
            return _step_spawn(env, ctx, redex, stack, kappa)

    if redex.module == Atom("io") and isinstance(fn, Lit) \
            and fn.value == Atom("format"):
        return _step_io_format(env, ctx, redex, stack)

    if isinstance(fn, Closure):
        m = match_clauses("fun", fn.fun.clauses, closure_env(fn), list(args))
        if m is None:
            raise StuckError("no matching fun clause", redex, redex.pos)
        sigma, body, _ = m
        return {**closure_env(fn), **sigma}, body, \
            (CallFrame(env, ctx),) + stack, Tau()

    if isinstance(fn, Lit) and isinstance(fn.value, Atom):
        mod = redex.module.name if redex.module is not None else None
        fd = program.lookup(fn.value.name, len(args), module=mod)
        if fd is None:
            where = f"{mod}:" if mod else ""
            raise StuckError(f"undefined function {where}{fn.value.name}/{len(args)}",
                             redex, redex.pos)
        m = match_clauses("fun", fd.clauses, {}, list(args))
        if m is None:
            raise StuckError(
                f"no function clause of {fn.value.name}/{len(args)} matches",
                redex, redex.pos)
        sigma, body, _ = m
        return dict(sigma), body, (CallFrame(env, ctx),) + stack, Tau()

    raise StuckError(f"not a function: {pp.pretty(fn)}", redex, redex.pos)


def _step_spawn(env, ctx, redex, stack, kappa):
    args = redex.args
    if len(args) == 3:
        mod, fname, arglist = args
        if not (isinstance(mod, Lit) and isinstance(mod.value, Atom)
                and isinstance(fname, Lit) and isinstance(fname.value, Atom)):
            raise StuckError("spawn/3 needs module and function atoms",
                             redex, redex.pos)
        elems = list_to_values(arglist)
        if elems is None:
            raise StuckError("spawn argument list is not a proper list",
                             redex, redex.pos)
        return env, plug(ctx, kappa), stack, \
            SpawnLabel(kappa, mod.value, fname.value, tuple(elems))
    if len(args) == 2:
        fname, arglist = args
        if not (isinstance(fname, Lit) and isinstance(fname.value, Atom)):
            raise StuckError("spawn/2 needs a function atom", redex, redex.pos)
        elems = list_to_values(arglist)
        if elems is None:
            raise StuckError("spawn argument list is not a proper list",
                             redex, redex.pos)
        return env, plug(ctx, kappa), stack, \
            SpawnLabel(kappa, None, fname.value, tuple(elems))
    if len(args) == 1:
        arg = args[0]
        if isinstance(arg, Fun):  # closed literal fun: child starts at its body
            if arg.clauses[0].patterns:
                raise StuckError("spawn/1 needs a nullary fun", redex, redex.pos)
            return env, plug(ctx, kappa), stack, \
                SpawnBodyLabel(kappa, arg.clauses[0].body)
        if isinstance(arg, Closure):
            if arg.fun.clauses[0].patterns:
                raise StuckError("spawn/1 needs a nullary fun", redex, redex.pos)
            return env, plug(ctx, kappa), stack, \
                SpawnBodyLabel(kappa, Call(None, arg, ()))
        raise StuckError("spawn/1 needs a fun", redex, redex.pos)
    raise StuckError(f"bad spawn arity {len(args)}", redex, redex.pos)


def _step_io_format(env, ctx, redex, stack):
    args = redex.args
    if not args or not (isinstance(args[0], Lit) and isinstance(args[0].value, str)):
        raise StuckError("io:format needs a format string", redex, redex.pos)
    fmt_args = []
    if len(args) == 2:
        elems = list_to_values(args[1])
        if elems is None:
            raise StuckError("io:format arguments must be a proper list",
                             redex, redex.pos)
        fmt_args = elems
    elif len(args) > 2:
        raise StuckError("bad io:format arity", redex, redex.pos)
    try:
        text = format_io(args[0].value, fmt_args)
    except BifError as exc:
        raise StuckError(str(exc), redex, redex.pos) from exc
    return env, plug(ctx, Lit(Atom("ok"))), stack, Tau(output=text)


def redex_position(env, expr, stack):
    """Source position to highlight: the redex's, else the nearest context's."""
    probe = expr
    if is_value(expr):
        if not stack:
            return None
        frame = stack[0]
        probe = frame.ctx
        if isinstance(probe, Hole):
            return None
    else:
        try:
            _, redex = decompose(expr)
        except AssertionError:
            return None
        if redex.pos is not None:
            return redex.pos
        probe = expr
    return _first_pos(probe)


def _first_pos(node):
    stack = [node]
    while stack:
        n = stack.pop()
        if getattr(n, "pos", None) is not None:
            return n.pos
        for attr in ("exprs", "elems", "args", "clauses", "patterns"):
            v = getattr(n, attr, None)
            if isinstance(v, tuple):
                stack.extend(v)
        for attr in ("head", "tail", "pattern", "expr", "scrutinee", "target",
                     "message", "fn", "body", "guard", "ctx"):
            v = getattr(n, attr, None)
            if v is not None and not isinstance(v, (str, int)):
                stack.append(v)
    return None
