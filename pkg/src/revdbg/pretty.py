"""Pretty-printer for programs, expressions and runtime values.

Printed syntax re-parses to a structurally equal tree (source positions
aside).  Runtime-only forms (pids, closures, futures) render in a readable
but non-parseable notation; they never occur in parsed trees.
"""

from __future__ import annotations

import re

from .syntax import (
    Atom, Call, Case, Clause, Closure, Cons, Fun, FunDef, FutureVar, Hole, If,
    Lit, Match, Module, Nil, Op, PidVal, Program, Receive, RESERVED, Send, Seq,
    Tup, Var,
)

_PLAIN_ATOM = re.compile(r"^[a-z][a-zA-Z0-9_@]*$")

# binding strength, loosest first; mirrors the parser's ladder
_PREC_MATCH = 1      # = !
_PREC_ORELSE = 2
_PREC_ANDALSO = 3
_PREC_CMP = 4
_PREC_CONCAT = 5
_PREC_ADD = 6
_PREC_MUL = 7
_PREC_UNARY = 8
_PREC_MAX = 9

_BIN_PREC = {
    "orelse": _PREC_ORELSE, "andalso": _PREC_ANDALSO,
    "==": _PREC_CMP, "/=": _PREC_CMP, "=<": _PREC_CMP, "<": _PREC_CMP,
    ">=": _PREC_CMP, ">": _PREC_CMP,
    "++": _PREC_CONCAT,
    "+": _PREC_ADD, "-": _PREC_ADD, "or": _PREC_ADD, "xor": _PREC_ADD,
    "*": _PREC_MUL, "/": _PREC_MUL, "div": _PREC_MUL, "rem": _PREC_MUL,
    "and": _PREC_MUL,
}
_RIGHT_ASSOC = {"++"}

_STR_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def atom_text(a):
    if _PLAIN_ATOM.match(a.name) and a.name not in RESERVED:
        return a.name
    quoted = a.name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{quoted}'"


def _string_text(s):
    return '"' + "".join(_STR_ESCAPES.get(c, c) for c in s) + '"'


def _float_text(v):
    text = repr(v)
    return text


def _clause_text(c, with_name=None):
    head = ""
    if with_name is not None or c.patterns or with_name == "":
        pats = ",".join(pretty(p) for p in c.patterns)
        if with_name is not None:
            head = f"{with_name}({pats})"
        else:
            head = f"({pats})"
    guard = f" when {pretty(c.guard)}" if c.guard is not None else ""
    return f"{head}{guard} -> {pretty(c.body)}"


def _cr_clause_text(c):
    guard = f" when {pretty(c.guard)}" if c.guard is not None else ""
    return f"{pretty(c.patterns[0])}{guard} -> {pretty(c.body)}"


def pretty(node, prec=0):
    """Render a node; parenthesizes by operator precedence."""
    if isinstance(node, Lit):
        v = node.value
        if isinstance(v, Atom):
            return atom_text(v)
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v) if v >= 0 else _wrap(str(v), _PREC_UNARY, prec)
        if isinstance(v, float):
            t = _float_text(v)
            return t if v >= 0 else _wrap(t, _PREC_UNARY, prec)
        if isinstance(v, str):
            return _string_text(v)
        raise TypeError(f"unprintable literal {v!r}")
    if isinstance(node, Var):
        return node.name
    if isinstance(node, PidVal):
        return str(node)
    if isinstance(node, FutureVar):
        return f"#Future<{node.n}>"
    if isinstance(node, Hole):
        return "[]hole[]"
    if isinstance(node, Closure):
        arity = len(node.fun.clauses[0].patterns)
        return f"#Fun<{arity}>"
    if isinstance(node, Tup):
        return "{" + ",".join(pretty(e) for e in node.elems) + "}"
    if isinstance(node, (Nil, Cons)):
        return _list_text(node)
    if isinstance(node, Seq):
        return ", ".join(pretty(e) for e in node.exprs)
    if isinstance(node, Match):
        text = f"{pretty(node.pattern, _PREC_MATCH + 1)} = {pretty(node.expr, _PREC_MATCH)}"
        return _wrap(text, _PREC_MATCH, prec)
    if isinstance(node, Send):
        text = f"{pretty(node.target, _PREC_MATCH + 1)} ! {pretty(node.message, _PREC_MATCH)}"
        return _wrap(text, _PREC_MATCH, prec)
    if isinstance(node, Op):
        return _op_text(node, prec)
    if isinstance(node, Call):
        if isinstance(node.fn, (Lit, Var)):
            fn = pretty(node.fn)
        else:
            fn = "(" + pretty(node.fn) + ")"
        mod = f"{atom_text(node.module)}:" if node.module is not None else ""
        args = ",".join(pretty(a) for a in node.args)
        return f"{mod}{fn}({args})"
    if isinstance(node, Case):
        cls = "; ".join(_cr_clause_text(c) for c in node.clauses)
        return f"case {pretty(node.scrutinee)} of {cls} end"
    if isinstance(node, Receive):
        cls = "; ".join(_cr_clause_text(c) for c in node.clauses)
        return f"receive {cls} end"
    if isinstance(node, If):
        cls = "; ".join(f"{pretty(c.guard)} -> {pretty(c.body)}" for c in node.clauses)
        return f"if {cls} end"
    if isinstance(node, Fun):
        cls = "; ".join(_clause_text(c) for c in node.clauses)
        return f"fun{cls} end"
    if isinstance(node, (Program, Module, FunDef, Clause)):
        return pretty_toplevel(node)
    raise TypeError(f"unprintable node {node!r}")


def _wrap(text, node_prec, ctx_prec):
    return f"({text})" if node_prec < ctx_prec else text


def _op_text(node, prec):
    if len(node.args) == 1:
        sep = " " if node.name == "not" else ""
        text = f"{node.name}{sep}{pretty(node.args[0], _PREC_UNARY)}"
        return _wrap(text, _PREC_UNARY, prec)
    p = _BIN_PREC[node.name]
    lp = p if node.name not in _RIGHT_ASSOC else p + 1
    rp = p + 1 if node.name not in _RIGHT_ASSOC else p
    if p == _PREC_CMP:
        lp = rp = p + 1  # comparisons do not associate
    text = f"{pretty(node.args[0], lp)} {node.name} {pretty(node.args[1], rp)}"
    return _wrap(text, p, prec)


def _list_text(node):
    elems = []
    while isinstance(node, Cons):
        elems.append(pretty(node.head))
        node = node.tail
    if isinstance(node, Nil):
        return "[" + ",".join(elems) + "]"
    return "[" + ",".join(elems) + "|" + pretty(node) + "]"


def pretty_toplevel(node):
    if isinstance(node, Program):
        return "\n".join(pretty_toplevel(m) for m in node.modules)
    if isinstance(node, Module):
        header = f"-module({atom_text(node.name)}).\n\n"
        return header + "\n".join(pretty_toplevel(f) for f in node.funs)
    if isinstance(node, FunDef):
        name = atom_text(node.name)
        rules = ";\n".join(_fundef_clause_text(name, c) for c in node.clauses)
        return rules + ".\n"
    if isinstance(node, Clause):
        return _clause_text(node)
    raise TypeError(f"not a top-level node: {node!r}")


def _fundef_clause_text(name, c):
    pats = ",".join(pretty(p) for p in c.patterns)
    guard = f" when {pretty(c.guard)}" if c.guard is not None else ""
    return f"{name}({pats}){guard} -> {pretty(c.body)}"


def pretty_print(node):
    """Public entry: programs get the top-level layout, all else inline."""
    if isinstance(node, (Program, Module, FunDef)):
        return pretty_toplevel(node)
    return pretty(node)
