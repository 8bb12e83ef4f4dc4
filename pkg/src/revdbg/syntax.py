"""Abstract syntax, lexer and parser for the supported Erlang subset.

Programs are collections of modules, each holding function definitions
made of pattern/guard clauses.  Expressions cover literals, variables,
tuples, lists, sequences, pattern-matching equations, case/if/receive,
message sending, calls (plain, module-qualified and higher-order),
anonymous functions and operator applications.

Every AST node carries an optional source position ``pos`` (line, column)
that is excluded from structural equality, so re-parsed pretty-printed
trees compare equal to the originals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple


class ParseError(Exception):
    def __init__(self, message, line=None, col=None, expected=None):
        self.message = message
        self.line = line
        self.col = col
        self.expected = set(expected or ())
        where = f" at {line}:{col}" if line is not None else ""
        hint = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message}{where}{hint}")


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Node:
    pos: Optional[Tuple[int, int]] = field(
        default=None, compare=False, repr=False, kw_only=True
    )


# --- expressions, patterns and values (patterns/values are restricted shapes) ---

@dataclass(frozen=True)
class Lit(Node):
    value: object  # Atom | int | float | str


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Tup(Node):
    elems: tuple


@dataclass(frozen=True)
class Nil(Node):
    pass


@dataclass(frozen=True)
class Cons(Node):
    head: object
    tail: object


@dataclass(frozen=True)
class Seq(Node):
    """Expression sequence e1, ..., en (n >= 2); statement positions only."""
    exprs: tuple


@dataclass(frozen=True)
class Match(Node):
    pattern: object
    expr: object


@dataclass(frozen=True)
class Clause(Node):
    patterns: tuple
    guard: object  # Expr or None
    body: object   # single Expr or Seq


@dataclass(frozen=True)
class Case(Node):
    scrutinee: object
    clauses: tuple


@dataclass(frozen=True)
class If(Node):
    clauses: tuple  # Clauses with empty patterns and mandatory guards


@dataclass(frozen=True)
class Receive(Node):
    clauses: tuple


@dataclass(frozen=True)
class Send(Node):
    target: object
    message: object


@dataclass(frozen=True)
class Call(Node):
    module: object  # Atom or None
    fn: object      # Lit(Atom) for named calls, arbitrary expr otherwise
    args: tuple


@dataclass(frozen=True)
class Fun(Node):
    clauses: tuple


@dataclass(frozen=True)
class Op(Node):
    name: str
    args: tuple


# --- runtime-only value forms ---

@dataclass(frozen=True)
class PidVal(Node):
    n: int

    def __str__(self):
        return f"<0.{self.n}.0>"


@dataclass(frozen=True)
class Closure(Node):
    """A fun together with its captured environment (sorted name/value pairs)."""
    env: tuple
    fun: Fun


@dataclass(frozen=True)
class FutureVar(Node):
    """Placeholder produced by side-effect redexes, bound at the system level."""
    n: int


@dataclass(frozen=True)
class Hole(Node):
    """The single hole of an evaluation context."""
    pass


# --- program structure ---

@dataclass(frozen=True)
class FunDef(Node):
    name: Atom
    arity: int
    clauses: tuple


@dataclass(frozen=True)
class Module(Node):
    name: Atom
    funs: tuple

    def fundef(self, name, arity):
        for fd in self.funs:
            if fd.name.name == name and fd.arity == arity:
                return fd
        return None


@dataclass(frozen=True)
class Program(Node):
    modules: tuple

    def lookup(self, name, arity, module=None):
        """Resolve name/arity, optionally within one module; None when absent."""
        if module is not None:
            for m in self.modules:
                if m.name.name == module:
                    return m.fundef(name, arity)
            return None
        for m in self.modules:
            fd = m.fundef(name, arity)
            if fd is not None:
                return fd
        return None


RESERVED = {
    "when", "end", "fun", "case", "of", "receive", "if",
    "andalso", "orelse", "and", "or", "xor", "not", "rem", "div",
}

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", '"': '"', "'": "'", "0": "\0",
            "b": "\b", "f": "\f", "v": "\v", "e": "\x1b", "s": " "}


@dataclass
class Tok:
    kind: str   # atom var int float string punct eof
    value: object
    line: int
    col: int


_PUNCT = [
    "->", "==", "/=", "=<", ">=", "++", "!", "=", "<", ">", "+", "-", "*", "/",
    "(", ")", "{", "}", "[", "]", ",", ";", "|", ".", ":",
]


def tokenize(source):
    toks = []
    i, line, col = 0, 1, 1
    n = len(source)

    def err(msg):
        raise ParseError(msg, line, col)

    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "%":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            is_float = False
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                is_float = True
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    is_float = True
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            toks.append(Tok("float" if is_float else "int",
                            float(text) if is_float else int(text),
                            start_line, start_col))
            col += j - i
            i = j
            continue
        if c == "$":  # character literal, yields its code point
            i += 1
            col += 1
            if i >= n:
                err("unterminated character literal")
            if source[i] == "\\":
                i += 1
                col += 1
                if i >= n:
                    err("unterminated character escape")
                ch = _ESCAPES.get(source[i], source[i])
            else:
                ch = source[i]
            toks.append(Tok("int", ord(ch), start_line, start_col))
            i += 1
            col += 1
            continue
        if c == '"' or c == "'":
            quote = c
            i += 1
            col += 1
            buf = []
            while i < n and source[i] != quote:
                if source[i] == "\\":
                    i += 1
                    col += 1
                    if i >= n:
                        err("unterminated escape")
                    buf.append(_ESCAPES.get(source[i], source[i]))
                elif source[i] == "\n":
                    err("newline in quoted literal")
                else:
                    buf.append(source[i])
                i += 1
                col += 1
            if i >= n:
                err("unterminated quoted literal")
            i += 1
            col += 1
            text = "".join(buf)
            if quote == '"':
                toks.append(Tok("string", text, start_line, start_col))
            else:
                toks.append(Tok("atom", text, start_line, start_col))
            continue
        if c.islower():
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_@"):
                j += 1
            toks.append(Tok("atom", source[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isupper() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_@"):
                j += 1
            toks.append(Tok("var", source[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if source.startswith(p, i):
                toks.append(Tok(p, p, start_line, start_col))
                i += len(p)
                col += len(p)
                break
        else:
            err(f"unexpected character {c!r}")
    toks.append(Tok("eof", None, line, col))
    return toks


_COMPARISONS = {"==", "/=", "=<", "<", ">=", ">"}
_ADDITIVE = {"+", "-", "or", "xor"}
_MULTIPLICATIVE = {"*", "/", "div", "rem", "and"}


class _Parser:
    def __init__(self, source):
        self.toks = tokenize(source)
        self.i = 0

    def peek(self, ahead=0):
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def at(self, kind, value=None):
        t = self.peek()
        if t.kind != kind:
            return False
        return value is None or t.value == value

    def at_word(self, word):
        t = self.peek()
        return t.kind == "atom" and t.value == word

    def advance(self):
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, kind, value=None):
        t = self.peek()
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            raise ParseError(f"unexpected {self._describe(t)}", t.line, t.col,
                             expected={str(want)})
        return self.advance()

    @staticmethod
    def _describe(t):
        if t.kind == "eof":
            return "end of input"
        return repr(t.value if t.kind in ("atom", "var") else t.value)

    def fail(self, msg, expected=None):
        t = self.peek()
        raise ParseError(msg, t.line, t.col, expected=expected)

    # --- program level ---

    def parse_program(self):
        modules = []
        cur_name = None
        cur_funs = []
        seen = set()

        def close_module():
            nonlocal cur_name, cur_funs, seen
            if cur_name is not None or cur_funs:
                name = cur_name if cur_name is not None else Atom("main")
                pos = cur_funs[0].pos if cur_funs else (1, 1)
                modules.append(Module(name, tuple(cur_funs), pos=pos))
            cur_name, cur_funs, seen = None, [], set()

        while not self.at("eof"):
            if self.at("-"):
                t = self.advance()
                attr = self.expect("atom")
                if attr.value != "module":
                    raise ParseError(f"unsupported attribute -{attr.value}",
                                     attr.line, attr.col, expected={"module"})
                self.expect("(")
                name = self.expect("atom")
                self.expect(")")
                self.expect(".")
                close_module()
                cur_name = Atom(name.value)
                continue
            fd = self.parse_fundef()
            key = (fd.name.name, fd.arity)
            if key in seen:
                raise ParseError(
                    f"duplicate definition of {fd.name.name}/{fd.arity}",
                    fd.pos[0], fd.pos[1])
            seen.add(key)
            cur_funs.append(fd)
        close_module()
        return Program(tuple(modules), pos=(1, 1))

    def parse_fundef(self):
        first = self.peek()
        clauses = []
        name = None
        arity = None
        while True:
            t = self.expect("atom")
            if name is None:
                name = t.value
            elif t.value != name:
                raise ParseError(
                    f"clause head {t.value!r} does not match {name!r}",
                    t.line, t.col)
            self.expect("(")
            pats = self.parse_pattern_list(")")
            self.expect(")")
            if arity is None:
                arity = len(pats)
            elif len(pats) != arity:
                raise ParseError(
                    f"clause of {name} has arity {len(pats)}, expected {arity}",
                    t.line, t.col)
            guard = None
            if self.at_word("when"):
                self.advance()
                guard = self.parse_guard()
            self.expect("->")
            body = self.parse_body()
            clauses.append(Clause(tuple(pats), guard, body,
                                  pos=(t.line, t.col)))
            if self.at(";"):
                self.advance()
                continue
            break
        self.expect(".")
        return FunDef(Atom(name), arity, tuple(clauses),
                      pos=(first.line, first.col))

    # --- expressions ---

    def parse_body(self):
        """An expression sequence; collapses to the single expression."""
        first = self.peek()
        es = [self.parse_expr()]
        while self.at(","):
            self.advance()
            es.append(self.parse_expr())
        if len(es) == 1:
            return es[0]
        return Seq(tuple(es), pos=(first.line, first.col))

    def parse_expr(self):
        return self.parse_match_level()

    def parse_match_level(self):
        lhs = self.parse_orelse()
        t = self.peek()
        if self.at("="):
            self.advance()
            pat = self.to_pattern(lhs)
            rhs = self.parse_match_level()
            return Match(pat, rhs, pos=lhs.pos or (t.line, t.col))
        if self.at("!"):
            self.advance()
            rhs = self.parse_match_level()
            return Send(lhs, rhs, pos=lhs.pos or (t.line, t.col))
        return lhs

    def parse_orelse(self):
        e = self.parse_andalso()
        while self.at_word("orelse"):
            self.advance()
            rhs = self.parse_andalso()
            e = Op("orelse", (e, rhs), pos=e.pos)
        return e

    def parse_andalso(self):
        e = self.parse_comparison()
        while self.at_word("andalso"):
            self.advance()
            rhs = self.parse_comparison()
            e = Op("andalso", (e, rhs), pos=e.pos)
        return e

    def parse_comparison(self):
        e = self.parse_concat()
        t = self.peek()
        if t.kind in _COMPARISONS:
            self.advance()
            rhs = self.parse_concat()
            e = Op(t.kind, (e, rhs), pos=e.pos)
            bad = self.peek()
            if bad.kind in _COMPARISONS:
                raise ParseError("comparison operators do not associate",
                                 bad.line, bad.col)
        return e

    def parse_concat(self):
        e = self.parse_additive()
        if self.at("++"):
            self.advance()
            rhs = self.parse_concat()
            return Op("++", (e, rhs), pos=e.pos)
        return e

    def parse_additive(self):
        e = self.parse_multiplicative()
        while True:
            t = self.peek()
            name = t.value if t.kind in ("+", "-") else (
                t.value if t.kind == "atom" and t.value in ("or", "xor") else None)
            if name is None:
                break
            self.advance()
            rhs = self.parse_multiplicative()
            e = Op(name, (e, rhs), pos=e.pos)
        return e

    def parse_multiplicative(self):
        e = self.parse_unary()
        while True:
            t = self.peek()
            name = t.value if t.kind in ("*", "/") else (
                t.value if t.kind == "atom" and t.value in ("div", "rem", "and") else None)
            if name is None:
                break
            self.advance()
            rhs = self.parse_unary()
            e = Op(name, (e, rhs), pos=e.pos)
        return e

    def parse_unary(self):
        t = self.peek()
        if self.at_word("not"):
            self.advance()
            arg = self.parse_unary()
            return Op("not", (arg,), pos=(t.line, t.col))
        if self.at("-"):
            self.advance()
            arg = self.parse_unary()
            if isinstance(arg, Lit) and isinstance(arg.value, (int, float)):
                return Lit(-arg.value, pos=(t.line, t.col))
            return Op("-", (arg,), pos=(t.line, t.col))
        if self.at("+"):
            self.advance()
            return self.parse_unary()
        return self.parse_application()

    def parse_application(self):
        e = self.parse_primary()
        while self.at("("):
            self.advance()
            args = self.parse_expr_list(")")
            self.expect(")")
            e = Call(None, e, tuple(args), pos=e.pos)
        return e

    def parse_expr_list(self, closer):
        args = []
        if not self.at(closer):
            args.append(self.parse_expr())
            while self.at(","):
                self.advance()
                args.append(self.parse_expr())
        return args

    def parse_primary(self):
        t = self.peek()
        pos = (t.line, t.col)
        if t.kind in ("int", "float", "string"):
            self.advance()
            return Lit(t.value, pos=pos)
        if t.kind == "var":
            self.advance()
            return Var(t.value, pos=pos)
        if t.kind == "atom":
            word = t.value
            if word == "fun":
                return self.parse_fun()
            if word == "case":
                return self.parse_case()
            if word == "receive":
                return self.parse_receive()
            if word == "if":
                return self.parse_if()
            if word in RESERVED:
                self.fail(f"unexpected keyword {word!r}")
            self.advance()
            if self.at(":") and self.peek(1).kind == "atom" and self.peek(2).kind == "(":
                self.advance()
                fname = self.expect("atom")
                self.expect("(")
                args = self.parse_expr_list(")")
                self.expect(")")
                return Call(Atom(word),
                            Lit(Atom(fname.value), pos=(fname.line, fname.col)),
                            tuple(args), pos=pos)
            return Lit(Atom(word), pos=pos)
        if t.kind == "(":
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "{":
            self.advance()
            elems = self.parse_expr_list("}")
            self.expect("}")
            return Tup(tuple(elems), pos=pos)
        if t.kind == "[":
            return self.parse_list()
        self.fail("expected an expression",
                  expected={"literal", "variable", "(", "{", "[", "fun", "case",
                            "receive", "if"})

    def parse_list(self):
        t = self.expect("[")
        pos = (t.line, t.col)
        if self.at("]"):
            self.advance()
            return Nil(pos=pos)
        elems = [self.parse_expr()]
        while self.at(","):
            self.advance()
            elems.append(self.parse_expr())
        tail = Nil(pos=pos)
        if self.at("|"):
            self.advance()
            tail = self.parse_expr()
        self.expect("]")
        for e in reversed(elems):
            tail = Cons(e, tail, pos=e.pos or pos)
        return tail

    def parse_fun(self):
        t = self.expect("atom", "fun")
        clauses = []
        arity = None
        while True:
            h = self.expect("(")
            pats = self.parse_pattern_list(")")
            self.expect(")")
            if arity is None:
                arity = len(pats)
            elif len(pats) != arity:
                raise ParseError("fun clauses have different arities",
                                 h.line, h.col)
            guard = None
            if self.at_word("when"):
                self.advance()
                guard = self.parse_guard()
            self.expect("->")
            body = self.parse_body()
            clauses.append(Clause(tuple(pats), guard, body, pos=(h.line, h.col)))
            if self.at(";"):
                self.advance()
                continue
            break
        self.expect("atom", "end")
        return Fun(tuple(clauses), pos=(t.line, t.col))

    def parse_case(self):
        t = self.expect("atom", "case")
        scrut = self.parse_expr()
        self.expect("atom", "of")
        clauses = self.parse_cr_clauses()
        self.expect("atom", "end")
        return Case(scrut, tuple(clauses), pos=(t.line, t.col))

    def parse_receive(self):
        t = self.expect("atom", "receive")
        clauses = self.parse_cr_clauses()
        self.expect("atom", "end")
        return Receive(tuple(clauses), pos=(t.line, t.col))

    def parse_if(self):
        t = self.expect("atom", "if")
        clauses = []
        while True:
            g = self.parse_guard()
            self.expect("->")
            body = self.parse_body()
            clauses.append(Clause((), g, body, pos=g.pos))
            if self.at(";"):
                self.advance()
                continue
            break
        self.expect("atom", "end")
        return If(tuple(clauses), pos=(t.line, t.col))

    def parse_cr_clauses(self):
        clauses = []
        while True:
            t = self.peek()
            pat = self.parse_pattern()
            guard = None
            if self.at_word("when"):
                self.advance()
                guard = self.parse_guard()
            self.expect("->")
            body = self.parse_body()
            clauses.append(Clause((pat,), guard, body, pos=(t.line, t.col)))
            if self.at(";"):
                self.advance()
                continue
            break
        return clauses

    # --- patterns and guards ---

    def parse_pattern_list(self, closer):
        pats = []
        if not self.at(closer):
            pats.append(self.parse_pattern())
            while self.at(","):
                self.advance()
                pats.append(self.parse_pattern())
        return pats

    def parse_pattern(self):
        t = self.peek()
        pos = (t.line, t.col)
        if t.kind == "var":
            self.advance()
            return Var(t.value, pos=pos)
        if t.kind in ("int", "float", "string"):
            self.advance()
            return Lit(t.value, pos=pos)
        if t.kind == "-":
            self.advance()
            lit = self.peek()
            if lit.kind not in ("int", "float"):
                self.fail("expected a number after '-' in pattern")
            self.advance()
            return Lit(-lit.value, pos=pos)
        if t.kind == "atom":
            if t.value in RESERVED:
                self.fail(f"unexpected keyword {t.value!r} in pattern")
            self.advance()
            return Lit(Atom(t.value), pos=pos)
        if t.kind == "{":
            self.advance()
            pats = self.parse_pattern_list("}")
            self.expect("}")
            return Tup(tuple(pats), pos=pos)
        if t.kind == "[":
            self.advance()
            if self.at("]"):
                self.advance()
                return Nil(pos=pos)
            elems = [self.parse_pattern()]
            while self.at(","):
                self.advance()
                elems.append(self.parse_pattern())
            tail = Nil(pos=pos)
            if self.at("|"):
                self.advance()
                tail = self.parse_pattern()
            self.expect("]")
            for p in reversed(elems):
                tail = Cons(p, tail, pos=p.pos or pos)
            return tail
        self.fail("expected a pattern",
                  expected={"literal", "variable", "{", "["})

    def to_pattern(self, e):
        """Validate that a parsed expression is a legal pattern."""
        if isinstance(e, (Var, Lit, Nil)):
            return e
        if isinstance(e, Tup):
            return Tup(tuple(self.to_pattern(x) for x in e.elems), pos=e.pos)
        if isinstance(e, Cons):
            return Cons(self.to_pattern(e.head), self.to_pattern(e.tail), pos=e.pos)
        line, col = e.pos if e.pos else (None, None)
        raise ParseError("illegal pattern on the left of '='", line, col)

    def parse_guard(self):
        g = self.parse_orelse()
        self.validate_guard(g)
        return g

    def validate_guard(self, g):
        if isinstance(g, (Lit, Var, Nil)):
            return
        if isinstance(g, Tup):
            for e in g.elems:
                self.validate_guard(e)
            return
        if isinstance(g, Cons):
            self.validate_guard(g.head)
            self.validate_guard(g.tail)
            return
        if isinstance(g, Op):
            for e in g.args:
                self.validate_guard(e)
            return
        line, col = g.pos if g.pos else (None, None)
        raise ParseError("guards may only contain operators and data", line, col)


def parse_program(source):
    return _Parser(source).parse_program()


def parse_expr(source):
    p = _Parser(source)
    e = p.parse_body()
    p.expect("eof")
    return e


def is_value(e):
    """Ground normal forms: literals, pids, closures, tuples/lists of values."""
    if isinstance(e, (Lit, PidVal, Closure, Nil)):
        return True
    if isinstance(e, Tup):
        return all(is_value(x) for x in e.elems)
    if isinstance(e, Cons):
        return is_value(e.head) and is_value(e.tail)
    return False


def list_to_values(e):
    """Proper-list value -> python list of element values, else None."""
    out = []
    while True:
        if isinstance(e, Nil):
            return out
        if isinstance(e, Cons):
            out.append(e.head)
            e = e.tail
            continue
        return None


def values_to_list(values, pos=None):
    tail = Nil(pos=pos)
    for v in reversed(list(values)):
        tail = Cons(v, tail, pos=pos)
    return tail


def free_var_names(node, shadowed=frozenset()):
    """Variable names occurring in a node, minus the given shadowed set."""
    out = set()

    def walk(n):
        if isinstance(n, Var):
            if n.name not in shadowed and n.name != "_":
                out.add(n.name)
        elif isinstance(n, Lit) or isinstance(n, (Nil, PidVal, FutureVar, Hole)):
            pass
        elif isinstance(n, Tup):
            for x in n.elems:
                walk(x)
        elif isinstance(n, Cons):
            walk(n.head)
            walk(n.tail)
        elif isinstance(n, Seq):
            for x in n.exprs:
                walk(x)
        elif isinstance(n, Match):
            walk(n.pattern)
            walk(n.expr)
        elif isinstance(n, Case):
            walk(n.scrutinee)
            for c in n.clauses:
                walk(c)
        elif isinstance(n, (If, Receive)):
            for c in n.clauses:
                walk(c)
        elif isinstance(n, Clause):
            for p in n.patterns:
                walk(p)
            if n.guard is not None:
                walk(n.guard)
            walk(n.body)
        elif isinstance(n, Send):
            walk(n.target)
            walk(n.message)
        elif isinstance(n, Call):
            walk(n.fn)
            for a in n.args:
                walk(a)
        elif isinstance(n, Fun):
            # own parameters shadow; everything else (including pattern
            # positions of nested constructs) refers to the enclosing scope
            params = set()
            inner = set()
            for c in n.clauses:
                params |= free_var_names(Tup(tuple(c.patterns)))
                if c.guard is not None:
                    inner |= free_var_names(c.guard)
                inner |= free_var_names(c.body)
            out.update(inner - params - shadowed)
        elif isinstance(n, Op):
            for a in n.args:
                walk(a)
        elif isinstance(n, Closure):
            pass
        else:
            raise TypeError(f"unknown node {n!r}")

    walk(node)
    return out
