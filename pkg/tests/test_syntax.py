import random

import pytest

from conftest import load_program
from revdbg.pretty import pretty, pretty_print
from revdbg.syntax import (
    Atom, Call, Case, Clause, Cons, Fun, If, Lit, Match, Nil, Op, ParseError,
    Program, Receive, Send, Seq, Tup, Var, free_var_names, parse_expr,
    parse_program,
)


def strip(node):
    """Structural equality already ignores positions; identity helper."""
    return node


class TestParseProgram:
    def test_factorial_listing(self):
        src = "fact(0) -> 1;\nfact(N) when N>0 -> N * fact(N-1)."
        prog = parse_program(src)
        assert len(prog.modules) == 1
        fd = prog.lookup("fact", 1)
        assert fd is not None
        assert len(fd.clauses) == 2
        assert fd.clauses[0].guard is None
        assert fd.clauses[1].guard == Op(">", (Var("N"), Lit(0)))

    def test_empty_input(self):
        assert parse_program("") == Program(())

    def test_stock_program(self):
        prog = load_program("stock")
        names = {(fd.name.name, fd.arity) for fd in prog.modules[0].funs}
        assert names == {("main", 0), ("server", 1),
                         ("customer1", 1), ("customer2", 1)}

    def test_module_attribute(self):
        prog = parse_program("-module(shop).\nf() -> ok.")
        assert prog.modules[0].name == Atom("shop")
        assert prog.lookup("f", 0, module="shop") is not None

    def test_arity_mismatch_is_parse_error(self):
        with pytest.raises(ParseError):
            parse_program("f(0) -> a;\nf(X, Y) -> b.")

    def test_duplicate_definition_rejected(self):
        with pytest.raises(ParseError):
            parse_program("f() -> a.\nf() -> b.")

    def test_clause_name_mismatch_rejected(self):
        with pytest.raises(ParseError):
            parse_program("f(0) -> a;\ng(1) -> b.")

    def test_parse_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse_program("f() -> case 1.")
        assert err.value.line == 1
        assert err.value.col is not None


class TestParseExpr:
    def test_match_then_var_sequence(self):
        e = parse_expr("{X,Y} = {ok,40+2}, X")
        assert isinstance(e, Seq)
        m, x = e.exprs
        assert m == Match(Tup((Var("X"), Var("Y"))),
                          Tup((Lit(Atom("ok")), Op("+", (Lit(40), Lit(2))))))
        assert x == Var("X")

    def test_self_call(self):
        assert parse_expr("self()") == Call(None, Lit(Atom("self")), ())

    def test_send_tuple(self):
        e = parse_expr("S ! {del,10,self()}")
        assert e == Send(Var("S"),
                         Tup((Lit(Atom("del")), Lit(10),
                              Call(None, Lit(Atom("self")), ()))))

    def test_sequence_in_case_scrutinee_rejected(self):
        with pytest.raises(ParseError):
            parse_expr("case X=1,X of _ -> ok end")

    def test_sequence_in_argument_rejected(self):
        with pytest.raises(ParseError):
            parse_expr("f(a, (x, y))")

    def test_qualified_call(self):
        e = parse_expr('io:format("x ~p~n", [V])')
        assert isinstance(e, Call)
        assert e.module == Atom("io")
        assert e.fn == Lit(Atom("format"))

    def test_list_syntax(self):
        assert parse_expr("[]") == Nil()
        assert parse_expr("[1,2|T]") == Cons(Lit(1), Cons(Lit(2), Var("T")))
        assert parse_expr("[a]") == Cons(Lit(Atom("a")), Nil())

    def test_operator_precedence(self):
        assert parse_expr("1 + 2 * 3") == \
            Op("+", (Lit(1), Op("*", (Lit(2), Lit(3)))))
        assert parse_expr("1 * 2 + 3") == \
            Op("+", (Op("*", (Lit(1), Lit(2))), Lit(3)))
        assert parse_expr("N > 0 andalso N < 9") == \
            Op("andalso", (Op(">", (Var("N"), Lit(0))),
                           Op("<", (Var("N"), Lit(9)))))

    def test_comparisons_do_not_associate(self):
        with pytest.raises(ParseError):
            parse_expr("1 < 2 < 3")

    def test_unary_minus_folds_literals(self):
        assert parse_expr("-5") == Lit(-5)
        assert parse_expr("-X") == Op("-", (Var("X"),))

    def test_match_lhs_must_be_pattern(self):
        with pytest.raises(ParseError):
            parse_expr("f(X) = 3")

    def test_char_and_string_literals(self):
        assert parse_expr("$a") == Lit(ord("a"))
        assert parse_expr("$\\n") == Lit(ord("\n"))
        assert parse_expr('"a\\"b"') == Lit('a"b')

    def test_fun_and_application(self):
        e = parse_expr("fun(X) -> X + 1 end")
        assert isinstance(e, Fun)
        app = parse_expr("F(3)")
        assert app == Call(None, Var("F"), (Lit(3),))

    def test_guard_rejects_calls(self):
        with pytest.raises(ParseError):
            parse_expr("case X of Y when f(Y) -> ok end")

    def test_receive_and_if(self):
        e = parse_expr("receive {a,X} -> X; stop -> done end")
        assert isinstance(e, Receive)
        assert len(e.clauses) == 2
        i = parse_expr("if N > 0 -> pos; true -> other end")
        assert isinstance(i, If)
        assert i.clauses[1].guard == Lit(Atom("true"))


CORPUS = ["stock", "fact", "pingpong", "ring", "fanin", "chain", "trio", "hof"]


class TestRoundTrip:
    @pytest.mark.parametrize("name", CORPUS)
    def test_program_round_trip(self, name):
        prog = load_program(name)
        assert parse_program(pretty_print(prog)) == prog

    @pytest.mark.parametrize("source", [
        "{ok,42}",
        "[]",
        "[1,2,3]",
        "[1|X]",
        "fun(X, Y) -> X + Y end",
        "case A of {x,B} when B >= 0 -> B; _ -> -1 end",
        "receive stop -> ok end",
        "if A > B -> A; true -> B end",
        "S ! {del,10,self()}",
        "X = 1, Y = X + 2, {X,Y}",
        "spawn(m, f, [1,2])",
        "a + b * c - d",
        "(1 + 2) * 3",
        "- (1 + 2)",
        "not (A == B)",
        '"text ~p~n" ++ Tail',
        "'quoted atom'",
        "1 < 2 orelse 2 < 1",
    ])
    def test_expr_round_trip(self, source):
        e = parse_expr(source)
        assert parse_expr(pretty(e)) == e

    def test_random_expression_round_trip(self):
        rng = random.Random(7)

        def gen(depth):
            if depth == 0:
                return rng.choice([
                    Lit(rng.randrange(100)), Lit(Atom("a")), Var("X"),
                    Nil(), Lit("s"),
                ])
            kind = rng.randrange(7)
            if kind == 0:
                return Tup(tuple(gen(depth - 1) for _ in range(rng.randrange(3))))
            if kind == 1:
                return Cons(gen(depth - 1), gen(depth - 1))
            if kind == 2:
                return Op(rng.choice(["+", "*", "==", "++", "andalso"]),
                          (gen(depth - 1), gen(depth - 1)))
            if kind == 3:
                # the parser folds unary minus over number literals
                return Op("-", (Var("N"),))
            if kind == 4:
                return Send(gen(depth - 1), gen(depth - 1))
            if kind == 5:
                return Call(None, Lit(Atom("f")),
                            tuple(gen(depth - 1) for _ in range(rng.randrange(3))))
            return Case(gen(depth - 1),
                        (Clause((Var("R"),), None, gen(depth - 1)),))

        for _ in range(300):
            e = gen(rng.randrange(1, 4))
            assert parse_expr(pretty(e)) == e, pretty(e)


class TestPositions:
    @pytest.mark.parametrize("name", CORPUS)
    def test_every_parsed_node_carries_a_position(self, name):
        def walk(n):
            if hasattr(n, "__dataclass_fields__"):
                if "pos" in n.__dataclass_fields__:
                    assert n.pos is not None, f"{type(n).__name__} without pos"
                for fname in n.__dataclass_fields__:
                    v = getattr(n, fname)
                    if isinstance(v, tuple):
                        for x in v:
                            walk(x)
                    else:
                        walk(v)

        walk(load_program(name))


class TestFreeVars:
    def test_fun_params_shadow(self):
        e = parse_expr("fun(X) -> X + Y end")
        assert free_var_names(e) == {"Y"}

    def test_nested_pattern_vars_count_as_free(self):
        e = parse_expr("fun(A) -> case A of X -> X end end")
        assert free_var_names(e) == {"X"}

    def test_closed_fun(self):
        e = parse_expr("fun() -> 1 + 2 end")
        assert free_var_names(e) == set()
