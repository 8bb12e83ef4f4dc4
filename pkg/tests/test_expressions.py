import pytest

from conftest import load_program
from revdbg.expressions import (
    BifError, CallFrame, ReceiveLabel, SelfLabel, SendLabel, SeqFrame,
    SpawnLabel, StuckError, Tau, eval_bif, eval_guard,
    match_clauses, match_pattern, plug, step_expr, subst_env,
)
from revdbg.pretty import pretty
from revdbg.syntax import (
    Atom, Call, Lit, Nil, Program, Tup, Var, is_value, parse_expr,
    parse_program,
)

EMPTY = Program(())


def run_sequential(program, expr, env=None, limit=2000):
    """Step a side-effect-free expression to its value."""
    env = dict(env or {})
    stack = ()
    for _ in range(limit):
        if is_value(expr) and not stack:
            return env, expr
        env, expr, stack, label = step_expr(program, env, expr, stack)
        assert isinstance(label, Tau), f"unexpected side effect {label}"
    raise AssertionError("no fixpoint reached")


class TestMatchPattern:
    def test_tuple_binds_both(self):
        sigma = match_pattern(parse_expr("{X,Y}"), parse_expr("{ok,42}"))
        assert sigma == {"X": Lit(Atom("ok")), "Y": Lit(42)}

    def test_literal_matches_itself(self):
        assert match_pattern(Lit(0), Lit(0)) == {}

    def test_cons_vs_nil_fails(self):
        assert match_pattern(parse_expr("[H|T]"), Nil()) is None

    def test_repeated_variable_must_agree(self):
        assert match_pattern(parse_expr("{X,X}"), parse_expr("{1,1}")) == {"X": Lit(1)}
        assert match_pattern(parse_expr("{X,X}"), parse_expr("{1,2}")) is None

    def test_wildcard_binds_nothing(self):
        assert match_pattern(Var("_"), Lit(5)) == {}

    def test_bound_variable_substituted_first(self):
        pat = subst_env(Var("X"), {"X": Lit(1)})
        assert match_pattern(pat, Lit(1)) == {}
        assert match_pattern(pat, Lit(2)) is None

    def test_exact_literal_equality(self):
        assert match_pattern(Lit(1), Lit(1.0)) is None


class TestMatchClauses:
    @pytest.fixture
    def server_clauses(self, stock):
        return stock.lookup("server", 1).clauses[0].body.clauses

    def test_add_message_selects_first_clause(self, server_clauses):
        got = match_clauses("receive", server_clauses, {"N": Lit(0)},
                            parse_expr("{add,3}"))
        assert got is not None
        sigma, body, idx = got
        assert idx == 0
        assert sigma == {"M": Lit(3)}
        assert pretty(body) == "server(N + M)"

    def test_guard_failure_gives_no_match(self, server_clauses):
        scrut = Tup((Lit(Atom("del")), Lit(10), Lit(Atom("c"))))
        assert match_clauses("receive", server_clauses,
                             {"N": Lit(3)}, scrut) is None
        got = match_clauses("receive", server_clauses, {"N": Lit(13)}, scrut)
        assert got is not None and got[2] == 1

    def test_wildcard_clause_always_first(self):
        clauses = parse_expr("case X of _ -> always end").clauses
        got = match_clauses("case", clauses, {}, Lit(99))
        assert got is not None and got[2] == 0


class TestEvalGuard:
    def test_second_guard_true(self):
        idx = eval_guard([parse_expr("false"), parse_expr("true")], {})
        assert idx == 1

    def test_numeric_guard(self):
        assert eval_guard([parse_expr("N > 0")], {"N": Lit(5)}) == 0
        assert eval_guard([parse_expr("N > 0")], {"N": Lit(0)}) is None

    def test_erroring_guard_counts_as_false(self):
        assert eval_guard([parse_expr("N + 1")], {"N": Lit(Atom("x"))}) is None
        assert eval_guard([parse_expr("Unbound > 0")], {}) is None


class TestEvalBif:
    def test_addition(self):
        assert eval_bif("+", [Lit(40), Lit(2)]) == Lit(42)

    def test_comparison(self):
        assert eval_bif(">=", [Lit(3), Lit(10)]) == Lit(Atom("false"))

    def test_multiplication(self):
        assert eval_bif("*", [Lit(5), Lit(24)]) == Lit(120)

    def test_type_error_raises(self):
        with pytest.raises(BifError):
            eval_bif("+", [Lit(1), Lit(Atom("ok"))])

    def test_append(self):
        got = eval_bif("++", [parse_expr("[1,2]"), parse_expr("[3]")])
        assert got == parse_expr("[1,2,3]")
        assert eval_bif("++", [Lit("ab"), Lit("cd")]) == Lit("abcd")

    def test_numeric_equality_coerces(self):
        assert eval_bif("==", [Lit(1), Lit(1.0)]) == Lit(Atom("true"))

    def test_cross_type_order_is_total(self):
        assert eval_bif("<", [Lit(9), Lit(Atom("a"))]) == Lit(Atom("true"))

    def test_integer_division(self):
        assert eval_bif("div", [Lit(7), Lit(2)]) == Lit(3)
        assert eval_bif("rem", [Lit(7), Lit(2)]) == Lit(1)
        with pytest.raises(BifError):
            eval_bif("div", [Lit(7), Lit(0)])


class TestStepExpr:
    def test_match_sequence_example(self):
        env, value = run_sequential(EMPTY, parse_expr("{X,Y} = {ok,40+2}, X"))
        assert value == Lit(Atom("ok"))
        assert env["X"] == Lit(Atom("ok"))
        assert env["Y"] == Lit(42)

    def test_var_rule(self):
        env, expr, stack, label = step_expr(
            EMPTY, {"X": Lit(42)}, parse_expr("X + 1"), ())
        assert label == Tau()
        assert expr == parse_expr("42 + 1")
        assert env == {"X": Lit(42)}

    def test_self_label(self):
        env, expr, stack, label = step_expr(EMPTY, {}, parse_expr("self()"), ())
        assert isinstance(label, SelfLabel)
        assert expr == label.kappa

    def test_spawn_label(self):
        env, expr, stack, label = step_expr(
            EMPTY, {}, parse_expr("spawn(m, f, [1])"), ())
        assert isinstance(label, SpawnLabel)
        assert label.module == Atom("m")
        assert label.fname == Atom("f")
        assert label.args == (Lit(1),)
        assert expr == label.kappa

    def test_send_label_reduces_to_message(self):
        env, expr, stack, label = step_expr(
            EMPTY, {}, parse_expr("1, 2"), ())  # warm-up: Seq1
        assert expr == Lit(2)
        env, expr, stack, label = step_expr(
            EMPTY, {"S": Lit(7)}, Call(None, Var("S"), ()), ())
        # S evaluates first; not yet a send
        env, expr, stack, label = step_expr(
            EMPTY, {}, parse_expr("self() ! done"), ())
        assert isinstance(label, SelfLabel)

    def test_receive_parks_context(self):
        e = parse_expr("1 + receive X -> X end")
        env, expr, stack, label = step_expr(EMPTY, {}, e, ())
        assert isinstance(label, ReceiveLabel)
        assert expr == label.kappa
        assert isinstance(stack[0], SeqFrame)
        assert plug(stack[0].ctx, Lit(9)) == parse_expr("1 + 9")

    def test_unbound_variable_stuck(self):
        with pytest.raises(StuckError):
            step_expr(EMPTY, {}, Var("Nope"), ())

    def test_case_exhaustion_stuck(self):
        prog = parse_program("f(X) -> case X of 1 -> one end.")
        with pytest.raises(StuckError):
            run_sequential(prog, parse_expr("f(2)"))

    def test_badmatch_stuck(self):
        with pytest.raises(StuckError):
            run_sequential(EMPTY, parse_expr("1 = 2"))

    def test_call_and_return_restore_environment(self, fact):
        env, value = run_sequential(fact, parse_expr("X = 5, fact(X) + X"))
        assert value == Lit(125)
        assert env["X"] == Lit(5)

    def test_factorial(self, fact):
        _, value = run_sequential(fact, parse_expr("fact(5)"))
        assert value == Lit(120)
        _, value = run_sequential(fact, parse_expr("fact(0)"))
        assert value == Lit(1)

    def test_higher_order_closures(self):
        prog = load_program("hof")
        _, value = run_sequential(prog, parse_expr("main()"))
        assert value == parse_expr("{big,7,[1,2,3]}")

    def test_closure_captures_free_vars(self):
        src = "K = 10, F = fun(X) -> X + K end, F(5)"
        _, value = run_sequential(EMPTY, parse_expr(src))
        assert value == Lit(15)

    def test_andalso_short_circuits(self):
        _, value = run_sequential(EMPTY, parse_expr("false andalso (1 = 2)"))
        assert value == Lit(Atom("false"))
        _, value = run_sequential(EMPTY, parse_expr("true orelse (1 = 2)"))
        assert value == Lit(Atom("true"))

    def test_if_expression(self):
        _, value = run_sequential(EMPTY, parse_expr("if 1 > 2 -> a; true -> b end"))
        assert value == Lit(Atom("b"))

    def test_io_format_is_tau_with_output(self):
        e = parse_expr('io:format("Stock: ~p~n", [7])')
        env, expr, stack, label = step_expr(EMPTY, {}, e, ())
        assert isinstance(label, Tau)
        assert label.output == "Stock: 7\n"
        assert expr == Lit(Atom("ok"))


class TestStepProperties:
    def test_determinism(self, stock):
        e = parse_expr("{X,Y} = {ok,40+2}, X")
        a = step_expr(stock, {}, e, ())
        b = step_expr(stock, {}, e, ())
        assert a == b

    def test_stack_discipline_calls_balance(self, fact):
        env, expr, stack = {}, parse_expr("fact(6)"), ()
        pushes = pops = 0
        depth_before = 0
        while not (is_value(expr) and not stack):
            was_value = is_value(expr)
            had_call_frame = bool(stack) and isinstance(stack[0], CallFrame)
            env, expr, stack, _ = step_expr(fact, env, expr, stack)
            if was_value and had_call_frame:
                pops += 1
            elif len(stack) > depth_before and isinstance(stack[0], CallFrame):
                pushes += 1
            depth_before = len(stack)
        assert pushes == pops == 7  # fact(6) .. fact(0)

    def test_label_soundness(self, stock):
        from revdbg.expressions import SpawnBodyLabel
        env, expr, stack = {}, parse_expr("main()"), ()
        for _ in range(6):
            env, expr, stack, label = step_expr(stock, env, expr, stack)
            if isinstance(label, (SendLabel, ReceiveLabel, SpawnLabel,
                                  SpawnBodyLabel, SelfLabel)):
                return
        raise AssertionError("no side-effect label within main()'s prefix")

    def test_no_sequence_in_single_slots_after_steps(self, stock):
        from revdbg.syntax import Seq

        def check(node, in_single_slot=False):
            if isinstance(node, Seq):
                assert not in_single_slot, pretty(node)
                for x in node.exprs:
                    check(x, True)
                return
            for attr in ("elems", "args"):
                for x in getattr(node, attr, ()) or ():
                    check(x, True)
            for attr in ("head", "tail", "target", "message", "scrutinee",
                         "expr", "fn"):
                child = getattr(node, attr, None)
                if child is not None and hasattr(child, "__dataclass_fields__"):
                    check(child, True)

        env, expr, stack = {}, parse_expr("main()"), ()
        for _ in range(40):
            if is_value(expr) and not stack:
                break
            try:
                env, expr, stack, label = step_expr(stock, env, expr, stack)
            except StuckError:
                break
            check(expr)
            if not isinstance(label, Tau):
                break
