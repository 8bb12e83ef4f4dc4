import random

import pytest

from conftest import load_program
from revdbg.causality import (
    IllegalDerivationError, NotCoinitialError, causally_equivalent,
    decode_derivation, decode_log, encode_derivation, encode_log,
    happened_before, independent,
)
from revdbg.reversible import (
    MalformedLogError, freeze_rev_system, replay_derivation,
)
from revdbg.systems import (
    Derivation, Pid, RecA, Scheduler, SendA, SeqA, SpawnA, init_system,
    run_trace,
)


def D(*steps, origin="t"):
    return Derivation(origin, tuple(steps))


class TestHappenedBefore:
    def test_spawn_edge(self):
        d = D((Pid(0), SpawnA(Pid(1))), (Pid(1), SendA(0)))
        g = happened_before(d)
        assert g.happened_before(0, 1)
        assert not g.happened_before(1, 0)

    def test_message_edge(self):
        d = D((Pid(1), SendA(0)), (Pid(2), RecA(0)))
        g = happened_before(d)
        assert g.happened_before(0, 1)

    def test_independent_seq_steps(self):
        d = D((Pid(1), SeqA()), (Pid(2), SeqA()))
        g = happened_before(d)
        assert not g.happened_before(0, 1)
        assert not g.happened_before(1, 0)
        assert independent(d, 0, 1)

    def test_same_process_order(self):
        d = D((Pid(1), SeqA()), (Pid(1), SeqA()))
        assert not independent(d, 0, 1)

    def test_transitivity(self):
        d = D((Pid(0), SpawnA(Pid(1))), (Pid(1), SendA(0)), (Pid(2), RecA(0)))
        g = happened_before(d)
        assert g.happened_before(0, 2)

    def test_illegal_derivation_rejected(self):
        with pytest.raises(IllegalDerivationError):
            happened_before(D((Pid(1), RecA(0))))  # rec before send
        with pytest.raises(IllegalDerivationError):
            happened_before(D((Pid(1), SendA(0)), (Pid(1), SendA(0))))

    def test_future_includes_self(self):
        d = D((Pid(1), SendA(0)), (Pid(2), RecA(0)), (Pid(3), SeqA()))
        g = happened_before(d)
        assert g.future(0) == {0, 1}


class TestCausalEquivalence:
    def test_identity(self):
        d = D((Pid(1), SeqA()), (Pid(2), SeqA()))
        assert causally_equivalent(d, d)

    def test_adjacent_independent_swap(self):
        d1 = D((Pid(1), SeqA()), (Pid(2), SeqA()))
        d2 = D((Pid(2), SeqA()), (Pid(1), SeqA()))
        assert causally_equivalent(d1, d2)

    def test_dependent_swap_not_equivalent(self):
        d1 = D((Pid(1), SendA(0)), (Pid(2), RecA(0)))
        d2 = D((Pid(2), RecA(0)), (Pid(1), SendA(0)))
        # d2 is not even legal; equivalence must reject it structurally
        with pytest.raises(IllegalDerivationError):
            causally_equivalent(d1, d2)

    def test_different_actions_not_equivalent(self):
        d1 = D((Pid(1), SendA(0)))
        d2 = D((Pid(1), SendA(1)))
        assert not causally_equivalent(d1, d2)

    def test_not_coinitial(self):
        with pytest.raises(NotCoinitialError):
            causally_equivalent(D(origin="a"), D(origin="b"))


def swap_moves(steps, graph):
    """All derivations one adjacent-independent-swap away."""
    out = []
    for i in range(len(steps) - 1):
        if graph.independent(i, i + 1):
            swapped = list(steps)
            swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
            out.append(tuple(swapped))
    return out


def swap_closure(d):
    """Brute-force BFS over adjacent-independent swaps."""
    seen = {d.steps}
    frontier = [d.steps]
    while frontier:
        steps = frontier.pop()
        g = happened_before(Derivation(d.origin, steps))
        for nxt in swap_moves(steps, g):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


class TestSwitchOracle:
    def test_predicate_matches_bfs_closure_on_traced_prefixes(self):
        program = load_program("fanin")
        sys0 = init_system(program, "main")
        _, _, derivation = run_trace(program, sys0, Scheduler(seed=2))
        prefix = Derivation("fanin", derivation.steps[:9])
        closure = swap_closure(prefix)
        assert len(closure) > 1
        for steps in closure:
            other = Derivation("fanin", steps)
            assert causally_equivalent(prefix, other)
            assert causally_equivalent(other, prefix)
        # a mutated derivation (different action multiset) is never in it
        mutated = Derivation("fanin", prefix.steps[:-1])
        assert not causally_equivalent(prefix, mutated)

    def test_switch_soundness_swapped_prefix_executes_cofinally(self):
        """Swapping adjacent independent transitions keeps the derivation
        executable and leads to the same reversible system."""
        program = load_program("stock")
        sys0 = init_system(program, "main")
        _, _, derivation = run_trace(program, sys0, Scheduler(seed=1))
        steps = derivation.steps[:14]
        d = Derivation("stock", steps)
        base = freeze_rev_system(replay_derivation(program, sys0, d))
        g = happened_before(d)
        swapped = swap_moves(steps, g)
        assert swapped
        for alt_steps in swapped:
            alt = Derivation("stock", alt_steps)
            rs = replay_derivation(program, sys0, alt)  # raises if not executable
            assert freeze_rev_system(rs) == base


class TestLogFiles:
    def sample_log(self):
        return {
            Pid(0): (SpawnA(Pid(1)), SendA(0)),
            Pid(1): (RecA(0), SendA(1), RecA(1)),
        }

    def test_round_trip(self):
        log = self.sample_log()
        text = encode_log(log)
        assert decode_log(text) == log
        assert encode_log(decode_log(text)) == text

    def test_single_spawn_line(self):
        log = {Pid(1): (SpawnA(Pid(2)),)}
        assert decode_log(encode_log(log)) == log

    def test_pids_ascending(self):
        lines = encode_log(self.sample_log()).splitlines()
        assert lines[0].find("<0.0.0>") >= 0
        assert lines[1].find("<0.1.0>") >= 0

    def test_dangling_rec_rejected(self):
        with pytest.raises(MalformedLogError):
            decode_log('{"pid": "<0.1.0>", "events": [{"k": "rec", "id": 7}]}\n')

    def test_duplicate_spawn_rejected(self):
        text = ('{"pid": "<0.0.0>", "events": [{"k": "spawn", "pid": "<0.2.0>"}]}\n'
                '{"pid": "<0.1.0>", "events": [{"k": "spawn", "pid": "<0.2.0>"}]}\n')
        with pytest.raises(MalformedLogError):
            decode_log(text)

    def test_duplicate_send_rejected(self):
        text = ('{"pid": "<0.0.0>", "events": [{"k": "send", "id": 1}, '
                '{"k": "send", "id": 1}]}\n')
        with pytest.raises(MalformedLogError):
            decode_log(text)

    def test_bad_json_rejected_with_line(self):
        text = ('{"pid": "<0.0.0>", "events": []}\n'
                'not json at all\n')
        with pytest.raises(MalformedLogError) as err:
            decode_log(text)
        assert err.value.line == 2

    def test_wrong_event_kind_rejected(self):
        text = '{"pid": "<0.0.0>", "events": [{"k": "seq"}]}\n'
        with pytest.raises(MalformedLogError):
            decode_log(text)

    def test_traced_log_round_trips(self, stock):
        sys0 = init_system(stock, "main")
        _, log, _ = run_trace(stock, sys0, Scheduler(seed=6))
        text = encode_log(log)
        assert decode_log(text) == log
        assert encode_log(decode_log(text)) == text


class TestFifoLint:
    def test_overtaking_delivery_is_flagged(self):
        from revdbg.causality import fifo_violations
        log = {
            Pid(1): (SendA(0), SendA(1)),
            Pid(2): (RecA(1), RecA(0)),  # consumed in reverse send order
        }
        got = fifo_violations(log)
        assert got == [(Pid(1), Pid(2), 0, 1)]

    def test_in_order_delivery_is_clean(self):
        from revdbg.causality import fifo_violations
        log = {
            Pid(1): (SendA(0), SendA(1)),
            Pid(2): (RecA(0), RecA(1)),
        }
        assert fifo_violations(log) == []

    def test_pairs_are_independent(self):
        from revdbg.causality import fifo_violations
        # interleaving across senders is not a violation
        log = {
            Pid(1): (SendA(0),),
            Pid(2): (SendA(1),),
            Pid(3): (RecA(1), RecA(0)),
        }
        assert fifo_violations(log) == []


class TestDerivationFiles:
    def test_round_trip(self):
        d = D((Pid(0), SpawnA(Pid(1))), (Pid(1), SeqA()), (Pid(1), SendA(0)),
              (Pid(0), RecA(0)), (Pid(0), SeqA()), origin="main()")
        text = encode_derivation(d)
        assert decode_derivation(text) == d

    def test_bad_header(self):
        with pytest.raises(MalformedLogError):
            decode_derivation("[]\n")


class TestLogDeterminesClass:
    def test_equal_logs_imply_equivalence(self):
        """Two maximal replays of one log are causally equivalent."""
        program = load_program("fanin")
        sys0 = init_system(program, "main")
        _, log, _ = run_trace(program, sys0, Scheduler(seed=3))
        from revdbg.reversible import fwd_enabled, fwd_step, to_reversible
        derivs = []
        for replay_seed in (0, 5):
            rs = to_reversible(sys0, log)
            rng = random.Random(replay_seed)
            steps = []
            while True:
                entries = fwd_enabled(program, rs)
                if not entries:
                    break
                pid, _, _, pick = entries[rng.randrange(len(entries))]
                rs, action, _ = fwd_step(program, rs, pid, pick=pick)
                steps.append((pid, action))
            derivs.append(Derivation("fanin", tuple(steps)))
        assert causally_equivalent(derivs[0], derivs[1])
