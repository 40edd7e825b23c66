"""Tests for the small-step semantics, presampling and erasability"""

from fractions import Fraction

import pytest

from modules.distributions import Dist, dret, mass
from modules.exact import ExactEngine
from modules.fixtures import fixture, tape_fixtures
from modules.parser import load_program
from modules.pretty import dump_config
from modules.schedulers import External, RoundRobin, Scripted, UniformRandom, make_policy
from modules.semantics import (
    EMPTY, Config, State, Tape, erasability_check, exec_n, initial_config, pexec_n,
    presample, step, tape_configs, tpstep
)
from modules.syntax import FALSE, TRUE, UNIT, BinOp, Fork, Int, Label, PairV, Rand, RandL, Val


def run(text: str, steps: int = 200) -> Dist:
    """Value distribution of a single program under round robin"""
    return exec_n(RoundRobin(), 0, initial_config(load_program(text)), steps)


class TestExpressionSteps:
    """Tests for reducing a single thread"""

    def test_arithmetic(self):
        """Test a head step on integers"""
        state = State()
        assert step(BinOp("+", Val(Int(1)), Val(Int(2))), state) == Dist.ret((Val(Int(3)), state, ()))

    def test_values_do_not_step(self):
        """Test that a value has no successor"""
        assert step(Val(Int(1)), State()) == EMPTY

    def test_stuck_expressions(self):
        """Test that type errors step to the empty distribution"""
        assert run("1 + true") == EMPTY
        assert run("1 / 0") == EMPTY
        assert run("fst 1") == EMPTY

    def test_truncating_division(self):
        """Test division and remainder round toward zero"""
        assert run("7 / (0 - 2)") == dret(Int(-3))
        assert run("(0 - 7) % 2") == dret(Int(-1))

    def test_right_to_left_evaluation(self):
        """Test that the right operand of + runs before the left one"""
        program = "let l = ref 0 in (l := 1; 0) + (l := 2; 0); !l"
        assert run(program) == dret(Int(1))

    def test_rand_is_uniform(self):
        """Test rand n over {0..n}"""
        successors = step(Rand(Val(Int(3))), State())
        assert len(successors) == 4
        assert all(weight == Fraction(1, 4) for _, weight in successors.items())

    def test_two_draws(self):
        """Test the sum of two draws from {0..3}"""
        dist = run("rand 3 + rand 3", steps=10)
        assert dist[Int(0)] == Fraction(1, 16)
        assert dist[Int(3)] == Fraction(4, 16)
        assert mass(dist) == 1

    def test_fork_spawns_a_thread(self):
        """Test that fork returns unit and hands back the new thread"""
        state = State()
        assert step(Fork(Val(Int(1))), state) == Dist.ret((Val(UNIT), state, (Val(Int(1)),)))

    def test_arrays(self):
        """Test array allocation, store and load"""
        assert run("let a = array (2, 0) in a.[1] := 5; a.[1]") == dret(Int(5))

    def test_array_out_of_bounds(self):
        """Test that an index past the heap is stuck"""
        assert run("let a = array (2, 0) in a.[2]") == EMPTY

    def test_fetch_and_add_and_cas(self):
        """Test faa returns the old value and cas reports success"""
        assert run("let l = ref 1 in let old = faa (l, 2) in (old, !l)") == dret(PairV(Int(1), Int(3)))
        # the right component runs first, so its cas sees the initial value
        assert run("let l = ref 1 in (cas (l, 0, 5), cas (l, 1, 5))") == dret(PairV(FALSE, TRUE))

    def test_parallel_composition(self):
        """Test that e1 ||| e2 returns both results under round robin"""
        assert run("1 ||| 2") == dret(PairV(Int(1), Int(2)))


class TestThreadPool:
    """Tests for tpstep on configurations"""

    def test_index_out_of_range(self):
        """Test that a bad thread index raises"""
        config = initial_config(BinOp("+", Val(Int(1)), Val(Int(2))))
        with pytest.raises(IndexError):
            tpstep(config, 1)

    def test_final_configuration(self):
        """Test that a final configuration has no successor"""
        assert tpstep(Config((Val(Int(1)),), State()), 0) == EMPTY

    def test_finished_thread_stutters(self):
        """Test that stepping a finished non-main thread keeps the configuration"""
        config = Config((BinOp("+", Val(Int(1)), Val(Int(2))), Val(UNIT)), State())
        assert tpstep(config, 1) == Dist.ret(config)

    def test_forked_threads_are_appended(self):
        """Test that forked threads join the end of the pool"""
        config = Config((Fork(Val(Int(1))),), State())
        successor, = tpstep(config, 0).support()
        assert successor.threads == (Val(UNIT), Val(Int(1)))


class TestPresampling:
    """Tests for tapes and presampling"""

    def test_alloctape_then_rand_is_uniform(self):
        """Test a labelled draw from an empty tape samples fresh"""
        dist = run("let t = alloctape 3 in rand (t, 3)")
        assert dist == Dist({Int(n): Fraction(1, 4) for n in range(4)})

    def test_presample_appends(self):
        """Test presample adds to the end of the queue"""
        state = State((), (Tape(3, (1,)),))
        assert presample(state, 0, 2).tapes == (Tape(3, (1, 2)),)
        assert presample(state, Label(0), 0).tapes == (Tape(3, (1, 0)),)

    def test_presample_errors(self):
        """Test presampling an unknown tape or an out-of-range value"""
        state = State((), (Tape(1),))
        with pytest.raises(ValueError):
            presample(state, 1, 0)
        with pytest.raises(ValueError):
            presample(state, 0, 2)

    def test_labelled_rand_consumes_tape(self):
        """Test that a labelled draw pops the front of a matching tape"""
        state = State((), (Tape(3, (2, 1)),))
        result = step(RandL(Val(Label(0)), Val(Int(3))), state)
        assert result == Dist.ret((Val(Int(2)), State((), (Tape(3, (1,)),)), ()))

    def test_bound_mismatch_samples_fresh(self):
        """Test that a draw with another bound leaves the tape alone"""
        state = State((), (Tape(3, (2,)),))
        result = step(RandL(Val(Label(0)), Val(Int(1))), state)
        assert result == Dist({(Val(Int(n)), state, ()): Fraction(1, 2) for n in range(2)})

    def test_unallocated_label_is_stuck(self):
        """Test a draw from a label that was never allocated"""
        assert step(RandL(Val(Label(0)), Val(Int(1))), State()) == EMPTY


class TestErasability:
    """Tests for the presampling erasability check"""

    def test_round_robin_passes(self):
        """Test that presampling does not change a round-robin execution"""
        policy = RoundRobin()
        config = initial_config(load_program("let t = alloctape 1 in rand (t, 1) + rand (t, 1)"))
        candidates = tape_configs(policy, policy.initial, config, 10)
        assert candidates
        for zeta, candidate in candidates:
            verdict = erasability_check(policy, zeta, candidate, 0, 10)
            assert verdict.passed
            assert verdict.presampled_mass == verdict.direct_mass

    def test_tape_aware_policy_fails(self):
        """Test that a policy reading tape contents breaks erasability"""
        def peek(zeta, view):
            index = 1 if view.tape_queues and view.tape_queues[0] else 0
            return {(zeta, index): 1}

        config = Config((RandL(Val(Label(0)), Val(Int(1))), Rand(Val(Int(1)))), State((), (Tape(1),)))
        verdict = erasability_check(External(peek, reveal_tapes=True), None, config, 0, 1)
        assert not verdict.passed
        assert verdict.counterexample is not None

    def test_same_policy_without_tape_view_passes(self):
        """Test that the policy passes once tape contents are hidden from it"""
        def peek(zeta, view):
            index = 1 if view.tape_queues and view.tape_queues[0] else 0
            return {(zeta, index): 1}

        config = Config((RandL(Val(Label(0)), Val(Int(1))), Rand(Val(Int(1)))), State((), (Tape(1),)))
        assert erasability_check(External(peek), None, config, 0, 1).passed

    def test_unknown_tape(self):
        """Test the check refuses an unallocated label"""
        with pytest.raises(ValueError):
            erasability_check(RoundRobin(), 0, initial_config(Val(Int(0))), 0, 1)


class TestFixtureErasability:
    """Presampling on the catalogue's tape programs"""

    @pytest.mark.slow
    @pytest.mark.parametrize("scheduler", ["round_robin", "scripted:1,0,0,1", "uniform_random"])
    @pytest.mark.parametrize("name", tape_fixtures())
    def test_presampling_is_invisible(self, name, scheduler):
        """Test erasability at reachable configurations that hold a tape"""
        policy = make_policy(scheduler)
        config = initial_config(fixture(name).program())
        candidates = tape_configs(policy, policy.initial, config, 40)
        assert candidates
        for zeta, candidate in candidates[::max(len(candidates) // 4, 1)]:
            for label in range(len(candidate.state.tapes)):
                verdict = erasability_check(policy, zeta, candidate, label, 6)
                assert verdict.passed, f"{name} under {scheduler}: {verdict.counterexample}"


class TestExecutionProperties:
    """Monotonicity and stutter properties of the scheduled semantics"""

    @pytest.mark.parametrize("policy", [RoundRobin(), UniformRandom()], ids=lambda p: p.name)
    def test_exec_n_grows_with_steps(self, policy):
        """Test that every value's mass is nondecreasing in n"""
        config = initial_config(load_program("let l = ref 0 in fork (faa (l, rand 1)); faa (l, rand 1); !l"))
        previous = EMPTY
        for n in range(12):
            current = exec_n(policy, policy.initial, config, n)
            assert all(current[v] >= previous[v] for v in previous.support())
            previous = current
        assert mass(previous) > 0

    @pytest.mark.parametrize("name", ["twoAdd", "conTwoAdd", "stuck_half"])
    def test_value_dist_grows_with_horizon(self, name):
        """Test the memoised sweep on catalogue programs"""
        engine = ExactEngine()
        config = initial_config(fixture(name).program())
        previous = EMPTY
        for horizon in range(0, 40, 3):
            current = engine.value_dist(config, UniformRandom(), horizon).dist
            assert all(current[v] >= previous[v] for v in previous.support())
            previous = current

    @pytest.mark.parametrize("name", ["stuck_half", "conTwoAdd"])
    def test_min_mass_shrinks_with_horizon(self, name):
        """Test that a longer horizon never raises the smallest surviving mass"""
        engine = ExactEngine()
        config = initial_config(fixture(name).program())
        values = [engine.min_mass(config, horizon).value for horizon in range(0, 24, 2)]
        assert values == sorted(values, reverse=True)

    def test_finished_thread_stutters(self):
        """Test that stepping a value thread leaves the configuration unchanged"""
        config = Config((load_program("rand 3 + rand 3"), Val(UNIT)), State())
        assert tpstep(config, 1) == Dist.ret(config)

    def test_stutter_steps_do_not_change_values(self):
        """Test that scheduling a finished thread only delays the result"""
        config = Config((load_program("rand 3 + rand 3"), Val(UNIT)), State())
        engine = ExactEngine()
        stuttering = engine.value_dist(config, Scripted([1, 1, 1, 1]), 40)
        direct = engine.value_dist(config, RoundRobin(), 40)
        assert stuttering.residual == direct.residual == 0
        assert stuttering.dist == direct.dist


class TestPartialExecution:
    """Tests for pexec_n and the state dump"""

    def test_pexec_keeps_final_configurations(self):
        """Test that final configurations carry their mass forward"""
        config = initial_config(load_program("rand 1"))
        frontier = pexec_n(RoundRobin(), 0, config, 5)
        assert mass(frontier) == 1
        assert all(c.final for _, c in frontier.support())

    def test_dump_config(self):
        """Test the debug layout of a configuration"""
        config = Config((Val(Int(1)),), State((Int(3),), (Tape(1, (0,)),)))
        text = dump_config(config)
        assert "threads:\n  [0] 1" in text
        assert "<loc 0> = 3" in text
        assert "<tape 0> = bound 1, queue [0]" in text


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
