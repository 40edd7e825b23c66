"""Tests for Monte Carlo estimation"""

import time
from fractions import Fraction

import numpy as np
import pytest

from modules.distributions import Dist
from modules.fixtures import fixture
from modules.montecarlo import TransitionCache, ci, estimate, make_rng, run_trial, sample
from modules.parser import load_program
from modules.predicates import parse_predicate
from modules.schedulers import External, RoundRobin, UniformRandom
from modules.semantics import initial_config


def config(text: str):
    return initial_config(load_program(text))


class TestStreams:
    """Tests for seeded generators and sampling"""

    def test_same_key_same_stream(self):
        """Test that (seed, trial) fixes the stream"""
        a = make_rng(7, 3).integers(1000, size=8)
        b = make_rng(7, 3).integers(1000, size=8)
        assert np.array_equal(a, b)

    def test_trials_are_independent_streams(self):
        """Test that neighbouring trials draw different streams"""
        a = make_rng(7, 3).integers(1 << 30, size=8)
        b = make_rng(7, 4).integers(1 << 30, size=8)
        assert not np.array_equal(a, b)

    def test_point_mass(self):
        """Test that a single outcome is always drawn"""
        assert sample(Dist.ret("only"), make_rng(0)) == "only"

    def test_sample_stays_in_support(self):
        """Test draws from a uniform distribution"""
        rng = make_rng(1)
        dist = Dist.uniform(3)
        draws = {sample(dist, rng) for _ in range(200)}
        assert draws <= {0, 1, 2, 3}
        assert len(draws) > 1


class TestTrials:
    """Tests for single sampled executions"""

    def test_replay(self):
        """Test that a trial replays from its key"""
        start = config("let l = ref 0 in faa (l, rand 3); faa (l, rand 3); !l")
        first = run_trial(start, RoundRobin(), None, rng=make_rng(5, 11))
        second = run_trial(start, RoundRobin(), None, rng=make_rng(5, 11))
        assert first == second
        assert first.kind == "value"

    def test_stuck(self):
        """Test a trial whose thread cannot step"""
        outcome = run_trial(config("1 + true"), RoundRobin(), 0)
        assert outcome.kind == "stuck"
        assert outcome.value is None

    def test_timeout(self):
        """Test the step limit"""
        outcome = run_trial(config("(rec f x -> f x) 0"), RoundRobin(), 0, max_steps=10)
        assert outcome.kind == "timeout"
        assert outcome.steps_taken == 10

    def test_needs_seed_or_generator(self):
        """Test that a trial without a seed or a generator is refused"""
        with pytest.raises(ValueError):
            run_trial(config("rand 1"), RoundRobin(), None)

    def test_cached_steps(self):
        """Test that trials sharing a cache reuse expanded steps and still end in values"""
        start = config("let l = ref 0 in (faa (l, rand 3) ||| faa (l, rand 3)); !l")
        cache = TransitionCache()
        outcomes = [run_trial(start, UniformRandom(), None, rng=make_rng(2, trial), cache=cache) for trial in range(50)]
        assert {outcome.kind for outcome in outcomes} == {"value"}
        size = len(cache)
        run_trial(start, UniformRandom(), None, rng=make_rng(2, 0), cache=cache)
        assert len(cache) == size

    def test_cache_limit(self):
        """Test that a full cache stops storing steps"""
        cache = TransitionCache(limit=0)
        outcome = run_trial(config("rand 3"), RoundRobin(), 0, cache=cache)
        assert outcome.kind == "value"
        assert len(cache) == 0
        with pytest.raises(ValueError):
            TransitionCache(limit=-1)

    def test_unsamplable_policy(self):
        """Test that callback policies are refused"""
        policy = External(lambda zeta, view: {(zeta, 0): 1})
        with pytest.raises(ValueError):
            run_trial(config("1"), policy, 0)


class TestConfidenceInterval:
    """Tests for the Clopper-Pearson interval"""

    def test_no_successes(self):
        """Test the closed form with zero successes"""
        low, high = ci(0, 10, 0.95)
        assert low == 0.0
        assert high == pytest.approx(1 - 0.05 ** 0.1)

    def test_all_successes(self):
        """Test the closed form with only successes"""
        low, high = ci(10, 10, 0.95)
        assert low == pytest.approx(0.05 ** 0.1)
        assert high == 1.0

    def test_interior(self):
        """Test that the interval brackets the point estimate"""
        low, high = ci(5, 10, 0.95)
        assert 0 < low < 0.5 < high < 1
        assert low == pytest.approx(1 - high)

    def test_invalid_arguments(self):
        """Test out-of-range counts and confidence"""
        with pytest.raises(ValueError):
            ci(3, 2)
        with pytest.raises(ValueError):
            ci(0, 0)
        with pytest.raises(ValueError):
            ci(1, 2, 1.0)


class TestEstimate:
    """Tests for the estimator"""

    def test_calibration(self):
        """Test a one-in-sixteen event is recovered"""
        result = estimate(config("rand 15"), RoundRobin(), parse_predicate("ret > 0"), 2000, base_seed=0)
        assert abs(result.point - 1 / 16) < 0.03
        assert result.ci_low <= result.point <= result.ci_high
        assert result.timeouts == 0

    def test_deterministic(self):
        """Test that the same seed gives the same estimate"""
        start = config("rand 3")
        predicate = parse_predicate("ret > 0")
        first = estimate(start, UniformRandom(), predicate, 200, base_seed=3)
        second = estimate(start, UniformRandom(), predicate, 200, base_seed=3)
        assert first == second

    def test_timeouts(self):
        """Test that timeouts are reported and optionally counted"""
        start = config("(rec f x -> f x) 0")
        predicate = parse_predicate("true")
        lenient = estimate(start, RoundRobin(), predicate, 10, max_steps=5)
        strict = estimate(start, RoundRobin(), predicate, 10, max_steps=5, timeout_as_violation=True)
        assert lenient.timeouts == strict.timeouts == 10
        assert lenient.successes == 0
        assert strict.successes == 10

    def test_stuck_trials(self):
        """Test that stuck trials are not violations"""
        result = estimate(config("1 + true"), RoundRobin(), parse_predicate("true"), 5)
        assert result.stuck == 5
        assert result.successes == 0

    def test_invalid_trials(self):
        """Test that at least one trial is needed"""
        with pytest.raises(ValueError):
            estimate(config("1"), RoundRobin(), parse_predicate("true"), 0)

    def test_worker_count_does_not_change_counts(self):
        """Test that splitting the trials across processes keeps every count"""
        start = config("let l = ref 0 in (faa (l, rand 3) ||| faa (l, rand 3)); !l")
        predicate = parse_predicate("ret > 0")
        serial = estimate(start, UniformRandom(), predicate, 120, base_seed=4)
        split = estimate(start, UniformRandom(), predicate, 120, base_seed=4, workers=2, block=25)
        assert split == serial

    def test_invalid_workers(self):
        """Test that workers and block sizes must be positive"""
        with pytest.raises(ValueError):
            estimate(config("1"), RoundRobin(), parse_predicate("true"), 10, workers=0)
        with pytest.raises(ValueError):
            estimate(config("1"), RoundRobin(), parse_predicate("true"), 10, block=0)

    def test_unsamplable_policy(self):
        """Test that callback policies are refused before any trial runs"""
        policy = External(lambda zeta, view: {(zeta, 0): 1})
        with pytest.raises(ValueError):
            estimate(config("1"), policy, parse_predicate("true"), 10)

    def test_interval_coverage(self):
        """Test that 95% intervals cover the true rate in most of 200 repeated estimates"""
        start = config("rand 15")
        predicate = parse_predicate("ret > 0")
        covered = 0
        for seed in range(200):
            result = estimate(start, RoundRobin(), predicate, 200, base_seed=seed, confidence=0.95)
            covered += result.ci_low <= 1 / 16 <= result.ci_high
        assert covered >= 180

    @pytest.mark.slow
    def test_parallel_increments_under_random_scheduler(self):
        """Test the estimate for conTwoAdd is consistent with the exact bound"""
        start = config("let l = ref 0 in (faa (l, rand 3) ||| faa (l, rand 3)); !l")
        result = estimate(start, UniformRandom(), parse_predicate("ret > 0"), 20000, base_seed=0)
        assert result.ci_low <= float(Fraction(1, 16)) <= result.ci_high
        assert result.timeouts == 0

    @pytest.mark.slow
    def test_bloom_filter(self):
        """Test 10^5 trials of the eight-bit, two-hash Bloom filter against the exact rate"""
        item = fixture("bloom", size=8, hashes=2)
        assert item.bound == Fraction(5825, 32768)
        started = time.perf_counter()
        result = estimate(
            initial_config(item.program()), UniformRandom(), item.predicate, 100_000, base_seed=0, workers=2
        )
        assert time.perf_counter() - started < 120
        assert result.ci_low <= float(item.bound) <= result.ci_high
        assert result.timeouts == result.stuck == 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
