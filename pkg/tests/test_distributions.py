"""Tests for the subdistribution monad"""

from fractions import Fraction

import numpy as np
import pytest

from modules.distributions import ONE, ZERO, Dist, dbind, dret, empty, expect, mass, prob, uniform


def coin():
    return Dist({0: Fraction(1, 2), 1: Fraction(1, 2)})


class TestConstruction:
    """Tests for building distributions"""

    def test_merges_duplicates_and_drops_zeros(self):
        """Test that equal outcomes add up and zero weights vanish"""
        dist = Dist([("a", Fraction(1, 4)), ("a", Fraction(1, 4)), ("b", 0)])
        assert dist["a"] == Fraction(1, 2)
        assert "b" not in dist
        assert len(dist) == 1

    def test_rejects_negative_weight(self):
        """Test that negative probabilities are refused"""
        with pytest.raises(ValueError):
            Dist({"a": Fraction(-1, 2)})

    def test_rejects_mass_above_one(self):
        """Test that total mass above one is refused"""
        with pytest.raises(ValueError):
            Dist({"a": Fraction(3, 4), "b": Fraction(1, 2)})

    def test_uniform(self):
        """Test uniform over {0..3}"""
        dist = uniform(3)
        assert dist.support() == frozenset({0, 1, 2, 3})
        assert all(dist[n] == Fraction(1, 4) for n in range(4))
        assert mass(dist) == ONE

    def test_uniform_zero_bound(self):
        """Test that uniform(0) is a point mass"""
        assert uniform(0) == dret(0)

    def test_uniform_negative_bound(self):
        """Test that a negative bound is refused"""
        with pytest.raises(ValueError):
            uniform(-1)

    def test_empty(self):
        """Test the empty subdistribution"""
        assert mass(empty()) == ZERO
        assert not empty()
        assert Dist.null() == empty()


class TestMonadLaws:
    """Tests for the monad laws with exact equality"""

    def test_left_identity(self):
        """Test ret a >>= f == f a"""
        f = lambda n: uniform(n)
        assert dbind(dret(2), f) == f(2)

    def test_right_identity(self):
        """Test m >>= ret == m"""
        m = uniform(3)
        assert m.bind(dret) == m

    def test_associativity(self):
        """Test (m >>= f) >>= g == m >>= (x -> f x >>= g)"""
        m = uniform(2)
        f = lambda n: uniform(n)
        g = lambda n: Dist({n: Fraction(1, 2)})
        assert (m >> f) >> g == m >> (lambda x: f(x) >> g)

    def test_bind_with_empty(self):
        """Test that binding into the empty distribution loses all mass"""
        assert uniform(3).bind(lambda _: empty()) == empty()

    def test_two_draws_sum(self):
        """Test the sum of two uniform {0..3} draws"""
        total = uniform(3).bind(lambda a: uniform(3).map(lambda b: a + b))
        assert total[0] == Fraction(1, 16)
        assert total[3] == Fraction(4, 16)
        assert total[6] == Fraction(1, 16)
        assert mass(total) == ONE


class TestRandomMonadLaws:
    """The monad laws on random subdistributions with up to 16 outcomes"""

    @staticmethod
    def random_dist(rng, max_support: int = 16) -> Dist:
        support = rng.choice(32, size=int(rng.integers(1, max_support + 1)), replace=False)
        weights = rng.integers(1, 10, size=len(support))
        # some mass is left out so subdistributions are covered too
        total = int(weights.sum()) + int(rng.integers(0, 5))
        return Dist({int(x): Fraction(int(w), total) for x, w in zip(support, weights)})

    def random_kernel(self, rng):
        table = [self.random_dist(rng) for _ in range(8)]
        return lambda x: table[x % len(table)]

    @pytest.mark.parametrize("seed", range(20))
    def test_laws(self, seed):
        """Test left identity, right identity and associativity on one random draw"""
        rng = np.random.default_rng(seed)
        m = self.random_dist(rng)
        f, g = self.random_kernel(rng), self.random_kernel(rng)
        a = int(rng.integers(32))
        assert dret(a).bind(f) == f(a)
        assert m.bind(dret) == m
        assert m.bind(f).bind(g) == m.bind(lambda x: f(x).bind(g))
        assert mass(m.bind(f)) <= mass(m)


class TestMeasures:
    """Tests for mass, expectation and probability"""

    def test_expect_indicator(self):
        """Test expectation of an indicator equals the event probability"""
        dist = uniform(3)
        assert expect(dist, lambda n: 1 if n == 0 else 0) == Fraction(1, 4)
        assert prob(dist, lambda n: n == 0) == Fraction(1, 4)

    def test_expect_out_of_range(self):
        """Test that expectation rejects functions outside [0, 1]"""
        with pytest.raises(ValueError):
            expect(uniform(1), lambda n: 2)

    def test_scale_and_filter(self):
        """Test scaling and filtering a subdistribution"""
        dist = coin().scale(Fraction(1, 2))
        assert mass(dist) == Fraction(1, 2)
        assert dist.filter(lambda n: n == 1) == Dist({1: Fraction(1, 4)})

    def test_scale_out_of_range(self):
        """Test that scale factors above one are refused"""
        with pytest.raises(ValueError):
            coin().scale(2)

    def test_to_text_is_sorted(self):
        """Test the canonical text rendering"""
        dist = Dist({2: Fraction(1, 4), 0: Fraction(3, 4)})
        assert dist.to_text() == "{0: 3/4, 2: 1/4}"

    def test_hash_consistent_with_equality(self):
        """Test that equal distributions hash equally"""
        a = Dist({0: Fraction(1, 2), 1: Fraction(1, 2)})
        b = Dist({1: Fraction(1, 2), 0: Fraction(1, 2)})
        assert a == b
        assert hash(a) == hash(b)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
