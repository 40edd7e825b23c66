"""Tests for the predicate language"""

import pytest

from modules.errors import PredicateSyntaxError
from modules.predicates import TRUE_PREDICATE, parse_predicate
from modules.syntax import FALSE, TRUE, UNIT, Int, PairV


def pair(a, b):
    return PairV(a, b)


class TestComparisons:
    """Tests for comparisons on result values"""

    def test_integer_comparison(self):
        """Test ret > 0"""
        predicate = parse_predicate("ret > 0")
        assert predicate.holds(Int(1))
        assert not predicate.holds(Int(0))

    def test_shape_mismatch_is_false(self):
        """Test that an ordering on a non-integer is false"""
        assert not parse_predicate("ret > 0").holds(TRUE)
        assert not parse_predicate("fst ret == 1").holds(Int(1))

    def test_negative_literals(self):
        """Test signed integer literals"""
        assert parse_predicate("ret == -1").holds(Int(-1))

    def test_projections(self):
        """Test fst and snd on pairs"""
        predicate = parse_predicate("fst ret != snd ret")
        assert predicate.holds(pair(Int(0), Int(1)))
        assert not predicate.holds(pair(Int(1), Int(1)))

    def test_boolean_and_unit_literals(self):
        """Test true, false and unit"""
        assert parse_predicate("ret == false").holds(FALSE)
        assert parse_predicate("ret == ()").holds(UNIT)


class TestConnectives:
    """Tests for boolean structure and quantifiers"""

    def test_and_or_not(self):
        """Test connective precedence"""
        predicate = parse_predicate("ret > 0 && ret < 3 || ret == 10")
        assert predicate.holds(Int(2))
        assert predicate.holds(Int(10))
        assert not predicate.holds(Int(5))
        assert parse_predicate("!(ret == 1)").holds(Int(2))

    def test_exists_over_pairs(self):
        """Test a bounded existential over nested pairs"""
        predicate = parse_predicate("exists n in 0..1. ret == ((n, n), (n, n))")
        same = pair(pair(Int(1), Int(1)), pair(Int(1), Int(1)))
        mixed = pair(pair(Int(0), Int(0)), pair(Int(1), Int(1)))
        assert predicate.holds(same)
        assert not predicate.holds(mixed)

    def test_negate(self):
        """Test that negate flips holds and keeps the text"""
        predicate = parse_predicate("ret > 0")
        negated = predicate.negate()
        assert negated.holds(Int(0))
        assert negated.violated(Int(1))
        assert str(negated) == "!(ret > 0)"
        assert negated.negate().holds(Int(1))

    def test_true_predicate(self):
        """Test the trivially true predicate"""
        assert TRUE_PREDICATE.holds(UNIT)


class TestErrors:
    """Tests for rejected predicates"""

    def test_unbound_name(self):
        """Test that free names are rejected at parse time"""
        with pytest.raises(PredicateSyntaxError):
            parse_predicate("x > 0")

    def test_syntax_error(self):
        """Test an incomplete comparison"""
        with pytest.raises(PredicateSyntaxError):
            parse_predicate("ret >")

    def test_errors_are_value_errors(self):
        """Test that callers can catch ValueError"""
        with pytest.raises(ValueError):
            parse_predicate("ret ==")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
