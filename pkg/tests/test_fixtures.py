"""Tests for the fixture catalogue"""

from fractions import Fraction

import pytest

from modules.analytics import bloom_bound
from modules.errors import UnknownFixtureError
from modules.fixtures import fixture, list_fixtures, load_catalogue, stdlib, tape_fixtures
from modules.syntax import Int, Val, free_vars

RUNNABLE = sorted(
    name for name, entry in load_catalogue()["fixtures"].items() if entry.get("kind") != "module"
)
MODULES = sorted(
    name for name, entry in load_catalogue()["fixtures"].items() if entry.get("kind") == "module"
)


class TestCatalogue:
    """Tests for catalogue entries"""

    def test_names(self):
        """Test that catalogue and generated fixtures are listed"""
        names = list_fixtures()
        for name in ("twoAdd", "conTwoAdd-I1", "twoincr-I3", "lazyrace", "bloom", "bloom-seq", "hash_fixture"):
            assert name in names
        assert names == sorted(names)

    @pytest.mark.parametrize("name", RUNNABLE)
    def test_runnable_fixture_loads(self, name):
        """Test that every program fixture becomes a closed core expression"""
        item = fixture(name)
        assert free_vars(item.program()) == frozenset()
        assert item.horizon and item.horizon > 0

    @pytest.mark.parametrize("name", MODULES)
    def test_module_fixture(self, name):
        """Test that module fixtures export definitions and have no main"""
        item = fixture(name)
        assert item.is_module
        assert item.load().exports
        with pytest.raises(ValueError):
            item.program()

    def test_bound_fixture(self):
        """Test the recorded query of a bound fixture"""
        item = fixture("conTwoAdd-I3")
        assert item.kind == "bound"
        assert item.bound == Fraction(1, 16)
        assert item.rejection_rate == Fraction(1, 5)
        assert item.predicate.violated(Int(0))

    def test_distribution_fixture(self):
        """Test the expected distribution of twoincr"""
        item = fixture("twoincr-I1")
        assert item.kind == "distribution"
        assert item.expected[Int(15)] == Fraction(1, 16)
        assert len(item.expected) == 16

    def test_unknown_fixture(self):
        """Test that a missing name lists what exists"""
        with pytest.raises(UnknownFixtureError) as excinfo:
            fixture("threeAdd")
        assert "twoAdd" in str(excinfo.value)

    def test_parameters_on_plain_fixture(self):
        """Test that plain fixtures take no parameters"""
        with pytest.raises(ValueError):
            fixture("twoAdd", size=2)

    def test_tape_fixtures(self):
        """Test which programs use presampling tapes"""
        names = tape_fixtures()
        assert "twoincr-I1" in names
        assert "conTwoAdd-I2" in names
        assert "twoAdd" not in names
        assert "stuck_half" not in names

    def test_stdlib(self):
        """Test the list and array helpers are exported"""
        exports = stdlib()
        for name in ("list_iter", "list_init", "list_map", "array_init"):
            assert name in exports


class TestGeneratedFixtures:
    """Tests for parameterised fixtures"""

    def test_bloom_defaults(self):
        """Test the default Bloom filter and its bound"""
        item = fixture("bloom")
        assert item.params == {"size": 2, "hashes": 1, "keys": [0, 1], "query": 2}
        assert item.bound == Fraction(3, 4)
        assert "bfmain 2 1 [0; 1] 2" in item.source

    def test_bloom_parameters(self):
        """Test explicit and short parameter names"""
        item = fixture("bloom-seq", S=3, k=2, xs=[0, 1, 2], y=7)
        assert item.bound == bloom_bound(3, 2, 3)
        assert "bfmain_seq 3 2 [0; 1; 2] 7" in item.source
        assert free_vars(item.program()) == frozenset()

    def test_bloom_rejects_inserted_query(self):
        """Test that the query must not be an inserted key"""
        with pytest.raises(ValueError):
            fixture("bloom", keys=[0, 1], query=1)

    def test_bloom_rejects_duplicate_keys(self):
        """Test that inserted keys must be distinct"""
        with pytest.raises(ValueError):
            fixture("bloom", keys=[0, 0], query=1)

    def test_bloom_rejects_empty_array(self):
        """Test the size check"""
        with pytest.raises(ValueError):
            fixture("bloom", size=0)

    def test_hash_collision(self):
        """Test distinct keys collide with probability 1 / V"""
        item = fixture("hash_fixture", keys=2, values=3)
        assert item.bound == Fraction(1, 3)
        assert item.predicate_text == "fst ret != snd ret"
        assert free_vars(item.program()) == frozenset()

    def test_hash_same_key(self):
        """Test a single key always gives equal values"""
        item = fixture("hash_fixture", K_size=1, V_size=2)
        assert item.bound == 0
        assert item.predicate_text == "exists n in 0..1. ret == (n, n)"


class TestCustomDirectory:
    """Tests for a catalogue outside the package"""

    def test_own_catalogue(self, tmp_path):
        """Test fixtures from another directory"""
        (tmp_path / "stdlib.cpl").write_text("(* empty *)\n", encoding="utf-8")
        (tmp_path / "one.cpl").write_text("1", encoding="utf-8")
        (tmp_path / "catalogue.yaml").write_text(
            "fixtures:\n  one:\n    file: one.cpl\n    kind: bound\n    predicate: \"ret == 1\"\n"
            "    bound: \"0\"\n    horizon: 1\n",
            encoding="utf-8"
        )
        assert list_fixtures(tmp_path) == ["one"]
        assert fixture("one", tmp_path).program() == Val(Int(1))

    def test_missing_catalogue(self, tmp_path):
        """Test a directory without catalogue.yaml"""
        with pytest.raises(FileNotFoundError):
            list_fixtures(tmp_path)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
