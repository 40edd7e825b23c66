"""Tests for the command-line interface"""

import json
from pathlib import Path

import pytest

from cli import build_parser, main

FIXTURES_DIR = Path(__file__).parent.parent / "fixtures"


def run_cli(capsys, *argv):
    """Run the CLI and return (exit code, stdout, stderr)"""
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestAnalytics:
    """Tests for the commands that need no program"""

    def test_efp(self, capsys):
        """Test the recurrence printout"""
        code, out, _ = run_cli(capsys, "efp", "--size", "2", "--hashes", "1", "--insertions", "2")
        assert code == 0
        assert out.strip() == "3/4 (0.75)"

    def test_efp_json(self, capsys):
        """Test the JSON report"""
        code, out, _ = run_cli(capsys, "efp", "--size", "2", "--hashes", "1", "--insertions", "2", "--json")
        report = json.loads(out)
        assert code == 0
        assert report["value"]["rational"] == "3/4"
        assert report["method"] == "recurrence"

    def test_efp_counts_keys(self, capsys):
        """Test that --insertions counts keys, each drawing --hashes indices"""
        code, out, _ = run_cli(capsys, "efp", "--size", "8", "--hashes", "2", "--insertions", "2", "--json")
        report = json.loads(out)
        assert code == 0
        assert report["value"]["rational"] == "5825/32768"
        assert report["draws"] == 4

    def test_efp_draws(self, capsys):
        """Test the partly filled filter form"""
        code, out, _ = run_cli(capsys, "efp", "--size", "8", "--hashes", "2", "--draws", "4")
        assert code == 0
        assert out.startswith("5825/32768")

    def test_efp_needs_one_count(self, capsys):
        """Test that --insertions and --draws exclude each other"""
        code, _, _ = run_cli(capsys, "efp", "--size", "8", "--hashes", "2", "--insertions", "2", "--draws", "4")
        assert code == 2

    def test_bloom_oracle(self, capsys):
        """Test the brute-force printout"""
        code, out, _ = run_cli(capsys, "bloom-oracle", "--size", "2", "--hashes", "1", "--keys", "2")
        assert code == 0
        assert out.strip() == "3/4 (0.75)"

    def test_enumeration_guard(self, capsys):
        """Test that a refused enumeration exits with the guard code"""
        code, _, err = run_cli(capsys, "bloom-oracle", "--size", "16", "--hashes", "4", "--keys", "8")
        assert code == 3
        assert "exceeds limit" in err

    def test_fixtures(self, capsys):
        """Test the fixture listing"""
        code, out, _ = run_cli(capsys, "fixtures")
        assert code == 0
        assert "twoAdd" in out
        assert "bloom-seq" in out


class TestQueries:
    """Tests for the program commands"""

    def test_adversary_bound_holds(self, capsys):
        """Test the fixture's own predicate and bound"""
        code, out, _ = run_cli(capsys, "adversary", "--fixture", "twoAdd", "--horizon", "30")
        assert code == 0
        assert "sup_violation: 1/16 (0.0625)" in out
        assert "bound 1/16: holds" in out

    def test_adversary_bound_violated(self, capsys):
        """Test exit code 1 and a witness when the bound fails"""
        code, out, _ = run_cli(
            capsys, "adversary", "--fixture", "twoAdd", "--predicate", "ret > 0",
            "--horizon", "30", "--bound", "1/32"
        )
        assert code == 1
        assert "VIOLATED" in out
        assert "witness:" in out

    def test_adversary_horizon_doubling(self, capsys):
        """Test the monotone history when no horizon is given"""
        code, out, _ = run_cli(capsys, "adversary", "--fixture", "twoAdd", "--json")
        report = json.loads(out)
        assert code == 0
        assert report["converged"] is True
        assert report["value"]["rational"] == "1/16"
        horizons = [entry["horizon"] for entry in report["monotone_history"]]
        assert horizons == sorted(horizons)
        assert report["notes"]

    def test_safety(self, capsys):
        """Test the stuck_half safety bound both ways"""
        code, out, _ = run_cli(capsys, "safety", "--fixture", "stuck_half", "--horizon", "5")
        assert code == 0
        assert "min_mass: 1/2 (0.5)" in out
        code, _, _ = run_cli(capsys, "safety", "--fixture", "stuck_half", "--horizon", "5", "--bound", "3/4")
        assert code == 1

    def test_exact_from_file(self, capsys):
        """Test the value distribution of a program file"""
        path = str(FIXTURES_DIR / "twoAdd.cpl")
        code, out, _ = run_cli(capsys, "exact", path, "--horizon", "30")
        assert code == 0
        assert "{0: 1/16, 1: 1/8, 2: 3/16, 3: 1/4, 4: 3/16, 5: 1/8, 6: 1/16}" in out
        assert "residual: 0/1" in out

    def test_exact_dump_final(self, capsys):
        """Test the final configuration dump"""
        code, out, _ = run_cli(capsys, "exact", "--fixture", "stuck_half", "--horizon", "5", "--dump-final")
        assert code == 0
        assert "threads:" in out
        assert "note: stuck mass 1/2" in out

    def test_mc(self, capsys):
        """Test a seeded Monte Carlo run"""
        argv = ("mc", "--fixture", "twoAdd", "--trials", "50", "--seed", "1", "--json")
        code, out, _ = run_cli(capsys, *argv)
        first = json.loads(out)
        _, out, _ = run_cli(capsys, *argv)
        assert code == 0
        assert first["trials"] == 50
        assert first == json.loads(out)

    def test_parse_module(self, capsys):
        """Test that a module file parses without a main expression"""
        code, out, _ = run_cli(capsys, "parse", "--fixture", "counter_I1")
        assert code == 0
        assert "let create_counter u = ref 0;;" in out

    def test_erase(self, capsys):
        """Test that the erased program has no tape operations"""
        code, out, _ = run_cli(capsys, "erase", "--fixture", "twoincr-I1")
        assert code == 0
        assert "alloctape" not in out

    def test_erase_check(self, capsys):
        """Test the erasure comparison on a tape fixture"""
        code, out, _ = run_cli(capsys, "erase-check", "--fixture", "twoincr-I1")
        assert code == 0
        assert "passed" in out

    def test_erase_check_without_limits(self, capsys):
        """Test that fixed policies alone leave the check inconclusive"""
        code, out, _ = run_cli(capsys, "erase-check", "--fixture", "twoincr-I1", "--horizon", "2", "--no-limits")
        assert code == 4
        assert "inconclusive" in out

    def test_erase_check_json_status(self, capsys):
        """Test the status field of the JSON report"""
        code, out, _ = run_cli(capsys, "erase-check", "--fixture", "twoincr-I1", "--horizon", "2", "--json")
        report = json.loads(out)
        assert code == 0
        assert report["status"] == "passed"
        assert report["passed"] is True

    def test_generated_fixture(self, capsys):
        """Test fixture parameters on the command line"""
        code, out, _ = run_cli(
            capsys, "parse", "--fixture", "bloom-seq", "--param", "size=3", "--param", "keys=0,1", "--param", "query=4"
        )
        assert code == 0
        assert "bfmain_seq 3 1 [0; 1] 4" in out


class TestErrors:
    """Tests for exit codes on errors"""

    def test_unknown_fixture(self, capsys):
        """Test exit code 2 for a missing fixture"""
        code, _, err = run_cli(capsys, "adversary", "--fixture", "threeAdd")
        assert code == 2
        assert "Unknown fixture" in err

    def test_missing_program(self, capsys):
        """Test exit code 2 without a program"""
        code, _, _ = run_cli(capsys, "exact")
        assert code == 2

    def test_bad_argument(self, capsys):
        """Test argparse errors"""
        code, _, _ = run_cli(capsys, "efp", "--size", "0", "--hashes", "1", "--insertions", "1")
        assert code == 2

    def test_unknown_scheduler(self, capsys):
        """Test an invalid scheduler name"""
        code, _, err = run_cli(capsys, "exact", "--fixture", "twoAdd", "--scheduler", "fifo")
        assert code == 2
        assert "Unknown scheduler" in err

    def test_param_without_fixture(self, capsys):
        """Test that --param needs --fixture"""
        path = str(FIXTURES_DIR / "twoAdd.cpl")
        code, _, _ = run_cli(capsys, "exact", path, "--param", "size=2")
        assert code == 2

    def test_syntax_error(self, capsys, tmp_path):
        """Test a program file that does not parse"""
        path = tmp_path / "broken.cpl"
        path.write_text("let x = in 1", encoding="utf-8")
        code, _, err = run_cli(capsys, "parse", str(path))
        assert code == 2
        assert "line 1" in err

    def test_memo_guard(self, capsys, monkeypatch):
        """Test exit code 3 when the memo limit is hit"""
        monkeypatch.setenv("PROBSCHED_MEMO_LIMIT", "5")
        code, _, err = run_cli(capsys, "adversary", "--fixture", "conTwoAdd", "--horizon", "80")
        assert code == 3
        assert "Memo limit" in err

    def test_help(self, capsys):
        """Test that --help exits cleanly"""
        code, out, _ = run_cli(capsys, "--help")
        assert code == 0
        assert "adversary" in out

    def test_parser_commands(self):
        """Test that every command is registered"""
        parser = build_parser()
        for command in ("parse", "exact", "adversary", "safety", "mc", "erase", "erase-check",
                        "efp", "bloom-oracle", "fixtures"):
            args = parser.parse_args([command] + (
                ["--size", "1", "--hashes", "1", "--insertions", "0"] if command == "efp" else
                ["--size", "1", "--hashes", "1", "--keys", "0"] if command == "bloom-oracle" else []
            ))
            assert args.command == command


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
