"""Command-line interface: subcommands, exit codes, and report formats."""

import json
import subprocess
import sys

import pytest

from popgames import builtin, make_game, parse_protocol, print_game, print_protocol
from popgames.cli import main
from popgames.games import ALL_TIES, derive_protocol

from conftest import cycle3_protocol


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def protocol_file(tmp_path, protocol, name="protocol.txt"):
    path = tmp_path / name
    path.write_text(print_protocol(protocol), encoding="utf-8")
    return str(path)


def game_file(tmp_path, game, name="game.txt"):
    path = tmp_path / name
    path.write_text(print_game(game), encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# check


def test_check_structural(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("or"))
    code, out, _ = run_cli(capsys, "check", path)
    assert code == 0
    assert "2 states, deterministic, symmetric" in out


def test_check_witness(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("majority"))
    code, out, _ = run_cli(capsys, "check", "--pavlovian", path)
    assert code == 0
    assert "pavlovian: yes (mode exact)" in out
    assert "threshold" in out

    code, out, _ = run_cli(capsys, "check", "--pavlovian", "--json", path)
    assert code == 0
    payload = json.loads(out)
    assert payload["pavlovian"] is True
    assert payload["mode"] == "exact"
    assert len(payload["witness"]["matrix"]) == 4
    assert isinstance(payload["witness"]["threshold"], int)


def test_check_certificate(tmp_path, capsys):
    path = protocol_file(tmp_path, cycle3_protocol())
    code, out, _ = run_cli(capsys, "check", "--pavlovian", path)
    assert code == 1
    assert "pavlovian: no" in out
    assert "certificate:" in out and "<" in out

    code, out, _ = run_cli(capsys, "check", "--pavlovian", "--json", path)
    assert code == 1
    payload = json.loads(out)
    assert payload["pavlovian"] is False
    assert payload["certificate"]


def test_check_defaults_to_subset_for_nondeterministic(tmp_path, capsys):
    flat = make_game("flat", ("a", "b", "c"), ((0,) * 3,) * 3, 1)
    path = protocol_file(tmp_path, derive_protocol(flat, ALL_TIES))
    code, out, _ = run_cli(capsys, "check", "--pavlovian", "--json", path)
    assert code == 0
    payload = json.loads(out)
    assert payload["mode"] == "subset"
    assert payload["pavlovian"] is True


def test_check_malformed_file(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("protocol broken\nrule a b -> c d\n", encoding="utf-8")
    code, _, err = run_cli(capsys, "check", str(path))
    assert code == 2
    assert "error:" in err


def test_check_missing_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, "check", str(tmp_path / "nope.txt"))
    assert code == 2
    assert "error:" in err


# ---------------------------------------------------------------------------
# derive


def test_derive_pd(tmp_path, capsys):
    path = game_file(tmp_path, builtin("pd"))
    code, out, _ = run_cli(
        capsys, "derive", "--tie-break", "lowest", path,
        "--inputs", "0=C,1=D", "--outputs", "C=1,D=0")
    assert code == 0
    derived = parse_protocol(out)
    assert derived.rules == builtin("pavlov-pd").rules
    assert derived.input_map == {"0": 0, "1": 1}
    assert derived.output_map == (1, 0)


def test_derive_partial_outputs_rejected(tmp_path, capsys):
    path = game_file(tmp_path, builtin("pd"))
    code, _, err = run_cli(capsys, "derive", path, "--outputs", "C=1")
    assert code == 2
    assert "misses state" in err


def test_derive_tie_break_modes(tmp_path, capsys):
    flat = make_game("flat", ("a", "b", "c"), ((0,) * 3,) * 3, 1)
    path = game_file(tmp_path, flat)
    code, out, _ = run_cli(capsys, "derive", path)
    assert code == 0
    assert len(parse_protocol(out).rules[(0, 0)]) > 1
    code, out, _ = run_cli(capsys, "derive", "--tie-break", "lowest", path)
    assert code == 0
    all_rules = parse_protocol(out).rules
    assert all(len(succ) == 1 for succ in all_rules.values())


# ---------------------------------------------------------------------------
# simulate


def test_simulate_csv_identical_for_equal_seeds(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("pavlov-pd"))
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    for out_path in (out1, out2):
        code, stdout, _ = run_cli(
            capsys, "simulate", path, "--init-states", "all-D", "--size", "6",
            "--trials", "20", "--seed", "7", "--csv", str(out_path))
        assert code == 0
        summary = json.loads(stdout)
        assert summary["successes"] == 20
        assert summary["backend"] in ("numba", "numpy")
        assert summary["note"] == "identity interactions count as steps"
    assert out1.read_bytes() == out2.read_bytes()
    header = out1.read_text(encoding="utf-8").splitlines()[0]
    assert header == "trial,steps,stabilized,final_output"


def test_simulate_csv_differs_across_seeds(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("pavlov-pd"))
    rows = []
    for seed in ("7", "8"):
        out_path = tmp_path / f"s{seed}.csv"
        code, _, _ = run_cli(
            capsys, "simulate", path, "--init-states", "all-D", "--size", "6",
            "--trials", "20", "--seed", seed, "--csv", str(out_path))
        assert code == 0
        rows.append(out_path.read_bytes())
    assert rows[0] != rows[1]


def test_simulate_stdout_mixes_csv_and_summary(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("or"))
    code, out, _ = run_cli(
        capsys, "simulate", path, "--input", "0:2,1:1", "--trials", "2")
    assert code == 0
    csv_part, brace, json_part = out.partition("{")
    lines = csv_part.strip().splitlines()
    assert lines[0] == "trial,steps,stabilized,final_output"
    assert len(lines) == 3
    summary = json.loads(brace + json_part)
    assert summary["population"] == 3
    assert summary["trials"] == 2


def test_simulate_on_graphs(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("pavlov-pd"))
    code, _, _ = run_cli(
        capsys, "simulate", path, "--init-states", "all-D", "--size", "5",
        "--graph", "ring")
    assert code == 0

    graph_path = tmp_path / "path.graph"
    graph_path.write_text(
        "vertices 4\nedge 0 1\nedge 1 2\nedge 2 3\n", encoding="utf-8")
    code, _, _ = run_cli(
        capsys, "simulate", path, "--init-states", "all-D", "--size", "4",
        "--graph", f"file:{graph_path}")
    assert code == 0

    code, _, err = run_cli(
        capsys, "simulate", path, "--init-states", "all-D", "--size", "4",
        "--graph", "torus")
    assert code == 2
    assert "graph must be" in err


def test_simulate_init_validation(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("or"))
    code, _, err = run_cli(capsys, "simulate", path)
    assert code == 2
    assert "exactly one of" in err
    code, _, err = run_cli(
        capsys, "simulate", path, "--input", "0:3", "--init-states", "all-0",
        "--size", "3")
    assert code == 2


def test_simulate_stop_rules(tmp_path, capsys):
    maj = protocol_file(tmp_path, builtin("majority"), "maj.txt")
    code, out, _ = run_cli(
        capsys, "simulate", maj, "--input", "0:2,1:1", "--stop", "window:8")
    assert code == 0
    assert '"1"' in out.splitlines()[1] or ",1" in out.splitlines()[1]

    code, out, _ = run_cli(
        capsys, "simulate", maj, "--input", "0:2,1:1", "--stop", "none",
        "--max-steps", "9")
    assert code == 0
    assert out.splitlines()[1].startswith("0,9,false")

    code, _, err = run_cli(
        capsys, "simulate", maj, "--input", "0:2,1:1", "--stop", "quiet")
    assert code == 2
    assert "stop rule" in err


def test_simulate_rejects_zero_trials(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("or"))
    code, _, err = run_cli(
        capsys, "simulate", path, "--input", "0:3", "--trials", "0")
    assert code == 2
    assert "trials" in err


# ---------------------------------------------------------------------------
# verify


def test_verify_or_passes(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("or"))
    code, out, _ = run_cli(
        capsys, "verify", path, "--predicate", "n_1 >= 1", "--sizes", "2..4")
    assert code == 0
    verdict = json.loads(out)
    assert verdict["passed"] is True
    assert verdict["sizes"] == [2, 3, 4]
    assert verdict["note"] == "exhaustive over the listed population sizes only"


def test_verify_weak_xor_fails(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("weak-xor"))
    code, out, _ = run_cli(
        capsys, "verify", path, "--predicate", "n_1 mod 2 = 1",
        "--sizes", "2..4")
    assert code == 1
    verdict = json.loads(out)
    assert verdict["passed"] is False
    failing = [r for r in verdict["inputs"] if not r["passed"]]
    assert failing
    assert all("counterexample" in r for r in failing)
    assert all(r["counterexample"]["path"] for r in failing)


def test_verify_leader_election(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("leader-pavlovian"))
    code, out, _ = run_cli(
        capsys, "verify", path, "--leaders", "L1,L2", "--sizes", "3..4")
    assert code == 0
    assert json.loads(out)["passed"] is True

    code, out, _ = run_cli(
        capsys, "verify", path, "--leaders", "L1,L2", "--sizes", "2..2")
    assert code == 1

    code, out, _ = run_cli(
        capsys, "verify", path, "--leaders", "L1,L2", "--sizes", "3..3",
        "--initial-states", "L1,N")
    assert code == 0


def test_verify_property_flags(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("or"))
    code, _, err = run_cli(capsys, "verify", path)
    assert code == 2
    assert "exactly one of" in err
    code, _, _ = run_cli(
        capsys, "verify", path, "--predicate", "n_1 >= 1",
        "--leaders", "0,1")
    assert code == 2


def test_verify_bad_sizes_and_predicate(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("or"))
    code, _, err = run_cli(
        capsys, "verify", path, "--predicate", "n_1 >= 1", "--sizes", "8")
    assert code == 2
    assert "sizes" in err
    code, _, err = run_cli(
        capsys, "verify", path, "--predicate", "n_1 >", "--sizes", "2..3")
    assert code == 2
    assert "position" in err


def test_verify_budget_flag(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("or"))
    code, _, err = run_cli(
        capsys, "verify", path, "--predicate", "n_1 >= 1", "--sizes", "3..3",
        "--budget", "2")
    assert code == 3
    assert "error:" in err


def test_verify_budget_env(tmp_path, capsys, monkeypatch):
    path = protocol_file(tmp_path, builtin("or"))
    monkeypatch.setenv("POPGAMES_BUDGET", "2")
    code, _, _ = run_cli(
        capsys, "verify", path, "--predicate", "n_1 >= 1", "--sizes", "3..3")
    assert code == 3
    monkeypatch.setenv("POPGAMES_BUDGET", "not-a-number")
    code, _, _ = run_cli(
        capsys, "verify", path, "--predicate", "n_1 >= 1", "--sizes", "3..3")
    assert code == 0


# ---------------------------------------------------------------------------
# symmetrize and search


def test_symmetrize_pipes_into_verify(tmp_path, capsys):
    path = protocol_file(tmp_path, builtin("or"))
    code, out, _ = run_cli(capsys, "symmetrize", path)
    assert code == 0
    from popgames import symmetrize

    assert parse_protocol(out) == symmetrize(builtin("or"))
    doubled_path = tmp_path / "doubled.txt"
    doubled_path.write_text(out, encoding="utf-8")
    code, out, _ = run_cli(
        capsys, "verify", str(doubled_path), "--predicate", "n_1 >= 1",
        "--sizes", "3..4")
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_search_finds_or(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys, "search", "--states", "2", "--predicate", "n_1 >= 1",
        "--sizes", "2..3", "--alphabet", "0,1", "--json")
    assert code == 0
    findings = json.loads(out)
    assert findings
    parsed = [parse_protocol(entry["protocol"]) for entry in findings]
    assert any(
        p.rules == builtin("or").rules
        and p.input_map == {"0": 0, "1": 1}
        and p.output_map == (0, 1)
        for p in parsed
    )
    for entry in findings:
        assert len(entry["witness"]["matrix"]) == 2

    code, out, _ = run_cli(
        capsys, "search", "--states", "2", "--predicate", "n_1 >= 1",
        "--sizes", "2..3", "--alphabet", "0,1")
    assert code == 0
    assert "# finding 1" in out
    assert "finding(s) over sizes 2..3" in out


def test_search_budget(capsys):
    code, _, err = run_cli(
        capsys, "search", "--states", "3", "--predicate", "n_1 >= 1",
        "--sizes", "2..2", "--budget", "100")
    assert code == 3
    assert "error:" in err


# ---------------------------------------------------------------------------
# builtin export


def test_builtin_listing(capsys):
    code, out, _ = run_cli(capsys, "builtin")
    assert code == 0
    keys = out.split()
    assert "or" in keys and "pd" in keys and len(keys) == 10


def test_builtin_protocol_export(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "builtin", "or")
    assert code == 0
    assert parse_protocol(out) == builtin("or")

    code, out, _ = run_cli(capsys, "builtin", "leader-pavlovian")
    assert code == 0
    assert "# leader states: L1,L2" in out


def test_builtin_game_export(capsys):
    code, out, _ = run_cli(capsys, "builtin", "pd")
    assert code == 0
    assert "threshold 2" in out

    code, out, _ = run_cli(
        capsys, "builtin", "pd", "--set", "R=4", "--set", "threshold=3")
    assert code == 0
    assert "threshold 3" in out and "4" in out


def test_builtin_bad_requests(capsys):
    code, _, err = run_cli(capsys, "builtin", "xor")
    assert code == 2
    assert "unknown builtin" in err
    code, _, err = run_cli(capsys, "builtin", "pd", "--set", "X=1")
    assert code == 2
    assert "bad --set" in err
    code, _, err = run_cli(capsys, "builtin", "pd", "--set", "T")
    assert code == 2


# ---------------------------------------------------------------------------
# wiring


def test_usage_errors_exit_2(capsys):
    assert main([]) == 2
    assert main(["simulate"]) == 2
    assert main(["check", "--mode", "both", "x"]) == 2
    capsys.readouterr()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "popgames.cli", "builtin"],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "majority" in proc.stdout
