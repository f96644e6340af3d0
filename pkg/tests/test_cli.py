import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from quantmdp.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
codebook_schedule = [4, 16]
[system]
name = "linear_tracking"
B = -1.0
cost_cap = 20.0
[policy]
name = "identity"
[codebook]
box = [[-8.0, 8.0]]
[mc]
n_rollouts = 500
[output]
stem = "small"
"""


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL)
    return p


def test_convergence_writes_both_formats(small, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["convergence", "--config", str(small), "--out", str(out)]) == 0
    captured = capsys.readouterr()
    assert captured.out == (out / "small.csv").read_text()
    assert "provenance" in captured.err and "PASS" in captured.err
    assert json.loads((out / "small.json").read_text())["kind"] == "convergence"


def test_json_format_to_stdout(small, tmp_path, capsys):
    assert main(["bounds", "--config", str(small), "--out", str(tmp_path), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_byte_identical_runs_and_workers(small, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    main(["convergence", "--config", str(small), "--out", str(a)])
    main(["convergence", "--config", str(small), "--out", str(b)])
    main(["convergence", "--config", str(small), "--out", str(c), "--workers", "4"])
    for name in ("small.csv", "small.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_seed_override_changes_results(small, tmp_path):
    main(["convergence", "--config", str(small), "--out", str(tmp_path / "a")])
    main(["convergence", "--config", str(small), "--out", str(tmp_path / "b"), "--seed", "99"])
    a = json.loads((tmp_path / "a" / "small.json").read_text())
    b = json.loads((tmp_path / "b" / "small.json").read_text())
    assert b["metadata"]["seed"] == 99 and a["rows"][0]["gap"] != b["rows"][0]["gap"]


def test_dump_rollouts(small, tmp_path):
    from quantmdp.experiments import read_rollout_gaps
    assert main(["convergence", "--config", str(small), "--out", str(tmp_path), "--dump-rollouts"]) == 0
    gaps = read_rollout_gaps(tmp_path / "small_rollouts.csv")
    rows = json.loads((tmp_path / "small.json").read_text())["rows"]
    for r in rows:
        assert abs(gaps[r["k"]].mean - r["gap"]) <= 1e-12


def test_falsification_exit_code(tmp_path):
    assert main(["bounds", "--config", str(CONFIGS / "falsify.toml"), "--out", str(tmp_path)]) == 1


def test_config_errors_exit_2(tmp_path, small, capsys):
    assert main(["bounds", "--config", str(tmp_path / "none.toml")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text(SMALL.replace("[4, 16]", "[16, 4]"))
    assert main(["convergence", "--config", str(bad)]) == 2
    assert "strictly increasing" in capsys.readouterr().err
    assert main(["convergence", "--config", str(small), "--seed", "-1"]) == 2
    assert main(["convergence", "--config", str(small), "--workers", "0"]) == 2


def test_unwritable_output_exit_2(small, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["convergence", "--config", str(small), "--out", str(blocker / "sub")]) == 2


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["convergence"])
    assert err.value.code == 2


def test_codebook_subcommand(capsys, small):
    assert main(["codebook", "--k", "4", "--box=-1,1"]) == 0
    assert capsys.readouterr().out == "-0.75\n-0.25\n0.25\n0.75\n"
    assert main(["codebook", "--config", str(small)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 4
    assert main(["codebook", "--k", "9", "--box=-1,1", "--box=-1,1"]) == 0
    assert capsys.readouterr().out.splitlines()[4] == "0.0,0.0"
    assert main(["codebook", "--k", "4"]) == 2
    assert main(["codebook", "--k", "0", "--box=0,1"]) == 2


def test_slb_and_tvcheck_subcommands(tmp_path, capsys):
    assert main(["slb", "--config", str(CONFIGS / "sandwich_d1.toml"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "sandwich_d1.csv").read_text().startswith("k,rate_bits,per_stage")


def test_console_script_entry_point(small, tmp_path):
    env = dict(os.environ)
    r = subprocess.run([sys.executable, "-m", "quantmdp.cli", "codebook", "--k", "2", "--box=0,1"],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 0 and r.stdout == "0.25\n0.75\n"
