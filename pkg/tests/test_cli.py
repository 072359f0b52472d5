import subprocess
import sys

import pytest

from activeflux.cli import run_cli
from activeflux.harness import read_state_csv


def test_single_run_writes_state(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = run_cli(["--model", "advection:c=1", "--ic", "sine:1,0", "--N", "100", "--cfl", "0.9",
                    "--t-end", "1", "--operator", "exact", "--out", str(out)])
    assert code == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    assert sum(r.startswith("avg,") for r in rows) == 100
    assert sum(r.startswith("point,") for r in rows) == 100
    state, grid, meta = read_state_csv(out)
    assert state.time == 1.0 and meta["model"] == "advection:c=1"
    assert "steps=" in capsys.readouterr().out


def test_convergence_table(tmp_path, capsys):
    out = tmp_path / "eoc.csv"
    code = run_cli(["--model", "advection:c=1", "--ic", "sine:1,0", "--cfl", "0.4",
                    "--t-end", "0.5", "--operator", "exact", "--convergence", "25,50,100,200",
                    "--out", str(out)])
    assert code == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0].startswith("N,dofs,l1_0,linf_0,eoc_l1_0")
    assert [int(l.split(",")[0]) for l in lines[1:]] == [25, 50, 100, 200]
    assert float(lines[-1].split(",")[4]) > 2.7
    assert "eoc" in capsys.readouterr().out


def test_missing_model_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli(["--ic", "sine:1,0"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["--model", "euler"], ["--model", "burgers", "--cfl", "2"],
                                  ["--model", "burgers", "--ic", "triangle"],
                                  ["--model", "swe:g=1", "--operator", "fixedpoint"],
                                  ["--model", "burgers", "--N", "many"]])
def test_bad_arguments_exit_2(tmp_path, argv, capsys):
    argv = argv + ["--out", str(tmp_path / "x.csv"), "--t-end", "0.01"]
    try:
        code = run_cli(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2
    assert capsys.readouterr().err


def test_solver_failure_exits_1(tmp_path, capsys):
    code = run_cli(["--model", "swe:g=1", "--ic", "swe-dam:1,0.001,0.5", "--operator", "midpoint",
                    "--N", "20", "--t-end", "2", "--out", str(tmp_path / "x.csv")])
    assert code == 1
    assert "InadmissibleState" in capsys.readouterr().err


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    out = tmp_path / "cfg.csv"
    cfg.write_text(f"model=burgers\nic=sine:0.5,1\nN=20\nt-end=0.05\nout={out}\n")
    assert run_cli(["--config", str(cfg), "--N", "30"]) == 0
    state, grid, _ = read_state_csv(out)
    assert grid.n_cells == 30 and state.time == 0.05


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run([sys.executable, "-m", "activeflux", "--model", "burgers", "--ic",
                           "step:1,0,0.25", "--boundary", "outflow", "--N", "40",
                           "--t-end", "0.2", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "shock_guard=" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "activeflux"], capture_output=True, text=True)
    assert proc.returncode == 2
