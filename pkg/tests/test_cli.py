import csv
import subprocess
import sys

import pytest

from flockplan.cli import main


def test_help_lists_defaults(capsys):
    assert main(["run", "--help"]) == 0
    out = capsys.readouterr().out
    for text in ("default: 10", "default: 3", "default: 6", "default: 15", "100x100", "50 50"):
        assert text in out


def test_unknown_flag_exits_1(capsys):
    assert main(["run", "--warp-drive"]) == 1
    assert main([]) == 1


def test_bad_value_exits_1(tmp_path, capsys):
    assert main(["run", "--robots", "4", "--out", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_run_writes_outputs(tmp_path, capsys):
    assert main(["run", "--seed", "1", "--out", str(tmp_path), "--svg"]) == 0
    assert (tmp_path / "config.ini").exists()
    assert (tmp_path / "1" / "curves.csv").exists()
    assert any((tmp_path / "1" / "frames").iterdir())


def test_batch_and_render(tmp_path, capsys):
    out = tmp_path / "b"
    args = ["batch", "--seeds", "0,2", "--max-rounds", "5", "--out", str(out)]
    assert main(args) == 0
    rows = list(csv.reader(open(out / "summary.csv")))
    assert [r[0] for r in rows[1:]] == ["0", "2"]
    assert main(["render", str(out / "2"), "--out", str(tmp_path / "svg")]) == 0
    assert len(list((tmp_path / "svg").iterdir())) == 6


def test_config_file_then_flags(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[task]\nshape = square\nrobots = 8\n[run]\nmax_rounds = 2\n")
    assert main(["run", "--config", str(ini), "--max-rounds", "3", "--out", str(tmp_path / "o")]) == 0
    snap = (tmp_path / "o" / "config.ini").read_text()
    assert "shape = square" in snap and "max_rounds = 3" in snap


def test_align(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("x,y\n0,0\n4,0\n0,3\n")
    b.write_text("10,10\n10,14\n7,10\n")
    assert main(["align", str(a), str(b)]) == 0
    out = capsys.readouterr().out
    err = float(out.split("error_mean_dist: ")[1].split()[0])
    assert err == pytest.approx(0, abs=1e-12)
    assert "rotation_deg: 90" in out
    b.write_text("1,1\n")
    assert main(["align", str(a), str(b)]) == 1


def test_prompts_match_golden(tmp_path, fixtures, capsys):
    assert main(["prompts", "--out", str(tmp_path)]) == 0
    for name in ("system.txt", "plan_request.txt", "step_request.txt"):
        assert (tmp_path / name).read_bytes() == (fixtures / "prompts" / name).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "flockplan", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and "flockplan" in proc.stdout
