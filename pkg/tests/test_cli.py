import subprocess
import sys

import pytest

from amrdual.cli import run

from conftest import DATA


@pytest.fixture
def sphere_file(tmp_path):
    p = tmp_path / "s.amr"
    assert run(["synth", "uniform", "--n", "16", "--field", "sphere:8,8,8,5", "--output", str(p)]) == 0
    return p


def test_extract_matches_golden(tmp_path, sphere_file, capsys):
    out = tmp_path / "s.obj"
    assert run(["extract", "--input", str(sphere_file), "--iso", "0", "--output", str(out), "--stats"]) == 0
    assert out.read_bytes() == (DATA / "sphere16.obj").read_bytes()
    assert "welded_triangle_count=956" in capsys.readouterr().err


def test_extract_ply(tmp_path, sphere_file):
    out = tmp_path / "s.ply"
    assert run(["extract", "--input", str(sphere_file), "--iso", "0", "--output", str(out), "--threads", "2"]) == 0
    assert out.read_bytes() == (DATA / "sphere16.ply").read_bytes()


def test_usage_errors(tmp_path, sphere_file, capsys):
    out = tmp_path / "x.obj"
    assert run(["extract", "--input", str(sphere_file), "--output", str(out)]) == 1
    assert "usage" in capsys.readouterr().err
    assert not out.exists()
    assert run(["extract", "--input", str(sphere_file), "--iso", "0", "--output", str(out), "--threads", "0"]) == 1
    assert run(["bogus"]) == 1
    assert run(["synth", "octree", "--depth", "3", "--field", "cube:1", "--output", str(out)]) == 1


def test_missing_input(tmp_path):
    assert run(["extract", "--input", str(tmp_path / "none.amr"), "--iso", "0", "--output", str(tmp_path / "o.obj")]) == 2


def test_validate_reports_overlap(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 0 0 0 1.0\n0 0 0 1 2.0\n")
    assert run(["validate", "--input", str(bad)]) == 2
    assert "overlap" in capsys.readouterr().err
    out = tmp_path / "o.obj"
    assert run(["extract", "--input", str(bad), "--iso", "0", "--output", str(out), "--validate"]) == 2
    assert not out.exists()


def test_validate_clean(sphere_file):
    assert run(["validate", "--input", str(sphere_file)]) == 0


def test_dual_export(tmp_path, sphere_file):
    out = tmp_path / "d.txt"
    assert run(["dual", "--input", str(sphere_file), "--output", str(out)]) == 0
    assert out.read_text().splitlines()[1] == f"duals {15**3}"


def test_synth_octree_and_blocks(tmp_path):
    oc = tmp_path / "o.amr"
    assert run(["synth", "octree", "--depth", "4", "--threshold", "0", "--iso", "0",
                "--field", "sphere:8.3,7.9,8.2,5", "--output", str(oc)]) == 0
    assert run(["validate", "--input", str(oc)]) == 0
    bl = tmp_path / "b.txt"
    assert run(["synth", "blocks", "--block", "0,0,0:4,4,4:0", "--block", "4,0,0:1,1,1:2",
                "--hole", "1,1,1:2,2,2", "--field", "linear:1,0,0,0", "--output", str(bl)]) == 0
    assert run(["validate", "--input", str(bl)]) == 0
    assert run(["synth", "blocks", "--block", "0,0,0:2,2,2:0", "--block", "1,1,1:2,2,2:0",
                "--field", "linear:1,0,0,0", "--output", str(bl)]) == 1


def test_module_entry_point(tmp_path, sphere_file):
    out = tmp_path / "m.obj"
    proc = subprocess.run(
        [sys.executable, "-m", "amrdual", "extract", "--input", str(sphere_file), "--iso", "0", "--output", str(out)],
        capture_output=True,
    )
    assert proc.returncode == 0 and out.exists()
