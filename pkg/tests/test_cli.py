import os
import subprocess
import sys

import numpy as np
import pytest

from ppmhd.cli import (RunConfig, SNAPSHOT_HEADER, UsageError, main,
                       parse_config, run, write_linecut, write_snapshot)
from ppmhd.diagnostics import REPORT_HEADER, RunReport
from ppmhd.mesh import build_mesh


class TestParseConfig:
    def test_flags(self):
        cfg = parse_config(["--problem", "blast_standard", "--nx", "320",
                            "--ny", "320", "--degree", "2"])
        assert cfg.problem == "blast_standard"
        assert cfg.nx == 320 and cfg.ny == 320 and cfg.degree == 2
        assert cfg.pp_limiter is True

    def test_no_pp_limiter_flag(self):
        cfg = parse_config(["--problem", "blast_standard", "--no-pp-limiter"])
        assert cfg.pp_limiter is False

    def test_degree_out_of_range(self):
        with pytest.raises(UsageError):
            parse_config(["--problem", "smooth_sine", "--degree", "3"])

    def test_unknown_flag(self):
        with pytest.raises(UsageError):
            parse_config(["--problem", "smooth_sine", "--frobnicate", "1"])

    def test_unknown_problem(self):
        with pytest.raises(UsageError):
            parse_config(["--problem", "not_a_problem"])

    def test_config_file_equivalent(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment line\nproblem = smooth_sine\nnx = 30\n"
                        "ny = 30\ndegree = 1\ncfl = 0.5\n")
        cfg_file = parse_config(["--config", str(path)])
        cfg_flags = parse_config(["--problem", "smooth_sine", "--nx", "30",
                                  "--ny", "30", "--degree", "1", "--cfl", "0.5"])
        assert cfg_file == cfg_flags

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("problem = smooth_sine\nnx = 30\n")
        cfg = parse_config(["--config", str(path), "--nx", "60"])
        assert cfg.nx == 60

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("problem = smooth_sine\nwibble = 3\n")
        with pytest.raises(UsageError):
            parse_config(["--config", str(path)])

    def test_mesh_floor(self):
        with pytest.raises(UsageError):
            parse_config(["--problem", "smooth_sine", "--nx", "2"])


class TestSnapshots:
    def test_constant_csv_exact(self, tmp_path):
        mesh = build_mesh(2, 2, 0, 1, 0, 1)
        avg = np.tile(np.array([1.0, 0, 0, 0, 0.5, 0, 0, 2.0]), (2, 2, 1))
        csv_path, vtk_path = write_snapshot(avg, mesh, str(tmp_path), 0,
                                            gamma=5.0 / 3.0)
        lines = open(csv_path).read().strip().splitlines()
        assert lines[0] == SNAPSHOT_HEADER
        assert len(lines) == 5
        row = [float(v) for v in lines[1].split(",")]
        assert row[0] == 0.25 and row[1] == 0.25
        assert row[2] == 1.0
        p = (5.0 / 3.0 - 1.0) * (2.0 - 0.125)
        assert row[10] == pytest.approx(p, rel=1e-15)

    def test_vtk_structure(self, tmp_path):
        mesh = build_mesh(3, 2, 0, 1, 0, 1)
        avg = np.tile(np.array([1.0, 0, 0, 0, 0.5, 0, 0, 2.0]), (3, 2, 1))
        _, vtk_path = write_snapshot(avg, mesh, str(tmp_path), 7, gamma=1.4)
        text = open(vtk_path).read()
        assert "DIMENSIONS 3 2 1" in text
        assert text.count("SCALARS") == 9
        assert "snap_000007" in vtk_path

    def test_linecut(self, tmp_path):
        mesh = build_mesh(4, 3, 0, 1, 0, 1)
        avg = np.zeros((4, 3, 8))
        avg[..., 0] = 1.0
        avg[..., 7] = np.arange(12).reshape(4, 3) + 1.0
        path = write_linecut(avg, mesh, 1, str(tmp_path / "cut.csv"), gamma=1.4)
        lines = open(path).read().strip().splitlines()
        assert len(lines) == 5
        assert [float(v) for v in lines[2].split(",")][9] == 5.0  # E of (1,1)


class TestRun:
    def test_constant_run_exit0(self, tmp_path):
        cfg = RunConfig(problem="constant_state", nx=8, ny=8, degree=1,
                        cfl=0.9, out=str(tmp_path / "o"), tend=0.05)
        code, result = run(cfg)
        assert code == 0
        assert (tmp_path / "o" / "report.csv").exists()
        snaps = sorted(p for p in os.listdir(tmp_path / "o")
                       if p.startswith("snap") and p.endswith(".csv"))
        assert snaps
        rep = RunReport.from_csv(tmp_path / "o" / "report.csv")
        assert rep.rows
        # final equals initial for the constant problem
        import csv
        rows = list(csv.DictReader(open(tmp_path / "o" / snaps[-1])))
        assert float(rows[0]["rho"]) == pytest.approx(1.0, abs=1e-12)

    def test_no_pp_limiter_blast_exit3(self, tmp_path):
        cfg = RunConfig(problem="blast_standard", nx=32, ny=32, degree=2,
                        cfl=0.9, out=str(tmp_path / "o"), pp_limiter=False)
        code, result = run(cfg)
        assert code == 3
        assert result.failed
        assert result.t < make_tend()
        status = open(tmp_path / "o" / "status.txt").read()
        assert "positivity failure" in status

    def test_usage_error_exit2(self):
        assert main(["--problem", "nope"]) == 2
        assert main(["--degree", "7"]) == 2

    def test_io_error_exit4(self, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("file, not a directory")
        cfg = RunConfig(problem="constant_state", nx=8, ny=8, degree=0,
                        out=str(blocker / "sub"), tend=1e-3)
        code, _ = run(cfg)
        assert code == 4

    @pytest.mark.parametrize("threads", [1, 2])
    def test_reproducible_byte_identical(self, tmp_path, threads):
        outs = []
        for tag in ("a", "b"):
            cfg = RunConfig(problem="smooth_vortex", nx=10, ny=10, degree=2,
                            cfl=0.9, out=str(tmp_path / tag), tend=0.02,
                            threads=threads)
            code, _ = run(cfg)
            assert code == 0
            outs.append({
                name: open(tmp_path / tag / name, "rb").read()
                for name in os.listdir(tmp_path / tag)
            })
        assert outs[0].keys() == outs[1].keys()
        for name in outs[0]:
            assert outs[0][name] == outs[1][name], name


def make_tend():
    from ppmhd.problems import make_problem
    return make_problem("blast_standard").t_end


@pytest.mark.slow
class TestConsoleEntry:
    def test_module_invocation(self, tmp_path):
        env = dict(os.environ)
        env["PYTHONPATH"] = os.pathsep.join(
            [os.path.join(os.path.dirname(__file__), "..", "src"),
             env.get("PYTHONPATH", "")])
        proc = subprocess.run(
            [sys.executable, "-m", "ppmhd", "--problem", "constant_state",
             "--nx", "8", "--ny", "8", "--degree", "0", "--tend", "0.01",
             "--out", str(tmp_path / "o")],
            capture_output=True, text=True, env=env, timeout=600)
        assert proc.returncode == 0, proc.stderr
