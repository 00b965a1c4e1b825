"""CLI contract tests: files, formats, exit codes, determinism."""

import json
import math
import subprocess
import sys

from redsim.cli import main, resample
from redsim.csvio import read_trajectory_csv
from redsim.dde import DdeProblem, solve_dde
from redsim.solver import SolverConfig

RUN_FAST = ["--tf", "2", "--sample-dt", "0.01"]


def run_cli(args):
    return main([str(a) for a in args])


class TestRun:
    def test_default_outputs(self, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        assert run_cli(["run", *RUN_FAST, "--out", out]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,w,q,q_avg,p"
        assert lines[1] == "0.0,1.0,0.0,0.0,0.0"
        assert (tmp_path / "traj.csv.events").exists()
        report = json.loads((tmp_path / "traj.csv.report.json").read_text())
        assert set(report) == {"w", "q", "q_avg"}
        assert "sustained" in report["w"]
        assert "wrote" in capsys.readouterr().out

    def test_round_trip_bitwise(self, tmp_path):
        out = tmp_path / "traj.csv"
        run_cli(["run", *RUN_FAST, "--out", out])
        times, states, p = read_trajectory_csv(out)
        from redsim.simulate import simulate

        traj = simulate(tf=2.0)
        assert times.tolist() == traj.t.tolist()
        assert states.tolist() == traj.states.tolist()
        assert p.tolist() == traj.p.tolist()

    def test_determinism_byte_identical(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        run_cli(["run", *RUN_FAST, "--out", a])
        run_cli(["run", *RUN_FAST, "--out", b])
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.csv.events").read_bytes() == (
            tmp_path / "b.csv.events"
        ).read_bytes()

    def test_set_override_changes_run(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        run_cli(["run", *RUN_FAST, "--out", a])
        run_cli(["run", *RUN_FAST, "--set", "T=0.25", "--out", b])
        assert a.read_bytes() != b.read_bytes()

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        code = run_cli(
            ["run", *RUN_FAST, "--set", "bogus=1", "--out", tmp_path / "x.csv"]
        )
        assert code == 2
        assert "bogus" in capsys.readouterr().err

    def test_bad_value_exits_2(self, tmp_path, capsys):
        code = run_cli(
            ["run", *RUN_FAST, "--set", "T=fast", "--out", tmp_path / "x.csv"]
        )
        assert code == 2
        assert "T" in capsys.readouterr().err

    def test_invalid_params_exit_2(self, tmp_path):
        code = run_cli(
            ["run", *RUN_FAST, "--set", "q_min=0.9", "--out", tmp_path / "x.csv"]
        )
        assert code == 2

    def test_solver_failure_exits_3(self, tmp_path, capsys):
        # A microscopic round-trip time drives the step cap below h_min.
        code = run_cli(
            ["run", *RUN_FAST, "--set", "T=1e-300", "--out", tmp_path / "x.csv"]
        )
        assert code == 3
        assert "last good time" in capsys.readouterr().err

    def test_config_file_and_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# sweep base configuration\n"
            "profile = julia\n"
            "T = 0.25\n"
            "tf = 2\n"
        )
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        run_cli(["run", "--config", cfg, "--sample-dt", "0.01", "--out", a])
        # --set beats the file.
        run_cli(
            [
                "run",
                "--config",
                cfg,
                "--sample-dt",
                "0.01",
                "--set",
                "T=0.5",
                "--out",
                b,
            ]
        )
        ref = tmp_path / "ref.csv"
        run_cli(["run", *RUN_FAST, "--set", "T=0.25", "--out", ref])
        assert a.read_bytes() == ref.read_bytes()
        assert a.read_bytes() != b.read_bytes()

    def test_no_controller_flag(self, tmp_path):
        out = tmp_path / "nc.csv"
        run_cli(["run", *RUN_FAST, "--no-controller", "--out", out])
        _, _, p = read_trajectory_csv(out)
        assert (p == 0.0).all()


class TestResample:
    def make_exponential_trajectory(self, tf=1.0):
        problem = DdeProblem(
            rhs=lambda t, y, past: (-y[0],),
            y0=(1.0,),
            t_span=(0.0, tf),
            lags=(tf + 1.0,),
            prehistory=lambda t: (0.0,),
        )
        return solve_dde(problem, SolverConfig())

    def test_two_point_grid(self):
        traj = self.make_exponential_trajectory()
        times, states, p = resample(traj, 1.0)
        assert times.tolist() == [0.0, 1.0]

    def test_grid_row_count(self):
        traj = self.make_exponential_trajectory()
        times, _, _ = resample(traj, 0.01)
        assert len(times) == 101

    def test_against_analytic(self):
        traj = self.make_exponential_trajectory()
        times, states, _ = resample(traj, 0.01)
        config = SolverConfig()
        worst = max(
            abs(states[i, 0] - math.exp(-times[i]))
            / (config.abs_tol + config.rel_tol * math.exp(-times[i]))
            for i in range(len(times))
        )
        assert worst < 10.0

    def test_cli_uniform_output(self, tmp_path):
        out = tmp_path / "traj.csv"
        run_cli(["run", *RUN_FAST, "--resample-dt", "0.5", "--out", out])
        uniform = tmp_path / "traj.csv.uniform"
        times, _, _ = read_trajectory_csv(uniform)
        assert times.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]


class TestSweep:
    def test_two_point_sweep(self, tmp_path):
        out_dir = tmp_path / "sweep"
        code = run_cli(
            [
                "sweep",
                "--sweep",
                "T:0.05:0.5:2",
                *RUN_FAST,
                "--out",
                out_dir,
            ]
        )
        assert code == 0
        index = json.loads((out_dir / "index.json").read_text())
        assert len(index) == 2
        assert [pt["value"] for pt in index] == [0.05, 0.5]
        for i in range(2):
            assert (out_dir / f"point_{i:03d}" / "trajectory.csv").exists()
            assert (out_dir / f"point_{i:03d}" / "trajectory.csv.report.json").exists()
        # The two trajectories genuinely differ.
        a = (out_dir / "point_000" / "trajectory.csv").read_bytes()
        b = (out_dir / "point_001" / "trajectory.csv").read_bytes()
        assert a != b

    def test_bad_sweep_spec_exits_2(self, tmp_path):
        assert run_cli(["sweep", "--sweep", "T:0:1", "--out", tmp_path]) == 2
        assert run_cli(["sweep", "--sweep", "T:0:1:1", "--out", tmp_path]) == 2
        assert run_cli(["sweep", "--sweep", "bogus:0:1:2", "--out", tmp_path]) == 2


class TestDroplaw:
    def test_table(self, capsys):
        assert run_cli(["droplaw", "0", "112.5", "150", "200"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "q_avg,p"
        assert out[1] == "0.0,0.0"
        assert out[2] == "112.5,0.05"
        assert out[3] == "150.0,0.1"
        assert out[4] == "200.0,1.0"

    def test_respects_overrides(self, capsys):
        assert run_cli(["droplaw", "--set", "p_max=0.2", "112.5"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[1] == "112.5,0.1"


class TestSelftest:
    def test_passes(self, capsys):
        assert run_cli(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out
        assert "FAIL" not in out


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "redsim.cli", "droplaw", "112.5"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "112.5,0.05" in proc.stdout
