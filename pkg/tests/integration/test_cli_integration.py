#!/usr/bin/env python3
"""
Integration tests for the DLA-1D command line
Tests configuration layering, subcommands, result files and exit codes together
"""

import json

import pytest
import typer
from typer.testing import CliRunner

from src.core.dla import checkpoint_grid
from src.core.errors import InvariantViolation
from src.core.outputs import read_table
from src.main import ETA_TIMES, _grid_times, app, handle_errors

runner = CliRunner()


@pytest.fixture
def workspace(temp_dir, monkeypatch):
    """Isolated working directory without DLA1D_* variables"""
    for variable in ("DLA1D_SEED", "DLA1D_OUTPUT_DIR", "DLA1D_LOG_LEVEL"):
        monkeypatch.delenv(variable, raising=False)
    monkeypatch.chdir(temp_dir)
    return temp_dir


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


class TestRunCommand:
    """Test the run subcommand"""

    def test_dla_run_files(self, workspace):
        """Test a single run writes trajectory, advance times and the config echo"""
        out = workspace / "out"
        result = invoke("run", "--mu", 0.5, "--t-max", 20, "--seed", 3, "-o", out, "--log-level", "WARNING")

        assert result.exit_code == 0, result.output
        meta, frame = read_table(out / "trajectory.csv")
        assert meta["seed"] == "3"
        assert list(frame.columns) == ["run_id", "t", "R"]
        assert frame["t"].iloc[-1] == pytest.approx(20.0)
        assert (out / "tau.csv").exists()
        config_lines = (out / "config.txt").read_text().splitlines()
        assert "mu=0.5" in config_lines
        assert "seed=3" in config_lines

    def test_deterministic(self, workspace):
        """Test the same seed reproduces the same files"""
        for name in ("a", "b"):
            result = invoke("run", "--mu", 0.8, "--t-max", 30, "--seed", 5, "-o", workspace / name)
            assert result.exit_code == 0, result.output

        a = (workspace / "a" / "trajectory.csv").read_text()
        b = (workspace / "b" / "trajectory.csv").read_text()
        assert a == b

    def test_negative_density(self, workspace):
        """Test mu=-1 exits with the configuration code"""
        result = invoke("run", "--mu", -1, "-o", workspace / "out")

        assert result.exit_code == 2

    def test_unknown_set_key(self, workspace):
        """Test --set rejects unknown keys"""
        result = invoke("run", "--set", "colour=blue", "-o", workspace / "out")

        assert result.exit_code == 2

    def test_config_file_and_flag(self, workspace):
        """Test flags override the config file"""
        config_file = workspace / "run.conf"
        config_file.write_text("model=dla mu=0.5 t_max=20 seed=7\n")
        out = workspace / "out"

        result = invoke("run", "-c", config_file, "--seed", 9, "-o", out)

        assert result.exit_code == 0, result.output
        assert "seed=9" in (out / "config.txt").read_text().splitlines()

    def test_environment_seed(self, workspace, monkeypatch):
        """Test DLA1D_SEED applies when no flag is given"""
        monkeypatch.setenv("DLA1D_SEED", "13")
        out = workspace / "out"

        result = invoke("run", "--mu", 0.5, "--t-max", 10, "-o", out)

        assert result.exit_code == 0, result.output
        meta, _ = read_table(out / "trajectory.csv")
        assert meta["seed"] == "13"

    def test_car1_run(self, workspace):
        """Test a Caricature I run writes its recruitment report"""
        out = workspace / "out"
        result = invoke("run", "--model", "car1", "--mu", 16, "--t-max", 10, "-s", "J=4", "-o", out)

        assert result.exit_code == 0, result.output
        report = json.loads((out / "car1.json").read_text())
        assert report["recruited"] == report["blackened"]
        assert report["rate_bound"] == 2.0

    def test_car2_run(self, workspace):
        """Test a Caricature II run writes its event trace"""
        out = workspace / "out"
        result = invoke("run", "--model", "car2", "--t-max", 50, "-s", "J=4", "-s", "q_list=1,2", "-o", out)

        assert result.exit_code == 0, result.output
        _, events = read_table(out / "events.csv")
        assert {"Qtilde_q1", "Qtilde_q2", "L_post"} <= set(events.columns)
        assert (events["Qtilde_q1"] == events["Ltilde"]).all()


class TestEnsembleCommands:
    """Test ensemble, exponent and sweep"""

    def test_ensemble(self, workspace):
        """Test ensemble tables"""
        out = workspace / "out"
        result = invoke("ensemble", "--mu", 0.5, "--t-max", 20, "--n-runs", 4, "-o", out)

        assert result.exit_code == 0, result.output
        _, summary = read_table(out / "summary.csv")
        _, terminal = read_table(out / "terminal.csv")
        assert (summary["n"] == 4).all()
        assert terminal["run_id"].tolist() == [0, 1, 2, 3]
        assert (out / "growth.csv").exists()

    def test_exponent(self, workspace):
        """Test the exponent command writes the slope and bound reports"""
        out = workspace / "out"
        result = invoke("exponent", "--mu", 2.0, "--t-max", 50, "--n-runs", 4,
                        "-s", "fit_t_lo=5", "-s", "n_boot=50", "-o", out)

        assert result.exit_code == 0, result.output
        slope = json.loads((out / "slope.json").read_text())
        assert slope["ci_lo"] <= slope["slope"] <= slope["ci_hi"]
        assert slope["t_lo"] == 5.0
        assert slope["t_hi"] == 50.0
        checks = json.loads((out / "checks.json").read_text())
        assert "linear_bound" in checks
        assert checks["eta_eps0.1"]["times"] == [50.0]
        assert checks["config_hash"] == slope["config_hash"]

    def test_eta_times_on_grid(self):
        """Test the eta scan picks the checkpoints at 1e3 and 1e4"""
        grid = checkpoint_grid(1.0, 10 ** 0.1, 1e4)

        assert _grid_times(grid, ETA_TIMES, 100.0, 1e4) == pytest.approx([1e3, 1e4])

    def test_eta_times_clamped(self):
        """Test a short horizon collapses both targets onto its last checkpoint"""
        grid = checkpoint_grid(1.0, 10 ** 0.1, 50.0)

        assert _grid_times(grid, ETA_TIMES, 5.0, 50.0) == [50.0]
        assert _grid_times(grid, ETA_TIMES, 60.0, 100.0) == []

    def test_sweep(self, workspace):
        """Test the density sweep table"""
        out = workspace / "out"
        result = invoke("sweep", "--t-max", 30, "--n-runs", 3, "-s", "mu_list=1.5,2.5",
                        "-s", "n_boot=20", "-o", out)

        assert result.exit_code == 0, result.output
        _, sweep = read_table(out / "sweep.csv")
        assert sweep["mu"].tolist() == [1.5, 2.5]
        report = json.loads((out / "sweep.json").read_text())
        assert report["t_lo"] == pytest.approx(3.0)


class TestCar2Diag:
    """Test the Caricature II diagnostics command"""

    def test_alpha_below_minimum(self, workspace):
        """Test alpha below J-1 reports no regenerations and exits 4"""
        out = workspace / "out"
        result = invoke("car2diag", "--J", 6, "--t-max", 100, "-s", "alpha_list=1", "-s", "n_boot=20", "-o", out)

        assert result.exit_code == 4
        report = json.loads((out / "diagnostics.json").read_text())
        assert report["J"] == 6
        assert report["reports"][0]["speed_status"] == "no-regenerations"
        assert report["ledger_ok"] is True

    def test_speed_reported(self, workspace):
        """Test a generous alpha yields a speed with its interval"""
        out = workspace / "out"
        result = invoke("car2diag", "--J", 4, "--t-max", 2000, "-s", "alpha_list=16,32",
                        "-s", "q_list=2", "-s", "n_boot=50", "-o", out)

        assert result.exit_code == 0, result.output
        report = json.loads((out / "diagnostics.json").read_text())
        assert report["direct_speed"] > 0
        speeds = [r for r in report["reports"] if r["speed"] is not None]
        assert speeds
        assert all(r["fkg_violations"] == 0 for r in report["reports"])


class TestMisc:
    """Test presets, validation and the error contract"""

    def test_presets(self, workspace):
        """Test presets are listed"""
        result = invoke("presets")

        assert result.exit_code == 0
        assert "subcritical" in result.output

    @pytest.mark.parametrize("name,mu", [("fig1", "0.5"), ("fig2", "1.0"), ("fig3", "1.1")])
    def test_named_presets_run(self, workspace, name, mu):
        """Test the fig presets load and drive a short run"""
        out = workspace / "out"
        result = invoke("run", "--preset", name, "--t-max", 10, "-o", out)

        assert result.exit_code == 0, result.output
        lines = (out / "config.txt").read_text().splitlines()
        assert f"mu={mu}" in lines

    def test_nothing_written_outside_output_dir(self, workspace):
        """Test logs and results all land under output_dir"""
        out = workspace / "out"
        result = invoke("run", "--mu", 0.5, "--t-max", 20, "-o", out)

        assert result.exit_code == 0, result.output
        assert [p.name for p in workspace.iterdir()] == ["out"]
        assert (out / "logs" / "dla1d.log").exists()

    def test_unknown_preset(self, workspace):
        """Test a missing preset is a configuration error"""
        result = invoke("run", "--preset", "hypercritical", "-o", workspace / "out")

        assert result.exit_code == 2

    def test_bad_oracle(self, workspace):
        """Test an unknown oracle is a usage error"""
        result = invoke("validate", "--oracle", "none", "-o", workspace / "out")

        assert result.exit_code == 2

    @pytest.mark.statistical
    def test_validate_modes(self, workspace):
        """Test exact and fast modes agree at reduced scale"""
        out = workspace / "out"
        result = invoke("validate", "--oracle", "modes", "--mu", 0.5, "--t-max", 30,
                        "-s", "validate_runs=40", "-o", out)

        assert result.exit_code == 0, result.output
        report = json.loads((out / "validation.json").read_text())
        assert report["modes"]["passed"] is True

    def test_invariant_exit_code(self):
        """Test invariant violations map to exit code 3"""

        @handle_errors
        def broken():
            raise InvariantViolation("white particle behind the front", module="dla")

        with pytest.raises(typer.Exit) as excinfo:
            broken()

        assert excinfo.value.exit_code == 3
