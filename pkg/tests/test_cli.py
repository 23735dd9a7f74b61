import json

import pytest

from cli.app import run_command
from cli.handlers import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, InputValidator, RunRequest, exit_code_for
from core.exceptions import CFLViolationError, ConfigKeyError, ManifestHashMismatchError

from conftest import SMALL_RUN


def _run(capsys, *argv: str):
    code = run_command(list(argv))
    return code, json.loads(capsys.readouterr().out)


class TestExitCodes:
    def test_mapping(self) -> None:
        assert exit_code_for(ConfigKeyError("x")) == EXIT_CONFIG
        assert exit_code_for(ManifestHashMismatchError("x")) == EXIT_CONFIG
        assert exit_code_for(OSError("x")) == EXIT_CONFIG
        assert exit_code_for(CFLViolationError(1.0, 0.5)) == EXIT_NUMERICAL

    def test_unknown_key(self, capsys, write_config, tmp_path) -> None:
        path = write_config("solver.timestep = 0.1\n")
        code, result = _run(capsys, "run", "--config", str(path), "--out", str(tmp_path / "out"))
        assert code == EXIT_CONFIG
        assert result["error_type"] == "ConfigKeyError"
        assert "solver.timestep" in result["error"]

    def test_missing_run_file(self, capsys, tmp_path) -> None:
        code, result = _run(capsys, "run", "--config", str(tmp_path / "absent.cfg"))
        assert code == EXIT_CONFIG
        assert not result["success"]

    def test_bad_thread_count(self, capsys, write_config) -> None:
        code, _ = _run(capsys, "check", "--config", str(write_config()), "--threads", "0")
        assert code == EXIT_CONFIG

    def test_missing_arguments(self) -> None:
        with pytest.raises(SystemExit) as info:
            run_command(["run"])
        assert info.value.code == 2

    def test_validator(self, write_config) -> None:
        path = str(write_config())
        assert InputValidator.validate_request(RunRequest(path, seed=3))[0]
        assert not InputValidator.validate_request(RunRequest(path, seed=-1))[0]
        assert not InputValidator.validate_request(RunRequest(path, seed=2 ** 64))[0]


class TestRun:
    def test_outputs(self, capsys, write_config, tmp_path) -> None:
        out = tmp_path / "out"
        path = write_config("output.snapshot_every = 2\n")
        code, result = _run(capsys, "run", "--config", str(path), "--out", str(out))
        assert code == EXIT_OK
        assert result["records"] == 7
        assert result["final_time"] == pytest.approx(0.06)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["hash"] == result["manifest_hash"]
        rows = (out / "diagnostics.csv").read_text().splitlines()
        assert len(rows) == 8
        assert (out / "checkpoint.npz").is_file()
        assert (out / "snapshots" / "psi_000002.bin").is_file()
        assert (out / "snapshots" / "theta_000006.bin").is_file()

    def test_interrupted_run_resumes_byte_identically(self, capsys, write_config, tmp_path) -> None:
        path = str(write_config())
        whole, split = tmp_path / "whole", tmp_path / "split"

        assert _run(capsys, "run", "--config", path, "--out", str(whole))[0] == EXIT_OK
        code, result = _run(capsys, "run", "--config", path, "--out", str(split), "--stop-after", "3")
        assert code == EXIT_OK
        assert result["interrupted"] and result["step"] == 3
        code, result = _run(capsys, "resume", "--config", path, "--out", str(split))
        assert code == EXIT_OK

        assert (split / "diagnostics.csv").read_bytes() == (whole / "diagnostics.csv").read_bytes()

    def test_threads_do_not_change_the_hash(self, capsys, write_config, tmp_path) -> None:
        path = str(write_config())
        one = _run(capsys, "run", "--config", path, "--out", str(tmp_path / "a"), "--threads", "1")[1]
        two = _run(capsys, "run", "--config", path, "--out", str(tmp_path / "b"), "--threads", "2")[1]
        assert one["manifest_hash"] == two["manifest_hash"]

    def test_resume_after_config_change(self, capsys, write_config, tmp_path) -> None:
        out = str(tmp_path / "out")
        assert _run(capsys, "run", "--config", str(write_config()), "--out", out, "--stop-after", "2")[0] == EXIT_OK
        changed = write_config("solver.eps = 0.01\n")
        code, result = _run(capsys, "resume", "--config", str(changed), "--out", out)
        assert code == EXIT_CONFIG
        assert result["error_type"] == "ManifestHashMismatchError"

    def test_classical_runs_cannot_resume(self, capsys, write_config, tmp_path) -> None:
        path = str(write_config("solver.scheme = classical\n"))
        out = str(tmp_path / "out")
        assert _run(capsys, "run", "--config", path, "--out", out)[0] == EXIT_OK
        assert _run(capsys, "resume", "--config", path, "--out", out)[0] == EXIT_CONFIG

    def test_classical_runs_follow_the_snapshot_schedule(self, capsys, write_config, tmp_path) -> None:
        path = write_config("solver.scheme = classical\noutput.snapshot_every = 2\n")
        out = tmp_path / "out"
        code, result = _run(capsys, "run", "--config", str(path), "--out", str(out))
        assert code == EXIT_OK
        assert result["records"] == 7
        written = sorted(entry.name for entry in (out / "snapshots").glob("psi_*.bin"))
        assert written == ["psi_000002.bin", "psi_000004.bin", "psi_000006.bin"]
        assert (out / "snapshots" / "theta_000006.bin").is_file()

    def test_classical_runs_reject_stop_after(self, capsys, write_config, tmp_path) -> None:
        path = str(write_config("solver.scheme = classical\n"))
        out = tmp_path / "out"
        code, result = _run(capsys, "run", "--config", path, "--out", str(out), "--stop-after", "3")
        assert code == EXIT_CONFIG
        assert result["error_type"] == "ConfigRangeError"
        assert not (out / "manifest.json").exists()

    def test_numerical_failure(self, capsys, write_config, tmp_path) -> None:
        base = SMALL_RUN.replace("init.amplitude = 0.1", "init.amplitude = 50.0").replace(
            "solver.dt = 0.01", "solver.dt = 0.5"
        ).replace("solver.T = 0.06", "solver.T = 1.0")
        out = tmp_path / "out"
        code, result = _run(capsys, "run", "--config", str(write_config(base=base)), "--out", str(out))
        assert code == EXIT_NUMERICAL
        assert result["failure"]["error_type"] == "CFLViolationError"
        assert json.loads((out / "failure.json").read_text())["step"] == 0


class TestExperiments:
    def test_sqg_run(self, capsys, write_config, tmp_path) -> None:
        out = tmp_path / "out"
        code, result = _run(capsys, "sqg-run", "--config", str(write_config()), "--out", str(out))
        assert code == EXIT_OK
        assert result["states"] == 7
        assert result["oracle"]["buoyancy_gap"] >= 0
        assert (out / "sqg.json").is_file()

    def test_picard_needs_regularization(self, capsys, write_config) -> None:
        code, result = _run(capsys, "probe-picard", "--config", str(write_config()))
        assert code == EXIT_CONFIG
        assert result["error_type"] == "InvalidParameterError"

    def test_picard_probe(self, capsys, write_config, tmp_path) -> None:
        path = write_config("solver.eps = 0.05\nsolver.delta = 0.3\nexperiment.spans = 0.01, 0.02\n")
        out = tmp_path / "out"
        code, result = _run(capsys, "probe-picard", "--config", str(path), "--out", str(out))
        assert code == EXIT_OK
        assert len(result["factors"]) == 2
        assert json.loads((out / "picard.json").read_text())["spans"] == [0.01, 0.02]

    def test_stability_sweep(self, capsys, write_config, tmp_path) -> None:
        path = write_config("experiment.eps_sequence = 0.02, 0.01, 0.005\nexperiment.amplitudes = 0.01\n")
        out = tmp_path / "out"
        code, result = _run(capsys, "stability-sweep", "--config", str(path), "--out", str(out))
        assert code == EXIT_OK
        assert len(result["successive_gaps"]) == 2
        assert len(result["perturbation_gaps"]) == 1
        assert (out / "stability.json").is_file()

    def test_check(self, capsys, write_config, tmp_path) -> None:
        out = tmp_path / "out"
        code, result = _run(capsys, "check", "--config", str(write_config()), "--out", str(out), "--samples", "2")
        assert code in (EXIT_OK, EXIT_NUMERICAL)
        assert code == (EXIT_OK if result["success"] else EXIT_NUMERICAL)
        assert {"name", "value", "tolerance", "passed"} <= set(result["checks"][0])
        assert (out / "checks.json").is_file()
