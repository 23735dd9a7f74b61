import numpy as np
import pytest

from config.loader import RunManifest, parse_config, parse_config_text
from config.profiles import build_forcing, build_grid, build_initial, build_profile, harmonic_mode, two_mode
from config.settings import (
    ExperimentConfig,
    ForcingConfig,
    GridConfig,
    InitialConfig,
    LambdaConfig,
    RuntimeSettings,
    SolverConfig,
)
from core.calculus import L_lambda_apply
from core.exceptions import ConfigKeyError, ConfigParseError, ConfigRangeError, SnapshotFormatError
from core.fields import random_surface_field
from core.snapshot import write_snapshot

from conftest import SMALL_RUN


class TestParsing:
    def test_small_run(self) -> None:
        solver, manifest = parse_config_text(SMALL_RUN)
        assert solver.dt == 0.01 and solver.final_time == 0.06
        assert solver.scheme == "reformulated"
        assert (manifest.grid.n_x, manifest.grid.n_z) == (16, 16)
        assert manifest.initial.amplitude_2 == 0.05
        assert manifest.solver is solver

    def test_defaults(self) -> None:
        _, manifest = parse_config_text("")
        assert manifest.grid == GridConfig()
        assert manifest.experiment == ExperimentConfig()
        assert manifest.seed == 0

    def test_modes_lists_and_comments(self) -> None:
        text = "init.mode_1 = 2, -1  # comment\nexperiment.spans = 0.1, 0.2\n# only a comment\nseed = 7\n"
        _, manifest = parse_config_text(text)
        assert manifest.initial.mode_1 == (2, -1)
        assert manifest.experiment.spans == (0.1, 0.2)
        assert manifest.seed == 7

    def test_unknown_key(self) -> None:
        with pytest.raises(ConfigKeyError) as info:
            parse_config_text("solver.dt = 0.01\nsolver.timestep = 0.1\n")
        assert info.value.key == "solver.timestep"
        assert info.value.line_number == 2

    def test_duplicate_key(self) -> None:
        with pytest.raises(ConfigParseError) as info:
            parse_config_text("solver.dt = 0.01\nsolver.dt = 0.02\n")
        assert info.value.line_number == 2

    @pytest.mark.parametrize("text", ["grid.Nx = many\n", "grid.Nx = 16.5\n", "init.mode_1 = 1\n", "solver.dt =\n"])
    def test_bad_values(self, text) -> None:
        with pytest.raises(ConfigParseError) as info:
            parse_config_text(text)
        assert info.value.line_number == 1

    @pytest.mark.parametrize(
        "text, key",
        [
            ("grid.Nx = 15\n", "grid.Nx"),
            ("solver.cfl = 1.5\n", "solver.cfl"),
            ("solver.dt = 0\n", "solver.dt"),
            ("lambda.profile = linear\n", "lambda.profile"),
            ("experiment.eps_sequence = 0.01, 0.02\n", "experiment.eps_sequence"),
            ("forcing.kind = single-mode\nforcing.mode = 0, 0\n", "forcing.mode"),
        ],
    )
    def test_range_errors(self, text, key) -> None:
        with pytest.raises(ConfigRangeError) as info:
            parse_config_text(text)
        assert info.value.key == key

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(ConfigParseError):
            parse_config(tmp_path / "absent.cfg")

    def test_reads_file(self, write_config) -> None:
        _, manifest = parse_config(write_config())
        assert manifest.source.endswith("run.cfg")


class TestManifestHash:
    def test_stable(self) -> None:
        assert parse_config_text(SMALL_RUN)[1].hash == parse_config_text(SMALL_RUN)[1].hash

    @pytest.mark.parametrize("extra", ["output.dir = elsewhere\n", "output.snapshot_every = 2\n", "output.checkpoint_every = 3\n"])
    def test_ignores_output_schedule(self, extra) -> None:
        assert parse_config_text(SMALL_RUN + extra)[1].hash == parse_config_text(SMALL_RUN)[1].hash

    @pytest.mark.parametrize("extra", ["solver.eps = 0.01\n", "seed = 3\n", "output.diagnostics_every = 2\n"])
    def test_covers_numerics(self, extra) -> None:
        base = SMALL_RUN.replace("output.diagnostics_every = 1\n", "")
        assert parse_config_text(base + extra)[1].hash != parse_config_text(base)[1].hash

    def test_covers_snapshot_contents(self, tmp_path, grid) -> None:
        path = tmp_path / "theta.bin"
        text = f"forcing.kind = snapshot\nforcing.surface_snapshot = {path}\n"
        write_snapshot(path, random_surface_field(grid, 1))
        first = parse_config_text(text)[1].hash
        write_snapshot(path, random_surface_field(grid, 2))
        assert parse_config_text(text)[1].hash != first

    def test_sidecar(self, tmp_path) -> None:
        _, manifest = parse_config_text(SMALL_RUN)
        path = manifest.write(tmp_path / "manifest.json")
        text = path.read_text()
        assert manifest.hash in text
        assert '"diagnostics_every": 1' in text


class TestProfiles:
    def test_grid_and_profile(self) -> None:
        grid = build_grid(GridConfig(n_x=16, n_y=16, n_z=8), workers=2)
        assert grid.key == (1.0, 16, 16, 8, 8.0)
        assert build_profile(grid, LambdaConfig(profile="constant", value=2.0)).bound == pytest.approx(2.0)
        assert build_profile(grid, LambdaConfig(profile="tanh")).bound <= 2.0

    def test_harmonic_mode_is_harmonic(self, grid, unit_profile) -> None:
        psi = harmonic_mode(grid, (1, 0))
        interior = L_lambda_apply(psi, unit_profile).values[1:-1]
        assert np.max(np.abs(interior)) < 3e-2

    @pytest.mark.parametrize("mode", [(0, 0), (6, 0), (0, -9)])
    def test_modes_outside_band(self, grid, mode) -> None:
        with pytest.raises(ConfigRangeError):
            two_mode(grid, (1, 0), mode)

    @pytest.mark.parametrize("kind", ["harmonic-mode", "two-mode", "random-seeded"])
    def test_named_initial_conditions(self, grid, kind) -> None:
        psi = build_initial(grid, InitialConfig(kind=kind, amplitude=0.1), seed=4)
        assert np.all(np.isfinite(psi.values))
        assert np.max(np.abs(psi.values)) > 0

    def test_random_initial_condition_is_seeded(self, grid) -> None:
        config = InitialConfig(kind="random-seeded")
        assert np.array_equal(build_initial(grid, config, seed=1).values, build_initial(grid, config, seed=1).values)

    def test_initial_condition_from_snapshot(self, tmp_path, grid) -> None:
        source = two_mode(grid, (1, 0), (1, 1))
        path = write_snapshot(tmp_path / "psi.bin", source)
        loaded = build_initial(grid, InitialConfig(kind="from-snapshot", snapshot=str(path)))
        assert np.allclose(loaded.values, source.values, atol=1e-14)

    def test_surface_snapshot_is_not_an_initial_condition(self, tmp_path, grid) -> None:
        path = write_snapshot(tmp_path / "theta.bin", random_surface_field(grid, 3))
        with pytest.raises(SnapshotFormatError):
            build_initial(grid, InitialConfig(kind="from-snapshot", snapshot=str(path)))

    def test_forcing_recipes(self, tmp_path, grid) -> None:
        assert build_forcing(grid, ForcingConfig()).is_zero
        single = build_forcing(grid, ForcingConfig(kind="single-mode", interior_amplitude=0.1, surface_amplitude=0.2))
        assert not single.is_zero
        assert np.allclose(single.surface.physical(), 0.2 * np.cos(grid.x1), atol=1e-14)

        path = write_snapshot(tmp_path / "theta.bin", random_surface_field(grid, 3))
        loaded = build_forcing(grid, ForcingConfig(kind="snapshot", surface_snapshot=str(path)))
        assert not np.any(loaded.interior.values)
        assert np.any(loaded.surface.values)


class TestRuntimeSettings:
    def test_environment(self, monkeypatch) -> None:
        monkeypatch.setenv("QGHS_THREADS", "3")
        monkeypatch.setenv("QGHS_LOG_LEVEL", "debug")
        settings = RuntimeSettings.from_environment()
        assert settings.threads == 3
        assert settings.log_level == "DEBUG"
        assert settings.validate()

    def test_invalid_threads(self) -> None:
        assert not RuntimeSettings(threads=0).validate()

    def test_solver_steps(self) -> None:
        assert SolverConfig(dt=0.01, final_time=0.06).n_steps == 6
        assert SolverConfig(dt=0.04, final_time=0.1).n_steps == 3
        assert SolverConfig(final_time=0.0).n_steps == 0


def test_manifest_defaults_validate() -> None:
    RunManifest().validate()
