"""
Command Handlers Module
-----------------------
Business logic behind each subcommand. Handlers turn a run request into a
context (manifest, grid, profile, initial data, forcing), drive the
services and write the outputs. Every handler returns a result dictionary
with a success flag and an exit code; library errors are caught here and
nowhere else.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from config.loader import RunManifest, parse_config
from config.profiles import build_forcing, build_grid, build_initial, build_profile
from config.settings import SolverConfig, get_settings
from core.calculus import LambdaProfile, trace_gamma_nu
from core.exceptions import (
    ConfigKeyError,
    ConfigParseError,
    ConfigRangeError,
    InvalidParameterError,
    ManifestHashMismatchError,
    QGError,
    SnapshotFormatError,
)
from core.fields import ScalarField3D
from core.grid import Grid3D
from core.snapshot import write_snapshot
from services.checks import run_property_suite
from services.classical import run_classical
from services.diagnostics import DiagnosticsRecord
from services.dynamics import Forcing, RunLedger, State, Trajectory, initial_state, resume, run
from services.experiments import perturbation_sweep, stability_experiment
from services.persistence import read_checkpoint, truncate_diagnostics, write_checkpoint, write_diagnostics
from services.picard import picard_contraction_probe
from services.sqg import sqg_oracle, sqg_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2

MANIFEST_FILE = "manifest.json"
DIAGNOSTICS_FILE = "diagnostics.csv"
CHECKPOINT_FILE = "checkpoint.npz"
SNAPSHOT_DIR = "snapshots"

CONFIG_ERRORS = (
    ConfigParseError,
    ConfigKeyError,
    ConfigRangeError,
    InvalidParameterError,
    SnapshotFormatError,
    ManifestHashMismatchError,
    OSError,
)


class RunInterrupted(Exception):
    """Raised from the step callback when a run is asked to stop early."""

    def __init__(self, step: int) -> None:
        self.step = step
        super().__init__(f"stopped after step {step}")


def exit_code_for(error: BaseException) -> int:
    """Configuration and I/O problems exit with 2, numerical ones with 1."""
    if isinstance(error, CONFIG_ERRORS):
        return EXIT_CONFIG
    return EXIT_NUMERICAL


def _failure(error: BaseException, context: str) -> Dict[str, Any]:
    logger.error(f"{context} failed: {error}")
    return {
        "success": False,
        "error": str(error),
        "error_type": type(error).__name__,
        "exit_code": exit_code_for(error),
    }


def _write_report(path: Path, report: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=float) + "\n")
    return path


@dataclass(frozen=True)
class RunRequest:
    """Command-line values shared by every subcommand."""

    config: str
    out: Optional[str] = None
    threads: Optional[int] = None
    seed: Optional[int] = None


@dataclass
class RunContext:
    """Everything a subcommand needs, built once from the run file."""

    manifest: RunManifest
    solver: SolverConfig
    grid: Grid3D
    profile: LambdaProfile
    psi0: ScalarField3D
    forcing: Forcing
    output: Path

    @classmethod
    def load(cls, request: RunRequest) -> "RunContext":
        """
        Parse the run file and build grid, profile, initial data and forcing.

        Command-line values win over the file: --seed changes the manifest
        (and its hash), --threads and --out never do.
        """
        runtime = get_settings().runtime
        solver, manifest = parse_config(request.config)
        if request.seed is not None:
            manifest.seed = request.seed
        workers = request.threads if request.threads is not None else runtime.threads
        output = Path(request.out) if request.out else manifest.output.resolve_directory(runtime)

        grid = build_grid(manifest.grid, workers)
        profile = build_profile(grid, manifest.lambda_)
        psi0 = build_initial(grid, manifest.initial, manifest.seed)
        forcing = build_forcing(grid, manifest.forcing)
        return cls(manifest, solver, grid, profile, psi0, forcing, output)


class InputValidator:
    """Validates command-line values before any work starts."""

    MAX_SEED = 2 ** 64 - 1

    @classmethod
    def validate_threads(cls, threads: Optional[int]) -> tuple:
        """
        Returns:
            Tuple of (is_valid, error_message or None).
        """
        if threads is not None and threads < 1:
            return False, f"--threads must be >= 1, got {threads}"
        return True, None

    @classmethod
    def validate_seed(cls, seed: Optional[int]) -> tuple:
        if seed is not None and not 0 <= seed <= cls.MAX_SEED:
            return False, f"--seed must lie in [0, 2^64 - 1], got {seed}"
        return True, None

    @classmethod
    def validate_request(cls, request: RunRequest) -> tuple:
        for is_valid, message in (cls.validate_threads(request.threads), cls.validate_seed(request.seed)):
            if not is_valid:
                return is_valid, message
        if not Path(request.config).is_file():
            return False, f"run file not found: {request.config}"
        return True, None


# ============================================================================
# Simulation
# ============================================================================


class SimulationHandler:
    """Runs and resumes simulations with diagnostics, snapshots and checkpoints."""

    def handle_run(self, request: RunRequest, stop_after: Optional[int] = None) -> Dict[str, Any]:
        """
        Run from the initial condition, replacing any previous outputs.

        Args:
            request: Command-line values.
            stop_after: Stop with a checkpoint once this step is reached.

        Returns:
            Dictionary with success status, ledger and exit code.
        """
        try:
            context = RunContext.load(request)
            if stop_after is not None and context.solver.scheme == "classical":
                raise ConfigRangeError("--stop-after", "classical runs keep no checkpoint to resume from")
            context.output.mkdir(parents=True, exist_ok=True)
            context.manifest.write(context.output / MANIFEST_FILE)
            write_diagnostics(context.output / DIAGNOSTICS_FILE, [])
            logger.info(f"Run {context.manifest.hash[:12]} writing to {context.output}")
            return self._integrate(context, None, None, stop_after)
        except (QGError, OSError) as error:
            return _failure(error, "Run")

    def handle_resume(self, request: RunRequest, stop_after: Optional[int] = None) -> Dict[str, Any]:
        """
        Continue from the checkpoint in the output directory.

        The diagnostics file is cut back to the checkpoint step and extended,
        so the final file is byte-identical to an uninterrupted run.
        """
        try:
            context = RunContext.load(request)
            if context.solver.scheme != "reformulated":
                raise ConfigRangeError("solver.scheme", "checkpoints exist for the reformulated scheme only")
            state, ledger = read_checkpoint(
                context.output / CHECKPOINT_FILE, context.grid, context.profile, context.manifest.hash
            )
            kept = truncate_diagnostics(context.output / DIAGNOSTICS_FILE, state.step)
            logger.info(f"Resuming at step {state.step} ({kept} diagnostics rows kept)")
            return self._integrate(context, state, ledger, stop_after)
        except (QGError, OSError) as error:
            return _failure(error, "Resume")

    def _integrate(
        self,
        context: RunContext,
        state: Optional[State],
        ledger: Optional[RunLedger],
        stop_after: Optional[int],
    ) -> Dict[str, Any]:
        solver = context.solver
        schedule = context.manifest.output
        diagnostics = context.output / DIAGNOSTICS_FILE
        snapshots = context.output / SNAPSHOT_DIR
        checkpoint = context.output / CHECKPOINT_FILE
        manifest_hash = context.manifest.hash

        def on_snapshot(current: State) -> None:
            if schedule.snapshot_every and current.step % schedule.snapshot_every == 0:
                write_snapshot(snapshots / f"psi_{current.step:06d}.bin", current.psi)

        if solver.scheme == "classical":
            trajectory = run_classical(
                context.psi0,
                context.profile,
                solver,
                context.forcing,
                schedule.diagnostics_every,
                on_record=lambda record: write_diagnostics(diagnostics, [record], append=True),
                callback=lambda current, running: on_snapshot(current),
            )
            final = trajectory.final if trajectory.states else None
            return self._finish(context, trajectory, final)

        start = state if state is not None else initial_state(context.psi0, context.profile)
        if state is None:
            write_checkpoint(checkpoint, start, RunLedger(), manifest_hash)
        latest = {"state": start}

        def on_record(record: DiagnosticsRecord) -> None:
            write_diagnostics(diagnostics, [record], append=True)

        def on_step(current: State, running: RunLedger) -> None:
            latest["state"] = current
            on_snapshot(current)
            interrupt = stop_after is not None and current.step >= stop_after and current.step < solver.n_steps
            if interrupt or (schedule.checkpoint_every and current.step % schedule.checkpoint_every == 0):
                write_checkpoint(checkpoint, current, running, manifest_hash)
            if interrupt:
                raise RunInterrupted(current.step)

        try:
            if state is None:
                trajectory = run(
                    context.psi0,
                    context.profile,
                    solver,
                    context.forcing,
                    schedule.diagnostics_every,
                    callback=on_step,
                    store_states=False,
                    on_record=on_record,
                )
            else:
                trajectory = resume(
                    state,
                    ledger or RunLedger(),
                    solver,
                    context.forcing,
                    schedule.diagnostics_every,
                    callback=on_step,
                    store_states=False,
                    on_record=on_record,
                )
        except RunInterrupted as stop:
            logger.info(f"Run interrupted after step {stop.step}; resume from {checkpoint}")
            return {"success": True, "interrupted": True, "step": stop.step, "exit_code": EXIT_OK}

        return self._finish(context, trajectory, latest["state"])

    def _finish(self, context: RunContext, trajectory: Trajectory, final: Optional[State]) -> Dict[str, Any]:
        snapshots = context.output / SNAPSHOT_DIR
        if final is not None:
            write_snapshot(snapshots / f"psi_{final.step:06d}.bin", final.psi)
            write_snapshot(snapshots / f"theta_{final.step:06d}.bin", trace_gamma_nu(final.G))

        last = trajectory.records[-1] if trajectory.records else None
        result: Dict[str, Any] = {
            "success": trajectory.succeeded,
            "manifest_hash": context.manifest.hash,
            "records": len(trajectory.records),
            "final_time": last.t if last is not None else None,
            "ledger": trajectory.ledger.as_dict(),
            "exit_code": EXIT_OK if trajectory.succeeded else EXIT_NUMERICAL,
        }
        if trajectory.failure is not None:
            result["failure"] = {
                "error_type": trajectory.failure.error_type,
                "message": trajectory.failure.message,
                "t": trajectory.failure.t,
                "step": trajectory.failure.step,
            }
            _write_report(context.output / "failure.json", result["failure"])
        return result


# ============================================================================
# Experiments
# ============================================================================


class ExperimentHandler:
    """SQG runs, the Picard probe and the stability sweeps."""

    def handle_sqg_run(self, request: RunRequest) -> Dict[str, Any]:
        """
        Integrate SQG from the surface buoyancy d Psi^0/dz(0) of the initial condition.

        When lambda = 1 and delta = beta = 0 the 3D oracle comparison runs too.
        """
        try:
            context = RunContext.load(request)
            solver = context.solver
            start = initial_state(context.psi0, context.profile)
            theta0 = -trace_gamma_nu(start.G)
            trajectory = sqg_run(theta0, solver.dt, solver.final_time, eps=solver.eps, cfl=solver.cfl)
            rows = [{"t": state.t, "step": state.step, "l2_norm": state.l2_norm} for state in trajectory.states]
            report: Dict[str, Any] = {"states": rows, "succeeded": trajectory.failure is None}
            write_snapshot(context.output / SNAPSHOT_DIR / "sqg_theta_final.bin", trajectory.final.theta)

            if solver.delta == 0 and solver.beta == 0 and context.profile.bound == 1.0:
                oracle = sqg_oracle(theta0, context.profile, solver)
                report["oracle"] = {
                    "buoyancy_gap": oracle["buoyancy_gap"],
                    "harmonicity_initial": oracle["harmonicity_initial"],
                    "harmonicity_max": oracle["harmonicity_max"],
                }
            _write_report(context.output / "sqg.json", report)
            succeeded = trajectory.failure is None
            return {
                "success": succeeded,
                "states": len(rows),
                "oracle": report.get("oracle"),
                "exit_code": EXIT_OK if succeeded else EXIT_NUMERICAL,
            }
        except (QGError, OSError) as error:
            return _failure(error, "SQG run")

    def handle_probe_picard(self, request: RunRequest) -> Dict[str, Any]:
        """Contraction factors of T_delta over the configured spans."""
        try:
            context = RunContext.load(request)
            experiment = context.manifest.experiment
            report = picard_contraction_probe(
                context.psi0,
                context.profile,
                context.solver,
                experiment.spans,
                pairs=experiment.pairs,
                seed=context.manifest.seed,
            )
            _write_report(context.output / "picard.json", report.to_dict())
            return {
                "success": True,
                "factors": report.factors,
                "empirical_t0": report.empirical_t0,
                "t0_lower_bound": report.t0_lower_bound,
                "exit_code": EXIT_OK,
            }
        except (QGError, OSError) as error:
            return _failure(error, "Picard probe")

    def handle_stability_sweep(self, request: RunRequest) -> Dict[str, Any]:
        try:
            context = RunContext.load(request)
            experiment = context.manifest.experiment
            every = context.manifest.output.diagnostics_every
            vanishing = stability_experiment(
                context.psi0,
                context.profile,
                context.solver,
                experiment.eps_sequence,
                context.forcing,
                diagnostics_every=every,
            )
            perturbed = perturbation_sweep(
                context.psi0,
                context.profile,
                context.solver,
                experiment.amplitudes,
                seed=context.manifest.seed,
                diagnostics_every=every,
            )
            _write_report(
                context.output / "stability.json",
                {"vanishing_eps": vanishing.to_dict(), "perturbation": perturbed},
            )
            failed = bool(vanishing.failures)
            return {
                "success": not failed,
                "cauchy": vanishing.cauchy,
                "successive_gaps": vanishing.successive_gaps,
                "perturbation_gaps": perturbed["gaps"],
                "exit_code": EXIT_NUMERICAL if failed else EXIT_OK,
            }
        except (QGError, OSError) as error:
            return _failure(error, "Stability sweep")


# ============================================================================
# Checks
# ============================================================================


class CheckHandler:
    """Property suites on the grid of a run file."""

    def handle_check(self, request: RunRequest, samples: int = 8) -> Dict[str, Any]:
        try:
            context = RunContext.load(request)
            results = run_property_suite(
                context.grid, context.profile, context.solver, samples=samples, seed=context.manifest.seed
            )
            rows = [result.to_dict() for result in results]
            _write_report(context.output / "checks.json", {"checks": rows})
            passed = all(result.passed for result in results)
            return {"success": passed, "checks": rows, "exit_code": EXIT_OK if passed else EXIT_NUMERICAL}
        except (QGError, OSError) as error:
            return _failure(error, "Check")
