"""
Subcommand Routes Module
------------------------
Registers the subcommands on the argument parser and maps each one to its
handler. Routes only read arguments and validate them; the work happens in
the handlers.
"""

import argparse
import logging
from typing import Any, Dict

from cli.handlers import (
    EXIT_CONFIG,
    CheckHandler,
    ExperimentHandler,
    InputValidator,
    RunRequest,
    SimulationHandler,
)

logger = logging.getLogger(__name__)

# Lazy-initialized handlers
_simulation_handler = None
_experiment_handler = None
_check_handler = None


def _get_simulation_handler() -> SimulationHandler:
    """Lazy initialization of the simulation handler."""
    global _simulation_handler
    if _simulation_handler is None:
        _simulation_handler = SimulationHandler()
    return _simulation_handler


def _get_experiment_handler() -> ExperimentHandler:
    global _experiment_handler
    if _experiment_handler is None:
        _experiment_handler = ExperimentHandler()
    return _experiment_handler


def _get_check_handler() -> CheckHandler:
    global _check_handler
    if _check_handler is None:
        _check_handler = CheckHandler()
    return _check_handler


def _request(args: argparse.Namespace) -> RunRequest:
    return RunRequest(config=args.config, out=args.out, threads=args.threads, seed=args.seed)


def _invalid(message: str) -> Dict[str, Any]:
    logger.warning(f"Rejected arguments: {message}")
    return {"success": False, "error": message, "exit_code": EXIT_CONFIG}


def _validated(args: argparse.Namespace):
    request = _request(args)
    is_valid, message = InputValidator.validate_request(request)
    return request, (None if is_valid else _invalid(message))


# ============================================================================
# Simulation Routes
# ============================================================================


def run_route(args: argparse.Namespace) -> Dict[str, Any]:
    """Fresh run of the configured simulation."""
    request, rejected = _validated(args)
    if rejected:
        return rejected
    return _get_simulation_handler().handle_run(request, stop_after=args.stop_after)


def resume_route(args: argparse.Namespace) -> Dict[str, Any]:
    """Continue a run from the checkpoint in its output directory."""
    request, rejected = _validated(args)
    if rejected:
        return rejected
    return _get_simulation_handler().handle_resume(request, stop_after=args.stop_after)


# ============================================================================
# Experiment Routes
# ============================================================================


def sqg_run_route(args: argparse.Namespace) -> Dict[str, Any]:
    request, rejected = _validated(args)
    if rejected:
        return rejected
    return _get_experiment_handler().handle_sqg_run(request)


def probe_picard_route(args: argparse.Namespace) -> Dict[str, Any]:
    request, rejected = _validated(args)
    if rejected:
        return rejected
    return _get_experiment_handler().handle_probe_picard(request)


def stability_sweep_route(args: argparse.Namespace) -> Dict[str, Any]:
    request, rejected = _validated(args)
    if rejected:
        return rejected
    return _get_experiment_handler().handle_stability_sweep(request)


def check_route(args: argparse.Namespace) -> Dict[str, Any]:
    request, rejected = _validated(args)
    if rejected:
        return rejected
    return _get_check_handler().handle_check(request, samples=args.samples)


# ============================================================================
# Registration
# ============================================================================


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, metavar="PATH", help="plain-text run file")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    parser.add_argument("--threads", type=int, metavar="N", help="FFT threads; never changes results")
    parser.add_argument("--seed", type=int, metavar="U64", help="seed (overrides the run file)")


def register_commands(subparsers: argparse._SubParsersAction) -> None:
    """Attach every subcommand with its route."""
    commands = (
        ("run", run_route, "integrate the configured run"),
        ("resume", resume_route, "continue a run from its checkpoint"),
        ("sqg-run", sqg_run_route, "integrate the SQG reduction of the initial condition"),
        ("probe-picard", probe_picard_route, "measure contraction factors of the Picard map"),
        ("stability-sweep", stability_sweep_route, "vanishing-eps and perturbation stability runs"),
        ("check", check_route, "property suites on the configured grid"),
    )
    for name, route, summary in commands:
        parser = subparsers.add_parser(name, help=summary, description=summary)
        _add_common_arguments(parser)
        if name in ("run", "resume"):
            parser.add_argument(
                "--stop-after",
                type=int,
                metavar="STEP",
                help="write a checkpoint and stop once STEP is reached",
            )
        if name == "check":
            parser.add_argument("--samples", type=int, default=8, help="random fields per property")
        parser.set_defaults(route=route)

    logger.debug("Subcommands registered")
