import pytest

from config.settings import SolverConfig
from core.calculus import LambdaProfile
from core.grid import Grid3D
from services.checks import (
    STEADY_TOLERANCE,
    CheckResult,
    neumann_tolerance,
    run_property_suite,
    steady_state_drift,
    trace_suite,
)


def test_check_result() -> None:
    assert CheckResult.below("x", 0.5, 1.0).passed
    assert not CheckResult.below("x", 2.0, 1.0).passed
    assert CheckResult.below("x", 1.0, 1.0).to_dict() == {"name": "x", "value": 1.0, "tolerance": 1.0, "passed": True}


def test_neumann_tolerance_shrinks_with_resolution() -> None:
    coarse = neumann_tolerance(Grid3D(1.0, 8, 8, 16, 8.0))
    fine = neumann_tolerance(Grid3D(1.0, 8, 8, 64, 8.0))
    assert fine < coarse


def test_trace_suite(grid) -> None:
    results = trace_suite(grid, samples=3)
    assert [result.name for result in results] == ["trace_inequality", "flux_trace_inequality"]
    assert all(result.passed for result in results)


def test_steady_states(grid) -> None:
    drift = steady_state_drift(grid, dt=0.05, final_time=0.25)
    assert drift["three_d"] < STEADY_TOLERANCE
    assert drift["sqg"] < STEADY_TOLERANCE


def test_full_suite(grid, profile) -> None:
    results = run_property_suite(grid, profile, SolverConfig(dt=0.05, final_time=0.1), samples=2, seed=1)
    names = [result.name for result in results]
    assert names[0] == "hodge_idempotence"
    assert {"neumann_analytic", "steady_state_3d", "steady_state_sqg"} <= set(names)
    by_name = {result.name: result for result in results}
    assert by_name["steady_state_3d"].passed
    assert by_name["hodge_pairing"].passed


@pytest.mark.parametrize("n_z", [32, 64])
def test_neumann_check_passes_on_fine_grids(n_z) -> None:
    grid = Grid3D(1.0, 8, 8, n_z, 8.0)
    results = run_property_suite(grid, LambdaProfile.constant(grid, 1.0), SolverConfig(dt=0.05, final_time=0.05), samples=1)
    assert {result.name: result for result in results}["neumann_analytic"].passed
