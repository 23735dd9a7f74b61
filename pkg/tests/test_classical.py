import numpy as np

from config.settings import SolverConfig
from core.calculus import norm_L2_3d
from services.classical import classical_state_from_psi, classical_step, run_classical
from services.dynamics import run

from conftest import two_mode_field, x1_steady_state


def test_initial_pair_recovers_psi(grid, profile) -> None:
    cstate = classical_state_from_psi(two_mode_field(grid), profile)
    assert cstate.recovery_defect() < 1e-10
    assert cstate.to_state().consistency_defect() < 1e-12


def test_steps_keep_the_pair_consistent(grid, tanh_profile) -> None:
    cstate = classical_state_from_psi(two_mode_field(grid), tanh_profile)
    advanced = classical_step(cstate, SolverConfig(dt=0.01))
    assert advanced.step == 1
    assert advanced.recovery_defect() < 1e-10


def test_steady_state_is_preserved(grid, unit_profile) -> None:
    trajectory = run_classical(x1_steady_state(grid), unit_profile, SolverConfig(dt=0.05, final_time=0.2), diagnostics_every=0)
    first, last = trajectory.states[0], trajectory.states[-1]
    assert norm_L2_3d(last.psi - first.psi) < 1e-10 * norm_L2_3d(first.psi)


def test_agrees_with_projected_scheme(grid, profile) -> None:
    config = SolverConfig(dt=0.01, final_time=0.05)
    classical = run_classical(two_mode_field(grid), profile, config)
    projected = run(two_mode_field(grid), profile, config)
    assert classical.succeeded and projected.succeeded
    assert len(classical.records) == len(projected.records) == 6
    gap = norm_L2_3d(classical.final.psi - projected.final.psi)
    assert gap < 1e-2 * norm_L2_3d(projected.final.psi)


def test_records_are_finite(grid, unit_profile) -> None:
    trajectory = run_classical(two_mode_field(grid), unit_profile, SolverConfig(eps=0.01, dt=0.01, final_time=0.03))
    assert all(record.is_finite() for record in trajectory.records)
    assert trajectory.ledger.dissipation_quarter > 0
    assert np.all(np.diff(trajectory.times) > 0)


def test_callback_sees_every_step(grid, unit_profile) -> None:
    seen = []
    config = SolverConfig(dt=0.01, final_time=0.03)
    trajectory = run_classical(
        two_mode_field(grid),
        unit_profile,
        config,
        diagnostics_every=0,
        callback=lambda state, ledger: seen.append((state.step, ledger)),
    )
    assert [step for step, _ in seen] == [1, 2, 3]
    assert all(ledger is trajectory.ledger for _, ledger in seen)
