import numpy as np
import pytest

from config.settings import SolverConfig
from core.calculus import grad_lambda, norm_L2_3d
from core.exceptions import InvalidParameterError
from core.fields import ScalarField3D
from services.experiments import local_gradient_distance, perturbation_sweep, stability_experiment

from conftest import two_mode_field

SHORT = SolverConfig(dt=0.01, final_time=0.03)


def test_distance_of_identical_fields_is_zero(grid) -> None:
    psi = two_mode_field(grid)
    assert local_gradient_distance(psi, psi) == 0.0


def test_window_is_part_of_the_full_norm(grid) -> None:
    psi = two_mode_field(grid)
    zero = ScalarField3D.zeros(grid)
    local = local_gradient_distance(psi, zero)
    full = norm_L2_3d(grad_lambda(psi))
    assert 0 < local <= full
    assert local_gradient_distance(psi, zero, depth=grid.z_max) == pytest.approx(full, rel=1e-12)


@pytest.mark.parametrize("sequence", [[0.01, 0.02], [0.01, -0.01]])
def test_stability_rejects_bad_sequences(grid, unit_profile, sequence) -> None:
    with pytest.raises(InvalidParameterError):
        stability_experiment(two_mode_field(grid), unit_profile, SHORT, sequence)


def test_vanishing_hyperviscosity_family(grid, unit_profile) -> None:
    report = stability_experiment(two_mode_field(grid), unit_profile, SHORT, [0.04, 0.02, 0.01, 0.005])
    assert report.parameters == [0.04, 0.02, 0.01, 0.005]
    assert len(report.successive_gaps) == 3
    assert report.cauchy
    assert not report.failures
    assert report.pairwise[0][3] == report.pairwise[3][0] > 0
    assert report.to_dict()["cauchy"] is True


def test_perturbation_gaps_scale_with_amplitude(grid, tanh_profile) -> None:
    sweep = perturbation_sweep(two_mode_field(grid), tanh_profile, SHORT, [1e-2, 1e-3], seed=5)
    first, second = sweep["gaps"]
    assert second < first
    assert sweep["ratios"][1] == pytest.approx(sweep["ratios"][0], rel=0.1)
    assert all(np.isfinite(sweep["initial_gaps"]))
