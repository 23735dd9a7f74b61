import logging

import numpy as np
import pytest

from config.settings import SolverConfig
from core.exceptions import InvalidParameterError
from core.fields import ScalarField3D
from services.dynamics import integrating_factor, prepare_initial_potential
from services.picard import contraction_horizon, picard_T_delta, picard_contraction_probe

from conftest import two_mode_field

REGULARIZED = SolverConfig(eps=0.05, delta=0.3, dt=0.01, final_time=0.1)


def test_zero_candidate_gives_damped_data(grid, unit_profile) -> None:
    psi0 = prepare_initial_potential(two_mode_field(grid), unit_profile)
    times = np.linspace(0.0, 0.1, 11)
    candidate = [ScalarField3D.zeros(grid)] * len(times)
    image = picard_T_delta(candidate, psi0, unit_profile, REGULARIZED, times)
    assert len(image) == len(times)
    expected = integrating_factor(grid, REGULARIZED.eps, 0.1) * psi0.values
    assert np.allclose(image[-1].values, expected, rtol=0, atol=1e-12)


@pytest.mark.parametrize("config", [SolverConfig(eps=0.0, delta=0.3), SolverConfig(eps=0.05, delta=0.0)])
def test_requires_regularization(grid, unit_profile, config) -> None:
    psi0 = two_mode_field(grid)
    with pytest.raises(InvalidParameterError):
        picard_T_delta([psi0, psi0], psi0, unit_profile, config, np.array([0.0, 0.01]))
    with pytest.raises(InvalidParameterError):
        picard_contraction_probe(psi0, unit_profile, config, spans=[0.01])


def test_candidate_length_must_match_times(grid, unit_profile) -> None:
    psi0 = two_mode_field(grid)
    with pytest.raises(InvalidParameterError):
        picard_T_delta([psi0], psi0, unit_profile, REGULARIZED, np.array([0.0, 0.01]))


def test_contraction_factors_grow_with_span(grid, tanh_profile) -> None:
    report = picard_contraction_probe(two_mode_field(grid), tanh_profile, REGULARIZED, spans=[0.01, 0.1], pairs=2)
    assert report.spans == [0.01, 0.1]
    assert 0 < report.factors[0] < report.factors[1]
    assert report.factors[0] < 1.0
    assert report.empirical_t0 >= 0.01
    assert isinstance(report.t0_lower_bound, bool)
    assert np.isfinite(report.constant_C) and report.constant_C > 0
    assert report.velocity_constant > 0
    assert set(report.kernel_norms) >= {"kernel_l2", "kernel_grad_l2", "bound_shape"}
    assert report.to_dict()["spans"] == [0.01, 0.1]


@pytest.mark.parametrize(
    ("spans", "factors", "expected"),
    [
        ([0.1, 0.2, 0.4], [0.25, 0.5, 2.0], 0.2 * np.sqrt(2.0)),
        ([0.1, 0.2], [2.0, 3.0], 0.05),
        ([0.4, 0.1, 0.2], [2.0, 0.25, 0.5], 0.2 * np.sqrt(2.0)),
    ],
)
def test_horizon_interpolates_the_crossing(spans, factors, expected) -> None:
    t0, lower_bound = contraction_horizon(spans, factors)
    assert t0 == pytest.approx(expected)
    assert not lower_bound


def test_horizon_without_crossing_is_a_lower_bound() -> None:
    assert contraction_horizon([0.1, 0.2], [0.1, 0.3]) == (0.2, True)


def test_small_data_flags_saturated_horizon(grid, unit_profile, caplog) -> None:
    config = SolverConfig(eps=0.1, delta=4 * grid.dx, dt=0.05)
    with caplog.at_level(logging.WARNING, logger="services.picard"):
        report = picard_contraction_probe(two_mode_field(grid), unit_profile, config, spans=[0.25, 0.5], pairs=1)
    assert max(report.factors) < 1.0
    assert report.t0_lower_bound
    assert report.empirical_t0 == 0.5
    assert "lower bound" in caplog.text


def test_horizon_scales_with_fourth_power_of_delta(grid, unit_profile) -> None:
    psi0 = two_mode_field(grid, amplitude=20.0)
    spans = list(np.geomspace(0.005, 1.0, 12))
    horizons = []
    for delta in (4 * grid.dx, 2 * grid.dx):
        config = SolverConfig(eps=0.1, delta=delta, dt=0.01)
        report = picard_contraction_probe(psi0, unit_profile, config, spans=spans, pairs=2)
        assert not report.t0_lower_bound
        early = [factor for span, factor in zip(report.spans, report.factors) if span < 0.5 * report.empirical_t0]
        assert early and max(early) < 0.5
        horizons.append(report.empirical_t0)
    assert 16.0 / 4.0 <= horizons[0] / horizons[1] <= 16.0 * 4.0
