import math

import numpy as np
import pytest

from specreg.analysis import (
    LambdaSchedule,
    ScheduleKind,
    approximation_bound,
    approximation_error,
    bias_variance_diagnostic,
    effective_dimension,
    effective_dimension_sandwich,
    empirical_norm,
    fit_slope,
    rate_sweep,
    rate_sweeps,
    sandwich_constants,
    saturation_experiment,
    theoretical_exponent,
)
from specreg.error import BadParamsError, InsufficientGridError
from specreg.spectral import FilterSpec
from specreg.synthetic import NoiseLaw, interp_norm, make_problem


SMALL_GRID = (8, 16, 32, 64)


def test_effective_dimension_example():
    assert effective_dimension([1.0, 0.5], 0.5) == pytest.approx(7.0 / 6.0)
    assert effective_dimension([1.0, 0.5], 0.5, l=2) == pytest.approx(
        4.0 / 9.0 + 0.25
    )


def test_effective_dimension_limits():
    mu = np.array([1.0, 0.1, 0.01, 0.0])
    assert effective_dimension(mu, 1e-12) == pytest.approx(3.0, abs=1e-8)
    assert effective_dimension(mu, 1e12) == pytest.approx(0.0, abs=1e-10)


def test_effective_dimension_monotone():
    mu = np.arange(1, 101, dtype=float) ** -2.0
    lams = np.geomspace(1e-5, 1.0, 30)
    values = [effective_dimension(mu, lam) for lam in lams]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert effective_dimension(mu, 0.01, l=2) < effective_dimension(mu, 0.01)


def test_effective_dimension_validation():
    with pytest.raises(ValueError):
        effective_dimension([1.0], 0.0)
    with pytest.raises(ValueError):
        effective_dimension([1.0], 0.1, l=0.5)


@pytest.mark.parametrize('p', [0.25, 0.5, 0.75])
@pytest.mark.parametrize('l', [1.0, 2.0])
def test_effective_dimension_sandwich(p, l):
    rows = effective_dimension_sandwich(p, l)
    assert len(rows) == 20
    for row in rows:
        assert row.passed, row


def test_sandwich_constants():
    lower, upper = sandwich_constants(0.5, 1.0)
    assert lower == pytest.approx(0.5)
    assert upper == pytest.approx(2.0)
    with pytest.raises(BadParamsError):
        sandwich_constants(1.0, 1.0)


def test_empirical_norm():
    assert empirical_norm([3.0, 4.0]) == pytest.approx(math.sqrt(12.5))
    assert empirical_norm([[3.0, 4.0]]) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        empirical_norm([])


def test_fit_slope_exact_power_law():
    ns = np.array([128, 256, 512, 1024, 2048])
    slope, stderr, intercept = fit_slope(ns, 3.0 * ns ** -0.7)
    assert slope == pytest.approx(-0.7, abs=1e-10)
    assert intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert stderr == pytest.approx(0.0, abs=1e-10)


def test_fit_slope_two_points():
    slope, stderr, _ = fit_slope([10, 100], [1.0, 0.1])
    assert slope == pytest.approx(-1.0)
    assert math.isnan(stderr)


def test_fit_slope_validation():
    with pytest.raises(ValueError):
        fit_slope([10], [1.0])
    with pytest.raises(ValueError):
        fit_slope([10, 20], [1.0, 0.0])


def test_theoretical_exponents():
    tikhonov = FilterSpec.tikhonov()
    truncation = FilterSpec.truncation()
    landweber = FilterSpec.landweber()
    assert theoretical_exponent(tikhonov, 1.0, 0.5) == pytest.approx(2 / 3)
    assert theoretical_exponent(tikhonov, 4.0, 0.5) == pytest.approx(0.8)
    assert theoretical_exponent(truncation, 4.0, 0.5) == pytest.approx(
        0.8889, abs=1e-4
    )
    assert theoretical_exponent(landweber, 4.0, 0.5) == pytest.approx(8 / 9)
    separation = (
        theoretical_exponent(truncation, 4.0, 0.5) -
        theoretical_exponent(tikhonov, 4.0, 0.5)
    )
    assert separation == pytest.approx(0.0889, abs=1e-4)
    assert theoretical_exponent(truncation, 2.0, 0.5, 0.5) == pytest.approx(
        0.6
    )


def test_schedule_candidates():
    power = LambdaSchedule.power_law(0.5, scale=2.0)
    np.testing.assert_allclose(power.candidates(100), [0.2])
    log_power = LambdaSchedule.log_power(alpha=1.0, theta=1.0)
    np.testing.assert_allclose(
        log_power.candidates(100), [math.log(100) / 100]
    )
    oracle = LambdaSchedule.oracle_grid()
    assert oracle.is_oracle
    candidates = oracle.candidates(100, kappa2=2.0)
    assert len(candidates) == 25
    assert candidates[0] == pytest.approx(2e-6)
    assert candidates[-1] == pytest.approx(2.0)
    custom = LambdaSchedule.oracle_grid([0.1, 0.01])
    np.testing.assert_array_equal(custom.candidates(10), [0.1, 0.01])


def test_schedule_validation():
    with pytest.raises(ValueError):
        LambdaSchedule.power_law(0.0)
    with pytest.raises(ValueError):
        LambdaSchedule.log_power(alpha=-1.0)
    with pytest.raises(ValueError):
        LambdaSchedule.oracle_grid([0.1, -0.1])
    with pytest.raises(ValueError):
        LambdaSchedule.log_power(alpha=1.0).candidates(1)


def test_schedule_to_dict():
    assert LambdaSchedule.power_law(0.5).to_dict() == {
        'kind': 'power-law', 'exponent': 0.5, 'scale': 1.0
    }
    assert LambdaSchedule.oracle_grid().to_dict() == {
        'kind': ScheduleKind.ORACLE_GRID.value, 'grid': None
    }


@pytest.mark.parametrize('n_grid', [
    (8, 16, 32),
    (8, 32, 16, 64),
    (1, 8, 16, 32),
])
def test_sweep_insufficient_grid(small_problem, n_grid):
    with pytest.raises(InsufficientGridError):
        rate_sweep(
            small_problem, FilterSpec.tikhonov(),
            LambdaSchedule.power_law(0.5), n_grid, trials=1
        )


def test_sweep_report_layout(small_problem):
    report = rate_sweep(
        small_problem, FilterSpec.tikhonov(), LambdaSchedule.power_law(0.5),
        SMALL_GRID, trials=3, seed=1, workers=2
    )
    assert report.filter == 'tikhonov'
    assert report.trial_errors.shape == (4, 3)
    assert report.trials == 3
    np.testing.assert_allclose(
        report.lambdas[:, 0], [n ** -0.5 for n in SMALL_GRID]
    )
    rows = report.rows()
    assert len(rows) == 12
    assert rows[0][:4] == ('tikhonov', 0.0, 8, 0)
    assert report.summary_row()[2] == report.fitted_slope
    assert report.theoretical_exponent == pytest.approx(2.0 / 3.0)


def test_sweep_independent_of_workers(small_problem):
    filters = {
        'ridge': (FilterSpec.tikhonov(), LambdaSchedule.power_law(0.6)),
        'pcr': (FilterSpec.truncation(), LambdaSchedule.oracle_grid()),
    }
    serial = rate_sweeps(small_problem, filters, SMALL_GRID, trials=3,
                         seed=5, workers=1)
    parallel = rate_sweeps(small_problem, filters, SMALL_GRID, trials=3,
                           seed=5, workers=8)
    for name in filters:
        np.testing.assert_allclose(
            serial[name].trial_errors, parallel[name].trial_errors,
            rtol=1e-12
        )
        np.testing.assert_array_equal(
            serial[name].lambdas, parallel[name].lambdas
        )


def test_oracle_never_worse_than_its_candidates(small_problem):
    filters = {
        'both': (FilterSpec.tikhonov(),
                 LambdaSchedule.oracle_grid([0.1, 0.001])),
        'single': (FilterSpec.tikhonov(), LambdaSchedule.oracle_grid([0.1])),
    }
    reports = rate_sweeps(small_problem, filters, SMALL_GRID, trials=4,
                          seed=2, workers=2)
    assert np.all(
        reports['both'].trial_errors <= reports['single'].trial_errors
    )


def test_bias_variance_noiseless():
    prob = make_problem(p=0.5, beta=1.0, B=1.0, M=32, D=2,
                        noise=NoiseLaw.bounded_uniform(0.0), seed=3)
    result = bias_variance_diagnostic(
        prob, FilterSpec.tikhonov(), 0.01, n=64, trials=4, workers=2
    )
    assert result.variance <= 1e-12
    assert result.total == pytest.approx(result.bias_sq, rel=1e-10)
    assert result.relative_gap <= 1e-10


def test_bias_variance_large_lambda(small_problem):
    prob = small_problem
    lam = 100.0 * prob.kernel.kappa2
    result = bias_variance_diagnostic(
        prob, FilterSpec.tikhonov(), lam, n=64, trials=5
    )
    signal = interp_norm(prob, 0.0) ** 2
    assert result.total == pytest.approx(signal, rel=0.05)
    assert result.lam == lam
    assert result.trials == 5


def test_bias_variance_oracle_schedule(small_problem):
    grid = [1.0, 0.1, 0.01]
    result = bias_variance_diagnostic(
        small_problem, FilterSpec.truncation(),
        LambdaSchedule.oracle_grid(grid), n=32, trials=3
    )
    assert result.lam in grid
    assert result.bias_sq >= 0 and result.variance >= 0


@pytest.mark.parametrize('f', [
    FilterSpec.tikhonov(),
    FilterSpec.truncation(),
    FilterSpec.landweber(1.0),
])
@pytest.mark.parametrize('gamma', [0.0, 0.5])
def test_approximation_error_within_bound(f, gamma):
    prob = make_problem(p=0.5, beta=2.0, B=1.0, M=128, D=2, seed=1)
    for lam in (1.0, 0.1, 0.01, 1e-3):
        error = approximation_error(prob, f, lam, gamma)
        assert error <= approximation_bound(prob, f, lam, gamma) * (1 + 1e-9)


def test_approximation_error_vanishes_below_spectrum(small_problem):
    lam = small_problem.eigenvalues[-1]
    assert approximation_error(
        small_problem, FilterSpec.truncation(), lam
    ) == 0.0


def test_approximation_bound_gamma_range(small_problem):
    with pytest.raises(ValueError):
        approximation_bound(small_problem, FilterSpec.tikhonov(), 0.1, 1.5)


def test_saturation_requires_smooth_target():
    with pytest.raises(BadParamsError):
        saturation_experiment(0.5, 1.0, 1.0, SMALL_GRID, trials=1)


def test_sweep_noiseless_truncation_consistent():
    prob = make_problem(
        p=0.5, beta=1.0, B=1.0, M=16, D=2,
        noise=NoiseLaw.bounded_uniform(0.0), seed=5
    )
    report = rate_sweep(
        prob, FilterSpec.truncation(), LambdaSchedule.oracle_grid([1e-8]),
        (8, 32, 128, 512), trials=3, seed=2
    )
    errors = report.mean_sq_error
    # 8 points cannot resolve 16 modes
    assert errors[0] > 1e-6
    assert errors[-1] <= 1e-16
    assert np.all(np.diff(errors) <= 1e-16)


@pytest.mark.slow
def test_well_specified_rates():
    prob = make_problem(p=0.5, beta=1.0, B=1.0, D=2, seed=0)
    schedule = LambdaSchedule.power_law(1.0 / 1.5)
    filters = {
        'ridge': (FilterSpec.tikhonov(), schedule),
        'pcr': (FilterSpec.truncation(), schedule),
        'landweber': (
            FilterSpec.landweber(1.0 / prob.kernel.kappa2), schedule
        ),
    }
    reports = rate_sweeps(prob, filters, trials=20, seed=0)
    for report in reports.values():
        assert report.fitted_slope == pytest.approx(-2.0 / 3.0, abs=0.15)


@pytest.mark.slow
def test_saturation_separation():
    result = saturation_experiment(0.5, 4.0, 1.0, trials=50, seed=20240601)
    assert result.separation >= 0.03
    assert abs(result.ridge.fitted_slope) <= 0.86
    assert abs(result.pcr.fitted_slope) >= 0.82


@pytest.mark.slow
def test_interpolation_norm_rates():
    prob = make_problem(p=0.5, beta=2.0, B=1.0, D=1, seed=0)
    report = rate_sweep(
        prob, FilterSpec.truncation(), LambdaSchedule.power_law(1.0 / 2.5),
        trials=20, gamma=0.5, seed=0
    )
    assert report.fitted_slope == pytest.approx(-0.6, abs=0.15)


@pytest.mark.slow
def test_bias_variance_decomposition_gap():
    prob = make_problem(p=0.5, beta=1.0, B=1.0, D=2, seed=0)
    result = bias_variance_diagnostic(
        prob, FilterSpec.tikhonov(), LambdaSchedule.oracle_grid(), n=512,
        trials=50
    )
    assert result.relative_gap <= 0.1


@pytest.mark.slow
def test_misspecified_rates_decrease():
    prob = make_problem(p=0.25, beta=0.3, B=1.0, D=2, seed=0)
    schedule = LambdaSchedule.log_power(alpha=0.9, theta=1.0)
    filters = {
        'ridge': (FilterSpec.tikhonov(), schedule),
        'landweber': (
            FilterSpec.landweber(1.0 / prob.kernel.kappa2), schedule
        ),
    }
    reports = rate_sweeps(
        prob, filters, (128, 256, 512, 1024), trials=10, seed=0
    )
    for report in reports.values():
        errors = report.mean_sq_error
        assert errors[-1] < errors[0]
        assert -1.0 < report.fitted_slope < 0.0
