import math

import numpy as np
import pytest

from specreg.cme import (
    cme_demo,
    cme_fit,
    cond_expect,
    cond_expect_many,
    embedding_at,
    gaussian_conditional_oracle,
    sample_conditional,
)
from specreg.error import WrongKindError
from specreg.estimators import Dataset, fit
from specreg.kernels import Kernel, cross_gram
from specreg.spectral import FilterSpec
from specreg.synthetic import make_rng


COVARIATE_KERNEL = Kernel.gaussian(0.1)
OUTPUT_KERNEL = Kernel.gaussian(0.5)


def _model(n, f=None, lam=1e-3, seed=0):
    xs, zs = sample_conditional(n, 0.3, make_rng(seed, n))
    if f is None:
        f = FilterSpec.tikhonov()
    return cme_fit(xs, zs, COVARIATE_KERNEL, OUTPUT_KERNEL, f, lam)


def test_single_sample():
    model = cme_fit([0.4], [0.2], Kernel.gaussian(1.0), OUTPUT_KERNEL,
                    FilterSpec.tikhonov(), 1.0)
    values = np.array([3.0])
    assert cond_expect(model, values, 0.4) == pytest.approx(1.5)


def test_zero_function():
    model = _model(40)
    estimates = cond_expect_many(model, np.zeros(40), np.linspace(0, 1, 7))
    np.testing.assert_array_equal(estimates, 0.0)


def test_constant_outputs():
    xs = np.linspace(0.0, 1.0, 10)
    model = cme_fit(xs, np.full(10, 0.7), COVARIATE_KERNEL, OUTPUT_KERNEL,
                    FilterSpec.tikhonov(), 0.01)
    expected = math.exp(-0.49 / (2 * 0.25))
    np.testing.assert_allclose(model.output_function(0.0), expected)


def test_linearity():
    model = _model(60)
    rng = np.random.default_rng(3)
    f_values = rng.standard_normal(60)
    h_values = rng.standard_normal(60)
    probes = np.linspace(0.05, 0.95, 9)
    combined = cond_expect_many(model, 2.0 * f_values - 0.5 * h_values, probes)
    separate = (
        2.0 * cond_expect_many(model, f_values, probes) -
        0.5 * cond_expect_many(model, h_values, probes)
    )
    np.testing.assert_allclose(combined, separate, atol=1e-12)


def test_single_and_batch_agree():
    model = _model(30)
    values = model.output_function(0.0)
    probes = np.linspace(0.0, 1.0, 5)
    batch = cond_expect_many(model, values, probes)
    loop = [cond_expect(model, values, x) for x in probes]
    np.testing.assert_allclose(batch, loop, atol=1e-14)
    assert embedding_at(model, probes).shape == (30, 5)


@pytest.mark.parametrize('f', [
    FilterSpec.tikhonov(),
    FilterSpec.truncation(),
    FilterSpec.landweber(1.0),
])
@pytest.mark.parametrize('n', [20, 200])
def test_matches_vector_regression_on_output_grid(f, n):
    # regress the output features sampled on a grid as explicit vectors
    xs, zs = sample_conditional(n, 0.3, make_rng(4, n))
    grid = np.linspace(-1.5, 1.5, 31)
    features = cross_gram(OUTPUT_KERNEL, zs, grid)
    vector = fit(Dataset(xs, features), COVARIATE_KERNEL, f, 1e-3)
    model = cme_fit(xs, zs, COVARIATE_KERNEL, OUTPUT_KERNEL, f, 1e-3)
    probes = np.linspace(0.05, 0.95, 11)
    expected = vector.predict_many(probes)
    for j, z0 in enumerate(grid):
        estimate = cond_expect_many(model, model.output_function(z0), probes)
        np.testing.assert_allclose(estimate, expected[:, j], atol=1e-3)


def test_oracle_matches_quadrature():
    s, sigma, z0 = 0.5, 0.3, 0.2
    for x in (0.1, 0.3, 0.8):
        mean = math.sin(2 * math.pi * x)
        z = np.linspace(mean - 10 * sigma, mean + 10 * sigma, 20001)
        density = np.exp(-(z - mean) ** 2 / (2 * sigma ** 2)) / (
            sigma * math.sqrt(2 * math.pi)
        )
        integrand = np.exp(-(z0 - z) ** 2 / (2 * s ** 2)) * density
        expected = np.sum(integrand) * (z[1] - z[0])
        assert gaussian_conditional_oracle(x, z0, s, sigma) == pytest.approx(
            expected, rel=1e-8
        )


def test_oracle_without_noise():
    x = np.array([0.125, 0.5])
    truth = np.exp(-np.sin(2 * np.pi * x) ** 2 / (2 * 0.25))
    np.testing.assert_allclose(gaussian_conditional_oracle(x, 0.0, 0.5, 0.0),
                               truth)


def test_sample_conditional():
    xs, zs = sample_conditional(100, 0.0, make_rng(1))
    assert xs.shape == zs.shape == (100, )
    np.testing.assert_allclose(zs, np.sin(2 * np.pi * xs))


def test_output_kernel_kind():
    with pytest.raises(WrongKindError):
        cme_fit([0.1, 0.2], [0.0, 0.1], COVARIATE_KERNEL,
                Kernel.truncated_mercer(0.5, 8), FilterSpec.tikhonov(), 0.1)


def test_input_validation():
    with pytest.raises(ValueError):
        cme_fit([0.1, 0.2], [0.0], COVARIATE_KERNEL, OUTPUT_KERNEL,
                FilterSpec.tikhonov(), 0.1)
    model = _model(10)
    with pytest.raises(ValueError):
        cond_expect_many(model, np.zeros(9), [0.5])


def test_demo_layout():
    result = cme_demo(n_values=(50, 100), probes=5,
                      lam_grid=[1e-3, 1e-2, 1e-1])
    assert len(result.rows) == 3 * 2 * 5
    assert set(result.lambdas) == {
        (name, n) for name in ('ridge', 'pcr', 'landweber') for n in (50, 100)
    }
    for name, n, x, truth, estimate, error in result.rows:
        assert error == pytest.approx(abs(estimate - truth))
    assert all(lam in (1e-3, 1e-2, 1e-1) for lam in result.lambdas.values())


def test_demo_is_deterministic():
    first = cme_demo(n_values=(60, ), probes=4, seed=8)
    second = cme_demo(n_values=(60, ), probes=4, seed=8)
    assert first.rows == second.rows


@pytest.mark.slow
def test_demo_recovers_conditional_expectation():
    result = cme_demo(filters={'ridge': FilterSpec.tikhonov()})
    errors = result.max_errors()
    assert errors[('ridge', 2000)] <= 0.05
    assert errors[('ridge', 2000)] < errors[('ridge', 250)]
