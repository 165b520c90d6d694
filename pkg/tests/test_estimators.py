import math

import numpy as np
import pytest

from specreg.error import DomainError, StepTooLargeError, WrongKindError
from specreg.estimators import (
    Dataset,
    decompose,
    empirical_risk,
    fit,
    primal_fit,
)
from specreg.kernels import Kernel, gram, kernel_column
from specreg.spectral import FilterSpec


def _unit_kernel():
    # k(x, x) = 1 for every point
    return Kernel.gaussian(1.0)


def _mercer_data(rng, n, M, D):
    kern = Kernel.truncated_mercer(0.5, order=M)
    xs = rng.uniform(0.0, 1.0, size=n)
    ys = rng.standard_normal((n, D))
    return kern, Dataset(xs, ys)


def _filters(kern):
    return [
        FilterSpec.tikhonov(),
        FilterSpec.landweber(tau=1.0 / kern.kappa2),
        FilterSpec.truncation(),
    ]


def test_dataset_vector_outputs():
    data = Dataset([0.1, 0.2], [1.0, 2.0])
    assert data.ys.shape == (2, 1)
    assert data.n == 2
    assert data.dim == 1


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset([0.1, 0.2], [[1.0]])
    with pytest.raises(ValueError):
        Dataset([0.1], [[math.nan]])
    with pytest.raises(ValueError):
        Dataset(np.zeros(0), np.zeros((0, 1)))


def test_dataset_is_read_only():
    data = Dataset([0.1, 0.2], [1.0, 2.0])
    with pytest.raises(ValueError):
        data.ys[0, 0] = 5.0


def test_fit_single_point_tikhonov():
    data = Dataset([0.3], [[2.0, -4.0]])
    est = fit(data, _unit_kernel(), FilterSpec.tikhonov(), 1.0)
    np.testing.assert_allclose(est.weights, [[0.5]])
    np.testing.assert_allclose(est.predict(0.3), [1.0, -2.0])


def test_fit_single_point_truncation():
    data = Dataset([0.3], [[2.0]])
    est = fit(data, _unit_kernel(), FilterSpec.truncation(), 0.5)
    np.testing.assert_allclose(est.weights, [[1.0]])
    np.testing.assert_allclose(est.predict(0.3), [2.0])


def test_zero_outputs_predict_zero(rng):
    kern = Kernel.gaussian(0.2)
    data = Dataset(rng.uniform(size=10), np.zeros((10, 3)))
    for f in _filters(kern):
        est = fit(data, kern, f, 0.01)
        np.testing.assert_array_equal(
            est.predict_many(rng.uniform(size=5)), 0.0
        )
        assert empirical_risk(est, data) == 0.0


def test_tikhonov_weights_invert_regularized_gram(rng):
    kern = Kernel.gaussian(0.3)
    xs = rng.uniform(size=15)
    data = Dataset(xs, rng.standard_normal(15))
    lam = 0.05
    est = fit(data, kern, FilterSpec.tikhonov(), lam)
    K = gram(kern, xs)
    product = est.weights @ (K / 15 + lam * np.eye(15))
    np.testing.assert_allclose(product, np.eye(15) / 15, atol=1e-8)
    np.testing.assert_array_equal(est.weights, est.weights.T)


def test_predict_batch_matches_loop(rng):
    kern = Kernel.laplace(0.5)
    data = Dataset(rng.uniform(size=20), rng.standard_normal((20, 2)))
    est = fit(data, kern, FilterSpec.tikhonov(), 0.1)
    queries = rng.uniform(size=100)
    batch = est.predict_many(queries)
    loop = np.array([est.predict(x) for x in queries])
    np.testing.assert_allclose(batch, loop, atol=1e-12)


def test_predict_uses_dual_coefficients(rng):
    kern = Kernel.gaussian(0.4)
    xs = rng.uniform(size=9)
    data = Dataset(xs, rng.standard_normal((9, 2)))
    est = fit(data, kern, FilterSpec.truncation(), 0.01)
    alpha = est.weights @ kernel_column(kern, xs, 0.42)
    np.testing.assert_allclose(est.predict(0.42), data.ys.T @ alpha,
                               atol=1e-12)
    np.testing.assert_allclose(est.dual_coefficients([0.42])[:, 0], alpha,
                               atol=1e-14)


def test_predict_domain_error(rng):
    kern, data = _mercer_data(rng, 5, 8, 1)
    est = fit(data, kern, FilterSpec.tikhonov(), 0.1)
    with pytest.raises(DomainError):
        est.predict(1.5)


def test_dual_matches_primal_small(rng):
    kern, data = _mercer_data(rng, 12, 20, 3)
    queries = rng.uniform(size=16)
    for f in _filters(kern):
        dual = fit(data, kern, f, 0.1).predict_many(queries)
        primal = primal_fit(data, kern, f, 0.1).predict_many(queries)
        np.testing.assert_allclose(dual, primal, atol=1e-8)


def test_dual_matches_primal_seeded_instances():
    max_deviation = 0.0
    for instance in range(100):
        rng = np.random.default_rng(instance)
        n = int(rng.integers(1, 33))
        M = int(rng.integers(1, 65))
        D = int(rng.integers(1, 5))
        kern, data = _mercer_data(rng, n, M, D)
        queries = rng.uniform(size=16)
        for f in _filters(kern):
            for lam in (1.0, 0.1, 0.01):
                dual = fit(data, kern, f, lam).predict_many(queries)
                primal = primal_fit(data, kern, f, lam).predict_many(queries)
                max_deviation = max(
                    max_deviation, float(np.max(np.abs(dual - primal)))
                )
    assert max_deviation <= 1e-8


def test_primal_single_point():
    kern = Kernel.truncated_mercer(0.5, order=1)
    # phi(0) = sqrt(2)
    data = Dataset([0.0], [[1.0]])
    est = primal_fit(data, kern, FilterSpec.tikhonov(), 1.0)
    np.testing.assert_allclose(est.operator, [[math.sqrt(2) / 3.0]])
    dual = fit(data, kern, FilterSpec.tikhonov(), 1.0)
    np.testing.assert_allclose(est.predict(0.0), dual.predict(0.0))


def test_primal_zero_outputs(rng):
    kern, data = _mercer_data(rng, 6, 10, 2)
    zero = Dataset(data.xs, np.zeros((6, 2)))
    est = primal_fit(zero, kern, FilterSpec.tikhonov(), 0.1)
    np.testing.assert_array_equal(est.operator, 0.0)


def test_primal_wrong_kind(rng):
    data = Dataset(rng.uniform(size=4), rng.standard_normal(4))
    with pytest.raises(WrongKindError):
        primal_fit(data, Kernel.gaussian(1.0), FilterSpec.tikhonov(), 0.1)


def test_primal_rejects_points_outside_unit_interval():
    kern = Kernel.truncated_mercer(0.5, order=8)
    data = Dataset([0.2, 1.5, 0.7], np.ones(3))
    with pytest.raises(DomainError):
        primal_fit(data, kern, FilterSpec.tikhonov(), 0.1)


def test_output_rotation_equivariance(rng):
    kern, data = _mercer_data(rng, 14, 16, 3)
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    rotated = Dataset(data.xs, data.ys @ Q.T)
    queries = rng.uniform(size=10)
    for f in _filters(kern):
        original = fit(data, kern, f, 0.05).predict_many(queries)
        result = fit(rotated, kern, f, 0.05).predict_many(queries)
        np.testing.assert_allclose(result, original @ Q.T, atol=1e-10)


def test_tikhonov_large_lambda_shrinks(rng):
    kern = Kernel.gaussian(0.3)
    data = Dataset(rng.uniform(size=10), rng.standard_normal((10, 2)))
    queries = rng.uniform(size=5)
    norms = [
        np.max(np.abs(fit(data, kern, FilterSpec.tikhonov(), lam)
                      .predict_many(queries)))
        for lam in (1.0, 1e2, 1e4)
    ]
    assert norms[0] > norms[1] > norms[2]
    assert norms[2] <= np.max(np.abs(data.ys)) * 1e-4


def test_interpolation_has_zero_risk(rng):
    kern = Kernel.gaussian(0.2)
    xs = np.linspace(0.0, 1.0, 6)
    data = Dataset(xs, rng.standard_normal((6, 2)))
    spectrum = decompose(xs, kern)
    smallest = spectrum.eig.eigenvalues[-1]
    assert smallest > 0
    est = fit(data, kern, FilterSpec.truncation(), 0.5 * smallest,
              spectrum=spectrum)
    assert est.empirical_risk() <= 1e-10


def test_empirical_risk_matches_loop(rng):
    kern = Kernel.laplace(0.3)
    data = Dataset(rng.uniform(size=12), rng.standard_normal((12, 2)))
    est = fit(data, kern, FilterSpec.tikhonov(), 0.1)
    expected = sum(
        float(np.sum((y - est.predict(x)) ** 2))
        for x, y in zip(data.xs, data.ys)
    ) / 12
    assert empirical_risk(est, data) == pytest.approx(expected, rel=1e-12)


def _landweber_by_iteration(K, ys, tau, k):
    """Runs gradient descent on the empirical risk in dual form."""
    n = K.shape[0]
    coefficients = np.zeros_like(ys)
    for _ in range(k):
        residual = ys - K @ coefficients
        coefficients = coefficients + tau * residual / n
    return coefficients


@pytest.mark.parametrize('k', [1, 2, 5, 17, 64])
def test_landweber_matches_literal_iteration(k, rng):
    kern = Kernel.gaussian(0.3)
    xs = rng.uniform(size=10)
    data = Dataset(xs, rng.standard_normal((10, 2)))
    tau = 0.9
    est = fit(data, kern, FilterSpec.landweber(tau), 1.0 / k)
    coefficients = _landweber_by_iteration(gram(kern, xs), data.ys, tau, k)
    np.testing.assert_allclose(est.weights @ data.ys, coefficients,
                               atol=1e-10)


def test_landweber_risk_decreases_with_iterations(rng):
    kern = Kernel.gaussian(0.2)
    data = Dataset(rng.uniform(size=15), rng.standard_normal((15, 2)))
    est = fit(data, kern, FilterSpec.landweber(1.0), 1.0)
    risks = [
        est.refit(FilterSpec.landweber(1.0), 1.0 / k).empirical_risk()
        for k in range(1, 40)
    ]
    assert np.all(np.diff(risks) <= 1e-12)


def test_landweber_step_too_large(rng):
    kern = Kernel.truncated_mercer(0.5, order=8)
    data = Dataset(rng.uniform(size=4), rng.standard_normal(4))
    with pytest.raises(StepTooLargeError):
        fit(data, kern, FilterSpec.landweber(1.0), 0.1)


@pytest.mark.parametrize('lam', [0.0, -0.1, math.inf])
def test_fit_invalid_lambda(lam, rng):
    data = Dataset(rng.uniform(size=4), rng.standard_normal(4))
    with pytest.raises(ValueError):
        fit(data, Kernel.gaussian(1.0), FilterSpec.tikhonov(), lam)


def test_refit_reuses_spectrum(rng):
    kern = Kernel.gaussian(0.3)
    data = Dataset(rng.uniform(size=10), rng.standard_normal(10))
    est = fit(data, kern, FilterSpec.tikhonov(), 0.1)
    other = est.refit(FilterSpec.truncation(), 0.01)
    assert other.spectrum is est.spectrum
    fresh = fit(data, kern, FilterSpec.truncation(), 0.01)
    np.testing.assert_allclose(other.weights, fresh.weights, atol=1e-14)


def test_fit_rejects_foreign_spectrum(rng):
    kern = Kernel.gaussian(0.3)
    data = Dataset(rng.uniform(size=10), rng.standard_normal(10))
    spectrum = decompose(rng.uniform(size=8), kern)
    with pytest.raises(ValueError):
        fit(data, kern, FilterSpec.tikhonov(), 0.1, spectrum=spectrum)


def test_mercer_coefficients_reproduce_predictions(rng):
    kern, data = _mercer_data(rng, 10, 24, 2)
    est = fit(data, kern, FilterSpec.tikhonov(), 0.05)
    coefficients = est.mercer_coefficients()
    assert coefficients.shape == (24, 2)
    queries = rng.uniform(size=7)
    basis = np.sqrt(2.0) * np.cos(
        np.pi * np.outer(queries, np.arange(1, 25))
    )
    np.testing.assert_allclose(basis @ coefficients,
                               est.predict_many(queries), atol=1e-10)


def test_mercer_path_matches_fit(rng):
    kern, data = _mercer_data(rng, 16, 32, 2)
    path = decompose(data.xs, kern).mercer_path(data.ys)
    for f in _filters(kern):
        for lam in (0.5, 0.02):
            expected = fit(data, kern, f, lam).mercer_coefficients()
            np.testing.assert_allclose(path.coefficients(f, lam), expected,
                                       atol=1e-10)


def test_mercer_path_wrong_kind(rng):
    spectrum = decompose(rng.uniform(size=5), Kernel.gaussian(1.0))
    with pytest.raises(WrongKindError):
        spectrum.mercer_path(np.zeros(5))
