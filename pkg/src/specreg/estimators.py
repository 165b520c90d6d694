"""Vector-valued spectral estimators computed through the representer
theorem"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from specreg.error import StepTooLargeError, WrongKindError
from specreg.kernels import (
    Kernel,
    cross_gram,
    feature_map,
    gram,
    mercer_basis,
)
from specreg.spectral import (
    FilterKind,
    FilterSpec,
    SymEig,
    apply_filter,
    sym_eig,
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:

    """Training data with vector-valued outputs.

    Attributes
    ----------
    xs: numpy.ndarray
        ``n`` covariates (vector of scalars or matrix with one point per row)
    ys: numpy.ndarray
        ``n x D`` matrix of outputs (a vector is treated as ``D = 1``)

    """

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self) -> None:
        xs = np.array(self.xs, dtype=float)
        ys = np.array(self.ys, dtype=float)
        if xs.ndim == 0 or xs.ndim > 2:
            raise ValueError('Covariates must be a vector or a matrix.')
        if ys.ndim == 1:
            ys = ys[:, None]
        if ys.ndim != 2:
            raise ValueError('Outputs must be a vector or a matrix.')
        if xs.shape[0] < 1:
            raise ValueError('Dataset must contain at least one sample.')
        if ys.shape[0] != xs.shape[0]:
            raise ValueError(
                f'Number of outputs ({ys.shape[0]}) does not match number '
                f'of covariates ({xs.shape[0]}).'
            )
        if ys.shape[1] < 1:
            raise ValueError('Outputs must have at least one dimension.')
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError('Dataset must only contain finite values.')
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, 'xs', xs)
        object.__setattr__(self, 'ys', ys)

    @property
    def n(self) -> int:
        """int: number of samples"""
        return self.ys.shape[0]

    @property
    def dim(self) -> int:
        """int: output dimension ``D``"""
        return self.ys.shape[1]


@dataclass(frozen=True)
class GramSpectrum:

    """Eigendecomposition of the normalized Gram matrix ``K / n``, shared by
    all fits on the same covariates.

    Attributes
    ----------
    xs: numpy.ndarray
        covariates
    kernel: specreg.kernels.Kernel
        kernel
    eig: specreg.spectral.SymEig
        eigendecomposition of ``K / n``

    """

    xs: np.ndarray
    kernel: Kernel
    eig: SymEig

    @property
    def n(self) -> int:
        """int: number of covariates"""
        return self.eig.n

    def filtered_weights(self, f: FilterSpec, lam: float) -> np.ndarray:
        """Computes ``W = (1 / n) g_lam(K / n)``.

        Parameters
        ----------
        f: specreg.spectral.FilterSpec
            filter
        lam: float
            regularization parameter

        Returns
        -------
        numpy.ndarray
            symmetric ``n x n`` matrix

        """
        check_regularization(self.kernel, f, lam)
        return apply_filter(f, lam, self.eig) / self.n

    def mercer_path(self, ys: np.ndarray) -> 'MercerCoefficientPath':
        """Prepares basis coefficients of fits for many filters and
        regularization parameters.

        Parameters
        ----------
        ys: numpy.ndarray
            ``n x D`` outputs

        Returns
        -------
        specreg.estimators.MercerCoefficientPath
            coefficient path

        """
        return MercerCoefficientPath(self, ys)


def decompose(xs: np.ndarray, kern: Kernel) -> GramSpectrum:
    """Eigendecomposes the normalized Gram matrix of the covariates.

    Parameters
    ----------
    xs: numpy.ndarray
        covariates
    kern: specreg.kernels.Kernel
        kernel

    Returns
    -------
    specreg.estimators.GramSpectrum
        eigendecomposition of ``K / n``

    Raises
    ------
    specreg.error.EigFailureError
        when the eigendecomposition fails

    """
    xs = np.asarray(xs, dtype=float)
    K = gram(kern, xs)
    n = K.shape[0]
    logger.debug(f'decompose Gram matrix of {n} samples')
    return GramSpectrum(xs, kern, sym_eig(K / n))


def check_regularization(kern: Kernel, f: FilterSpec, lam: float) -> None:
    """Validates a regularization parameter and the Landweber step size.

    Parameters
    ----------
    kern: specreg.kernels.Kernel
        kernel
    f: specreg.spectral.FilterSpec
        filter
    lam: float
        regularization parameter

    Raises
    ------
    ValueError
        when `lam` is not positive
    specreg.error.StepTooLargeError
        when the Landweber step size violates ``tau * kappa2 <= 1``

    """
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError('Parameter "lam" must be positive and finite.')
    if f.kind == FilterKind.LANDWEBER:
        if f.tau * kern.kappa2 > 1.0 + 1e-12:
            raise StepTooLargeError(
                f'Landweber step size {f.tau:g} exceeds 1 / kappa2 = '
                f'{1.0 / kern.kappa2:g}.'
            )


@dataclass(frozen=True)
class FittedEstimator:

    """Spectral estimator ``F(x) = Y^T W k_x``.

    Attributes
    ----------
    data: specreg.estimators.Dataset
        training data
    spectrum: specreg.estimators.GramSpectrum
        eigendecomposition of ``K / n``
    filter: specreg.spectral.FilterSpec
        filter
    lam: float
        regularization parameter
    weights: numpy.ndarray
        filtered matrix ``W = (1 / n) g_lam(K / n)``

    """

    data: Dataset
    spectrum: GramSpectrum
    filter: FilterSpec
    lam: float
    weights: np.ndarray

    @property
    def kernel(self) -> Kernel:
        """specreg.kernels.Kernel: kernel"""
        return self.spectrum.kernel

    @property
    def eig(self) -> SymEig:
        """specreg.spectral.SymEig: eigendecomposition of ``K / n``"""
        return self.spectrum.eig

    def dual_coefficients(self, xs: np.ndarray) -> np.ndarray:
        """Computes ``alpha(x) = W k_x`` for a batch of points.

        Parameters
        ----------
        xs: numpy.ndarray
            ``m`` query points

        Returns
        -------
        numpy.ndarray
            ``n x m`` matrix with one coefficient vector per column

        """
        return self.weights @ cross_gram(self.kernel, self.data.xs, xs)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Evaluates the estimator at a single point.

        Parameters
        ----------
        x: numpy.ndarray
            point in the kernel's domain

        Returns
        -------
        numpy.ndarray
            prediction of length ``D``

        Raises
        ------
        specreg.error.DomainError
            when `x` lies outside of the kernel's domain

        """
        point = np.asarray(x, dtype=float).reshape(1, -1)
        return self.predict_many(point)[0]

    def predict_many(self, xs: np.ndarray) -> np.ndarray:
        """Evaluates the estimator at a batch of points.

        Parameters
        ----------
        xs: numpy.ndarray
            ``m`` points in the kernel's domain

        Returns
        -------
        numpy.ndarray
            ``m x D`` predictions

        """
        K_query = cross_gram(self.kernel, xs, self.data.xs)
        return (K_query @ self.weights) @ self.data.ys

    def empirical_risk(self, data: Optional[Dataset] = None) -> float:
        """Mean squared output-norm residual.

        Parameters
        ----------
        data: specreg.estimators.Dataset, optional
            data on which the risk is evaluated (defaults to training data)

        Returns
        -------
        float
            empirical risk

        """
        if data is None:
            data = self.data
        residuals = data.ys - self.predict_many(data.xs)
        return float(np.mean(np.sum(residuals ** 2, axis=1)))

    def refit(self, f: FilterSpec, lam: float) -> 'FittedEstimator':
        """Fits another filter or regularization parameter on the same data,
        reusing the eigendecomposition.

        Parameters
        ----------
        f: specreg.spectral.FilterSpec
            filter
        lam: float
            regularization parameter

        Returns
        -------
        specreg.estimators.FittedEstimator
            fitted estimator

        """
        return fit(self.data, self.kernel, f, lam, spectrum=self.spectrum)

    def mercer_coefficients(self) -> np.ndarray:
        """Computes the coefficients ``c_ij`` of the estimator in the basis
        ``e_i d_j`` of a truncated Mercer kernel.

        Returns
        -------
        numpy.ndarray
            ``M x D`` coefficient matrix

        Raises
        ------
        specreg.error.WrongKindError
            when the kernel is not a truncated Mercer kernel

        """
        mu = self.kernel.eigenvalues
        basis = mercer_basis(self.data.xs, self.kernel.order)
        return mu[:, None] * (basis.T @ (self.weights @ self.data.ys))


def fit(
    data: Dataset,
    kern: Kernel,
    f: FilterSpec,
    lam: float,
    spectrum: Optional[GramSpectrum] = None
) -> FittedEstimator:
    """Fits a spectral estimator via the representer theorem.

    Parameters
    ----------
    data: specreg.estimators.Dataset
        training data
    kern: specreg.kernels.Kernel
        kernel
    f: specreg.spectral.FilterSpec
        filter
    lam: float
        regularization parameter
    spectrum: specreg.estimators.GramSpectrum, optional
        eigendecomposition of ``K / n`` from an earlier fit on the same
        covariates

    Returns
    -------
    specreg.estimators.FittedEstimator
        fitted estimator

    Raises
    ------
    specreg.error.EigFailureError
        when the eigendecomposition fails
    specreg.error.StepTooLargeError
        when the Landweber step size violates ``tau * kappa2 <= 1``

    """
    check_regularization(kern, f, lam)
    if spectrum is None:
        spectrum = decompose(data.xs, kern)
    elif spectrum.kernel != kern or spectrum.n != data.n:
        raise ValueError('Spectrum was computed for other data or kernel.')
    weights = spectrum.filtered_weights(f, lam)
    weights.setflags(write=False)
    logger.debug(f'fitted {f} with lam={lam:g} on {data.n} samples')
    return FittedEstimator(data, spectrum, f, float(lam), weights)


def empirical_risk(est: FittedEstimator, data: Dataset) -> float:
    """Computes ``(1 / n) sum_i |y_i - F(x_i)|^2`` on a dataset.

    Parameters
    ----------
    est: specreg.estimators.FittedEstimator
        fitted estimator
    data: specreg.estimators.Dataset
        evaluation data

    Returns
    -------
    float
        empirical risk

    """
    return est.empirical_risk(data)


class MercerCoefficientPath(object):

    """Basis coefficients of all filtered fits on one dataset.

    Evaluates ``c = diag(mu) E^T V diag(g_lam(eigenvalues) / n) V^T Y``
    without materializing the ``n x n`` filtered matrix, which makes sweeps
    over filters and regularization parameters cheap once the Gram matrix
    has been decomposed.

    """

    def __init__(self, spectrum: GramSpectrum, ys: np.ndarray) -> None:
        """
        Parameters
        ----------
        spectrum: specreg.estimators.GramSpectrum
            eigendecomposition of ``K / n`` for a truncated Mercer kernel
        ys: numpy.ndarray
            ``n x D`` outputs

        """
        kern = spectrum.kernel
        if not kern.is_mercer:
            raise WrongKindError(
                'Coefficient paths require a truncated Mercer kernel.'
            )
        self._spectrum = spectrum
        V = spectrum.eig.eigenvectors
        basis = mercer_basis(spectrum.xs, kern.order)
        self._left = kern.eigenvalues[:, None] * (basis.T @ V)
        self._eigenvectors = V
        self._projected = self.project(ys)

    def project(self, ys: np.ndarray) -> np.ndarray:
        """Projects outputs onto the eigenbasis of ``K / n``.

        Parameters
        ----------
        ys: numpy.ndarray
            ``n x D`` outputs

        Returns
        -------
        numpy.ndarray
            ``V^T Y``

        """
        ys = np.asarray(ys, dtype=float)
        if ys.ndim == 1:
            ys = ys[:, None]
        return self._eigenvectors.T @ ys

    def coefficients(
        self,
        f: FilterSpec,
        lam: float,
        projected: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Computes the ``M x D`` basis coefficients of one fit.

        Parameters
        ----------
        f: specreg.spectral.FilterSpec
            filter
        lam: float
            regularization parameter
        projected: numpy.ndarray, optional
            projected outputs (see ``project()``) replacing the training
            outputs, e.g. noiseless targets on the same covariates

        Returns
        -------
        numpy.ndarray
            coefficient matrix

        """
        check_regularization(self._spectrum.kernel, f, lam)
        if projected is None:
            projected = self._projected
        g = f.value(lam, self._spectrum.eig.eigenvalues) / self._spectrum.n
        return self._left @ (g[:, None] * projected)


@dataclass(frozen=True)
class PrimalEstimator:

    """Explicit operator ``C = C_YX g_lam(C_X)`` in the feature basis of a
    truncated Mercer kernel.

    Attributes
    ----------
    kernel: specreg.kernels.Kernel
        truncated Mercer kernel
    filter: specreg.spectral.FilterSpec
        filter
    lam: float
        regularization parameter
    operator: numpy.ndarray
        ``D x M`` coefficient matrix in the basis ``d_j (x) sqrt(mu_i) e_i``

    """

    kernel: Kernel
    filter: FilterSpec
    lam: float
    operator: np.ndarray

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Evaluates ``C phi(x)`` at a single point."""
        point = np.asarray(x, dtype=float).reshape(1, -1)
        return self.predict_many(point)[0]

    def predict_many(self, xs: np.ndarray) -> np.ndarray:
        """Evaluates ``C phi(x)`` at a batch of points (``m x D``)."""
        return feature_map(self.kernel, xs) @ self.operator.T


def primal_fit(
    data: Dataset,
    kern: Kernel,
    f: FilterSpec,
    lam: float
) -> PrimalEstimator:
    """Fits the estimator in operator form using the explicit feature map of
    a truncated Mercer kernel.

    Intended as a cross-check for ``fit()`` on small problems.

    Parameters
    ----------
    data: specreg.estimators.Dataset
        training data
    kern: specreg.kernels.Kernel
        truncated Mercer kernel
    f: specreg.spectral.FilterSpec
        filter
    lam: float
        regularization parameter

    Returns
    -------
    specreg.estimators.PrimalEstimator
        fitted operator

    Raises
    ------
    specreg.error.WrongKindError
        when `kern` is not a truncated Mercer kernel
    specreg.error.EigFailureError
        when the eigendecomposition fails

    """
    if not kern.is_mercer:
        raise WrongKindError('Primal fit requires a truncated Mercer kernel.')
    check_regularization(kern, f, lam)
    features = feature_map(kern, data.xs)
    n = data.n
    covariance = features.T @ features / n
    covariance = 0.5 * (covariance + covariance.T)
    cross_covariance = data.ys.T @ features / n
    operator = cross_covariance @ apply_filter(f, lam, sym_eig(covariance))
    return PrimalEstimator(kern, f, float(lam), operator)
