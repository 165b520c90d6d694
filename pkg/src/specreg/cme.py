"""Conditional mean embeddings computed through kernel evaluations"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from specreg.error import WrongKindError
from specreg.estimators import GramSpectrum, check_regularization, decompose
from specreg.kernels import Kernel, cross_gram
from specreg.spectral import FilterSpec
from specreg.synthetic import make_rng


logger = logging.getLogger(__name__)

#: sample sizes of the demo
DEFAULT_N_VALUES = (250, 500, 1000, 2000)


@dataclass(frozen=True)
class CmeModel:

    """Estimate of ``x -> E[psi(Z) | X = x]`` in an output RKHS.

    Only the filtered matrix and the output sample are stored; the
    embedding is never represented in coordinates.

    Attributes
    ----------
    spectrum: specreg.estimators.GramSpectrum
        eigendecomposition of the covariate Gram matrix
    output_kernel: specreg.kernels.Kernel
        kernel ``l`` of the output RKHS
    zs: numpy.ndarray
        output sample
    filter: specreg.spectral.FilterSpec
        filter
    lam: float
        regularization parameter
    weights: numpy.ndarray
        ``W = (1 / n) g_lam(K / n)``

    """

    spectrum: GramSpectrum
    output_kernel: Kernel
    zs: np.ndarray
    filter: FilterSpec
    lam: float
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.spectrum.n

    @property
    def kernel(self) -> Kernel:
        """specreg.kernels.Kernel: covariate kernel"""
        return self.spectrum.kernel

    def output_function(self, z0: float) -> np.ndarray:
        """Evaluates ``l(z0, .)`` at the output sample."""
        return cross_gram(self.output_kernel, np.array([z0]), self.zs)[0]


def cme_fit(
    xs: np.ndarray,
    zs: np.ndarray,
    covariate_kernel: Kernel,
    output_kernel: Kernel,
    f: FilterSpec,
    lam: float,
    spectrum: Optional[GramSpectrum] = None
) -> CmeModel:
    """Fits a conditional mean embedding with implicit outputs
    ``psi(z_i) = l(z_i, .)``.

    Parameters
    ----------
    xs: numpy.ndarray
        ``n`` covariates
    zs: numpy.ndarray
        ``n`` output points
    covariate_kernel: specreg.kernels.Kernel
        kernel on covariates
    output_kernel: specreg.kernels.Kernel
        bounded kernel on outputs (Gaussian or Laplace)
    f: specreg.spectral.FilterSpec
        filter
    lam: float
        regularization parameter
    spectrum: specreg.estimators.GramSpectrum, optional
        eigendecomposition of the covariate Gram matrix to reuse

    Returns
    -------
    specreg.cme.CmeModel
        model

    """
    if output_kernel.is_mercer:
        raise WrongKindError('Output kernel must be Gaussian or Laplace.')
    covariates = np.asarray(xs, dtype=float)
    outputs = np.array(zs, dtype=float)
    if covariates.shape[0] != outputs.shape[0] or outputs.shape[0] < 1:
        raise ValueError(
            'Covariates and outputs must have the same positive length.'
        )
    check_regularization(covariate_kernel, f, lam)
    if spectrum is None:
        spectrum = decompose(covariates, covariate_kernel)
    weights = spectrum.filtered_weights(f, lam)
    weights.setflags(write=False)
    outputs.setflags(write=False)
    return CmeModel(spectrum, output_kernel, outputs, f, float(lam), weights)


def embedding_at(model: CmeModel, xs: np.ndarray) -> np.ndarray:
    """Computes the weights ``alpha(x) = W k_x`` (``n x m``)."""
    return model.weights @ cross_gram(model.kernel, model.spectrum.xs, xs)


def cond_expect_many(
    model: CmeModel,
    f_at_zs: np.ndarray,
    xs: np.ndarray
) -> np.ndarray:
    """Estimates ``E[f(Z) | X = x]`` at several points.

    Parameters
    ----------
    model: specreg.cme.CmeModel
        model
    f_at_zs: numpy.ndarray
        values ``f(z_i)`` of an output RKHS function at the output sample
    xs: numpy.ndarray
        covariates

    Returns
    -------
    numpy.ndarray
        estimates, one per covariate

    """
    values = np.asarray(f_at_zs, dtype=float)
    if values.shape != (model.n, ):
        raise ValueError(
            f'Argument "f_at_zs" must be a vector of length {model.n}.'
        )
    return values @ embedding_at(model, xs)


def cond_expect(model: CmeModel, f_at_zs: np.ndarray, x: float) -> float:
    """Estimates ``E[f(Z) | X = x]`` as ``f_z^T alpha(x)``.

    Raises
    ------
    specreg.error.DomainError
        when `x` is outside of the covariate kernel's domain

    """
    point = np.asarray(x, dtype=float).reshape(1, -1)
    return float(cond_expect_many(model, f_at_zs, point)[0])


def gaussian_conditional_oracle(
    x: np.ndarray,
    z0: float,
    s: float,
    sigma: float
) -> np.ndarray:
    """Exact ``E[l(z0, Z) | X = x]`` for ``Z | X = x ~ N(sin 2 pi x,
    sigma^2)`` and a Gaussian output kernel of bandwidth `s`."""
    variance = s ** 2 + sigma ** 2
    mean = np.sin(2.0 * np.pi * np.asarray(x, dtype=float))
    return s / math.sqrt(variance) * np.exp(-(z0 - mean) ** 2 / (2 * variance))


def sample_conditional(
    n: int,
    sigma: float,
    rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Draws ``X`` uniform on ``[0, 1]`` and ``Z = sin(2 pi X) + sigma e``
    with standard normal ``e``."""
    xs = rng.uniform(0.0, 1.0, size=n)
    zs = np.sin(2.0 * np.pi * xs) + sigma * rng.standard_normal(n)
    return xs, zs


@dataclass(frozen=True)
class CmeDemoResult:

    """Probe-point errors of the demo.

    Attributes
    ----------
    rows: List[Tuple[str, int, float, float, float, float]]
        ``(filter, n, probe_x, truth, estimate, abs_error)``
    lambdas: Dict[Tuple[str, int], float]
        selected regularization parameter per filter and sample size

    """

    rows: List[Tuple[str, int, float, float, float, float]]
    lambdas: Dict[Tuple[str, int], float]

    def max_errors(self) -> Dict[Tuple[str, int], float]:
        """Maximal absolute error per filter and sample size."""
        result: Dict[Tuple[str, int], float] = {}
        for name, n, _, _, _, error in self.rows:
            result[(name, n)] = max(result.get((name, n), 0.0), error)
        return result


def cme_demo(
    n_values: Sequence[int] = DEFAULT_N_VALUES,
    sigma: float = 0.3,
    s: float = 0.5,
    bandwidth: float = 0.1,
    z0: float = 0.0,
    probes: int = 20,
    filters: Optional[Dict[str, FilterSpec]] = None,
    lam_grid: Optional[Sequence[float]] = None,
    seed: int = 0
) -> CmeDemoResult:
    """Recovers ``E[l(z0, Z) | X = x]`` at probe points in ``[0.05, 0.95]``.

    For every sample size and filter, ``lam`` is chosen from `lam_grid` by
    minimal maximal error against the closed-form oracle.

    Parameters
    ----------
    n_values: Sequence[int], optional
        sample sizes
    sigma: float, optional
        conditional standard deviation of ``Z``
    s: float, optional
        bandwidth of the Gaussian output kernel
    bandwidth: float, optional
        bandwidth of the Gaussian covariate kernel
    z0: float, optional
        center of the output function
    probes: int, optional
        number of probe points
    filters: Dict[str, specreg.spectral.FilterSpec], optional
        filters by name (defaults to ridge, truncation and Landweber)
    lam_grid: Sequence[float], optional
        candidates (defaults to ``25`` geometric values in ``[1e-6, 1]``)
    seed: int, optional
        seed

    Returns
    -------
    specreg.cme.CmeDemoResult
        probe-point errors

    """
    if filters is None:
        filters = {
            'ridge': FilterSpec.tikhonov(),
            'pcr': FilterSpec.truncation(),
            'landweber': FilterSpec.landweber(1.0),
        }
    if lam_grid is None:
        lam_grid = np.geomspace(1e-6, 1.0, 25)
    covariate_kernel = Kernel.gaussian(bandwidth)
    output_kernel = Kernel.gaussian(s)
    probe_x = np.linspace(0.05, 0.95, probes)
    truth = gaussian_conditional_oracle(probe_x, z0, s, sigma)

    rows = []
    lambdas = {}
    for n in n_values:
        xs, zs = sample_conditional(n, sigma, make_rng(seed, n))
        spectrum = decompose(xs, covariate_kernel)
        V = spectrum.eig.eigenvectors
        projected_f = V.T @ cross_gram(output_kernel, np.array([z0]), zs)[0]
        projected_k = V.T @ cross_gram(covariate_kernel, xs, probe_x)
        for name, f in filters.items():
            best_lam, best_error = math.nan, math.inf
            for lam in lam_grid:
                g = f.value(lam, spectrum.eig.eigenvalues) / n
                estimate = (projected_f * g) @ projected_k
                error = float(np.max(np.abs(estimate - truth)))
                if error < best_error:
                    best_lam, best_error = float(lam), error
            model = cme_fit(
                xs, zs, covariate_kernel, output_kernel, f, best_lam,
                spectrum=spectrum
            )
            estimate = cond_expect_many(
                model, model.output_function(z0), probe_x
            )
            lambdas[(name, n)] = best_lam
            for x, t, e in zip(probe_x, truth, estimate):
                rows.append((name, n, float(x), float(t), float(e),
                             float(abs(e - t))))
            logger.info(
                f'cme filter "{name}" n={n}: lam={best_lam:g}, '
                f'max error {best_error:.4g}'
            )
    return CmeDemoResult(rows, lambdas)
