"""Scalar kernels, Gram matrices and the truncated Mercer kernel"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from specreg.error import DomainError, WrongKindError


logger = logging.getLogger(__name__)

#: default number of eigenpairs of the truncated Mercer kernel
DEFAULT_TRUNCATION_ORDER = 512


class KernelKind(enum.Enum):

    """Supported kernels."""

    GAUSSIAN = 'gaussian'
    LAPLACE = 'laplace'
    TRUNCATED_MERCER = 'truncated-mercer'


@dataclass(frozen=True)
class Kernel:

    """Scalar positive definite kernel.

    Attributes
    ----------
    kind: specreg.kernels.KernelKind
        kernel family
    bandwidth: Union[float, None]
        bandwidth ``s`` of Gaussian and Laplace kernels
    p: Union[float, None]
        eigenvalue decay ``mu_i = i^(-1/p)`` of the truncated Mercer kernel
    order: Union[int, None]
        number of eigenpairs ``M`` of the truncated Mercer kernel

    Note
    ----
    The truncated Mercer kernel is defined on ``[0, 1]`` as
    ``k(x, x') = sum_i mu_i e_i(x) e_i(x')`` with the cosine basis
    ``e_i(x) = sqrt(2) cos(i pi x)``, which is orthonormal with respect to
    the uniform distribution. Gaussian and Laplace kernels accept points in
    any dimension.

    """

    kind: KernelKind
    bandwidth: Optional[float] = None
    p: Optional[float] = None
    order: Optional[int] = None

    def __post_init__(self) -> None:
        if not isinstance(self.kind, KernelKind):
            raise TypeError('Parameter "kind" must be a KernelKind.')
        if self.kind == KernelKind.TRUNCATED_MERCER:
            if self.bandwidth is not None:
                raise ValueError(
                    'Truncated Mercer kernel does not take a bandwidth.'
                )
            if self.p is None or not (0 < self.p < 1):
                # p = 1 cannot satisfy the eigenvalue lower bound with a
                # bounded kernel
                raise ValueError('Parameter "p" must lie in (0, 1).')
            if (
                not isinstance(self.order, (int, np.integer)) or
                isinstance(self.order, bool) or
                self.order < 1
            ):
                raise ValueError('Parameter "order" must be a positive int.')
            object.__setattr__(self, 'p', float(self.p))
            object.__setattr__(self, 'order', int(self.order))
        else:
            if self.p is not None or self.order is not None:
                raise ValueError(
                    f'Kernel "{self.kind.value}" does not take "p" or '
                    '"order".'
                )
            if self.bandwidth is None:
                raise ValueError(
                    f'Kernel "{self.kind.value}" requires a bandwidth.'
                )
            bandwidth = float(self.bandwidth)
            if not (bandwidth > 0 and math.isfinite(bandwidth)):
                raise ValueError('Parameter "bandwidth" must be positive.')
            object.__setattr__(self, 'bandwidth', bandwidth)

    @classmethod
    def gaussian(cls, bandwidth: float = 1.0) -> 'Kernel':
        """Creates ``k(x, x') = exp(-|x - x'|^2 / (2 s^2))``."""
        return cls(KernelKind.GAUSSIAN, bandwidth=bandwidth)

    @classmethod
    def laplace(cls, bandwidth: float = 1.0) -> 'Kernel':
        """Creates ``k(x, x') = exp(-|x - x'| / s)``."""
        return cls(KernelKind.LAPLACE, bandwidth=bandwidth)

    @classmethod
    def truncated_mercer(
        cls,
        p: float,
        order: int = DEFAULT_TRUNCATION_ORDER
    ) -> 'Kernel':
        """Creates the truncated Mercer kernel with known eigenpairs.

        Parameters
        ----------
        p: float
            eigenvalue decay in ``(0, 1)``
        order: int, optional
            number of eigenpairs ``M``

        Returns
        -------
        specreg.kernels.Kernel
            kernel

        """
        return cls(KernelKind.TRUNCATED_MERCER, p=p, order=order)

    @property
    def is_mercer(self) -> bool:
        """bool: whether the eigendecomposition is known in closed form"""
        return self.kind == KernelKind.TRUNCATED_MERCER

    @property
    def eigenvalues(self) -> np.ndarray:
        """numpy.ndarray: Mercer eigenvalues ``mu_i = i^(-1/p)``"""
        if not self.is_mercer:
            raise WrongKindError(
                f'Kernel "{self.kind.value}" has no closed-form '
                'eigenvalues.'
            )
        return np.arange(1, self.order + 1, dtype=float) ** (-1.0 / self.p)

    @property
    def kappa2(self) -> float:
        """float: bound ``kappa^2`` on ``k(x, x)``"""
        if self.is_mercer:
            return 2.0 * float(self.eigenvalues.sum())
        return 1.0

    def __str__(self) -> str:
        if self.is_mercer:
            return f'truncated-mercer(p={self.p:g}, M={self.order})'
        return f'{self.kind.value}(s={self.bandwidth:g})'


def _as_points(kern: Kernel, xs: np.ndarray) -> np.ndarray:
    """Validates points and converts them to a two-dimensional array with one
    point per row.

    Parameters
    ----------
    kern: specreg.kernels.Kernel
        kernel whose domain is checked
    xs: numpy.ndarray
        scalar, vector of scalar points or matrix with one point per row

    Returns
    -------
    numpy.ndarray
        points

    Raises
    ------
    specreg.error.DomainError
        when points are not finite or lie outside of the kernel's domain

    """
    points = np.asarray(xs, dtype=float)
    if points.ndim == 0:
        points = points.reshape(1, 1)
    elif points.ndim == 1:
        points = points[:, None]
    elif points.ndim != 2:
        raise DomainError('Points must be given as scalars, vector or matrix.')
    if not np.all(np.isfinite(points)):
        raise DomainError('Points must be finite.')
    if kern.is_mercer:
        if points.shape[1] != 1:
            raise DomainError('Truncated Mercer kernel is one-dimensional.')
        if np.any(points < 0.0) or np.any(points > 1.0):
            raise DomainError(
                'Truncated Mercer kernel is only defined on [0, 1].'
            )
    return points


def mercer_basis(xs: np.ndarray, order: int) -> np.ndarray:
    """Evaluates the cosine basis ``e_i(x) = sqrt(2) cos(i pi x)``.

    Parameters
    ----------
    xs: numpy.ndarray
        points in ``[0, 1]``
    order: int
        number of basis functions

    Returns
    -------
    numpy.ndarray
        matrix with entry ``(l, i)`` equal to ``e_{i+1}(x_l)``

    """
    points = np.asarray(xs, dtype=float).reshape(-1)
    frequencies = np.arange(1, order + 1, dtype=float)
    return math.sqrt(2.0) * np.cos(np.pi * np.outer(points, frequencies))


def cross_gram(kern: Kernel, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Computes the kernel matrix between two sets of points.

    Parameters
    ----------
    kern: specreg.kernels.Kernel
        kernel
    xs: numpy.ndarray
        first set of ``m`` points
    zs: numpy.ndarray
        second set of ``n`` points

    Returns
    -------
    numpy.ndarray
        ``m x n`` matrix with entries ``k(x_i, z_j)``

    """
    left = _as_points(kern, xs)
    right = _as_points(kern, zs)
    if left.shape[1] != right.shape[1]:
        raise DomainError(
            f'Points have dimension {left.shape[1]} but {right.shape[1]} '
            'was expected.'
        )
    if kern.kind == KernelKind.GAUSSIAN:
        distances = cdist(left, right, metric='sqeuclidean')
        return np.exp(-distances / (2.0 * kern.bandwidth ** 2))
    if kern.kind == KernelKind.LAPLACE:
        distances = cdist(left, right, metric='euclidean')
        return np.exp(-distances / kern.bandwidth)
    mu = kern.eigenvalues
    left_basis = mercer_basis(left, kern.order)
    right_basis = mercer_basis(right, kern.order)
    return (left_basis * mu) @ right_basis.T


def gram(kern: Kernel, xs: np.ndarray) -> np.ndarray:
    """Computes the Gram matrix ``K_ij = k(x_i, x_j)``.

    Parameters
    ----------
    kern: specreg.kernels.Kernel
        kernel
    xs: numpy.ndarray
        ``n`` points

    Returns
    -------
    numpy.ndarray
        symmetric ``n x n`` matrix

    Raises
    ------
    specreg.error.DomainError
        when points lie outside of the kernel's domain

    """
    K = cross_gram(kern, xs, xs)
    logger.debug(f'computed Gram matrix of size {K.shape[0]} for {kern}')
    return 0.5 * (K + K.T)


def kernel_column(kern: Kernel, xs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Computes the vector ``(k(x, x_i))_i``.

    Parameters
    ----------
    kern: specreg.kernels.Kernel
        kernel
    xs: numpy.ndarray
        ``n`` points
    x: numpy.ndarray
        single point

    Returns
    -------
    numpy.ndarray
        vector of length ``n``

    """
    point = np.asarray(x, dtype=float).reshape(1, -1)
    return cross_gram(kern, point, xs)[0]


def mercer_eigenpairs(
    kern: Kernel
) -> Tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]:
    """Returns the eigenvalues and the eigenfunctions of a truncated Mercer
    kernel.

    Parameters
    ----------
    kern: specreg.kernels.Kernel
        truncated Mercer kernel

    Returns
    -------
    Tuple[numpy.ndarray, Callable[[numpy.ndarray], numpy.ndarray]]
        descending eigenvalues and a function mapping ``n`` points to the
        ``n x M`` matrix of basis function values

    Raises
    ------
    specreg.error.WrongKindError
        when `kern` is not a truncated Mercer kernel

    """
    mu = kern.eigenvalues

    def basis(xs: np.ndarray) -> np.ndarray:
        return mercer_basis(_as_points(kern, xs), kern.order)

    return mu, basis


def feature_map(kern: Kernel, xs: np.ndarray) -> np.ndarray:
    """Evaluates the finite feature map ``phi(x)_i = sqrt(mu_i) e_i(x)``.

    Parameters
    ----------
    kern: specreg.kernels.Kernel
        truncated Mercer kernel
    xs: numpy.ndarray
        ``n`` points

    Returns
    -------
    numpy.ndarray
        ``n x M`` matrix of features

    """
    mu, basis = mercer_eigenpairs(kern)
    return basis(xs) * np.sqrt(mu)
