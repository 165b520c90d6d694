"""Synthetic regression problems with known Mercer expansion"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from specreg.error import BadParamsError, KernelMismatchError
from specreg.estimators import Dataset, FittedEstimator
from specreg.kernels import DEFAULT_TRUNCATION_ORDER, Kernel, mercer_basis


logger = logging.getLogger(__name__)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Creates a counter-based random number generator for one stream.

    The same ``(seed, stream)`` pair yields the same draws on every platform
    and independently of the order in which streams are consumed.

    Parameters
    ----------
    seed: int
        non-negative 64-bit seed
    *stream: int
        stream identifier, e.g. ``(n, trial)``

    Returns
    -------
    numpy.random.Generator
        generator backed by ``Philox``

    """
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError('Argument "seed" must be an integer.')
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError('Argument "seed" must be a non-negative 64-bit int.')
    sequence = np.random.SeedSequence(
        int(seed),
        spawn_key=tuple(int(s) for s in stream)
    )
    return np.random.Generator(np.random.Philox(sequence))


class NoiseKind(enum.Enum):

    """Supported output noise laws."""

    BOUNDED_UNIFORM = 'bounded-uniform'
    GAUSSIAN = 'gaussian'


@dataclass(frozen=True)
class NoiseLaw:

    """Coordinatewise independent, centered output noise.

    Attributes
    ----------
    kind: specreg.synthetic.NoiseKind
        noise family
    param: float
        halfwidth ``b`` of uniform noise on ``[-b, b]`` or standard deviation
        of Gaussian noise (zero means noiseless)

    """

    kind: NoiseKind
    param: float

    def __post_init__(self) -> None:
        if not isinstance(self.kind, NoiseKind):
            raise TypeError('Parameter "kind" must be a NoiseKind.')
        param = float(self.param)
        if not (param >= 0 and math.isfinite(param)):
            raise BadParamsError('Noise parameter must be non-negative.')
        object.__setattr__(self, 'param', param)

    @classmethod
    def bounded_uniform(cls, halfwidth: float) -> 'NoiseLaw':
        """Creates uniform noise on ``[-halfwidth, halfwidth]``."""
        return cls(NoiseKind.BOUNDED_UNIFORM, halfwidth)

    @classmethod
    def gaussian(cls, sigma: float) -> 'NoiseLaw':
        """Creates Gaussian noise with standard deviation `sigma`."""
        return cls(NoiseKind.GAUSSIAN, sigma)

    @property
    def variance(self) -> float:
        """float: variance per coordinate"""
        if self.kind == NoiseKind.BOUNDED_UNIFORM:
            return self.param ** 2 / 3.0
        return self.param ** 2

    def sample(self, rng: np.random.Generator, shape: Any) -> np.ndarray:
        """Draws noise of a given shape."""
        if self.param == 0:
            return np.zeros(shape)
        if self.kind == NoiseKind.BOUNDED_UNIFORM:
            return rng.uniform(-self.param, self.param, size=shape)
        return rng.normal(0.0, self.param, size=shape)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'param': self.param}

    @classmethod
    def from_dict(cls, dataset: Dict[str, Any]) -> 'NoiseLaw':
        return cls(NoiseKind(dataset['kind']), dataset['param'])


#: uniform noise on ``[-0.5, 0.5]`` per coordinate
DEFAULT_NOISE = NoiseLaw.bounded_uniform(0.5)


@dataclass(frozen=True)
class MercerProblem:

    """Regression problem ``Y = F*(X) + noise`` with ``X`` uniform on
    ``[0, 1]`` and ``F*(x) = sum_ij a_ij e_i(x) d_j``.

    Attributes
    ----------
    p: float
        eigenvalue decay in ``(0, 1)``
    beta: float
        smoothness of the target
    B: float
        norm bound, attained exactly: ``sum_ij a_ij^2 / mu_i^beta = B^2``
    M: int
        truncation order of the kernel
    D: int
        output dimension
    noise: specreg.synthetic.NoiseLaw
        output noise
    seed: int
        seed of the coefficient pattern and of derived experiments
    coefficients: numpy.ndarray
        ``M x D`` coefficient matrix ``a``

    """

    p: float
    beta: float
    B: float
    M: int
    D: int
    noise: NoiseLaw
    seed: int
    coefficients: np.ndarray

    @property
    def kernel(self) -> Kernel:
        """specreg.kernels.Kernel: truncated Mercer kernel of the problem"""
        return Kernel.truncated_mercer(self.p, self.M)

    @property
    def eigenvalues(self) -> np.ndarray:
        """numpy.ndarray: Mercer eigenvalues ``mu_i``"""
        return self.kernel.eigenvalues

    def target(self, xs: np.ndarray) -> np.ndarray:
        """Evaluates ``F*`` at points in ``[0, 1]`` (``n x D``)."""
        points = np.asarray(xs, dtype=float).reshape(-1)
        if np.any(points < 0.0) or np.any(points > 1.0):
            raise ValueError('Target is only defined on [0, 1].')
        return mercer_basis(points, self.M) @ self.coefficients

    def to_dict(self) -> Dict[str, Any]:
        """Serializes the problem (the coefficients are implied by the seed).

        Returns
        -------
        Dict[str, Any]
            fields ``p``, ``beta``, ``B``, ``M``, ``D``, ``noise``, ``seed``

        """
        return {
            'p': self.p,
            'beta': self.beta,
            'B': self.B,
            'M': self.M,
            'D': self.D,
            'noise': self.noise.to_dict(),
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, dataset: Dict[str, Any]) -> 'MercerProblem':
        """Recreates a problem from its serialized form."""
        return make_problem(
            p=dataset['p'],
            beta=dataset['beta'],
            B=dataset['B'],
            M=dataset['M'],
            D=dataset['D'],
            noise=NoiseLaw.from_dict(dataset['noise']),
            seed=dataset['seed']
        )


def make_problem(
    p: float,
    beta: float,
    B: float,
    M: int = DEFAULT_TRUNCATION_ORDER,
    D: int = 1,
    noise: Optional[NoiseLaw] = None,
    seed: int = 0
) -> MercerProblem:
    """Creates a problem whose target attains the source condition with
    equality.

    Coefficients are ``a_ij = c mu_i^(beta/2) i^(-1/2) u_ij`` where the rows
    ``u_i`` are seeded unit vectors and ``c`` normalizes
    ``sum_ij a_ij^2 / mu_i^beta`` to ``B^2``.

    Parameters
    ----------
    p: float
        eigenvalue decay in ``(0, 1)``
    beta: float
        positive smoothness
    B: float
        positive norm bound
    M: int, optional
        truncation order
    D: int, optional
        output dimension
    noise: specreg.synthetic.NoiseLaw, optional
        output noise (defaults to uniform noise with halfwidth ``0.5``)
    seed: int, optional
        seed

    Returns
    -------
    specreg.synthetic.MercerProblem
        problem

    Raises
    ------
    specreg.error.BadParamsError
        when a parameter is out of range

    """
    if not (0 < p < 1):
        raise BadParamsError('Parameter "p" must lie in (0, 1).')
    if not (beta > 0 and math.isfinite(beta)):
        raise BadParamsError('Parameter "beta" must be positive.')
    if not (B > 0 and math.isfinite(B)):
        raise BadParamsError('Parameter "B" must be positive.')
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)) or M < 1:
        raise BadParamsError('Parameter "M" must be a positive integer.')
    if isinstance(D, bool) or not isinstance(D, (int, np.integer)) or D < 1:
        raise BadParamsError('Parameter "D" must be a positive integer.')
    if noise is None:
        noise = DEFAULT_NOISE
    rng = make_rng(seed)
    pattern = rng.standard_normal((M, D))
    pattern[:, 0] = np.abs(pattern[:, 0])
    norms = np.linalg.norm(pattern, axis=1)
    # an all-zero draw has probability zero but would break normalization
    pattern[norms == 0, 0] = 1.0
    pattern /= np.linalg.norm(pattern, axis=1, keepdims=True)

    index = np.arange(1, M + 1, dtype=float)
    mu = index ** (-1.0 / p)
    scale = B / math.sqrt(float(np.sum(1.0 / index)))
    coefficients = (scale * mu ** (beta / 2.0) / np.sqrt(index))[:, None]
    coefficients = coefficients * pattern
    coefficients.setflags(write=False)
    logger.debug(
        f'created problem p={p:g}, beta={beta:g}, B={B:g}, M={M}, D={D}'
    )
    return MercerProblem(
        p=float(p),
        beta=float(beta),
        B=float(B),
        M=int(M),
        D=int(D),
        noise=noise,
        seed=int(seed),
        coefficients=coefficients
    )


def sample(
    prob: MercerProblem,
    n: int,
    rng: np.random.Generator
) -> Dataset:
    """Draws ``n`` i.i.d. samples with uniform covariates.

    Parameters
    ----------
    prob: specreg.synthetic.MercerProblem
        problem
    n: int
        number of samples
    rng: numpy.random.Generator
        generator of this sample's stream

    Returns
    -------
    specreg.estimators.Dataset
        dataset with ``n x D`` outputs

    """
    if n < 1:
        raise ValueError('Argument "n" must be positive.')
    xs = rng.uniform(0.0, 1.0, size=n)
    ys = prob.target(xs) + prob.noise.sample(rng, (n, prob.D))
    return Dataset(xs, ys)


def interp_norm(prob: MercerProblem, gamma: float) -> float:
    """Computes the interpolation norm ``sqrt(sum a_ij^2 / mu_i^gamma)`` of
    the target."""
    if gamma < 0:
        raise ValueError('Argument "gamma" must be non-negative.')
    weights = prob.eigenvalues ** (-gamma)
    return math.sqrt(float(np.sum(weights[:, None] * prob.coefficients ** 2)))


def coefficient_error(
    prob: MercerProblem,
    coefficients: np.ndarray,
    gamma: float
) -> float:
    """Computes ``sum_ij (c_ij - a_ij)^2 / mu_i^gamma`` for basis
    coefficients ``c`` of an estimate."""
    difference = np.asarray(coefficients, dtype=float) - prob.coefficients
    weights = prob.eigenvalues ** (-gamma)
    return float(np.sum(weights[:, None] * difference ** 2))


def exact_error(
    prob: MercerProblem,
    est: FittedEstimator,
    gamma: float
) -> float:
    """Computes the squared interpolation-norm error of an estimator in
    coefficient space.

    Parameters
    ----------
    prob: specreg.synthetic.MercerProblem
        problem the training data was drawn from
    est: specreg.estimators.FittedEstimator
        estimator fitted with the problem's kernel
    gamma: float
        norm index in ``[0, 1)`` (``0`` gives the squared ``L2`` error)

    Returns
    -------
    float
        error

    Raises
    ------
    specreg.error.KernelMismatchError
        when the estimator's kernel differs from the problem's kernel

    """
    if not (0 <= gamma < 1):
        raise ValueError('Argument "gamma" must lie in [0, 1).')
    if est.kernel != prob.kernel:
        raise KernelMismatchError(
            f'Estimator kernel {est.kernel} does not match problem kernel '
            f'{prob.kernel}.'
        )
    if est.data.dim != prob.D:
        raise KernelMismatchError(
            f'Estimator has output dimension {est.data.dim} but problem '
            f'has {prob.D}.'
        )
    return coefficient_error(prob, est.mercer_coefficients(), gamma)
