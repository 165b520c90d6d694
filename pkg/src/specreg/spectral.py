"""Spectral calculus on symmetric matrices and spectral filter functions"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from specreg.error import (
    EigFailureError,
    GridTooCoarseError,
    NonSymmetricError,
    NotPositiveSemidefiniteError,
)


logger = logging.getLogger(__name__)

#: eigenvalues below ``-EIG_NEGATIVITY_TOLERANCE * max|eigenvalue|`` are
#: rejected for positive semidefinite input, larger ones are clamped to zero
EIG_NEGATIVITY_TOLERANCE = 1e-10

#: maximal asymmetry per entry relative to ``max(1, max|A|)``
SYMMETRY_TOLERANCE = 1e-12

#: minimal resolution of the exponent grids of the axiom verifier
MIN_ALPHA_RESOLUTION = 64

#: number of geometric points of the axiom verifier in ``[kappa2 * 1e-8,
#: kappa2]`` (the point zero is added on top)
X_GRID_RESOLUTION = 512

#: slack granted to declared filter constants by the axiom verifier
AXIOM_SLACK = 1e-9

ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class SymEig:

    """Eigendecomposition of a real symmetric matrix.

    Attributes
    ----------
    eigenvalues: numpy.ndarray
        eigenvalues in descending order
    eigenvectors: numpy.ndarray
        orthogonal matrix whose columns are the eigenvectors paired with
        `eigenvalues`

    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self) -> None:
        eigenvalues = np.array(self.eigenvalues, dtype=float)
        eigenvectors = np.array(self.eigenvectors, dtype=float)
        if eigenvalues.ndim != 1:
            raise ValueError('Eigenvalues must be a vector.')
        n = eigenvalues.shape[0]
        if eigenvectors.shape != (n, n):
            raise ValueError(
                'Eigenvectors must form a square matrix matching the number '
                'of eigenvalues.'
            )
        eigenvalues.setflags(write=False)
        eigenvectors.setflags(write=False)
        object.__setattr__(self, 'eigenvalues', eigenvalues)
        object.__setattr__(self, 'eigenvectors', eigenvectors)

    @property
    def n(self) -> int:
        """int: size of the decomposed matrix"""
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Computes ``V diag(eigenvalues) V^T``.

        Returns
        -------
        numpy.ndarray
            reconstructed symmetric matrix

        """
        return apply_function(self, self.eigenvalues)


def _normalize_signs(eigenvectors: np.ndarray) -> np.ndarray:
    """Flips eigenvectors such that the first non-negligible entry of each
    column is positive.

    Parameters
    ----------
    eigenvectors: numpy.ndarray
        matrix with eigenvectors as columns

    Returns
    -------
    numpy.ndarray
        sign-normalized eigenvectors

    """
    magnitudes = np.abs(eigenvectors)
    thresholds = 1e-8 * magnitudes.max(axis=0, keepdims=True)
    leading = np.argmax(magnitudes > thresholds, axis=0)
    columns = np.arange(eigenvectors.shape[1])
    signs = np.where(eigenvectors[leading, columns] < 0, -1.0, 1.0)
    return eigenvectors * signs


def sym_eig(A: np.ndarray, psd: bool = True) -> SymEig:
    """Computes the eigendecomposition of a real symmetric matrix.

    Eigenvalues are returned in descending order (ties keep the order of the
    solver) and each eigenvector is normalized such that its first
    non-negligible entry is positive, which makes the result reproducible.

    Parameters
    ----------
    A: numpy.ndarray
        symmetric matrix
    psd: bool, optional
        whether `A` is known to be positive semidefinite; eigenvalues that are
        negative within ``1e-10`` times the largest eigenvalue magnitude are
        then clamped to zero

    Returns
    -------
    specreg.spectral.SymEig
        eigendecomposition

    Raises
    ------
    specreg.error.NonSymmetricError
        when `A` is not symmetric within tolerance
    specreg.error.EigFailureError
        when the solver does not converge
    specreg.error.NotPositiveSemidefiniteError
        when `psd` is set but `A` has a clearly negative eigenvalue

    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError('Parameter "A" must be a non-empty square matrix.')
    if not np.all(np.isfinite(A)):
        raise ValueError('Parameter "A" must only contain finite values.')
    scale = max(1.0, float(np.max(np.abs(A))))
    asymmetry = float(np.max(np.abs(A - A.T)))
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        raise NonSymmetricError(
            f'Matrix is not symmetric (max. deviation {asymmetry:.3e}).'
        )
    logger.debug(f'decompose symmetric matrix of size {A.shape[0]}')
    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(A, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as err:
        raise EigFailureError(
            f'Eigendecomposition did not converge: {err}'
        ) from err
    order = np.argsort(-eigenvalues, kind='stable')
    eigenvalues = eigenvalues[order]
    eigenvectors = _normalize_signs(eigenvectors[:, order])
    if psd:
        largest = float(np.max(np.abs(eigenvalues)))
        tolerance = EIG_NEGATIVITY_TOLERANCE * largest
        if eigenvalues[-1] < -tolerance:
            raise NotPositiveSemidefiniteError(
                f'Matrix has negative eigenvalue {eigenvalues[-1]:.3e} '
                f'below tolerance {-tolerance:.3e}.'
            )
        eigenvalues = np.clip(eigenvalues, 0.0, None)
    return SymEig(eigenvalues, eigenvectors)


def apply_function(eig: SymEig, values: np.ndarray) -> np.ndarray:
    """Assembles ``V diag(values) V^T`` from an eigenbasis.

    Parameters
    ----------
    eig: specreg.spectral.SymEig
        eigendecomposition providing the basis ``V``
    values: numpy.ndarray
        one value per eigenvector

    Returns
    -------
    numpy.ndarray
        symmetric matrix

    """
    V = eig.eigenvectors
    matrix = (V * values) @ V.T
    return 0.5 * (matrix + matrix.T)


class FilterKind(enum.Enum):

    """Regularization filters."""

    TIKHONOV = 'tikhonov'
    LANDWEBER = 'landweber'
    TRUNCATION = 'truncation'


_FILTER_ALIASES = {
    'tikhonov': FilterKind.TIKHONOV,
    'ridge': FilterKind.TIKHONOV,
    'krr': FilterKind.TIKHONOV,
    'landweber': FilterKind.LANDWEBER,
    'gradient-descent': FilterKind.LANDWEBER,
    'gd': FilterKind.LANDWEBER,
    'truncation': FilterKind.TRUNCATION,
    'pcr': FilterKind.TRUNCATION,
    'spectral-cutoff': FilterKind.TRUNCATION,
}


def _as_array(x: ArrayLike) -> Tuple[np.ndarray, bool]:
    values = np.asarray(x, dtype=float)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValueError('Parameter "x" must be finite and non-negative.')
    return values, values.ndim == 0


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError('Parameter "lam" must be positive and finite.')
    return lam


@dataclass(frozen=True)
class FilterSpec:

    """Regularization filter ``g_lam`` together with its declared constants.

    Attributes
    ----------
    kind: specreg.spectral.FilterKind
        filter family
    tau: Union[float, None]
        step size of the Landweber iteration (``None`` for other kinds)

    Note
    ----
    The Landweber filter maps the regularization parameter to the number of
    iterations ``k = ceil(1 / lam)``. A tolerance of ``1e-9`` absorbs the
    rounding error of ``1 / lam`` so that ``lam = 1 / k`` maps back to ``k``.

    """

    kind: FilterKind
    tau: Optional[float] = None

    def __post_init__(self) -> None:
        if not isinstance(self.kind, FilterKind):
            raise TypeError('Parameter "kind" must be a FilterKind.')
        if self.kind == FilterKind.LANDWEBER:
            if self.tau is None:
                raise ValueError('Landweber filter requires a step size.')
            tau = float(self.tau)
            if not (tau > 0 and math.isfinite(tau)):
                raise ValueError('Parameter "tau" must be positive.')
            object.__setattr__(self, 'tau', tau)
        elif self.tau is not None:
            raise ValueError(
                f'Filter "{self.kind.value}" does not take a step size.'
            )

    @classmethod
    def tikhonov(cls) -> 'FilterSpec':
        """Creates the Tikhonov (ridge regression) filter."""
        return cls(FilterKind.TIKHONOV)

    @classmethod
    def landweber(cls, tau: float = 1.0) -> 'FilterSpec':
        """Creates the Landweber (gradient descent) filter.

        Parameters
        ----------
        tau: float, optional
            step size

        Returns
        -------
        specreg.spectral.FilterSpec
            filter

        """
        return cls(FilterKind.LANDWEBER, tau)

    @classmethod
    def truncation(cls) -> 'FilterSpec':
        """Creates the truncation (principal component regression) filter."""
        return cls(FilterKind.TRUNCATION)

    @classmethod
    def from_name(
        cls,
        name: str,
        tau: Optional[float] = None
    ) -> 'FilterSpec':
        """Creates a filter from its name or one of the common aliases
        (``"ridge"``, ``"gd"``, ``"pcr"``, ...).

        Parameters
        ----------
        name: str
            name of the filter
        tau: float, optional
            Landweber step size (defaults to ``1``)

        Returns
        -------
        specreg.spectral.FilterSpec
            filter

        """
        try:
            kind = _FILTER_ALIASES[name.lower()]
        except KeyError:
            raise ValueError(f'Unknown filter "{name}".')
        if kind == FilterKind.LANDWEBER:
            return cls.landweber(1.0 if tau is None else tau)
        if tau is not None:
            raise ValueError(f'Filter "{name}" does not take a step size.')
        return cls(kind)

    @property
    def name(self) -> str:
        """str: name of the filter family"""
        return self.kind.value

    @property
    def E(self) -> float:
        """float: constant of the first filter axiom"""
        return 1.0

    def axiom1_bound(self, lam: float) -> float:
        """Bound of the first filter axiom at a given regularization
        parameter.

        Equals `E` except for the Landweber filter, where rounding the
        iteration count up gives ``lam g_lam(0) = lam tau ceil(1 / lam)``.
        The bound then is ``max(E, lam tau k)``, which equals `E` when
        ``lam = 1 / k`` and stays below ``1 + lam`` for ``tau <= 1``.

        Parameters
        ----------
        lam: float
            regularization parameter

        Returns
        -------
        float
            bound of ``lam^(1 - alpha) x^alpha g_lam(x)``

        """
        if self.kind == FilterKind.LANDWEBER:
            lam = _check_lam(lam)
            return max(self.E, lam * self.tau * self.iterations(lam))
        return self.E

    @property
    def qualification(self) -> float:
        """float: qualification (``math.inf`` if arbitrary)"""
        if self.kind == FilterKind.TIKHONOV:
            return 1.0
        return math.inf

    def omega(self, rho: float) -> float:
        """Constant of the second filter axiom for a given qualification.

        Parameters
        ----------
        rho: float
            qualification in ``(0, self.qualification]``

        Returns
        -------
        float
            declared constant ``omega_rho``
            (Landweber iteration: ``max(1, rho^rho) tau^-rho``)

        """
        if not (0 < rho <= self.qualification):
            raise ValueError(
                f'Qualification {rho} is outside of (0, '
                f'{self.qualification}] for filter "{self.name}".'
            )
        if self.kind == FilterKind.LANDWEBER:
            # x^rho (1 - tau x)^k <= tau^-rho (rho / k)^rho for tau x <= 1
            base = float(rho ** rho) if rho > 1 else 1.0
            return base * self.tau ** (-rho)
        return 1.0

    def iterations(self, lam: float) -> int:
        """Number of Landweber iterations ``k = ceil(1 / lam)``.

        Parameters
        ----------
        lam: float
            regularization parameter

        Returns
        -------
        int
            iteration count

        """
        if self.kind != FilterKind.LANDWEBER:
            raise ValueError('Only the Landweber filter iterates.')
        lam = _check_lam(lam)
        return max(1, math.ceil(1.0 / lam - 1e-9))

    def _evaluate(
        self,
        lam: float,
        x: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Evaluates filter and residual on an array."""
        if self.kind == FilterKind.TIKHONOV:
            return 1.0 / (x + lam), lam / (x + lam)
        if self.kind == FilterKind.TRUNCATION:
            kept = x >= lam
            safe = np.where(kept, x, 1.0)
            return np.where(kept, 1.0 / safe, 0.0), np.where(kept, 0.0, 1.0)
        k = self.iterations(lam)
        tx = self.tau * x
        inside = tx < 1.0
        # log1p keeps 1 - (1 - tau x)^k accurate for small tau x
        log_base = k * np.log1p(-np.where(inside, tx, 0.0))
        residual = np.where(inside, np.exp(log_base), (1.0 - tx) ** k)
        filtered = np.where(inside, -np.expm1(log_base), 1.0 - residual)
        positive = x > 0
        g = np.where(
            positive,
            filtered / np.where(positive, x, 1.0),
            self.tau * k
        )
        return g, residual

    def value(self, lam: float, x: ArrayLike) -> Union[float, np.ndarray]:
        """Evaluates ``g_lam(x)``.

        Parameters
        ----------
        lam: float
            regularization parameter
        x: Union[float, numpy.ndarray]
            non-negative argument(s)

        Returns
        -------
        Union[float, numpy.ndarray]
            filter value(s)

        """
        lam = _check_lam(lam)
        values, scalar = _as_array(x)
        g, _ = self._evaluate(lam, values)
        return float(g) if scalar else g

    def residual(self, lam: float, x: ArrayLike) -> Union[float, np.ndarray]:
        """Evaluates ``r_lam(x) = 1 - x g_lam(x)``.

        Parameters
        ----------
        lam: float
            regularization parameter
        x: Union[float, numpy.ndarray]
            non-negative argument(s)

        Returns
        -------
        Union[float, numpy.ndarray]
            residual value(s)

        """
        lam = _check_lam(lam)
        values, scalar = _as_array(x)
        _, r = self._evaluate(lam, values)
        return float(r) if scalar else r

    def __str__(self) -> str:
        if self.kind == FilterKind.LANDWEBER:
            return f'landweber(tau={self.tau:g})'
        return self.name


def filter_value(
    f: FilterSpec,
    lam: float,
    x: ArrayLike
) -> Union[float, np.ndarray]:
    """Evaluates the filter function ``g_lam(x)``.

    Parameters
    ----------
    f: specreg.spectral.FilterSpec
        filter
    lam: float
        regularization parameter
    x: Union[float, numpy.ndarray]
        non-negative argument(s)

    Returns
    -------
    Union[float, numpy.ndarray]
        filter value(s)

    """
    return f.value(lam, x)


def filter_residual(
    f: FilterSpec,
    lam: float,
    x: ArrayLike
) -> Union[float, np.ndarray]:
    """Evaluates the residual ``r_lam(x) = 1 - x g_lam(x)``."""
    return f.residual(lam, x)


def apply_filter(f: FilterSpec, lam: float, eig: SymEig) -> np.ndarray:
    """Applies a filter to a matrix through spectral calculus.

    Parameters
    ----------
    f: specreg.spectral.FilterSpec
        filter
    lam: float
        regularization parameter
    eig: specreg.spectral.SymEig
        eigendecomposition of a positive semidefinite matrix

    Returns
    -------
    numpy.ndarray
        ``V diag(g_lam(eigenvalues)) V^T``

    """
    return apply_function(eig, f.value(lam, eig.eigenvalues))


@dataclass(frozen=True)
class AxiomReport:

    """Outcome of the numerical verification of the filter axioms.

    Attributes
    ----------
    filter: specreg.spectral.FilterSpec
        verified filter
    kappa2: float
        upper end of the argument range
    max_lhs_axiom1: float
        supremum of ``lam^(1 - alpha) x^alpha g_lam(x)`` over the grids
    bound_axiom1: float
        largest bound of the first axiom over the regularization grid
        (see ``FilterSpec.axiom1_bound()``)
    max_lhs_axiom2: Dict[float, float]
        supremum of ``|r_lam(x)| x^alpha lam^(-alpha)`` over the grids
        (``alpha`` up to the qualification used as key)
    passed: bool
        whether all suprema respect the declared constants

    """

    filter: FilterSpec
    kappa2: float
    max_lhs_axiom1: float
    bound_axiom1: float
    max_lhs_axiom2: Dict[float, float]
    passed: bool

    def rows(self) -> Sequence[Tuple[str, str, float, float]]:
        """Lists ``(axiom, qualification, supremum, bound)`` rows."""
        rows = [('1', '', self.max_lhs_axiom1, self.bound_axiom1)]
        for rho, value in sorted(self.max_lhs_axiom2.items()):
            rows.append(('2', f'{rho:g}', value, self.filter.omega(rho)))
        return rows


def verify_filter_axioms(
    f: FilterSpec,
    lam_grid: Sequence[float],
    kappa2: float,
    alpha_grid_resolution: int = MIN_ALPHA_RESOLUTION,
    qualifications: Optional[Sequence[float]] = None
) -> AxiomReport:
    """Checks both filter axioms on finite grids.

    The argument grid consists of zero and ``512`` geometric points in
    ``[kappa2 * 1e-8, kappa2]``; exponents are taken from uniform grids in
    ``[0, 1]`` (first axiom) and ``[0, rho]`` (second axiom).

    Parameters
    ----------
    f: specreg.spectral.FilterSpec
        filter
    lam_grid: Sequence[float]
        regularization parameters in ``(0, kappa2]``
    kappa2: float
        upper end of the argument range
    alpha_grid_resolution: int, optional
        number of points of the exponent grids (at least ``64``)
    qualifications: Sequence[float], optional
        qualifications ``rho`` for which the second axiom is checked;
        defaults to the filter's qualification, or ``(1, 2, 3)`` if that is
        arbitrary

    Returns
    -------
    specreg.spectral.AxiomReport
        suprema and verdict

    Raises
    ------
    specreg.error.GridTooCoarseError
        when `alpha_grid_resolution` is below ``64``

    """
    if alpha_grid_resolution < MIN_ALPHA_RESOLUTION:
        raise GridTooCoarseError(
            f'Exponent grid resolution must be at least '
            f'{MIN_ALPHA_RESOLUTION}.'
        )
    if not kappa2 > 0:
        raise ValueError('Parameter "kappa2" must be positive.')
    lams = np.asarray(lam_grid, dtype=float)
    if lams.size == 0 or np.any(lams <= 0) or np.any(lams > kappa2):
        raise ValueError('Parameter "lam_grid" must lie in (0, kappa2].')
    if qualifications is None:
        if math.isinf(f.qualification):
            qualifications = (1.0, 2.0, 3.0)
        else:
            qualifications = (f.qualification, )

    x = np.concatenate((
        [0.0],
        np.geomspace(kappa2 * 1e-8, kappa2, X_GRID_RESOLUTION)
    ))
    alphas = np.linspace(0.0, 1.0, alpha_grid_resolution)[:, None]
    max_axiom1 = 0.0
    bound1 = 0.0
    axiom1_held = True
    max_axiom2 = {float(rho): 0.0 for rho in qualifications}
    for lam in lams:
        g = f.value(lam, x)
        r = np.abs(f.residual(lam, x))
        lhs = lam ** (1.0 - alphas) * x ** alphas * g
        sup1 = float(lhs.max())
        bound = f.axiom1_bound(lam)
        axiom1_held = axiom1_held and sup1 <= bound + AXIOM_SLACK
        max_axiom1 = max(max_axiom1, sup1)
        bound1 = max(bound1, bound)
        for rho in max_axiom2:
            exponents = np.linspace(0.0, rho, alpha_grid_resolution)[:, None]
            lhs = r * x ** exponents * lam ** (-exponents)
            max_axiom2[rho] = max(max_axiom2[rho], float(lhs.max()))

    passed = axiom1_held and all(
        value <= f.omega(rho) + AXIOM_SLACK
        for rho, value in max_axiom2.items()
    )
    logger.info(
        f'filter "{f}" axioms: sup1={max_axiom1:.6g}, '
        f'sup2={max_axiom2}, passed={passed}'
    )
    return AxiomReport(
        f, float(kappa2), max_axiom1, bound1, max_axiom2, passed
    )
