"""Effective dimensions, regularization schedules and learning-rate
experiments"""
import enum
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from specreg.error import BadParamsError, InsufficientGridError
from specreg.estimators import decompose
from specreg.spectral import FilterSpec
from specreg.synthetic import (
    MercerProblem,
    NoiseLaw,
    coefficient_error,
    interp_norm,
    make_problem,
    make_rng,
    sample,
)


logger = logging.getLogger(__name__)

#: number of candidates of the default oracle grid
ORACLE_GRID_SIZE = 25

#: default sample sizes of rate sweeps
DEFAULT_N_GRID = (128, 256, 512, 1024, 2048, 4096)


def effective_dimension(mu: np.ndarray, lam: float, l: float = 1.0) -> float:
    """Computes ``N_l(lam) = sum_i (mu_i / (mu_i + lam))^l``.

    Parameters
    ----------
    mu: numpy.ndarray
        non-negative eigenvalues
    lam: float
        positive regularization parameter
    l: float, optional
        power, at least one

    Returns
    -------
    float
        effective dimension

    """
    if not lam > 0:
        raise ValueError('Argument "lam" must be positive.')
    if not l >= 1:
        raise ValueError('Argument "l" must be at least 1.')
    values = np.asarray(mu, dtype=float)
    return float(np.sum((values / (values + lam)) ** l))


def sandwich_constants(
    p: float,
    l: float,
    D1: float = 1.0,
    D2: float = 1.0
) -> Tuple[float, float]:
    """Constants ``(c1, c2)`` with ``c1 lam^-p <= N_l(lam) <= c2 lam^-p``
    for eigenvalues ``D1 i^(-1/p) <= mu_i <= D2 i^(-1/p)``.

    Parameters
    ----------
    p: float
        eigenvalue decay in ``(0, 1)``
    l: float
        power, at least one
    D1: float, optional
        lower decay constant
    D2: float, optional
        upper decay constant

    Returns
    -------
    Tuple[float, float]
        ``((D1 / (D1 + 1))^l p / (l - p), 1 + D2^l p / (l - p))``

    """
    if not (0 < p < 1) or not l >= 1:
        raise BadParamsError('Require p in (0, 1) and l >= 1.')
    ratio = p / (l - p)
    lower = (D1 / (D1 + 1.0)) ** l * ratio
    upper = 1.0 + D2 ** l * ratio
    return lower, upper


@dataclass(frozen=True)
class SandwichRow:

    """Effective dimension and its power-law bounds at one ``lam``."""

    p: float
    l: float
    lam: float
    value: float
    lower: float
    upper: float

    @property
    def passed(self) -> bool:
        return self.lower <= self.value <= self.upper


def effective_dimension_sandwich(
    p: float,
    l: float,
    M: int = 512,
    num: int = 20
) -> List[SandwichRow]:
    """Evaluates the sandwich bounds on the truncated Mercer spectrum for
    ``num`` values of ``lam`` geometric in ``[10 mu_M, mu_1]``."""
    index = np.arange(1, M + 1, dtype=float)
    mu = index ** (-1.0 / p)
    c1, c2 = sandwich_constants(p, l)
    rows = []
    for lam in np.geomspace(10.0 * mu[-1], mu[0], num):
        rows.append(SandwichRow(
            p=float(p),
            l=float(l),
            lam=float(lam),
            value=effective_dimension(mu, lam, l),
            lower=c1 * lam ** (-p),
            upper=c2 * lam ** (-p)
        ))
    return rows


def empirical_norm(values: np.ndarray) -> float:
    """Computes ``sqrt((1 / n) sum_i |f(x_i)|^2``; rows of a matrix are
    treated as vectors."""
    array = np.asarray(values, dtype=float)
    if array.size == 0:
        raise ValueError('Argument "values" must not be empty.')
    if array.ndim == 1:
        array = array[:, None]
    return math.sqrt(float(np.mean(np.sum(array ** 2, axis=1))))


class ScheduleKind(enum.Enum):

    """Families of regularization schedules."""

    POWER_LAW = 'power-law'
    LOG_POWER = 'log-power'
    ORACLE_GRID = 'oracle-grid'


@dataclass(frozen=True)
class LambdaSchedule:

    """Choice of the regularization parameter as a function of ``n``.

    Attributes
    ----------
    kind: specreg.analysis.ScheduleKind
        family
    exponent: Union[float, None]
        exponent ``e`` of ``lam_n = c n^-e``
    scale: float
        scale ``c``
    alpha: Union[float, None]
        embedding index of ``lam_n = c (n / log^theta n)^(-1 / alpha)``
    theta: Union[float, None]
        logarithm power of the same schedule
    grid: Union[Tuple[float, ...], None]
        oracle candidates; defaults to ``25`` geometric values in
        ``[1e-6 kappa2, kappa2]``

    """

    kind: ScheduleKind
    exponent: Optional[float] = None
    scale: float = 1.0
    alpha: Optional[float] = None
    theta: Optional[float] = None
    grid: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError('Schedule scale must be positive.')
        if self.kind == ScheduleKind.POWER_LAW:
            if self.exponent is None or not self.exponent > 0:
                raise ValueError('Schedule exponent must be positive.')
        elif self.kind == ScheduleKind.LOG_POWER:
            if self.alpha is None or not self.alpha > 0:
                raise ValueError('Schedule "alpha" must be positive.')
            if self.theta is None or not self.theta >= 0:
                raise ValueError('Schedule "theta" must be non-negative.')
        elif self.grid is not None:
            grid = tuple(float(lam) for lam in self.grid)
            if len(grid) == 0 or any(not lam > 0 for lam in grid):
                raise ValueError('Oracle grid must hold positive values.')
            object.__setattr__(self, 'grid', grid)

    @classmethod
    def power_law(cls, exponent: float, scale: float = 1.0) -> 'LambdaSchedule':
        return cls(ScheduleKind.POWER_LAW, exponent=exponent, scale=scale)

    @classmethod
    def log_power(
        cls,
        alpha: float,
        theta: float = 1.0,
        scale: float = 1.0
    ) -> 'LambdaSchedule':
        return cls(
            ScheduleKind.LOG_POWER, alpha=alpha, theta=theta, scale=scale
        )

    @classmethod
    def oracle_grid(
        cls,
        grid: Optional[Sequence[float]] = None
    ) -> 'LambdaSchedule':
        return cls(
            ScheduleKind.ORACLE_GRID,
            grid=None if grid is None else tuple(grid)
        )

    @property
    def is_oracle(self) -> bool:
        """bool: whether ``lam`` is picked by minimal error"""
        return self.kind == ScheduleKind.ORACLE_GRID

    def candidates(self, n: int, kappa2: float = 1.0) -> np.ndarray:
        """Regularization parameters to consider at sample size `n`.

        Parameters
        ----------
        n: int
            sample size, at least two
        kappa2: float, optional
            kernel bound scaling the default oracle grid

        Returns
        -------
        numpy.ndarray
            single value for schedules, all candidates for oracle grids

        """
        if self.kind == ScheduleKind.POWER_LAW:
            return np.array([self.scale * n ** (-self.exponent)])
        if self.kind == ScheduleKind.LOG_POWER:
            if n < 2:
                raise ValueError('Log-power schedule requires n >= 2.')
            effective = n / math.log(n) ** self.theta
            return np.array([self.scale * effective ** (-1.0 / self.alpha)])
        if self.grid is not None:
            return np.array(self.grid)
        return np.geomspace(1e-6 * kappa2, kappa2, ORACLE_GRID_SIZE)

    def to_dict(self) -> Dict[str, object]:
        result: Dict[str, object] = {'kind': self.kind.value}
        if self.kind == ScheduleKind.POWER_LAW:
            result.update(exponent=self.exponent, scale=self.scale)
        elif self.kind == ScheduleKind.LOG_POWER:
            result.update(
                alpha=self.alpha, theta=self.theta, scale=self.scale
            )
        else:
            result['grid'] = None if self.grid is None else list(self.grid)
        return result


def fit_slope(
    n_grid: Sequence[int],
    errors: Sequence[float]
) -> Tuple[float, float, float]:
    """Fits ``log(error) = intercept + slope log(n)`` by least squares.

    Parameters
    ----------
    n_grid: Sequence[int]
        sample sizes
    errors: Sequence[float]
        positive errors per sample size

    Returns
    -------
    Tuple[float, float, float]
        slope, standard error of the slope and intercept

    """
    ns = np.asarray(n_grid, dtype=float)
    values = np.asarray(errors, dtype=float)
    if ns.shape != values.shape or ns.size < 2:
        raise ValueError('Need at least two matching (n, error) pairs.')
    if np.any(values <= 0) or np.any(ns <= 0):
        raise ValueError('Sample sizes and errors must be positive.')
    regression = stats.linregress(np.log(ns), np.log(values))
    stderr = float(regression.stderr) if ns.size > 2 else math.nan
    return float(regression.slope), stderr, float(regression.intercept)


def theoretical_exponent(
    f: FilterSpec,
    beta: float,
    p: float,
    gamma: float = 0.0
) -> float:
    """Rate exponent ``(beta_rho - gamma) / (beta_rho + p)`` with
    ``beta_rho = min(beta, 2 rho)`` for a filter of qualification ``rho``.
    """
    beta_rho = min(beta, 2.0 * f.qualification)
    return (beta_rho - gamma) / (beta_rho + p)


@dataclass(frozen=True)
class RateReport:

    """Learning curve of one filter.

    Attributes
    ----------
    filter: str
        name under which the filter was swept
    gamma: float
        norm index of the errors
    n_grid: Tuple[int, ...]
        sample sizes
    lambdas: numpy.ndarray
        regularization parameter per sample size and trial
    trial_errors: numpy.ndarray
        error per sample size and trial
    fitted_slope: float
        slope of the log mean error against log ``n``
    slope_stderr: float
        standard error of the slope
    intercept: float
        intercept of the same fit
    theoretical_exponent: float
        rate exponent predicted for the filter

    """

    filter: str
    gamma: float
    n_grid: Tuple[int, ...]
    lambdas: np.ndarray
    trial_errors: np.ndarray
    fitted_slope: float
    slope_stderr: float
    intercept: float
    theoretical_exponent: float

    @property
    def trials(self) -> int:
        return self.trial_errors.shape[1]

    @property
    def mean_sq_error(self) -> np.ndarray:
        """numpy.ndarray: error per sample size averaged over trials"""
        return self.trial_errors.mean(axis=1)

    def rows(self) -> List[Tuple[str, float, int, int, float, float]]:
        """Rows ``(filter, gamma, n, trial, lambda, sq_error)``."""
        rows = []
        for i, n in enumerate(self.n_grid):
            for t in range(self.trials):
                rows.append((
                    self.filter,
                    self.gamma,
                    n,
                    t,
                    float(self.lambdas[i, t]),
                    float(self.trial_errors[i, t]),
                ))
        return rows

    def summary_row(self) -> Tuple[str, float, float, float, float]:
        """Row ``(filter, gamma, slope, stderr, theory_exponent)``."""
        return (
            self.filter,
            self.gamma,
            self.fitted_slope,
            self.slope_stderr,
            self.theoretical_exponent,
        )


def _check_sweep(
    n_grid: Sequence[int],
    trials: int,
    gamma: float
) -> Tuple[int, ...]:
    grid = tuple(int(n) for n in n_grid)
    if len(grid) < 4:
        raise InsufficientGridError(
            f'Sample size grid needs at least 4 points, got {len(grid)}.'
        )
    if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 2:
        raise InsufficientGridError(
            'Sample size grid must be strictly ascending and start at 2 or '
            'above.'
        )
    if trials < 1:
        raise ValueError('Argument "trials" must be positive.')
    if not (0 <= gamma < 1):
        raise ValueError('Argument "gamma" must lie in [0, 1).')
    return grid


def _default_workers(workers: Optional[int]) -> int:
    if workers is None:
        return os.cpu_count() or 1
    if workers < 1:
        raise ValueError('Argument "workers" must be positive.')
    return workers


def rate_sweeps(
    prob: MercerProblem,
    filters: Mapping[str, Tuple[FilterSpec, LambdaSchedule]],
    n_grid: Sequence[int] = DEFAULT_N_GRID,
    trials: int = 20,
    gamma: float = 0.0,
    seed: int = 0,
    workers: Optional[int] = None
) -> Dict[str, RateReport]:
    """Measures learning curves of several filters on common datasets.

    For every pair ``(n, trial)`` one dataset is sampled from the stream
    ``(seed, n, trial)`` and its Gram matrix is decomposed once; all filters
    are evaluated on it. Oracle schedules pick the candidate with minimal
    error for each pair.

    Parameters
    ----------
    prob: specreg.synthetic.MercerProblem
        problem
    filters: Mapping[str, Tuple[FilterSpec, LambdaSchedule]]
        filter and schedule per report name
    n_grid: Sequence[int], optional
        strictly ascending sample sizes (at least four)
    trials: int, optional
        number of trials per sample size
    gamma: float, optional
        norm index in ``[0, 1)``
    seed: int, optional
        seed of the dataset streams
    workers: int, optional
        size of the thread pool (defaults to the number of CPUs); results do
        not depend on it

    Returns
    -------
    Dict[str, specreg.analysis.RateReport]
        report per name

    Raises
    ------
    specreg.error.InsufficientGridError
        when `n_grid` is too short or not ascending

    """  # noqa
    grid = _check_sweep(n_grid, trials, gamma)
    if len(filters) == 0:
        raise ValueError('Argument "filters" must not be empty.')
    kern = prob.kernel
    kappa2 = kern.kappa2

    def run_trial(key: Tuple[int, int]) -> Dict[str, Tuple[float, float]]:
        n, trial = key
        data = sample(prob, n, make_rng(seed, n, trial))
        path = decompose(data.xs, kern).mercer_path(data.ys)
        outcome = {}
        for name, (f, schedule) in filters.items():
            best = (math.nan, math.inf)
            for lam in schedule.candidates(n, kappa2):
                error = coefficient_error(
                    prob, path.coefficients(f, lam), gamma
                )
                if error < best[1]:
                    best = (float(lam), error)
            outcome[name] = best
        logger.debug(f'finished trial {trial} at n={n}')
        return outcome

    keys = [(n, t) for n in grid for t in range(trials)]
    logger.info(
        f'sweep {len(filters)} filter(s) over {len(keys)} datasets '
        f'(gamma={gamma:g})'
    )
    with ThreadPoolExecutor(max_workers=_default_workers(workers)) as pool:
        results = dict(zip(keys, pool.map(run_trial, keys)))

    reports = {}
    for name, (f, _) in filters.items():
        lambdas = np.empty((len(grid), trials))
        errors = np.empty((len(grid), trials))
        for (i, n) in enumerate(grid):
            for t in range(trials):
                lambdas[i, t], errors[i, t] = results[(n, t)][name]
        slope, stderr, intercept = fit_slope(grid, errors.mean(axis=1))
        reports[name] = RateReport(
            filter=name,
            gamma=float(gamma),
            n_grid=grid,
            lambdas=lambdas,
            trial_errors=errors,
            fitted_slope=slope,
            slope_stderr=stderr,
            intercept=intercept,
            theoretical_exponent=theoretical_exponent(
                f, prob.beta, prob.p, gamma
            )
        )
        logger.info(f'filter "{name}": fitted slope {slope:.4f}')
    return reports


def rate_sweep(
    prob: MercerProblem,
    f: FilterSpec,
    schedule: LambdaSchedule,
    n_grid: Sequence[int] = DEFAULT_N_GRID,
    trials: int = 20,
    gamma: float = 0.0,
    seed: int = 0,
    workers: Optional[int] = None
) -> RateReport:
    """Measures the learning curve of one filter (see ``rate_sweeps()``)."""
    reports = rate_sweeps(
        prob, {f.name: (f, schedule)}, n_grid, trials, gamma, seed, workers
    )
    return reports[f.name]


@dataclass(frozen=True)
class SaturationResult:

    """Learning curves of ridge regression and two filters of arbitrary
    qualification under oracle regularization."""

    ridge: RateReport
    pcr: RateReport
    landweber: RateReport

    @property
    def separation(self) -> float:
        """float: ``|slope(pcr)| - |slope(ridge)|``"""
        return abs(self.pcr.fitted_slope) - abs(self.ridge.fitted_slope)

    @property
    def theoretical_separation(self) -> float:
        """float: difference of the predicted exponents"""
        return (
            self.pcr.theoretical_exponent -
            self.ridge.theoretical_exponent
        )

    @property
    def reports(self) -> Tuple[RateReport, RateReport, RateReport]:
        return (self.ridge, self.pcr, self.landweber)


def saturation_experiment(
    p: float,
    beta: float,
    B: float,
    n_grid: Sequence[int] = DEFAULT_N_GRID,
    trials: int = 50,
    seed: int = 0,
    M: int = 512,
    D: int = 1,
    noise: Optional[NoiseLaw] = None,
    workers: Optional[int] = None
) -> SaturationResult:
    """Compares ridge regression with truncation and Landweber iteration on
    a target smoother than ridge regression can exploit.

    Every filter is tuned by the default oracle grid on the same datasets.

    Parameters
    ----------
    p: float
        eigenvalue decay
    beta: float
        smoothness, at least two
    B: float
        norm bound
    n_grid: Sequence[int], optional
        sample sizes
    trials: int, optional
        trials per sample size
    seed: int, optional
        seed of problem and datasets
    M: int, optional
        truncation order
    D: int, optional
        output dimension
    noise: specreg.synthetic.NoiseLaw, optional
        output noise
    workers: int, optional
        size of the thread pool

    Returns
    -------
    specreg.analysis.SaturationResult
        learning curves

    Raises
    ------
    specreg.error.BadParamsError
        when `beta` is below two

    """
    if not beta >= 2:
        raise BadParamsError(
            'Saturation experiment requires "beta" of at least 2.'
        )
    prob = make_problem(p, beta, B, M=M, D=D, noise=noise, seed=seed)
    oracle = LambdaSchedule.oracle_grid()
    filters = {
        'ridge': (FilterSpec.tikhonov(), oracle),
        'pcr': (FilterSpec.truncation(), oracle),
        'landweber': (
            FilterSpec.landweber(tau=1.0 / prob.kernel.kappa2),
            oracle
        ),
    }
    reports = rate_sweeps(
        prob, filters, n_grid, trials, 0.0, seed, workers
    )
    result = SaturationResult(
        reports['ridge'], reports['pcr'], reports['landweber']
    )
    logger.info(
        f'saturation separation {result.separation:.4f} '
        f'(predicted {result.theoretical_separation:.4f})'
    )
    return result


@dataclass(frozen=True)
class BiasVariance:

    """Decomposition of the mean squared ``L2`` error over trials.

    Attributes
    ----------
    lam: float
        regularization parameter
    bias_sq: float
        mean error of fits on noiseless outputs
    variance: float
        mean squared distance between noisy and noiseless fits
    total: float
        mean error of fits on noisy outputs

    """

    lam: float
    bias_sq: float
    variance: float
    total: float
    trials: int = field(default=1)

    @property
    def relative_gap(self) -> float:
        """float: ``|total - bias_sq - variance| / total``"""
        if self.total == 0:
            return 0.0
        return abs(self.total - self.bias_sq - self.variance) / self.total


def bias_variance_diagnostic(
    prob: MercerProblem,
    f: FilterSpec,
    lam: Union[float, LambdaSchedule],
    n: int,
    trials: int = 50,
    seed: int = 0,
    workers: Optional[int] = None
) -> BiasVariance:
    """Splits the error of an estimator into bias and variance.

    Each trial fits on noisy outputs and on noiseless outputs at the same
    covariates. A schedule resolves ``lam`` at `n`; an oracle grid picks the
    candidate with minimal mean total error.

    Parameters
    ----------
    prob: specreg.synthetic.MercerProblem
        problem
    f: specreg.spectral.FilterSpec
        filter
    lam: Union[float, specreg.analysis.LambdaSchedule]
        regularization parameter or schedule
    n: int
        sample size
    trials: int, optional
        number of trials
    seed: int, optional
        seed of the dataset streams
    workers: int, optional
        size of the thread pool

    Returns
    -------
    specreg.analysis.BiasVariance
        decomposition

    """
    if trials < 1:
        raise ValueError('Argument "trials" must be positive.')
    kern = prob.kernel
    if isinstance(lam, LambdaSchedule):
        candidates = lam.candidates(n, kern.kappa2)
    else:
        candidates = np.array([float(lam)])

    def run_trial(trial: int) -> np.ndarray:
        data = sample(prob, n, make_rng(seed, n, trial))
        path = decompose(data.xs, kern).mercer_path(data.ys)
        noiseless = path.project(prob.target(data.xs))
        components = np.empty((len(candidates), 3))
        for i, value in enumerate(candidates):
            noisy_fit = path.coefficients(f, value)
            clean_fit = path.coefficients(f, value, projected=noiseless)
            components[i] = (
                coefficient_error(prob, clean_fit, 0.0),
                float(np.sum((noisy_fit - clean_fit) ** 2)),
                coefficient_error(prob, noisy_fit, 0.0),
            )
        return components

    with ThreadPoolExecutor(max_workers=_default_workers(workers)) as pool:
        outcome = np.stack(list(pool.map(run_trial, range(trials))))
    means = outcome.mean(axis=0)
    best = int(np.argmin(means[:, 2]))
    result = BiasVariance(
        lam=float(candidates[best]),
        bias_sq=float(means[best, 0]),
        variance=float(means[best, 1]),
        total=float(means[best, 2]),
        trials=trials
    )
    logger.info(
        f'bias-variance at n={n}, lam={result.lam:g}: '
        f'bias_sq={result.bias_sq:.4g}, variance={result.variance:.4g}, '
        f'total={result.total:.4g}'
    )
    return result


def approximation_error(
    prob: MercerProblem,
    f: FilterSpec,
    lam: float,
    gamma: float = 0.0
) -> float:
    """Squared ``gamma``-norm distance between the population solution
    ``sum mu_i g_lam(mu_i) a_ij e_i d_j`` and the target."""
    if gamma < 0:
        raise ValueError('Argument "gamma" must be non-negative.')
    mu = prob.eigenvalues
    residual = np.asarray(f.residual(lam, mu))
    weights = residual ** 2 * mu ** (-gamma)
    return float(np.sum(weights[:, None] * prob.coefficients ** 2))


def approximation_bound(
    prob: MercerProblem,
    f: FilterSpec,
    lam: float,
    gamma: float = 0.0
) -> float:
    """Upper bound ``omega^2 |F*|^2_{beta_rho} lam^(beta_rho - gamma)`` on
    ``approximation_error()`` with ``beta_rho = min(beta, 2 rho)``.

    Valid for ``0 <= gamma <= beta_rho`` and Mercer eigenvalues in
    ``(0, 1]``.
    """
    beta_rho = min(prob.beta, 2.0 * f.qualification)
    if not (0 <= gamma <= beta_rho):
        raise ValueError(
            f'Argument "gamma" must lie in [0, {beta_rho:g}].'
        )
    order = (beta_rho - gamma) / 2.0
    omega = f.omega(order) if order > 0 else 1.0
    return (
        omega ** 2 *
        interp_norm(prob, beta_rho) ** 2 *
        lam ** (beta_rho - gamma)
    )
