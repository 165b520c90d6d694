"""Command Line Interface (CLI)"""
import os
import sys
import json
import logging
import argparse
import traceback
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from specreg.analysis import (
    RateReport,
    bias_variance_diagnostic,
    effective_dimension_sandwich,
    rate_sweeps,
    saturation_experiment,
)
from specreg.cme import cme_demo
from specreg.config import (
    ExperimentConfig,
    build_filter,
    build_problem,
    build_schedule,
    load_config,
)
from specreg.error import (
    NUMERICAL_ERRORS,
    AcceptanceError,
    BadParamsError,
    ConfigError,
)
from specreg.log import configure_logging
from specreg.results import (
    RESULT_COLUMNS,
    SUMMARY_COLUMNS,
    emit_plot_data,
    format_table,
    write_csv,
)
from specreg.spectral import FilterKind, FilterSpec, verify_filter_axioms
from specreg.synthetic import NoiseLaw

logger = logging.getLogger(__name__)

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3
EXIT_ACCEPTANCE_FAILURE = 4


def _get_parser():
    """Builds the object for parsing command line arguments.

    Returns
    -------
    argparse.ArgumentParser

    """
    parser = argparse.ArgumentParser(
        description='Experiments with vector-valued spectral regularization.',
        prog='specreg'
    )
    parser.add_argument(
        '-v', '--verbosity', dest='logging_verbosity', default=0,
        action='count',
        help=(
            'logging verbosity that maps to a logging level '
            '(default: error, -v: warning, -vv: info, -vvv: debug, '
            '-vvvv: debug + traceback); '
            'all log messages are written to standard error'
        )
    )

    subparsers = parser.add_subparsers(dest='method', help='commands')
    subparsers.required = True

    run_parser = subparsers.add_parser(
        'run',
        description='Run the experiment described by a configuration file.'
    )
    run_parser.add_argument(
        metavar='PATH', dest='config_path',
        help='path to a JSON experiment configuration'
    )
    run_parser.add_argument(
        '--check', action='store_true',
        help='fail with exit code 4 when acceptance thresholds are missed'
    )
    run_parser.add_argument(
        '--output-dir', metavar='PATH', dest='output_dir', default=None,
        help='directory for result files (overrides the configuration)'
    )
    run_parser.add_argument(
        '--threads', metavar='NUM', dest='threads', type=int, default=None,
        help='number of worker threads (default: available CPUs)'
    )
    run_parser.set_defaults(func=_run)

    filter_check_parser = subparsers.add_parser(
        'filter-check',
        description='Verify the filter axioms of a regularization filter.'
    )
    filter_check_parser.add_argument(
        metavar='FILTER', dest='filter_name',
        help='name of the filter (e.g. "tikhonov", "landweber", "pcr")'
    )
    filter_check_parser.add_argument(
        '--kappa2', metavar='NUM', dest='kappa2', type=float, default=1.0,
        help='upper end of the spectrum'
    )
    filter_check_parser.add_argument(
        '--tau', metavar='NUM', dest='tau', type=float, default=None,
        help='Landweber step size (default: 1 / kappa2)'
    )
    filter_check_parser.add_argument(
        '--num-lambdas', metavar='NUM', dest='num_lambdas', type=int,
        default=5,
        help=(
            'number of geometric regularization parameters in '
            '[1e-4 kappa2, kappa2] (default: 5)'
        )
    )
    filter_check_parser.set_defaults(func=_filter_check)

    return parser


@dataclass
class _Outcome:

    """Tables produced by one experiment and its acceptance verdict."""

    results_header: Sequence[str]
    results: List[Sequence[Any]]
    summary_header: Sequence[str]
    summary: List[Sequence[Any]]
    reports: List[RateReport] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)


def _rate_outcome(reports: Sequence[RateReport]) -> _Outcome:
    results: List[Sequence[Any]] = []
    for report in reports:
        results.extend(report.rows())
    return _Outcome(
        RESULT_COLUMNS, results,
        SUMMARY_COLUMNS, [report.summary_row() for report in reports],
        reports=list(reports)
    )


def _run_rates(config: ExperimentConfig, workers: Optional[int]) -> _Outcome:
    params = config.parameters
    prob = build_problem(params['problem'], config.seed)
    filters = {
        entry['filter']: (
            build_filter(entry), build_schedule(entry['schedule'])
        )
        for entry in params['filters']
    }
    reports = rate_sweeps(
        prob, filters, params['n_grid'], params['trials'], params['gamma'],
        config.seed, workers
    )
    outcome = _rate_outcome(list(reports.values()))
    tolerance = config.check['slope_tolerance']
    for report in reports.values():
        expected = config.check['expected_slope']
        if expected is None:
            expected = -report.theoretical_exponent
        if not abs(report.fitted_slope - expected) <= tolerance:
            outcome.failures.append(
                f'slope of "{report.filter}" is {report.fitted_slope:.4f}, '
                f'expected {expected:.4f} +/- {tolerance:g}'
            )
    return outcome


def _run_saturation(
    config: ExperimentConfig,
    workers: Optional[int]
) -> _Outcome:
    params = config.parameters
    problem = params['problem']
    result = saturation_experiment(
        p=problem['p'],
        beta=problem['beta'],
        B=problem['B'],
        n_grid=params['n_grid'],
        trials=params['trials'],
        seed=config.seed,
        M=problem['M'],
        D=problem['D'],
        noise=NoiseLaw.from_dict(problem['noise']),
        workers=workers
    )
    outcome = _rate_outcome(result.reports)
    outcome.summary.append((
        'separation', 0.0, result.separation, float('nan'),
        result.theoretical_separation
    ))
    check = config.check
    ridge_slope = abs(result.ridge.fitted_slope)
    pcr_slope = abs(result.pcr.fitted_slope)
    if not result.separation >= check['min_separation']:
        outcome.failures.append(
            f'separation {result.separation:.4f} is below '
            f'{check["min_separation"]:g}'
        )
    if not ridge_slope <= check['max_ridge_slope']:
        outcome.failures.append(
            f'ridge slope {ridge_slope:.4f} exceeds '
            f'{check["max_ridge_slope"]:g}'
        )
    if not pcr_slope >= check['min_pcr_slope']:
        outcome.failures.append(
            f'pcr slope {pcr_slope:.4f} is below {check["min_pcr_slope"]:g}'
        )
    return outcome


def _run_effdim(config: ExperimentConfig, workers: Optional[int]) -> _Outcome:
    params = config.parameters
    results: List[Sequence[Any]] = []
    summary: List[Sequence[Any]] = []
    outcome = _Outcome(
        ('p', 'l', 'lambda', 'n_eff', 'lower', 'upper', 'passed'), results,
        ('p', 'l', 'points', 'passed'), summary
    )
    for p in params['p_values']:
        for l in params['l_values']:
            rows = effective_dimension_sandwich(
                p, l, params['M'], params['num']
            )
            passed = all(row.passed for row in rows)
            results.extend(
                (row.p, row.l, row.lam, row.value, row.lower, row.upper,
                 row.passed)
                for row in rows
            )
            summary.append((float(p), float(l), len(rows), passed))
            if not passed:
                outcome.failures.append(
                    f'sandwich bounds violated for p={p:g}, l={l:g}'
                )
    return outcome


def _axiom_filter(
    name: str,
    kappa2: float,
    tau: Optional[float]
) -> FilterSpec:
    f = FilterSpec.from_name(name)
    if f.kind == FilterKind.LANDWEBER:
        return FilterSpec.landweber(1.0 / kappa2 if tau is None else tau)
    return f


def _run_filter_check(
    config: ExperimentConfig,
    workers: Optional[int]
) -> _Outcome:
    params = config.parameters
    outcome = _Outcome(
        ('filter', 'axiom', 'qualification', 'supremum', 'bound'), [],
        ('filter', 'passed'), []
    )
    for name in params['filters']:
        f = _axiom_filter(name, params['kappa2'], params['tau'])
        report = verify_filter_axioms(
            f, params['lam_grid'], params['kappa2'],
            params['alpha_grid_resolution']
        )
        outcome.results.extend((str(f), ) + row for row in report.rows())
        outcome.summary.append((str(f), report.passed))
        if not report.passed:
            outcome.failures.append(f'filter "{f}" violates its axioms')
    return outcome


def _run_cme_demo(
    config: ExperimentConfig,
    workers: Optional[int]
) -> _Outcome:
    params = config.parameters
    filters = {name: FilterSpec.from_name(name) for name in params['filters']}
    result = cme_demo(
        n_values=params['n_values'],
        sigma=params['sigma'],
        s=params['s'],
        bandwidth=params['bandwidth'],
        z0=params['z0'],
        probes=params['probes'],
        filters=filters,
        lam_grid=params['lam_grid'],
        seed=config.seed
    )
    max_errors = result.max_errors()
    summary = [
        (name, n, result.lambdas[(name, n)], max_errors[(name, n)])
        for name in filters for n in params['n_values']
    ]
    outcome = _Outcome(
        ('filter', 'n', 'probe_x', 'truth', 'estimate', 'abs_error'),
        list(result.rows),
        ('filter', 'n', 'lambda', 'max_abs_error'), summary
    )
    checked = 'tikhonov' if 'tikhonov' in filters else next(iter(filters))
    curve = [max_errors[(checked, n)] for n in params['n_values']]
    limit = config.check['max_abs_error']
    if not curve[-1] <= limit:
        outcome.failures.append(
            f'maximal error {curve[-1]:.4f} of "{checked}" exceeds {limit:g}'
        )
    if config.check['require_decreasing']:
        if any(b >= a for a, b in zip(curve, curve[1:])):
            outcome.failures.append(
                f'errors of "{checked}" do not decrease in n: {curve}'
            )
    return outcome


def _run_bias_variance(
    config: ExperimentConfig,
    workers: Optional[int]
) -> _Outcome:
    params = config.parameters
    prob = build_problem(params['problem'], config.seed)
    entry = params['filter']
    f = build_filter(entry)
    if params['lam'] is not None:
        lam = params['lam']
    else:
        lam = build_schedule(entry['schedule'])
    result = bias_variance_diagnostic(
        prob, f, lam, params['n'], params['trials'], config.seed, workers
    )
    row = (
        str(f), params['n'], result.lam, result.bias_sq, result.variance,
        result.total, result.relative_gap
    )
    header = (
        'filter', 'n', 'lambda', 'bias_sq', 'variance', 'total',
        'relative_gap'
    )
    outcome = _Outcome(header, [row], header, [row])
    limit = config.check['max_relative_gap']
    if not result.relative_gap <= limit:
        outcome.failures.append(
            f'relative gap {result.relative_gap:.4f} exceeds {limit:g}'
        )
    return outcome


_COMMANDS: Dict[
    str, Callable[[ExperimentConfig, Optional[int]], _Outcome]
] = {
    'rates': _run_rates,
    'saturation': _run_saturation,
    'effdim': _run_effdim,
    'filter-check': _run_filter_check,
    'cme-demo': _run_cme_demo,
    'bias-variance': _run_bias_variance,
}


def _save_outcome(
    config: ExperimentConfig,
    outcome: _Outcome,
    directory: str
) -> None:
    os.makedirs(directory, exist_ok=True)
    write_csv(
        os.path.join(directory, 'results.csv'),
        outcome.results_header, outcome.results
    )
    write_csv(
        os.path.join(directory, 'summary.csv'),
        outcome.summary_header, outcome.summary
    )
    echo_path = os.path.join(directory, 'config_echo.json')
    logger.info(f'save resolved configuration to file: {echo_path}')
    with open(echo_path, 'w', newline='\n', encoding='utf8') as fp:
        json.dump(config.to_dict(), fp, indent=4, sort_keys=True)
        fp.write('\n')
    for report in outcome.reports:
        emit_plot_data(report, directory)


def run(
    config_path: str,
    check: bool = False,
    output_dir: Optional[str] = None,
    threads: Optional[int] = None
) -> int:
    """Runs the experiment of a configuration file.

    Writes ``results.csv``, ``summary.csv`` and ``config_echo.json`` (plus
    plot data of learning curves) and prints the summary to standard
    output.

    Parameters
    ----------
    config_path: str
        path to the JSON configuration
    check: bool, optional
        whether missed acceptance thresholds fail the run
    output_dir: str, optional
        directory overriding the configured one
    threads: int, optional
        number of worker threads

    Returns
    -------
    int
        exit code: ``0`` on success, ``2`` on configuration errors, ``3`` on
        numerical failures, ``4`` on missed thresholds with `check`

    """
    try:
        config = load_config(config_path)
        if threads is not None and threads < 1:
            raise ConfigError('Option "--threads" must be positive.')
        logger.info(f'run command "{config.command}" (seed {config.seed})')
        outcome = _COMMANDS[config.command](config, threads)
        directory = output_dir if output_dir is not None else config.output_dir
        _save_outcome(config, outcome, directory)
        print(format_table(outcome.summary_header, outcome.summary))
        if outcome.failures:
            for failure in outcome.failures:
                logger.warning(f'acceptance: {failure}')
            if check:
                raise AcceptanceError('; '.join(outcome.failures))
    except (ConfigError, BadParamsError) as err:
        logger.error(str(err))
        return EXIT_CONFIG_ERROR
    except NUMERICAL_ERRORS as err:
        logger.error(f'numerical failure: {err}')
        return EXIT_NUMERICAL_ERROR
    except AcceptanceError as err:
        logger.error(f'acceptance check failed: {err}')
        return EXIT_ACCEPTANCE_FAILURE
    return EXIT_SUCCESS


def _run(args) -> int:
    """Runs an experiment configuration."""
    return run(args.config_path, args.check, args.output_dir, args.threads)


def _filter_check(args) -> int:
    """Verifies the axioms of a filter and writes the report to standard
    output.
    """
    try:
        if args.num_lambdas < 1:
            raise ValueError('Argument "num_lambdas" must be positive.')
        f = _axiom_filter(args.filter_name, args.kappa2, args.tau)
        lam_grid = np.geomspace(
            1e-4 * args.kappa2, args.kappa2, args.num_lambdas
        )
        report = verify_filter_axioms(f, lam_grid, args.kappa2)
    except ValueError as err:
        logger.error(str(err))
        return EXIT_CONFIG_ERROR
    rows = [(str(f), ) + row for row in report.rows()]
    print(format_table(
        ('filter', 'axiom', 'qualification', 'supremum', 'bound'), rows
    ))
    print(f'passed: {str(report.passed).lower()}')
    if report.passed:
        return EXIT_SUCCESS
    return EXIT_ACCEPTANCE_FAILURE


def _main():
    parser = _get_parser()
    args = parser.parse_args()
    main(args)


def main(args):
    """Main entry point for the ``specreg`` command line program."""

    configure_logging(args.logging_verbosity)

    try:
        code = args.func(args)
    except Exception as err:
        logger.error(str(err))
        if args.logging_verbosity > 3:
            tb = traceback.format_exc()
            logger.error(tb)
        sys.exit(EXIT_FAILURE)
    sys.exit(code)
