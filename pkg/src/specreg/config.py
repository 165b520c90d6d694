"""Experiment configuration files"""
import copy
import json
import logging
import math
import os
from dataclasses import dataclass
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

from specreg.analysis import DEFAULT_N_GRID, LambdaSchedule, ScheduleKind
from specreg.cme import DEFAULT_N_VALUES
from specreg.error import ConfigError
from specreg.kernels import DEFAULT_TRUNCATION_ORDER, Kernel
from specreg.spectral import FilterKind, FilterSpec
from specreg.synthetic import MercerProblem, NoiseKind, NoiseLaw, make_problem


logger = logging.getLogger(__name__)

#: environment variable overriding the seed of every configuration
SEED_VARIABLE = 'SPECREG_SEED'

COMMANDS = (
    'rates',
    'saturation',
    'effdim',
    'filter-check',
    'cme-demo',
    'bias-variance',
)

_REQUIRED = object()


@dataclass(frozen=True)
class _Field:

    kinds: Tuple[type, ...]
    default: Any = _REQUIRED
    valid: Optional[Callable[[Any], bool]] = None
    requirement: str = ''
    resolver: Optional[Callable[[Any, str], Any]] = None


def _number(
    default: Any = _REQUIRED,
    valid: Optional[Callable[[Any], bool]] = None,
    requirement: str = 'a number'
) -> _Field:
    return _Field((int, float), default, valid, requirement)


def _integer(
    default: Any = _REQUIRED,
    valid: Optional[Callable[[Any], bool]] = None,
    requirement: str = 'an integer'
) -> _Field:
    return _Field((int, ), default, valid, requirement)


def _positive(value: Any) -> bool:
    return value > 0 and math.isfinite(value)


def _is_kind(value: Any, kinds: Tuple[type, ...]) -> bool:
    if isinstance(value, bool):
        return bool in kinds
    return isinstance(value, kinds)


def _resolve(
    value: Any,
    schema: Mapping[str, _Field],
    path: str
) -> Dict[str, Any]:
    """Validates an object against a schema and fills in defaults."""
    where = path or 'configuration'
    if not isinstance(value, dict):
        raise ConfigError(f'Field "{where}" must be an object.')
    for key in value:
        if key not in schema:
            name = f'{path}.{key}' if path else key
            raise ConfigError(f'Unknown field "{name}".')
    resolved = {}
    for key, field in schema.items():
        name = f'{path}.{key}' if path else key
        if key not in value or value[key] is None:
            if field.default is _REQUIRED:
                raise ConfigError(f'Missing required field "{name}".')
            item = copy.deepcopy(field.default)
            if field.resolver is not None and item is not None:
                item = field.resolver(item, name)
            resolved[key] = item
            continue
        item = value[key]
        if field.resolver is not None:
            resolved[key] = field.resolver(item, name)
            continue
        if not _is_kind(item, field.kinds):
            raise ConfigError(
                f'Field "{name}" must be {field.requirement}.'
            )
        if field.valid is not None and not field.valid(item):
            raise ConfigError(
                f'Field "{name}" must be {field.requirement}.'
            )
        resolved[key] = item
    return resolved


def _list_of(
    item_field: _Field,
    min_length: int = 1,
    ascending: bool = False
) -> Callable[[Any, str], List[Any]]:
    def resolve(value: Any, path: str) -> List[Any]:
        if not isinstance(value, list) or len(value) < min_length:
            raise ConfigError(
                f'Field "{path}" must be a list of at least {min_length} '
                f'item(s).'
            )
        items = []
        for i, item in enumerate(value):
            name = f'{path}[{i}]'
            if item_field.resolver is not None:
                items.append(item_field.resolver(item, name))
                continue
            if not _is_kind(item, item_field.kinds) or (
                item_field.valid is not None and not item_field.valid(item)
            ):
                raise ConfigError(
                    f'Field "{name}" must be {item_field.requirement}.'
                )
            items.append(item)
        if ascending and any(b <= a for a, b in zip(items, items[1:])):
            raise ConfigError(f'Field "{path}" must be strictly ascending.')
        return items
    return resolve


def _list_field(
    item_field: _Field,
    default: Any = _REQUIRED,
    min_length: int = 1,
    ascending: bool = False
) -> _Field:
    return _Field(
        (list, ), default,
        resolver=_list_of(item_field, min_length, ascending)
    )


def _object_field(
    schema: Mapping[str, _Field],
    default: Any = _REQUIRED
) -> _Field:
    return _Field(
        (dict, ), default,
        resolver=lambda value, path: _resolve(value, schema, path)
    )


def _resolve_filter_name(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f'Field "{path}" must be a filter name.')
    try:
        return FilterSpec.from_name(value).name
    except ValueError as error:
        raise ConfigError(f'Field "{path}": {error}') from error


def _resolve_schedule(value: Any, path: str) -> Dict[str, Any]:
    schema = {
        'kind': _Field(
            (str, ),
            valid=lambda v: v in {k.value for k in ScheduleKind},
            requirement='one of "power-law", "log-power", "oracle-grid"'
        ),
        'exponent': _number(None),
        'scale': _number(1.0, _positive, 'a positive number'),
        'alpha': _number(None),
        'theta': _number(None),
        'grid': _list_field(_number(valid=_positive), None),
    }
    resolved = _resolve(value, schema, path)
    if resolved['kind'] == ScheduleKind.LOG_POWER.value:
        if resolved['theta'] is None:
            resolved['theta'] = 1.0
    try:
        schedule = build_schedule(resolved)
    except ValueError as error:
        raise ConfigError(f'Field "{path}": {error}') from error
    return schedule.to_dict()


_NOISE_SCHEMA = {
    'kind': _Field(
        (str, ), NoiseKind.BOUNDED_UNIFORM.value,
        valid=lambda v: v in {k.value for k in NoiseKind},
        requirement='one of "bounded-uniform", "gaussian"'
    ),
    'param': _number(0.5, lambda v: 0 <= v < math.inf, 'non-negative'),
}

_PROBLEM_SCHEMA = {
    'p': _number(valid=lambda v: 0 < v < 1, requirement='in (0, 1)'),
    'beta': _number(valid=_positive, requirement='a positive number'),
    'B': _number(1.0, _positive, 'a positive number'),
    'M': _integer(DEFAULT_TRUNCATION_ORDER, lambda v: v >= 1, 'positive'),
    'D': _integer(1, lambda v: v >= 1, 'a positive integer'),
    'noise': _object_field(_NOISE_SCHEMA, {}),
}

_FILTER_ENTRY_SCHEMA = {
    'filter': _Field((str, ), resolver=_resolve_filter_name),
    'tau': _number(None, _positive, 'a positive number'),
    'schedule': _Field((dict, ), None, resolver=_resolve_schedule),
}

_N_GRID = _list_field(
    _integer(valid=lambda v: v >= 2, requirement='an integer of at least 2'),
    list(DEFAULT_N_GRID), min_length=4, ascending=True
)

_TRIALS = _integer(20, lambda v: v >= 1, 'a positive integer')

_GAMMA = _number(0.0, lambda v: 0 <= v < 1, 'in [0, 1)')

_FILTER_NAMES = _list_field(
    _Field((str, ), resolver=_resolve_filter_name),
    ['tikhonov', 'landweber', 'truncation']
)

_COMMAND_SCHEMAS: Dict[str, Dict[str, _Field]] = {
    'rates': {
        'problem': _object_field(_PROBLEM_SCHEMA),
        'filters': _list_field(_object_field(_FILTER_ENTRY_SCHEMA)),
        'schedule': _Field((dict, ), None, resolver=_resolve_schedule),
        'n_grid': _N_GRID,
        'trials': _TRIALS,
        'gamma': _GAMMA,
        'check': _object_field({
            'slope_tolerance': _number(0.15, lambda v: v >= 0),
            'expected_slope': _number(None),
        }, {}),
    },
    'saturation': {
        'problem': _object_field(_PROBLEM_SCHEMA),
        'n_grid': _N_GRID,
        'trials': _integer(50, lambda v: v >= 1, 'a positive integer'),
        'check': _object_field({
            'min_separation': _number(0.03),
            'max_ridge_slope': _number(0.86),
            'min_pcr_slope': _number(0.82),
        }, {}),
    },
    'effdim': {
        'p_values': _list_field(
            _number(valid=lambda v: 0 < v < 1, requirement='in (0, 1)'),
            [0.25, 0.5, 0.75]
        ),
        'l_values': _list_field(
            _number(valid=lambda v: v >= 1, requirement='at least 1'),
            [1, 2]
        ),
        'M': _integer(DEFAULT_TRUNCATION_ORDER, lambda v: v >= 1),
        'num': _integer(20, lambda v: v >= 2, 'an integer of at least 2'),
        'check': _object_field({}, {}),
    },
    'filter-check': {
        'filters': _FILTER_NAMES,
        'kappa2': _number(1.0, _positive, 'a positive number'),
        'tau': _number(None, _positive, 'a positive number'),
        'lam_grid': _list_field(
            _number(valid=_positive, requirement='a positive number'),
            [1e-4, 1e-3, 1e-2, 1e-1, 1.0]
        ),
        'alpha_grid_resolution': _integer(64, lambda v: v >= 1),
        'check': _object_field({}, {}),
    },
    'cme-demo': {
        'n_values': _list_field(
            _integer(valid=lambda v: v >= 1, requirement='positive'),
            list(DEFAULT_N_VALUES), ascending=True
        ),
        'sigma': _number(0.3, _positive, 'a positive number'),
        's': _number(0.5, _positive, 'a positive number'),
        'bandwidth': _number(0.1, _positive, 'a positive number'),
        'z0': _number(0.0),
        'probes': _integer(20, lambda v: v >= 1, 'a positive integer'),
        'filters': _FILTER_NAMES,
        'lam_grid': _list_field(
            _number(valid=_positive, requirement='a positive number'), None
        ),
        'check': _object_field({
            'max_abs_error': _number(0.05, lambda v: v >= 0),
            'require_decreasing': _Field((bool, ), True),
        }, {}),
    },
    'bias-variance': {
        'problem': _object_field(_PROBLEM_SCHEMA),
        'filter': _object_field(_FILTER_ENTRY_SCHEMA),
        'lam': _number(None, _positive, 'a positive number'),
        'n': _integer(512, lambda v: v >= 2, 'an integer of at least 2'),
        'trials': _integer(50, lambda v: v >= 1, 'a positive integer'),
        'check': _object_field({
            'max_relative_gap': _number(0.1, lambda v: v >= 0),
        }, {}),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:

    """Validated experiment configuration with all defaults resolved.

    Attributes
    ----------
    command: str
        experiment to run
    seed: int
        seed of the experiment
    output_dir: str
        directory receiving the result files
    parameters: Dict[str, Any]
        command-specific parameters (without acceptance thresholds)
    check: Dict[str, Any]
        acceptance thresholds used with ``--check``

    """

    command: str
    seed: int
    output_dir: str
    parameters: Dict[str, Any]
    check: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        """Returns the fully resolved configuration, which loads into an
        identical configuration."""
        result = {
            'command': self.command,
            'seed': self.seed,
            'output_dir': self.output_dir,
        }
        result.update(copy.deepcopy(self.parameters))
        result['check'] = copy.deepcopy(self.check)
        return result


def _freeze_landweber_steps(
    parameters: Dict[str, Any],
    entries: Sequence[Dict[str, Any]]
) -> None:
    """Sets missing Landweber step sizes to ``1 / kappa2``."""
    problem = parameters['problem']
    kappa2 = Kernel.truncated_mercer(problem['p'], problem['M']).kappa2
    for entry in entries:
        if entry['filter'] == FilterKind.LANDWEBER.value:
            if entry['tau'] is None:
                entry['tau'] = 1.0 / kappa2
        elif entry['tau'] is not None:
            raise ConfigError(
                f'Field "tau" is only allowed for the Landweber filter, '
                f'not for "{entry["filter"]}".'
            )


def parse_config(
    document: Any,
    environ: Optional[Mapping[str, str]] = None
) -> ExperimentConfig:
    """Validates a decoded configuration document.

    Parameters
    ----------
    document: Any
        decoded JSON
    environ: Mapping[str, str], optional
        environment (defaults to ``os.environ``), consulted for
        ``SPECREG_SEED``

    Returns
    -------
    specreg.config.ExperimentConfig
        configuration

    Raises
    ------
    specreg.error.ConfigError
        when the document does not match the command's schema

    """
    if environ is None:
        environ = os.environ
    if not isinstance(document, dict):
        raise ConfigError('Configuration must be a JSON object.')
    command = document.get('command')
    if command not in COMMANDS:
        raise ConfigError(
            f'Field "command" must be one of {", ".join(COMMANDS)}.'
        )
    schema = dict(_COMMAND_SCHEMAS[command])
    schema['command'] = _Field((str, ))
    schema['seed'] = _integer(
        0, lambda v: 0 <= v < 2 ** 64, 'a non-negative 64-bit integer'
    )
    schema['output_dir'] = _Field((str, ), '.', requirement='a path')
    resolved = _resolve(document, schema, '')

    seed = resolved.pop('seed')
    if environ.get(SEED_VARIABLE):
        try:
            seed = int(environ[SEED_VARIABLE])
        except ValueError:
            raise ConfigError(
                f'Environment variable {SEED_VARIABLE} must be an integer.'
            )
        if not 0 <= seed < 2 ** 64:
            raise ConfigError(
                f'Environment variable {SEED_VARIABLE} must be a '
                'non-negative 64-bit integer.'
            )
        logger.info(f'seed overridden by {SEED_VARIABLE}: {seed}')
    resolved.pop('command')
    output_dir = resolved.pop('output_dir')
    check = resolved.pop('check')

    if command == 'rates':
        names = [entry['filter'] for entry in resolved['filters']]
        if len(set(names)) != len(names):
            raise ConfigError('Field "filters" lists a filter twice.')
        for i, entry in enumerate(resolved['filters']):
            if entry['schedule'] is None:
                if resolved['schedule'] is None:
                    raise ConfigError(
                        f'Missing required field "filters[{i}].schedule" '
                        '(or top-level "schedule").'
                    )
                entry['schedule'] = copy.deepcopy(resolved['schedule'])
        _freeze_landweber_steps(resolved, resolved['filters'])
    elif command == 'bias-variance':
        entry = resolved['filter']
        if entry['schedule'] is None and resolved['lam'] is None:
            raise ConfigError(
                'Either "lam" or "filter.schedule" must be given.'
            )
        if entry['schedule'] is not None and resolved['lam'] is not None:
            raise ConfigError(
                'Fields "lam" and "filter.schedule" are mutually exclusive.'
            )
        _freeze_landweber_steps(resolved, [entry])
    elif command in ('filter-check', 'cme-demo'):
        if len(set(resolved['filters'])) != len(resolved['filters']):
            raise ConfigError('Field "filters" lists a filter twice.')

    return ExperimentConfig(command, seed, output_dir, resolved, check)


def load_config(
    path: str,
    environ: Optional[Mapping[str, str]] = None
) -> ExperimentConfig:
    """Reads and validates a JSON configuration file.

    Parameters
    ----------
    path: str
        path to the file
    environ: Mapping[str, str], optional
        environment (defaults to ``os.environ``)

    Returns
    -------
    specreg.config.ExperimentConfig
        configuration

    Raises
    ------
    specreg.error.ConfigError
        when the file cannot be read, is malformed or fails validation

    """
    logger.info(f'load configuration from file: {path}')
    try:
        with open(path, encoding='utf8') as fp:
            document = json.load(fp)
    except json.JSONDecodeError as error:
        raise ConfigError(
            f'Malformed JSON in "{path}" at line {error.lineno}, column '
            f'{error.colno}: {error.msg}'
        ) from error
    except OSError as error:
        raise ConfigError(f'Could not read "{path}": {error}') from error
    return parse_config(document, environ)


def build_problem(
    problem: Mapping[str, Any],
    seed: int
) -> MercerProblem:
    """Creates the problem of a resolved ``problem`` section."""
    return make_problem(
        p=problem['p'],
        beta=problem['beta'],
        B=problem['B'],
        M=problem['M'],
        D=problem['D'],
        noise=NoiseLaw.from_dict(problem['noise']),
        seed=seed
    )


def build_schedule(schedule: Mapping[str, Any]) -> LambdaSchedule:
    """Creates the schedule of a resolved ``schedule`` section."""
    kind = ScheduleKind(schedule['kind'])
    if kind == ScheduleKind.POWER_LAW:
        return LambdaSchedule.power_law(
            schedule['exponent'], schedule.get('scale', 1.0)
        )
    if kind == ScheduleKind.LOG_POWER:
        return LambdaSchedule.log_power(
            schedule['alpha'],
            schedule.get('theta', 1.0),
            schedule.get('scale', 1.0)
        )
    return LambdaSchedule.oracle_grid(schedule.get('grid'))


def build_filter(entry: Mapping[str, Any]) -> FilterSpec:
    """Creates the filter of a resolved filter entry."""
    return FilterSpec.from_name(entry['filter'], entry.get('tau'))
