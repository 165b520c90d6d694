"""Logging configuration of the command line program"""
import sys
import logging

#: levels selected by repeating ``-v`` (further repetitions stay at DEBUG)
VERBOSITY_LEVELS = (logging.ERROR, logging.WARNING, logging.INFO, logging.DEBUG)

_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
_FORMAT = '%(asctime)s | %(levelname)-8s | %(name)-24s | %(message)s'
_DETAILED_FORMAT = (
    '%(asctime)s | %(levelname)-8s | %(name)-24s | %(threadName)-12s | '
    '%(lineno)-4s | %(message)s'
)


def _map_logging_verbosity(verbosity: int) -> int:
    """Maps the number of ``-v`` flags to a logging level.

    Parameters
    ----------
    verbosity: int
        logging verbosity (e.g. ``2``)

    Returns
    -------
    int
        logging level (e.g. ``logging.INFO``)

    """
    if verbosity < 0:
        raise ValueError('Logging verbosity must be non-negative.')
    return VERBOSITY_LEVELS[min(verbosity, len(VERBOSITY_LEVELS) - 1)]


def configure_logging(verbosity: int) -> logging.Logger:
    """Directs messages of the ``specreg`` package to standard error, which
    keeps standard output free for the summary table.

    Verbosity ``0`` only reports errors, ``1`` adds warnings (e.g. missed
    acceptance thresholds), ``2`` adds progress of experiments and ``3``
    adds per-trial debug messages. From ``4`` on, records carry thread names
    and line numbers and failures are logged with their traceback.

    Calling the function again replaces the handler installed before.

    Parameters
    ----------
    verbosity: int
        logging verbosity

    Returns
    -------
    logging.Logger
        package root logger

    """
    fmt = _DETAILED_FORMAT if verbosity > 3 else _FORMAT
    handler = logging.StreamHandler(stream=sys.stderr)
    handler.name = 'stderr'
    handler.setFormatter(logging.Formatter(fmt=fmt, datefmt=_DATE_FORMAT))

    root_logger = logging.getLogger()
    for existing in list(root_logger.handlers):
        if existing.name == handler.name:
            root_logger.removeHandler(existing)
    root_logger.addHandler(handler)
    root_logger.setLevel(logging.ERROR)

    level = _map_logging_verbosity(verbosity)
    pkg_logger = logging.getLogger(__name__.split('.')[0])
    pkg_logger.setLevel(level)

    # numpy and scipy warnings are reported like package messages
    logging.captureWarnings(True)
    logging.getLogger('py.warnings').setLevel(level)

    return pkg_logger
