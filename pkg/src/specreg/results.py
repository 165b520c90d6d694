"""Writing and reading of result tables and plot data"""
import csv
import datetime
import logging
import math
import os
from typing import Any, List, Sequence, Tuple

import numpy as np

from specreg.analysis import RateReport


logger = logging.getLogger(__name__)

#: columns of per-trial rate results
RESULT_COLUMNS = ('filter', 'gamma', 'n', 'trial', 'lambda', 'sq_error')

#: columns of rate summaries
SUMMARY_COLUMNS = ('filter', 'gamma', 'slope', 'stderr', 'theory_exponent')

_PLOT_SCRIPT = '''\
"""Plots the learning curve stored in {data_file}."""
import sys

import numpy as np


def main():
    import matplotlib.pyplot as plt
    data = np.loadtxt({data_file!r}, comments='#')
    plt.plot(data[:, 0], data[:, 1], 'o-', label={label!r})
    plt.xlabel('log10 n')
    plt.ylabel('log10 mean squared error')
    plt.legend()
    plt.savefig(sys.argv[1] if len(sys.argv) > 1 else {image_file!r})


if __name__ == '__main__':
    main()
'''


def _format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def write_csv(
    path: str,
    header: Sequence[str],
    rows: Sequence[Sequence[Any]]
) -> None:
    """Writes a table with a leading timestamp comment line.

    Floats are written with 17 significant digits and lines end with LF.

    Parameters
    ----------
    path: str
        output file
    header: Sequence[str]
        column names
    rows: Sequence[Sequence[Any]]
        table rows

    Raises
    ------
    OSError
        when the file cannot be written (the message names the path)

    """
    timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    logger.info(f'write {len(rows)} rows to file: {path}')
    try:
        with open(path, 'w', newline='', encoding='utf8') as fp:
            fp.write(f'# generated {timestamp}\n')
            writer = csv.writer(fp, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format_value(value) for value in row])
    except OSError as error:
        raise OSError(f'Could not write file "{path}": {error}') from error


def read_csv(path: str) -> Tuple[List[str], List[List[str]]]:
    """Reads a table written by ``write_csv()``.

    Returns
    -------
    Tuple[List[str], List[List[str]]]
        header and rows as strings

    """
    try:
        with open(path, newline='', encoding='utf8') as fp:
            lines = [line for line in fp if not line.startswith('#')]
    except OSError as error:
        raise OSError(f'Could not read file "{path}": {error}') from error
    records = list(csv.reader(lines))
    if not records:
        raise ValueError(f'File "{path}" holds no table.')
    return records[0], records[1:]


def emit_plot_data(report: RateReport, directory: str) -> Tuple[str, str]:
    """Writes the learning curve of a report as ``(log10 n, log10 mean
    error)`` pairs plus a plotting script referencing them.

    Parameters
    ----------
    report: specreg.analysis.RateReport
        non-empty report
    directory: str
        output directory

    Returns
    -------
    Tuple[str, str]
        paths of the data file and of the script

    """
    if len(report.n_grid) == 0:
        raise ValueError('Cannot emit plot data of an empty report.')
    data_file = f'rate_{report.filter}.dat'
    data_path = os.path.join(directory, data_file)
    script_path = os.path.join(directory, f'plot_rate_{report.filter}.py')
    logger.info(f'write plot data to file: {data_path}')
    try:
        with open(data_path, 'w', newline='\n', encoding='utf8') as fp:
            fp.write(f'# filter={report.filter} gamma={report.gamma!r}\n')
            fp.write('# log10_n log10_mean_sq_error\n')
            for n, error in zip(report.n_grid, report.mean_sq_error):
                fp.write(
                    f'{math.log10(n):.17g} {math.log10(error):.17g}\n'
                )
        with open(script_path, 'w', newline='\n', encoding='utf8') as fp:
            fp.write(_PLOT_SCRIPT.format(
                data_file=data_file,
                label=report.filter,
                image_file=f'rate_{report.filter}.png'
            ))
    except OSError as error:
        raise OSError(
            f'Could not write plot data to "{directory}": {error}'
        ) from error
    return data_path, script_path


def load_plot_data(path: str) -> np.ndarray:
    """Reads a file written by ``emit_plot_data()`` (``m x 2``)."""
    try:
        with open(path, encoding='utf8') as fp:
            lines = [
                line.split() for line in fp
                if line.strip() and not line.startswith('#')
            ]
    except OSError as error:
        raise OSError(f'Could not read file "{path}": {error}') from error
    return np.array([[float(a), float(b)] for a, b in lines]).reshape(-1, 2)


def format_table(
    header: Sequence[str],
    rows: Sequence[Sequence[Any]]
) -> str:
    """Renders rows as an aligned plain-text table."""
    cells = [list(header)]
    for row in rows:
        cells.append([
            format(v, '.6g') if isinstance(v, (float, np.floating))
            else str(v)
            for v in row
        ])
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = [
        '  '.join(c.rjust(w) for c, w in zip(r, widths)) for r in cells
    ]
    return '\n'.join(lines)
