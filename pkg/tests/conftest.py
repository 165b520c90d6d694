from pathlib import Path

import numpy as np
import pytest

from specreg.cli import _get_parser
from specreg.synthetic import NoiseLaw, make_problem


def pytest_addoption(parser):
    parser.addoption(
        '--runslow', action='store_true', default=False,
        help='run long-running experiments'
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow option to run')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def parser():
    '''Instance of `argparse.Argparser`.'''
    return _get_parser()


@pytest.fixture
def data_dir():
    '''Directory holding example configurations.'''
    return Path(__file__).parent.parent.joinpath('data')


@pytest.fixture
def rng():
    '''Seeded instance of `numpy.random.Generator`.'''
    return np.random.default_rng(1234)


@pytest.fixture
def small_problem():
    '''Small well-specified instance of `specreg.synthetic.MercerProblem`.'''
    return make_problem(
        p=0.5, beta=1.0, B=1.0, M=32, D=2,
        noise=NoiseLaw.bounded_uniform(0.5), seed=7
    )
