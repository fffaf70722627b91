import pytest

import fraclap
from fraclap import errors


def pytest_addoption(parser):
    parser.addoption('--run-slow', action='store_true', default=False, help='run the long convergence reproductions')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long-running convergence reproductions (enable with --run-slow)')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--run-slow'):
        return

    skip = pytest.mark.skip(reason='needs --run-slow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


def _subclasses(cls):
    for subclass in cls.__subclasses__():
        yield subclass
        yield from _subclasses(subclass)


for cls in set(_subclasses(errors.Error)):

    @pytest.register_exception_compare(cls)  # type: ignore (If you get an error here, install pytest-raisin)
    def my_error_compare(exc_actual, exc_expected):
        if vars(exc_actual) != vars(exc_expected):
            raise AssertionError(f"{exc_actual!r} != {exc_expected!r}")


@pytest.fixture
def dirichlet():
    return fraclap.BoundaryCondition.dirichlet()


@pytest.fixture
def neumann():
    return fraclap.BoundaryCondition.neumann()


@pytest.fixture
def robin():
    return fraclap.BoundaryCondition.robin(1.0)


@pytest.fixture
def interval_16():
    return fraclap.generate_interval(0.0, 1.0, 16)
