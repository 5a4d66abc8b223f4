# Shared pytest configuration
import pytest

from sweeptool import tensor


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the long training tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def checked_mode():
    """Trap non-finite values in every test."""
    previous = tensor.isCheckedMode()
    tensor.setCheckedMode(True)
    yield
    tensor.setCheckedMode(previous)
