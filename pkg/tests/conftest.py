import metropolis_ustcon
import pytest

from pytest_cases import fixture


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run the full-size statistical checks",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size statistical check")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@fixture(scope="module")
def path_two():

    return metropolis_ustcon.generators.gen_path(2)


@fixture(scope="module")
def path_three():

    return metropolis_ustcon.generators.gen_path(3)


@fixture(scope="module")
def triangle():

    return metropolis_ustcon.generators.gen_cycle(3)


@fixture(scope="module")
def glitter_star():

    return metropolis_ustcon.generators.gen_glitter_star(3)


@fixture(scope="module")
def star_seven():
    """Centre 0 of degree 7, leaves 1 .. 7"""

    return metropolis_ustcon.graph.Graph(8, [(0, k) for k in range(1, 8)])


@fixture(scope="module")
def disconnected_cycles():

    return metropolis_ustcon.generators.graph_from_spec(
        "disconnected-pair:cycle:5"
    )


@fixture
def rng():

    return metropolis_ustcon.walks.RandomStream(20201)
