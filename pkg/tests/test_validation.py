import metropolis_ustcon
import numpy
import pytest

from metropolis_ustcon.exceptions import InfeasibleParameterError
from metropolis_ustcon.walks import RandomStream

TINY = metropolis_ustcon.validation.ValidationBudget(
    graphs=2, samples=500, trials=50
)


def test_fuzz_graphs(rng):

    graphs = list(
        metropolis_ustcon.validation.fuzz_graphs(rng, 20, 8, connected=True)
    )

    assert len(graphs) == 20
    assert all(2 <= g.node_count <= 8 for g in graphs)
    assert all(
        metropolis_ustcon.graph.connected_components(g).max() == 0
        for g in graphs
    )


def test_sampling_error_check():

    probabilities = numpy.array([0.25, 0.75])

    assert metropolis_ustcon.validation._within_sampling_error(
        numpy.array([250, 750]), probabilities
    )
    assert not metropolis_ustcon.validation._within_sampling_error(
        numpy.array([500, 500]), probabilities
    )


@pytest.mark.parametrize(
    "suite",
    ["graph", "kernel", "stationarity", "reversal", "split", "returns"],
)
def test_suites_pass(suite):

    results = metropolis_ustcon.validation.SUITES[suite](TINY, RandomStream(9))

    assert results
    assert all(r.suite == suite for r in results)
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_solver_suite():

    results = metropolis_ustcon.validation.check_solver(TINY, RandomStream(9))

    assert [r.check for r in results] == [
        "never connected across components",
        "landmark solver connects connected pairs",
    ]
    assert all(r.passed for r in results)


def test_run_suite_is_reproducible():

    run_suite = metropolis_ustcon.validation.run_suite
    first = run_suite("graph", "small", RandomStream(1))
    second = run_suite("graph", "small", RandomStream(1))

    assert first == second


@pytest.mark.parametrize(
    "suite, budget", [("bogus", "small"), ("graph", "huge")]
)
def test_run_suite_rejects_unknown_names(suite, budget):

    with pytest.raises(InfeasibleParameterError):
        metropolis_ustcon.validation.run_suite(suite, budget, RandomStream(1))


@pytest.mark.slow
def test_all_suites_with_medium_budget():

    results = metropolis_ustcon.validation.run_suite(
        "all", "medium", RandomStream(3)
    )
    suites = set(metropolis_ustcon.validation.SUITES)

    assert {r.suite for r in results} == suites
    assert all(r.passed for r in results), [r for r in results if not r.passed]
