import metropolis_ustcon
import numpy
import pytest


@pytest.mark.parametrize(
    "matrix, expected",
    [
        ([[0.5, 0.5], [1.0, 0.0]], True),
        ([[0.5, 0.4], [1.0, 0.0]], False),
        ([[1.5, -0.5], [0.0, 1.0]], False),
        ([[1.0, 0.0, 0.0]], False),
    ],
)
def test_is_row_stochastic(matrix, expected):

    result = metropolis_ustcon.chains.is_row_stochastic(numpy.array(matrix))

    assert result == expected


def test_stationary_and_balanced():

    matrix = numpy.array([[0.5, 0.5], [0.25, 0.75]])

    assert metropolis_ustcon.chains.is_stationary(matrix, [1 / 3, 2 / 3])
    assert metropolis_ustcon.chains.satisfies_detailed_balance(
        matrix, [1 / 3, 2 / 3]
    )
    assert not metropolis_ustcon.chains.is_stationary(matrix, [0.5, 0.5])


def test_stationary_without_balance():

    # the directed 3-cycle is doubly stochastic but not reversible
    matrix = numpy.roll(numpy.eye(3), 1, axis=1)
    uniform = numpy.full(3, 1 / 3)

    assert metropolis_ustcon.chains.is_stationary(matrix, uniform)
    assert not metropolis_ustcon.chains.satisfies_detailed_balance(
        matrix, uniform
    )


def test_unit_potential_is_uniform(glitter_star):

    matrix = metropolis_ustcon.walks.transition_matrix(
        glitter_star, metropolis_ustcon.walks.UnitPotential()
    )

    n = glitter_star.node_count

    assert metropolis_ustcon.chains.is_stationary(matrix, numpy.full(n, 1 / n))
