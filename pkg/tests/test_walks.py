import metropolis_ustcon
import numpy
import pytest

from hypothesis import given, settings

from metropolis_ustcon.exceptions import InfeasibleParameterError, WalkError
from metropolis_ustcon.walks import (
    CustomPotential,
    FineTunedPotential,
    RandomStream,
    UnbiasedPotential,
    UnitPotential,
)

from .strategies import graphs


def test_streams_are_reproducible():

    a = RandomStream(5)
    b = RandomStream(5)

    assert [a.random() for _ in range(10)] == [b.random() for _ in range(10)]
    assert a.entropy == 5


def test_spawned_streams_differ():

    first, second = RandomStream(5).spawn(2)
    again, _ = RandomStream(5).spawn(2)

    assert first.random() != second.random()
    assert RandomStream(5).spawn(2)[0].random() == again.random()


def test_below_stays_in_range(rng):

    values = {rng.below(3) for _ in range(300)}

    assert values == {0, 1, 2}


def test_potential_values(star_seven):

    # d = 14 / 8
    numpy.testing.assert_allclose(UnitPotential().values(star_seven), 1.0)
    numpy.testing.assert_allclose(
        UnbiasedPotential().values(star_seven), [4.0] + [4.0 / 7] * 7
    )
    numpy.testing.assert_allclose(
        FineTunedPotential().values(star_seven), [5.0] + [11.0 / 7] * 7
    )


def test_isolated_nodes_keep_positive_potential():

    g = metropolis_ustcon.graph.Graph(3, [(0, 1)])

    assert numpy.all(UnbiasedPotential().values(g) > 0)
    assert numpy.all(FineTunedPotential().values(g) > 0)


def test_custom_potential_must_be_positive(triangle):

    bad = CustomPotential(lambda g: numpy.zeros(g.node_count), "zero")

    with pytest.raises(InfeasibleParameterError):
        bad.values(triangle)


def test_unknown_potential():

    with pytest.raises(InfeasibleParameterError):
        metropolis_ustcon.walks.potential_from_name("lazy")


def test_unit_kernel_on_path(path_three):

    f = UnitPotential()

    assert metropolis_ustcon.walks.arc_weight(path_three, f, 0, 1) == 0.5
    assert metropolis_ustcon.walks.self_loop_weight(path_three, f, 0) == 0.5
    assert metropolis_ustcon.walks.self_loop_weight(path_three, f, 1) == 0.0
    numpy.testing.assert_allclose(
        metropolis_ustcon.walks.transition_matrix(path_three, f),
        [[0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]],
    )


def test_unbiased_kernel_is_simple_random_walk(glitter_star):

    matrix = metropolis_ustcon.walks.transition_matrix(
        glitter_star, UnbiasedPotential()
    )
    expected = numpy.zeros_like(matrix)
    for v in range(glitter_star.node_count):
        expected[v, glitter_star.neighbors(v)] = 1.0 / glitter_star.degree(v)

    numpy.testing.assert_allclose(matrix, expected)


def test_sparse_matches_dense(glitter_star):

    for f in metropolis_ustcon.walks.POTENTIALS.values():
        numpy.testing.assert_allclose(
            metropolis_ustcon.walks.sparse_transition_matrix(
                glitter_star, f
            ).toarray(),
            metropolis_ustcon.walks.transition_matrix(glitter_star, f),
        )


def test_dense_cap():

    with pytest.raises(metropolis_ustcon.exceptions.CapacityError):
        metropolis_ustcon.walks.transition_matrix(
            metropolis_ustcon.generators.gen_path(10), UnitPotential(), cap=5
        )


@settings(max_examples=40, deadline=None)
@given(graphs(max_nodes=9))
def test_kernels_are_reversible(g):

    for f in metropolis_ustcon.walks.POTENTIALS.values():
        matrix = metropolis_ustcon.walks.transition_matrix(g, f)
        pi = metropolis_ustcon.walks.stationary_distribution(g, f)

        assert metropolis_ustcon.chains.is_row_stochastic(matrix)
        assert metropolis_ustcon.chains.is_stationary(matrix, pi)
        assert metropolis_ustcon.chains.satisfies_detailed_balance(matrix, pi)


def test_two_node_walk_alternates(path_two, rng):

    trace = metropolis_ustcon.walks.run_walk(
        path_two, UnitPotential(), 0, 4, [0, 1], rng
    )

    assert trace.visit_counts.tolist() == [3, 2]
    assert trace.first_hits == {0: 2, 1: 1}
    assert trace.final_node == 0
    assert trace.steps_taken == 4
    assert trace.visits_before().tolist() == [2, 2]
    assert trace.last_hit() == 2


def test_arc_counts(path_two, rng):

    trace = metropolis_ustcon.walks.run_walk(
        path_two, UnitPotential(), 0, 3, None, rng, count_arcs=True
    )

    assert trace.arc_counts == {(0, 1): 2, (1, 0): 1}
    assert trace.to_frame("arcs").to_dict("list") == {
        "tail": [0, 1],
        "head": [1, 0],
        "counter": [2, 1],
    }


def test_visit_counts_cover_every_time(glitter_star, rng):

    trace = metropolis_ustcon.walks.run_walk(
        glitter_star, FineTunedPotential(), 4, 250, None, rng
    )

    assert trace.visit_counts.sum() == 251
    assert trace.phases == [("finetuned", 250)]
    assert not trace.stopped


@pytest.mark.parametrize("stop", ["any", "all"])
def test_stop_modes(stop, glitter_star, rng):

    tracked = [4, 5, 6]
    trace = metropolis_ustcon.walks.run_walk(
        glitter_star, UnitPotential(), 0, 100000, tracked, rng, stop=stop
    )
    times = [t for t in trace.first_hits.values() if t is not None]

    assert trace.stopped
    if stop == "any":
        assert trace.steps_taken == min(times)
    else:
        assert trace.all_hit()
        assert trace.steps_taken == max(times)


def test_start_is_not_a_hit(triangle, rng):

    trace = metropolis_ustcon.walks.run_walk(
        triangle, UnitPotential(), 0, 50, [0], rng
    )

    assert trace.first_hits[0] is None or trace.first_hits[0] > 0


def test_isolated_node_absorbs(rng):

    g = metropolis_ustcon.graph.Graph(2, [])
    trace = metropolis_ustcon.walks.run_walk(
        g, UnitPotential(), 1, 10, [0], rng
    )

    assert trace.visit_counts.tolist() == [0, 11]
    assert trace.first_hits == {0: None}
    assert trace.last_hit() is None


def test_disabled_counters(path_two, rng):

    trace = metropolis_ustcon.walks.run_walk(
        path_two, UnitPotential(), 0, 3, None, rng, count_visits=False
    )

    with pytest.raises(WalkError):
        trace.visits_before()
    with pytest.raises(WalkError):
        trace.to_frame("arcs")


@pytest.mark.parametrize(
    "kwargs",
    [{"t": -1}, {"start": 9}, {"tracked": [9]}, {"stop": "never"}],
)
def test_invalid_walks(kwargs, triangle, rng):

    arguments = {"start": 0, "t": 5, "tracked": None, "stop": None} | kwargs

    with pytest.raises(WalkError):
        metropolis_ustcon.walks.run_walk(
            triangle, UnitPotential(), rng=rng, **arguments
        )


def test_hybrid_schedule():

    assert metropolis_ustcon.walks.hybrid_schedule(10) == [
        ("unbiased", 1),
        ("unit", 1),
        ("unbiased", 2),
        ("unit", 2),
        ("unbiased", 4),
    ]
    assert sum(
        length for _, length in metropolis_ustcon.walks.hybrid_schedule(1000)
    ) == 1000


def test_hybrid_walk(glitter_star, rng):

    trace = metropolis_ustcon.walks.run_hybrid_walk(glitter_star, 0, 10, rng)

    assert trace.kernel == "hybrid"
    assert trace.steps_taken == 10
    assert trace.phases == metropolis_ustcon.walks.hybrid_schedule(10)
    assert trace.visit_counts.sum() == 11


def test_hybrid_budget(glitter_star, rng):

    with pytest.raises(InfeasibleParameterError):
        metropolis_ustcon.walks.run_hybrid_walk(glitter_star, 0, 1, rng)


def test_next_state_frequencies(star_seven, rng):

    f = UnitPotential()
    counts = numpy.zeros(star_seven.node_count)
    for _ in range(20000):
        counts[metropolis_ustcon.walks.next_state(star_seven, f, 1, rng)] += 1

    # a leaf moves to the centre with probability 1/7
    numpy.testing.assert_allclose(
        counts / 20000, [1 / 7, 6 / 7] + [0] * 6, atol=0.015
    )


def test_hit_frame(path_two, rng):

    trace = metropolis_ustcon.walks.run_walk(
        path_two, UnitPotential(), 0, 1, [0, 1], rng
    )
    frame = trace.to_frame("hits")

    assert frame["time_or_node"].tolist() == [0, 1]
    assert frame["counter"].isna().tolist() == [True, False]
