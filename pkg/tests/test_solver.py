import json
import math

import metropolis_ustcon
import numpy
import pytest

from metropolis_ustcon.exceptions import (
    InfeasibleParameterError,
    InvalidNodeError,
)
from metropolis_ustcon.graph import ConnectivityQuery, Graph
from metropolis_ustcon.solver import Answer, LandmarkConfig
from metropolis_ustcon.split import SplitNode, SplitView
from metropolis_ustcon.walks import RandomStream


@pytest.mark.parametrize(
    "m, p, expected",
    [(64, 4, 4), (100, 100, 1), (0, 8, 1), (65, 4, 5), (10, 4, 2)],
)
def test_split_parameter(m, p, expected):

    split = metropolis_ustcon.solver.compute_split_parameter(100, m, p)

    assert split == expected


def test_split_parameter_rejects_bad_input():

    with pytest.raises(InfeasibleParameterError):
        metropolis_ustcon.solver.compute_split_parameter(10, 5, 0)


@pytest.mark.parametrize(
    "c_scale, length, rounds", [(1.0, 9600**2, 720), (0.01, 921600, 8)]
)
def test_walk_length_and_rounds(c_scale, length, rounds):

    view = SplitView(Graph(1024, []), 1)
    config = LandmarkConfig(p=64, c_scale=c_scale)

    assert metropolis_ustcon.solver.compute_walk_length(view, config) == length
    assert metropolis_ustcon.solver.compute_rounds(view, config) == rounds


@pytest.mark.parametrize("c_scale, length", [(1.0, 9), (0.5, 5)])
def test_single_node_parameters(c_scale, length):

    view = SplitView(Graph(1, []), 1)
    config = LandmarkConfig(c_scale=c_scale)

    assert metropolis_ustcon.solver.compute_walk_length(view, config) == length
    assert metropolis_ustcon.solver.compute_rounds(view, config) == 1


@pytest.mark.parametrize(
    "kwargs",
    [
        {"p": 0},
        {"gamma": 0.0},
        {"beta": -1.0},
        {"c_scale": 0.0},
        {"split": 0},
    ],
)
def test_invalid_config(kwargs):

    with pytest.raises(InfeasibleParameterError):
        LandmarkConfig(**kwargs)


def test_sampled_landmarks_are_split_nodes(glitter_star, rng):

    view = SplitView(glitter_star, 1)
    landmarks = metropolis_ustcon.solver.sample_landmarks(view, 200, rng)

    assert len(landmarks) == 200
    assert all(0 <= view.node_id(node) < view.node_count for node in landmarks)
    assert len(set(landmarks)) > 1


def test_prepare_landmarks(glitter_star, rng):

    state = metropolis_ustcon.solver.prepare_landmarks(
        glitter_star, ConnectivityQuery(4, 6), LandmarkConfig(p=3), rng
    )

    assert state.landmarks[:2] == [SplitNode(4, 0), SplitNode(6, 0)]
    assert len(set(state.landmarks)) == len(state.landmarks)
    assert 2 <= len(state.landmarks) <= 5
    assert state.sets.set_count == len(state.landmarks)
    assert state.view.split == 2


def test_source_equals_target(glitter_star, rng):

    result = metropolis_ustcon.solver.test_connectivity(
        glitter_star, ConnectivityQuery(5, 5), LandmarkConfig(), rng
    )

    assert result.connected
    assert result.steps_executed == 0


def test_connected_glitter_star(glitter_star, rng):

    result = metropolis_ustcon.solver.test_connectivity(
        glitter_star, ConnectivityQuery(4, 6), LandmarkConfig(p=4), rng
    )

    assert result.answer is Answer.CONNECTED
    assert 0 < result.steps_executed <= result.step_budget
    assert result.merged_class_count < result.landmarks_used


def test_disconnected_pair_is_never_connected(disconnected_cycles, rng):

    g, query = disconnected_cycles
    result = metropolis_ustcon.solver.test_connectivity(
        g, query, LandmarkConfig(p=4, c_scale=0.01), rng
    )

    assert result.answer is Answer.PROBABLY_NOT_CONNECTED
    assert result.split == 2
    assert result.n_star == 10
    assert result.steps_executed == result.landmarks_used * result.rounds * (
        result.walk_length
    )
    assert result.merged_class_count >= 2
    for group in result.state.classes():
        components = {0 if node.vertex < 5 else 1 for node in group}
        assert len(components) == 1


def test_without_early_exit_every_walk_runs(glitter_star, rng):

    config = LandmarkConfig(p=4, c_scale=0.001, early_exit=False)
    result = metropolis_ustcon.solver.test_connectivity(
        glitter_star, ConnectivityQuery(4, 6), config, rng
    )

    assert result.steps_executed == (
        result.landmarks_used * result.rounds * result.walk_length
    )


def test_seed_makes_runs_reproducible(disconnected_cycles):

    g, query = disconnected_cycles
    config = LandmarkConfig(p=4, c_scale=0.01, seed=11)

    first = metropolis_ustcon.solver.test_connectivity(g, query, config)
    second = metropolis_ustcon.solver.test_connectivity(g, query, config)

    assert first == second
    assert first.seed == 11


def test_split_override(glitter_star, rng):

    result = metropolis_ustcon.solver.test_connectivity(
        glitter_star,
        ConnectivityQuery(4, 6),
        LandmarkConfig(p=4, split=3),
        rng,
    )

    assert result.split == 3
    assert result.n_star == 7


def test_space_words(glitter_star, rng):

    result = metropolis_ustcon.solver.test_connectivity(
        glitter_star, ConnectivityQuery(4, 6), LandmarkConfig(p=4), rng
    )

    assert result.space_words == result.landmarks_used * math.ceil(
        math.log2(result.n_star)
    )


def test_invalid_query(triangle, rng):

    with pytest.raises(InvalidNodeError):
        metropolis_ustcon.solver.test_connectivity(
            triangle, ConnectivityQuery(0, 3), LandmarkConfig(), rng
        )


def test_logspace_walk_length():

    assert metropolis_ustcon.solver.logspace_walk_length(1) == 0
    assert metropolis_ustcon.solver.logspace_walk_length(10) == math.ceil(
        2400 * math.log(10)
    )


def test_logspace_solver(glitter_star, disconnected_cycles, rng):

    connected = metropolis_ustcon.solver.solve_logspace(
        glitter_star, ConnectivityQuery(4, 6), rng
    )
    g, query = disconnected_cycles
    separated = metropolis_ustcon.solver.solve_logspace(g, query, rng, 0.1)

    assert connected.connected
    assert connected.steps_executed <= connected.step_budget
    assert not separated.connected
    assert separated.steps_executed == separated.step_budget
    assert separated.space_words == 4


def test_logspace_source_equals_target(triangle, rng):

    result = metropolis_ustcon.solver.solve_logspace(
        triangle, ConnectivityQuery(1, 1), rng
    )

    assert result.connected
    assert result.steps_executed == 0


def test_result_serialisation(glitter_star):

    result = metropolis_ustcon.solver.test_connectivity(
        glitter_star,
        ConnectivityQuery(4, 6),
        LandmarkConfig(p=4),
        RandomStream(3),
    )
    payload = json.loads(result.to_json())
    frame = result.to_frame()

    assert payload["answer"] == "connected"
    assert payload["solver"] == "landmark"
    assert payload["seed"] == 3
    assert "state" not in payload
    assert frame.shape[0] == 1
    assert frame.loc[0, "walk_length"] == result.walk_length


def test_merge_hits():

    sets = metropolis_ustcon.unionfind.DisjointSets([3, 5, 9])
    hits = numpy.zeros((2, 3, 3), dtype=bool)
    hits[1, 0, 0] = True
    hits[0, 2, 1] = True

    metropolis_ustcon.solver.merge_hits(sets, [3, 5, 9], hits)

    assert sets.set_count == 2
    assert sets.connected(5, 9)
    assert not sets.connected(3, 5)


def connected_instance(seed, max_nodes):

    stream = numpy.random.default_rng(seed)
    n = int(stream.integers(2, max_nodes + 1))
    m = int(stream.integers(n - 1, min(2 * n, n * (n - 1) // 2) + 1))
    g = metropolis_ustcon.generators.gen_random_connected_graph(n, m, seed)
    s, t = stream.choice(n, size=2, replace=False).tolist()
    return g, ConnectivityQuery(s, t)


def disconnected_instance(seed):

    stream = numpy.random.default_rng(seed)
    n = int(stream.integers(2, 41))
    m = int(stream.integers(0, n))
    g = metropolis_ustcon.generators.gen_random_graph(n, m, seed)
    labels = metropolis_ustcon.graph.connected_components(g)
    if labels.max() == 0:
        return metropolis_ustcon.generators.gen_disconnected_pair(g)
    s = int(stream.integers(0, n))
    t = int(stream.choice(numpy.flatnonzero(labels != labels[s])))
    return g, ConnectivityQuery(s, t)


@pytest.mark.slow
def test_never_connected_across_components():

    for seed in range(1000):
        g, query = disconnected_instance(seed)
        landmark = metropolis_ustcon.solver.test_connectivity(
            g, query, LandmarkConfig(p=4, c_scale=1e-4), RandomStream(seed)
        )
        logspace = metropolis_ustcon.solver.solve_logspace(
            g, query, RandomStream(seed), 0.01
        )

        assert not metropolis_ustcon.graph.bfs_connected(g, query)
        assert landmark.answer is Answer.PROBABLY_NOT_CONNECTED
        assert logspace.answer is Answer.PROBABLY_NOT_CONNECTED


@pytest.mark.slow
def test_logspace_completeness():

    connected = 0
    for seed in range(300):
        g, query = connected_instance(seed, 100)
        result = metropolis_ustcon.solver.solve_logspace(
            g, query, RandomStream(seed)
        )
        connected += result.connected

    assert connected >= 297


@pytest.mark.slow
@pytest.mark.parametrize("p", [2, 8, 32])
def test_landmark_completeness(p):

    connected = 0
    for seed in range(200):
        g, query = connected_instance(seed, 64)
        result = metropolis_ustcon.solver.test_connectivity(
            g, query, LandmarkConfig(p=p, gamma=60, beta=72, seed=seed)
        )
        connected += result.connected

    assert connected >= 190


@pytest.mark.slow
def test_success_rate_grows_with_c_scale():

    instances = [
        (
            metropolis_ustcon.generators.gen_lollipop(12, 12),
            ConnectivityQuery(1, 23),
        ),
        (
            metropolis_ustcon.generators.gen_glitter_star(12),
            ConnectivityQuery(13, 24),
        ),
    ]
    rates = []
    for c_scale in (0.25, 0.5, 1.0):
        config = LandmarkConfig(p=2, gamma=0.5, beta=1.0, c_scale=c_scale)
        hits = [
            metropolis_ustcon.solver.test_connectivity(
                g, query, config, RandomStream(trial)
            ).connected
            for g, query in instances
            for trial in range(200)
        ]
        rates.append(numpy.mean(hits))

    assert rates[0] <= rates[1] + 0.05
    assert rates[1] <= rates[2] + 0.05
    assert rates[2] > 0
