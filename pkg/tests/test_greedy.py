import itertools
import random

import pytest

from conftest import random_instance, star_instance
from expanding_search.graph import Instance, search_cost, validate_search
from expanding_search.greedy import greedy_search, greedy_upper_bound
from expanding_search.oracle import connected_rooted_sets, optimal_search_dp


def test_star_greedy_is_optimal():
    inst = star_instance()
    seq, trace = greedy_search(inst)
    assert seq.order == [1, 2]
    assert search_cost(inst, seq) == pytest.approx(2.2)
    assert greedy_upper_bound(trace) >= 2.2 - 1e-9


def test_single_path():
    inst = Instance.from_edges([0, 0.25, 0.75], [(0, 1, 1), (1, 2, 2)])
    seq, trace = greedy_search(inst)
    assert seq.order == [1, 2]
    assert search_cost(inst, seq) == pytest.approx(optimal_search_dp(inst)[0])


def test_single_iteration_bound_is_tree_length():
    inst = Instance.from_edges([0, 0.5, 0.5], [(0, 1, 1), (1, 2, 1)])
    seq, trace = greedy_search(inst)
    if len(trace.iterations) == 1:
        it = trace.iterations[0]
        assert greedy_upper_bound(trace) == pytest.approx(it.length)


def test_trace_invariants_and_bounds():
    rng = random.Random(61)
    for _ in range(60):
        n = rng.randint(1, 10)
        inst = random_instance(rng, n, rng.random())
        seq, trace = greedy_search(inst)
        validate_search(inst, seq)
        cost = search_cost(inst, seq)
        its = trace.iterations
        assert its[0].remaining == pytest.approx(1.0)
        for a, b in zip(its, its[1:]):
            assert b.remaining == pytest.approx(a.remaining - a.mass, abs=1e-12)
        for it in its:
            assert it.mass > 0 and it.price > 0
        assert len(its) <= n
        assert cost <= greedy_upper_bound(trace) + 1e-9
        opt, _ = optimal_search_dp(inst)
        assert cost <= 8 * opt + 1e-9


def test_density_cap():
    # every subtree T with length tau gains at most tau * alpha * rho(T_i) new mass
    rng = random.Random(67)
    for _ in range(8):
        inst = random_instance(rng, rng.randint(3, 6), 0.5)
        seq, trace = greedy_search(inst)
        alpha = trace.approx_factor
        subtrees = []
        for S in connected_rooted_sets(inst):
            from expanding_search.graph import minimum_spanning_tree

            t = minimum_spanning_tree(inst, S)
            subtrees.append((t.length, set(S)))
        for it in trace.iterations:
            rho = it.mass / it.length
            for tau, verts in subtrees:
                new_mass = sum(inst.prob[v] for v in verts - it.visited)
                assert new_mass <= tau * alpha * rho + 1e-9


def test_zero_probability_vertices_appended():
    inst = Instance.from_edges([0, 1.0, 0.0, 0.0], [(0, 1, 1), (1, 2, 1), (0, 3, 5)])
    seq, trace = greedy_search(inst)
    assert seq.order[0] == 1
    assert set(seq.order) == {1, 2, 3}
    assert search_cost(inst, seq) == pytest.approx(1.0)
