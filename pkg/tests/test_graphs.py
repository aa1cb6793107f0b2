import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_graph, random_lasso
from oracles import brute_force_roots, naive_causal_past, undirected_bfs_spans

from rootcons.graphs import (
    CommGraph,
    LassoSequence,
    causal_past,
    causal_past_forward,
    check_dynamic_diameter,
    common_root_intervals,
    find_ecs_common_root,
    graph_to_dot,
    influences,
    is_weakly_connected,
    lasso,
    lasso_from_json,
    lasso_to_json,
    root_components,
    single_root,
    validate_graph,
)


def roots_sorted(g):
    return sorted(sorted(r) for r in root_components(g))


class TestValidateGraph:
    def test_minimal_legal_graph(self):
        assert validate_graph(CommGraph.of(1)) == []

    def test_missing_self_loop_reported(self):
        g = CommGraph(2, frozenset([(1, 1)]))
        assert validate_graph(g) == ["missing self-loop (2->2)"]

    def test_eps1_graph_is_valid(self, eps1_lasso):
        assert validate_graph(eps1_lasso.graph(1)) == []

    def test_out_of_range_endpoint(self):
        g = CommGraph(2, frozenset([(1, 1), (2, 2), (1, 7)]))
        assert validate_graph(g) == ["endpoint out of range (1->7)"]


class TestRootComponents:
    def test_single_node(self):
        assert roots_sorted(CommGraph.of(1)) == [[1]]

    def test_eps1_single_root(self, eps1_lasso):
        assert roots_sorted(eps1_lasso.graph(1)) == [[1]]

    def test_eps2_early_rounds_two_roots(self, eps2_lasso):
        assert roots_sorted(eps2_lasso.graph(1)) == [[1], [3]]

    def test_matches_brute_force_on_random_graphs(self):
        rng = random.Random(1234)
        for _ in range(300):
            n = rng.randint(1, 6)
            g = random_graph(rng, n, rng.uniform(0.05, 0.6))
            assert root_components(g) == brute_force_roots(g)

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_at_least_one_root_and_single_implies_weakly_connected(self, data):
        n = data.draw(st.integers(1, 6))
        pairs = [(u, v) for u in range(1, n + 1) for v in range(1, n + 1) if u != v]
        picked = data.draw(st.lists(st.sampled_from(pairs), max_size=12) if pairs else st.just([]))
        g = CommGraph.of(n, picked)
        roots = root_components(g)
        assert len(roots) >= 1
        if len(roots) == 1:
            assert is_weakly_connected(g)


class TestWeaklyConnected:
    def test_eps1_connected(self, eps1_lasso):
        assert is_weakly_connected(eps1_lasso.graph(1))

    def test_eps2_early_rounds_disconnected(self, eps2_lasso):
        g = eps2_lasso.graph(1)
        assert undirected_bfs_spans(g) is False
        assert is_weakly_connected(g) is False

    def test_single_vertex(self):
        assert is_weakly_connected(CommGraph.of(1))

    def test_agrees_with_bfs_oracle(self):
        rng = random.Random(77)
        for _ in range(200):
            g = random_graph(rng, rng.randint(1, 6), rng.uniform(0.05, 0.5))
            assert is_weakly_connected(g) == undirected_bfs_spans(g)


class TestCommonRootIntervals:
    def test_eps1_static_window(self, eps1_lasso):
        ivs = common_root_intervals(eps1_lasso.window(1, 10))
        assert [(sorted(iv.root), iv.start, iv.end) for iv in ivs] == [([1], 1, 10)]
        assert ivs[0].clipped_start and ivs[0].clipped_end

    def test_eps2_window_1_to_6(self, eps2_lasso):
        ivs = common_root_intervals(eps2_lasso.window(1, 6))
        assert [(sorted(iv.root), iv.start, iv.end) for iv in ivs] == [
            ([1], 1, 2),
            ([3], 1, 2),
            ([1, 2, 5], 3, 4),
            ([4], 3, 6),
        ]

    def test_never_a_root_is_absent(self, eps2_lasso):
        ivs = common_root_intervals(eps2_lasso.window(1, 6))
        assert frozenset([5]) not in {iv.root for iv in ivs}

    def test_matches_per_round_merge_oracle(self):
        rng = random.Random(5)
        for _ in range(50):
            l = random_lasso(rng, rng.randint(2, 5), 6)
            w = l.window(1, 8)
            per_round = {r: root_components(l.graph(r)) for r in range(1, 9)}
            expected = set()
            for root in {root for roots in per_round.values() for root in roots}:
                r = 1
                while r <= 8:
                    if root in per_round[r]:
                        start = r
                        while r <= 8 and root in per_round[r]:
                            r += 1
                        expected.add((root, start, r - 1))
                    r += 1
            got = {(iv.root, iv.start, iv.end) for iv in common_root_intervals(w)}
            assert got == expected


class TestSingleRoot:
    def test_eps1_rounds_1_to_5(self, eps1_lasso):
        assert single_root(eps1_lasso.window(1, 5)) == frozenset([1])

    def test_eps2_rounds_1_to_2_none(self, eps2_lasso):
        assert single_root(eps2_lasso.window(1, 2)) is None

    def test_eps2_rounds_5_to_9(self, eps2_lasso):
        assert single_root(eps2_lasso.window(5, 9)) == frozenset([4])


class TestEcsCommonRoot:
    def test_eps2_window_3_to_9(self, eps2_lasso):
        hit = find_ecs_common_root(eps2_lasso.window(3, 9), x=2)
        assert hit is not None
        assert sorted(hit.root) == [4]
        assert hit.interval == (3, 9)
        assert hit.single_interval == (5, 7)

    def test_degenerate_x_zero(self, eps1_lasso):
        hit = find_ecs_common_root(eps1_lasso.window(4, 4), x=0)
        assert hit is not None
        assert hit.single_interval == (4, 4)

    def test_no_long_single_phase_is_none(self, eps2_lasso):
        # rounds 1..4 never have a single root
        assert find_ecs_common_root(eps2_lasso.window(1, 4), x=1) is None


class TestCausalPast:
    def test_base_case(self, eps2_lasso):
        w = eps2_lasso.window(1, 6)
        for p in range(1, 6):
            assert causal_past(w, p, 3, 3) == frozenset({p})

    def test_eps2_hand_unrolled(self, eps2_lasso):
        w = eps2_lasso.window(1, 6)
        assert causal_past(w, 2, 0, 2) == frozenset({1, 2, 5})
        assert causal_past(w, 2, 0, 2) == naive_causal_past(eps2_lasso.graph, 2, 0, 2)

    def test_monotone_in_lower_bound(self):
        rng = random.Random(41)
        for _ in range(60):
            n = rng.randint(2, 6)
            l = random_lasso(rng, n, 6)
            w = l.window(1, 8)
            p = rng.randint(1, n)
            b = rng.randint(1, 8)
            prev = frozenset({p})
            for a in range(b, -1, -1):
                cur = causal_past(w, p, a, b)
                assert cur >= prev
                prev = cur

    def test_backward_equals_forward_and_naive(self):
        rng = random.Random(42)
        for _ in range(120):
            n = rng.randint(2, 6)
            l = random_lasso(rng, n, 7)
            w = l.window(1, 9)
            p = rng.randint(1, n)
            b = rng.randint(1, 9)
            a = rng.randint(0, b)
            back = causal_past(w, p, a, b)
            assert back == causal_past_forward(w, p, a, b)
            assert back == naive_causal_past(l.graph, p, a, b)

    def test_invalid_interval_raises(self, eps1_lasso):
        w = eps1_lasso.window(1, 5)
        with pytest.raises(ValueError):
            causal_past(w, 1, 4, 3)
        with pytest.raises(ValueError):
            causal_past(w, 1, 0, 9)


class TestInfluences:
    def test_self_influence(self, eps1_lasso):
        w = eps1_lasso.window(1, 5)
        assert influences(w, 3, 2, 3, 2)

    def test_eps2_p3_never_reaches_p2_early(self, eps2_lasso):
        w = eps2_lasso.window(1, 6)
        assert not influences(w, 3, 0, 2, 4)

    def test_influence_persists(self):
        rng = random.Random(43)
        for _ in range(60):
            n = rng.randint(2, 5)
            l = random_lasso(rng, n, 6)
            w = l.window(1, 9)
            q, p = rng.randint(1, n), rng.randint(1, n)
            r = rng.randint(0, 5)
            r2 = rng.randint(r + 1, 7)
            if influences(w, q, r, p, r2):
                assert influences(w, q, r, p, r2 + 1)
                assert influences(w, q, r, p, r2 + 2)


class TestEndToEndPropagation:
    def test_n_minus_1_single_rooted_rounds_spread_the_root(self):
        # after n-1 (not necessarily consecutive) R-single-rooted rounds,
        # R is in everyone's causal past
        rng = random.Random(44)
        found = 0
        while found < 30:
            n = rng.randint(2, 6)
            l = random_lasso(rng, n, 10, density=rng.uniform(0.2, 0.7))
            w = l.window(1, 12)
            singles = {}
            for r in range(1, 13):
                roots = root_components(l.graph(r))
                if len(roots) == 1:
                    (root,) = roots
                    singles.setdefault(root, []).append(r)
            for root, rounds in singles.items():
                if len(rounds) < n - 1:
                    continue
                found += 1
                picks = sorted(rng.sample(rounds, n - 1))
                for p in range(1, n + 1):
                    assert root <= causal_past(w, p, picks[0] - 1, picks[-1])


class TestDynamicDiameter:
    def test_eps1_diameter_two(self, eps1_lasso):
        assert check_dynamic_diameter(eps1_lasso, 2, horizon=10) is None

    def test_eps2_diameter_two(self, eps2_lasso):
        assert check_dynamic_diameter(eps2_lasso, 2, horizon=12) is None

    def test_rotating_head_violates_small_diameter(self):
        from rootcons.harness import scenario_hop_fallacy

        witness = check_dynamic_diameter(scenario_hop_fallacy(5), 2, horizon=10)
        assert witness is not None
        assert witness.root == frozenset([1])
        w = scenario_hop_fallacy(5).window(1, witness.rounds[-1])
        assert not (witness.root <= causal_past(w, witness.process, witness.rounds[0] - 1, witness.rounds[-1]))

    def test_d_out_of_range_raises(self, eps1_lasso):
        with pytest.raises(ValueError):
            check_dynamic_diameter(eps1_lasso, 0)
        with pytest.raises(ValueError):
            check_dynamic_diameter(eps1_lasso, 5)


class TestLassoPlumbing:
    def test_round_indexing(self, eps2_lasso):
        assert eps2_lasso.graph(1) == eps2_lasso.graph(2)
        assert eps2_lasso.graph(5) == eps2_lasso.graph(9)
        assert eps2_lasso.graph(3) != eps2_lasso.graph(2)
        with pytest.raises(ValueError):
            eps2_lasso.graph(0)

    def test_empty_cycle_rejected(self):
        with pytest.raises(ValueError):
            LassoSequence((), ())

    def test_json_round_trip(self, eps2_lasso):
        text = lasso_to_json(eps2_lasso)
        back = lasso_from_json(text)
        assert back == eps2_lasso
        assert lasso_to_json(back) == text

    def test_json_implies_self_loops(self):
        l = lasso_from_json('{"n": 2, "prefix": [], "cycle": [[[1, 2]]]}')
        assert (2, 2) in l.graph(1).edges

    def test_json_rejects_bad_n(self):
        with pytest.raises(ValueError):
            lasso_from_json('{"n": 0, "cycle": [[]]}')

    def test_dot_marks_root_members(self, eps1_lasso):
        dot = graph_to_dot(eps1_lasso.graph(1))
        assert "p1 [shape=doublecircle" in dot
        assert "p2 [shape=circle" in dot
        assert "p1 -> p5;" in dot
