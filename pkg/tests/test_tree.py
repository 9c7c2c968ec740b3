import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecca.errors import CapacityError, ParameterError, TopologyMismatchError
from treecca.tree import (DARY_BALL, REGULAR_BALL, Coloring, agree_on_ball,
                          build_dary_ball, build_regular_ball, build_subtree,
                          sample_uniform_coloring)


def geometric_nodes_dary(d, depth):
    return sum(d**s for s in range(depth + 1))


def geometric_nodes_regular(d, radius):
    return 1 + sum((d + 1) * d ** (s - 1) for s in range(1, radius + 1))


class TestBuilders:
    @pytest.mark.parametrize("d,depth,expect", [
        (2, 2, 7), (2, 0, 1), (5, 3, 156), (3, 4, 121),
    ])
    def test_dary_node_count(self, d, depth, expect):
        assert geometric_nodes_dary(d, depth) == expect
        assert build_dary_ball(d, depth).node_count == expect

    @pytest.mark.parametrize("d,radius,expect", [
        (2, 2, 10), (2, 0, 1), (87, 3, 673_817), (3, 3, 53),
    ])
    def test_regular_node_count(self, d, radius, expect):
        assert geometric_nodes_regular(d, radius) == expect
        assert build_regular_ball(d, radius).node_count == expect

    def test_depth_zero_root_is_leaf(self):
        t = build_dary_ball(2, 0)
        assert t.node_count == 1
        assert t.child_ptr[0] == t.child_ptr[1]
        assert t.parent[0] == -1

    def test_root_child_counts(self):
        t = build_dary_ball(3, 2)
        assert t.child_ptr[1] - t.child_ptr[0] == 3
        t = build_regular_ball(3, 2)
        assert t.child_ptr[1] - t.child_ptr[0] == 4

    def test_level_band_sizes(self):
        t = build_dary_ball(3, 3)
        assert t.level_counts().tolist() == [1, 3, 9, 27]
        t = build_regular_ball(3, 3)
        assert t.level_counts().tolist() == [1, 4, 12, 36]

    def test_deg_inf(self):
        t = build_dary_ball(4, 2)
        assert t.deg_inf(0) == 4 and t.deg_inf(1) == 5
        t = build_regular_ball(4, 2)
        assert t.deg_inf(0) == 5 and t.deg_inf(t.node_count - 1) == 5

    def test_capacity_error_names_limit(self):
        with pytest.raises(CapacityError, match="2147483647"):
            build_dary_ball(2, 40)
        with pytest.raises(CapacityError):
            build_regular_ball(10, 12)

    @pytest.mark.parametrize("call", [
        lambda: build_dary_ball(1, 2), lambda: build_dary_ball(2, -1),
        lambda: build_regular_ball(1, 2), lambda: build_regular_ball(2, -1),
    ])
    def test_parameter_errors(self, call):
        with pytest.raises(ParameterError):
            call()

    @settings(max_examples=25, deadline=None)
    @given(d=st.integers(2, 5), depth=st.integers(0, 4),
           regular=st.booleans())
    def test_table_consistency(self, d, depth, regular):
        t = build_regular_ball(d, depth) if regular else build_dary_ball(d, depth)
        n = t.node_count
        # children of node i occupy a contiguous range; iterating the
        # children of all nodes visits each non-root node exactly once
        seen = []
        for v in range(n):
            kids = t.children(v)
            seen.extend(kids.tolist())
            for w in kids:
                assert t.parent[w] == v
                assert t.node_depth[w] == t.node_depth[v] + 1
        assert seen == list(range(1, n))
        assert t.node_depth[0] == 0 and t.parent[0] == -1
        # deg_inf(v) - children - [non-root] >= 0, equality except at depth R
        for v in range(n):
            slack = (t.deg_inf(v) - len(t.children(v))
                     - (1 if v != 0 else 0))
            if t.node_depth[v] < t.depth:
                assert slack == 0
            else:
                assert slack > 0

    def test_build_subtree_validates_order(self):
        build_subtree(np.array([-1, 0, 0, 1]))
        with pytest.raises(ParameterError):
            build_subtree(np.array([-1, 2, 0, 1]))  # children not contiguous
        with pytest.raises(ParameterError):
            build_subtree(np.array([0, 0]))


class TestSampling:
    def test_deterministic_per_seed_trial(self):
        t = build_dary_ball(3, 4)
        a = sample_uniform_coloring(t, 5, 1234, 7)
        b = sample_uniform_coloring(t, 5, 1234, 7)
        assert np.array_equal(a.colors, b.colors)

    def test_trials_differ(self):
        t = build_dary_ball(3, 4)  # 121 nodes; collision odds 5^-121
        a = sample_uniform_coloring(t, 5, 1234, 0)
        b = sample_uniform_coloring(t, 5, 1234, 1)
        assert not np.array_equal(a.colors, b.colors)

    def test_seeds_differ(self):
        t = build_dary_ball(3, 4)
        a = sample_uniform_coloring(t, 5, 1, 0)
        b = sample_uniform_coloring(t, 5, 2, 0)
        assert not np.array_equal(a.colors, b.colors)

    def test_color_of_node_independent_of_tree_size(self):
        # counter-based contract: node i's color depends on (seed, trial, i)
        # only, so a smaller truncation yields a prefix of a larger one
        small = build_dary_ball(2, 3)
        large = build_dary_ball(2, 6)
        a = sample_uniform_coloring(small, 7, 99, 3)
        b = sample_uniform_coloring(large, 7, 99, 3)
        assert np.array_equal(a.colors, b.colors[:small.node_count])

    def test_colors_in_range(self):
        t = build_dary_ball(4, 3)
        c = sample_uniform_coloring(t, 3, 5, 0)
        assert c.colors.dtype == np.uint8
        assert int(c.colors.max()) <= 2

    def test_uniform_frequency_within_4_sigma(self):
        # ~1e6 cells, kappa=3: each color frequency within 4 sigma of 1/3
        t = build_dary_ball(2, 19)
        n = t.node_count
        assert n >= 10**6
        c = sample_uniform_coloring(t, 3, 2024, 0)
        sigma = np.sqrt(2.0 / 9.0) / np.sqrt(n)
        counts = np.bincount(c.colors, minlength=3)
        for color in range(3):
            assert abs(counts[color] / n - 1 / 3) <= 4 * sigma

    def test_parameter_validation(self):
        t = build_dary_ball(2, 2)
        with pytest.raises(ParameterError):
            sample_uniform_coloring(t, 2, 0, 0)
        with pytest.raises(ParameterError):
            sample_uniform_coloring(t, 256, 0, 0)
        with pytest.raises(ParameterError):
            sample_uniform_coloring(t, 3, -1, 0)
        with pytest.raises(ParameterError):
            Coloring(3, np.zeros(5, dtype=np.uint8), t)


class TestAgreeOnBall:
    def test_identical(self):
        t = build_dary_ball(2, 3)
        c = sample_uniform_coloring(t, 3, 1, 0)
        assert agree_on_ball(c, c, 3)

    def test_leaf_difference_invisible_below_depth(self):
        t = build_dary_ball(2, 3)
        c1 = sample_uniform_coloring(t, 3, 1, 0)
        c2 = c1.copy()
        leaf = t.node_count - 1
        c2.colors[leaf] = (c2.colors[leaf] + 1) % 3
        assert agree_on_ball(c1, c2, 2)
        assert not agree_on_ball(c1, c2, 3)

    def test_root_difference(self):
        t = build_dary_ball(2, 3)
        c1 = sample_uniform_coloring(t, 3, 1, 0)
        c2 = c1.copy()
        c2.colors[0] = (c2.colors[0] + 1) % 3
        assert not agree_on_ball(c1, c2, 0)

    def test_topology_mismatch(self):
        t1, t2 = build_dary_ball(2, 3), build_dary_ball(3, 3)
        c1 = sample_uniform_coloring(t1, 3, 1, 0)
        c2 = sample_uniform_coloring(t2, 3, 1, 0)
        with pytest.raises(TopologyMismatchError):
            agree_on_ball(c1, c2, 1)

    def test_radius_beyond_truncation(self):
        t = build_dary_ball(2, 2)
        c = sample_uniform_coloring(t, 3, 1, 0)
        with pytest.raises(ParameterError):
            agree_on_ball(c, c, 3)


def test_kinds_exposed():
    assert build_dary_ball(2, 1).kind == DARY_BALL
    assert build_regular_ball(2, 1).kind == REGULAR_BALL
