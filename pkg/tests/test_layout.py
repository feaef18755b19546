"""Block decomposition and key-controlled layout tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whstamp.fwht import is_power_of_two
from whstamp.keys import WatermarkKey
from whstamp.layout import BlockLayout, build_layout, plan_blocks

KEY = WatermarkKey(bytes(range(1, 33)))
OTHER_KEY = WatermarkKey(bytes(range(2, 34)))


class TestPlanBlocks:
    def test_frozen_decomposition(self):
        assert plan_blocks(10_007, 2048) == [
            2048, 2048, 2048, 2048, 1024, 512, 256, 16, 4, 2, 1,
        ]

    def test_exact_multiple(self):
        assert plan_blocks(4096, 2048) == [2048, 2048]

    def test_below_max(self):
        assert plan_blocks(7, 2048) == [4, 2, 1]

    def test_zero(self):
        assert plan_blocks(0, 2048) == []

    def test_max_block_one(self):
        assert plan_blocks(5, 1) == [1, 1, 1, 1, 1]

    def test_non_power_of_two_max_rejected(self):
        with pytest.raises(ValueError):
            plan_blocks(100, 100)

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(min_value=0, max_value=1_000_000),
        st.sampled_from([1, 2, 64, 2048, 4096]),
    )
    def test_decomposition_invariants(self, total, max_block):
        sizes = plan_blocks(total, max_block)
        assert sum(sizes) == total
        assert all(is_power_of_two(s) and s <= max_block for s in sizes)
        # descending, and sizes below max_block are distinct (binary digits)
        assert sizes == sorted(sizes, reverse=True)
        tail = [s for s in sizes if s < max_block]
        assert len(tail) == len(set(tail))


class TestBuildLayout:
    def test_deterministic(self):
        a = build_layout(KEY, 10_007, 2048)
        b = build_layout(KEY, 10_007, 2048)
        assert a.sizes == b.sizes
        np.testing.assert_array_equal(a.perm, b.perm)

    def test_sizes_are_shuffled_multiset(self):
        layout = build_layout(KEY, 10_007, 2048)
        assert sorted(layout.sizes, reverse=True) == plan_blocks(10_007, 2048)

    def test_key_controls_layout(self):
        a = build_layout(KEY, 100_003, 2048)
        b = build_layout(OTHER_KEY, 100_003, 2048)
        assert not np.array_equal(a.perm, b.perm)

    def test_perm_is_bijection(self):
        layout = build_layout(KEY, 10_007, 2048)
        assert np.array_equal(np.sort(layout.perm), np.arange(10_007))

    def test_gather_scatter_inverse(self):
        layout = build_layout(KEY, 10_007, 2048)
        rng = np.random.default_rng(5)
        flat = rng.normal(size=10_007)
        np.testing.assert_array_equal(layout.scatter(layout.gather(flat)), flat)

    def test_single_param(self):
        layout = build_layout(KEY, 1, 2048)
        assert layout.sizes == (1,)
        np.testing.assert_array_equal(layout.perm, [0])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            build_layout(KEY, 0, 2048)


class TestLayoutGeometry:
    def test_starts_and_block_of(self):
        layout = build_layout(KEY, 10_007, 2048)
        starts = layout.starts()
        assert starts[0] == 0
        np.testing.assert_array_equal(np.diff(starts), layout.sizes[:-1])
        for b, (start, size) in enumerate(zip(starts, layout.sizes)):
            assert layout.block_of(int(start)) == b
            assert layout.block_of(int(start) + size - 1) == b
        with pytest.raises(IndexError):
            layout.block_of(10_007)

    def test_size_groups_cover_all_blocks(self):
        layout = build_layout(KEY, 10_007, 2048)
        groups = layout.size_groups()
        assert sum(g.size for g in groups.values()) == layout.block_count
        assert list(groups) == sorted(groups, reverse=True)
        rebuilt = np.sort(np.concatenate(list(groups.values())))
        np.testing.assert_array_equal(rebuilt, np.sort(layout.starts()))

    def test_invalid_construction(self):
        with pytest.raises(ValueError):
            BlockLayout(10, 8, (8, 4), np.arange(10))
        with pytest.raises(ValueError):
            BlockLayout(10, 8, (8, 2), np.arange(9))
