import numpy as np
import pytest

from halfspace.rng import RngStream, block_sizes, map_blocks


def test_same_key_same_numbers():
    a = RngStream(42, 3).uniform(100)
    b = RngStream(42, 3).uniform(100)
    assert np.array_equal(a, b)


def test_streams_and_children_are_disjoint():
    base = RngStream(42, 3)
    draws = [base.uniform(8), RngStream(42, 4).uniform(8), base.child(0).uniform(8),
             base.child(1).uniform(8), RngStream(43, 3).uniform(8)]
    for i in range(len(draws)):
        for j in range(i + 1, len(draws)):
            assert not np.array_equal(draws[i], draws[j])


def test_negative_index_rejected():
    with pytest.raises(ValueError):
        RngStream(1, -1)


def test_block_sizes():
    assert block_sizes(0) == []
    assert block_sizes(5, 2) == [2, 2, 1]
    assert sum(block_sizes(10_001)) == 10_001


@pytest.mark.parametrize("workers", [1, 2, 5])
def test_map_blocks_independent_of_workers(workers):
    fn = lambda s, m: s.normal(m)
    ref = np.concatenate(map_blocks(fn, 2000, 7, workers=1, block=128))
    got = np.concatenate(map_blocks(fn, 2000, 7, workers=workers, block=128))
    assert np.array_equal(ref, got)
