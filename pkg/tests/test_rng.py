import numpy as np
import pytest

from tieruns import _rng


def test_draw_is_splitmix64_sequence():
    # first outputs of SplitMix64 seeded with 0
    assert _rng.draw(0, 0) == 0xE220A8397B1DCDAF
    assert _rng.draw(0, 1) == 0x6E789E6AA1B965F4
    assert _rng.draw(0, 2) == 0x06C45D188009454F


def test_array_forms_match_scalar():
    keys = np.array([_rng.substream(99, t, _rng.NOISE) for t in range(50)], dtype=np.uint64)
    assert np.array_equal(keys, _rng.trial_keys(99, np.arange(50), _rng.NOISE))
    draws = _rng.draw_array(keys, np.full(50, 3, dtype=np.uint64))
    assert [int(d) for d in draws] == [_rng.draw(int(k), 3) for k in keys]


def test_substream_path_order_matters():
    assert _rng.substream(1, 2, 3) != _rng.substream(1, 3, 2)
    assert _rng.substream(1, 2) != _rng.substream(2, 1)


def test_uniform_range():
    u = _rng.uniform_array(np.uint64(5), np.arange(100_000, dtype=np.uint64))
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005


def test_normal_moments():
    z = 0.34 * _rng.normal(_rng.substream(2024), 1_000_000)
    assert abs(z.mean()) < 0.002
    assert abs(z.std() - 0.34) < 0.002


def test_normal_odd_length_is_prefix():
    key = _rng.substream(3)
    assert np.array_equal(_rng.normal(key, 7), _rng.normal(key, 8)[:7])


@pytest.mark.parametrize("n", [1, 2, 3, 5, 7])
def test_bounded_in_range(n):
    counter = 0
    seen = set()
    for _ in range(500):
        j, counter = _rng.bounded(11, counter, n)
        seen.add(j)
    assert seen == set(range(n))


def test_fisher_yates_is_permutation():
    for k in range(1, 8):
        assert sorted(_rng.fisher_yates(_rng.substream(k), k)) == list(range(k))
