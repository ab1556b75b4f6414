import numpy as np
import pytest

from lib.decoding.sampling import (
    greedy,
    nucleus_sample,
    nucleus_support,
    topk_sample,
    topk_support,
    typical_sample,
    typical_support
)
from lib.errors import InvalidParameter
from lib.fake import log_dist


def test_greedy_tie():
    assert greedy(np.log(np.array([0.2, 0.4, 0.4]))) == 1


def test_nucleus_support_1():
    assert nucleus_support(log_dist([0.6, 0.3, 0.1]), 0.7).tolist() == [0, 1]


def test_nucleus_full():
    dist = log_dist([0.1, 0.6, 0.3])
    assert sorted(nucleus_support(dist, 1.0).tolist()) == [0, 1, 2]


def test_nucleus_full_samples_everything():
    rng = np.random.default_rng(0)
    dist = log_dist([0.2, 0.5, 0.3])
    seen = {nucleus_sample(dist, 1.0, rng) for _ in range(200)}
    assert seen == {0, 1, 2}


def test_topk_one_is_greedy():
    rng = np.random.default_rng(0)
    dist = log_dist([0.1, 0.5, 0.15, 0.25])
    assert all(topk_sample(dist, 1, rng) == greedy(dist) for _ in range(20))


def test_topk_support():
    assert topk_support(log_dist([0.1, 0.5, 0.15, 0.25]), 2).tolist() == [1, 3]


def test_topk_never_leaves_support():
    rng = np.random.default_rng(1)
    dist = log_dist([0.1, 0.5, 0.15, 0.25])
    assert {topk_sample(dist, 2, rng) for _ in range(200)} <= {1, 3}


def test_zero_probability_never_sampled():
    rng = np.random.default_rng(2)
    dist = log_dist([0.5, 0.0, 0.5])
    assert 1 not in {nucleus_sample(dist, 1.0, rng) for _ in range(200)}


def test_typical_support():
    dist = log_dist([0.5, 0.25, 0.25])
    # エントロピーは 1.5 ln2。-log p との差は 0.5ln2, 0.5ln2, 0.5ln2
    assert typical_support(dist, 0.5).tolist() == [0]
    assert typical_support(dist, 0.6).tolist() == [0, 1]


def test_typical_prefers_typical_tokens():
    dist = log_dist([0.9, 0.05, 0.05])
    # エントロピーは約0.394で、-log 0.9 = 0.105 の方が近い
    assert typical_support(dist, 0.5).tolist() == [0]
    assert typical_support(log_dist([0.4, 0.3, 0.3]), 0.3).tolist()[0] in (1, 2)


def test_seeded_reproducibility():
    dist = log_dist(np.arange(1, 21))
    for sample in (
        lambda rng: topk_sample(dist, 5, rng),
        lambda rng: nucleus_sample(dist, 0.9, rng),
        lambda rng: typical_sample(dist, 0.9, rng)
    ):
        first = [sample(np.random.default_rng(42)) for _ in range(3)]
        rng_a, rng_b = np.random.default_rng(7), np.random.default_rng(7)
        assert [sample(rng_a) for _ in range(50)] == [sample(rng_b) for _ in range(50)]
        assert len(set(first)) == 1


def test_invalid_parameters():
    dist = log_dist([0.5, 0.5])
    with pytest.raises(InvalidParameter):
        topk_support(dist, 0)
    with pytest.raises(InvalidParameter):
        nucleus_support(dist, 0.0)
    with pytest.raises(InvalidParameter):
        nucleus_support(dist, 1.1)
    with pytest.raises(InvalidParameter):
        typical_support(dist, 0.0)
