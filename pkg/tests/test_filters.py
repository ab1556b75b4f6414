import math

import numpy as np
import pytest

from lib.decoding.filters import (
    DeltaMargin,
    Joint,
    TopK,
    apply_filter,
    filter_delta_margin,
    filter_joint,
    filter_topk
)
from lib.ensemble import TopRank
from lib.errors import InvalidK, InvalidParameter, NegativeDelta
from lib.fake import constant_model, ensemble_of, padded
from lib.vocab import Vocabulary

VOCAB = Vocabulary.synthetic(5)


def joint_fixture():
    expert = padded(VOCAB, [0.3, 0.3, 0.3, 0.05, 0.05])
    ensemble = ensemble_of([
        constant_model(VOCAB, padded(VOCAB, [0.05, 0.3, 0.4, 0.15, 0.1])),
        constant_model(VOCAB, padded(VOCAB, [0.05, 0.05, 0.5, 0.3, 0.1])),
        constant_model(VOCAB, padded(VOCAB, [0.05, 0.05, 0.4, 0.1, 0.4]))
    ])
    return expert, ensemble


def test_topk_saturated():
    dist = np.log(np.array([0.1, 0.2, 0.3, 0.4]))
    assert sorted(filter_topk(dist, 10).tolist()) == [0, 1, 2, 3]


def test_topk_1():
    dist = np.log(np.array([0.1, 0.35, 0.05, 0.4, 0.1]))
    candidates = filter_topk(dist, 2)
    assert candidates.tolist() == [3, 1]
    assert np.array_equal(candidates.expert_logp, dist[[3, 1]])


def test_topk_uniform():
    assert filter_topk(np.full(6, -math.log(6)), 3).tolist() == [0, 1, 2]


def test_topk_invalid():
    with pytest.raises(InvalidK):
        filter_topk(np.zeros(3), 0)
    with pytest.raises(InvalidK):
        TopK(0)


def test_delta_zero():
    dist = np.log(np.array([0.4, 0.2, 0.4]))
    assert filter_delta_margin(dist, 0.0).tolist() == [0, 2]


def test_delta_infinite():
    dist = padded(VOCAB, [0.5, 0.2, 0.3])
    assert filter_delta_margin(dist, math.inf).tolist() == [0, 2, 1]


def test_delta_1():
    dist = np.array([-0.5, -1.0, -3.0])
    assert filter_delta_margin(dist, 1.0).tolist() == [0, 1]


def test_delta_contains_argmax():
    rng = np.random.default_rng(2)
    for _ in range(100):
        dist = np.log(rng.dirichlet(np.ones(8)))
        assert int(np.argmax(dist)) in filter_delta_margin(dist, float(rng.uniform(0, 2))).tolist()


def test_delta_negative():
    with pytest.raises(NegativeDelta):
        filter_delta_margin(np.zeros(3), -0.1)
    with pytest.raises(NegativeDelta):
        DeltaMargin(-1.0)


def test_joint_1():
    expert, ensemble = joint_fixture()
    candidates = filter_joint(expert, 0.5, ensemble, TopRank(2), 0.5, [0])
    assert candidates.tolist() == [0, 1]


def test_joint_fallback():
    expert, ensemble = joint_fixture()
    candidates = filter_joint(expert, 0.5, ensemble, TopRank(len(VOCAB)), 0.5, [0])
    assert candidates.tolist() == filter_delta_margin(expert, 0.5).tolist() == [0, 1, 2]


def test_joint_disabled_cap():
    expert, ensemble = joint_fixture()
    candidates = filter_joint(expert, 0.5, ensemble, TopRank(2), 1.0 + 1e-9, [0])
    assert candidates.tolist() == filter_delta_margin(expert, 0.5).tolist()


def test_joint_invalid_cap():
    with pytest.raises(InvalidParameter):
        Joint(0.5, 0.0)


def test_apply_filter():
    expert, ensemble = joint_fixture()
    assert apply_filter(TopK(2), expert).tolist() == [0, 1]
    assert apply_filter(Joint(0.5, 0.5, TopRank(2)), expert, ensemble, [0]).tolist() == [0, 1]
    with pytest.raises(InvalidParameter):
        apply_filter(Joint(0.5, 0.5), expert)


def test_filter_subset():
    rng = np.random.default_rng(4)
    for _ in range(50):
        dist = np.log(rng.dirichlet(np.ones(12)))
        k = int(rng.integers(1, 15))
        ids = filter_topk(dist, k).tolist()
        assert len(ids) == min(k, 12)
        assert set(ids) <= set(range(12))
