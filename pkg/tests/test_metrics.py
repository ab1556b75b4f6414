import math

import pytest

from lib.errors import InvalidParameter
from lib.fake import chain_model, uniform_model
from lib.metrics import (
    MetricsReport,
    distinct_n,
    diversity,
    expert_nll_per_token,
    mean_report,
    measure,
    ngrams,
    perplexity,
    repetition_rate
)
from lib.vocab import Vocabulary, tokenize

LETTERS = Vocabulary(["a", "b", "c", "d"])


def ids(text):
    return tokenize(text, LETTERS)


def test_distinct_2_1():
    assert abs(distinct_n(ids("a a a a"), 2) - 1 / 3) <= 1e-12


def test_distinct_all_unique():
    assert distinct_n(ids("a b c d"), 2) == 1.0


def test_distinct_too_short():
    assert ngrams(ids("a b"), 3) == []
    assert distinct_n(ids("a b"), 3) == 1.0
    assert distinct_n([], 2) == 1.0


def test_diversity_1():
    assert abs(diversity(ids("a a a a a")) - (1 / 4) * (1 / 3) * (1 / 2)) <= 1e-12


def test_diversity_unique():
    assert diversity(ids("a b c d a c")) == 1.0


def test_repetition_periodic():
    seq = ids(" ".join(["a b c d"] * 8))
    assert repetition_rate(seq, n=4) >= 0.75
    assert repetition_rate(seq, n=4) == pytest.approx(25 / 29)


def test_repetition_none():
    assert repetition_rate(ids("a b c d a b c")) == 0.0
    assert repetition_rate(ids("a b")) == 0.0


def test_repetition_window():
    seq = ids("a b " * 6)
    assert repetition_rate(seq, n=2, window=0) == repetition_rate(seq, n=2, window=2)
    far = ids("a b c d a b")
    assert repetition_rate(far, n=2) == pytest.approx(1 / 5)
    assert repetition_rate(far, n=2, window=2) == 0.0
    with pytest.raises(InvalidParameter):
        repetition_rate(seq, window=-1)


def test_relabel_invariance():
    seq = ids("a b a c a b d a b")
    relabeled = [{0: 3, 1: 0, 2: 1, 3: 2}[x] for x in seq]
    assert diversity(seq) == diversity(relabeled)
    for n in (2, 3, 4):
        assert repetition_rate(seq, n) == repetition_rate(relabeled, n)


def test_ngrams_invalid():
    with pytest.raises(InvalidParameter):
        ngrams([1, 2], 0)


def test_nll_uniform():
    vocab = Vocabulary.synthetic(5)
    assert len(vocab) == 8
    assert expert_nll_per_token(uniform_model(vocab), [0, 1, 2, 3, 4]) == pytest.approx(math.log(8))


def test_nll_deterministic_chain():
    expert = chain_model(LETTERS, {0: 1, 1: 2, 2: 3, 3: 0})
    assert expert_nll_per_token(expert, ids("a b c d a b")) == 0.0


def test_nll_context_len():
    expert = chain_model(LETTERS, {0: 1})
    # 先頭2個は文脈。b→c は一様分布なので ln|V|
    assert expert_nll_per_token(expert, ids("a b c"), context_len=2) == pytest.approx(math.log(len(LETTERS)))


def test_nll_invalid():
    expert = uniform_model(LETTERS)
    with pytest.raises(InvalidParameter):
        expert_nll_per_token(expert, [0])
    with pytest.raises(InvalidParameter):
        expert_nll_per_token(expert, [0, 1], context_len=2)


def test_perplexity():
    assert perplexity(0.0) == 1.0
    assert perplexity(math.log(8)) == pytest.approx(8.0)
    assert perplexity(1000.0) == math.inf


def test_measure():
    expert = uniform_model(LETTERS)
    report = measure(expert, ids("a b"), ids("a a a a a"))
    assert report.distinct[2] == pytest.approx(1 / 4)
    assert report.expert_nll == pytest.approx(math.log(len(LETTERS)))
    assert report.mean_ms is None
    assert measure(expert, ids("a"), []).expert_nll == 0.0


def test_mean_report():
    reports = [
        MetricsReport({2: 1.0, 3: 1.0, 4: 1.0}, 1.0, 0.0, 2.0),
        MetricsReport({2: 0.5, 3: 0.25, 4: 0.0}, 0.0, 0.5, 4.0)
    ]
    mean = mean_report(reports)
    assert mean.distinct == {2: 0.75, 3: 0.625, 4: 0.5}
    assert mean.diversity == 0.5
    assert mean.repetition_rate == 0.25
    assert mean.expert_nll == 3.0
    with pytest.raises(InvalidParameter):
        mean_report([])


def test_report_dict():
    data = MetricsReport({2: 0.5, 3: 0.5, 4: 0.5}, 0.125, 0.0, 1000.0).to_dict()
    assert data["perplexity"] is None
    assert list(data["distinct"]) == ["2", "3", "4"]
