import math

import numpy as np
import pytest

from lib.errors import CorpusTooSmall, InvalidOrder, InvalidParameter, NonPositiveTemperature, VocabMismatch
from lib.fake import chain_model, generate_documents, log_dist, padded, random_table_model, uniform_model
from lib.lm import NGramModel, Smoothing, SyntheticTableModel, apply_temperature, is_normalized, sequence_logprob, \
    train_ngram
from lib.vocab import Vocabulary, build_vocab
from lib.zoo import encode_documents


def small_zoo(order: int, smoothing: Smoothing) -> NGramModel:
    rng = np.random.default_rng(3)
    documents = generate_documents(rng, 60, length=(10, 30), size=40)
    vocab = build_vocab(documents)
    return train_ngram(encode_documents(documents, vocab, order), order, smoothing, vocab)


def test_normalized_random_contexts():
    rng = np.random.default_rng(0)
    models = [
        small_zoo(1, Smoothing.additive(0.01)),
        small_zoo(2, Smoothing.additive(0.0)),
        small_zoo(3, Smoothing.kneser_ney(0.75)),
        small_zoo(4, Smoothing.kneser_ney(0.1)),
        random_table_model(rng, Vocabulary.synthetic(12), zeros=3)
    ]
    for i in range(10000):
        model = models[i % len(models)]
        context = rng.integers(0, len(model.vocab), size=int(rng.integers(0, 6))).tolist()
        assert is_normalized(model.next_logprobs(context))


def test_unigram_frequencies():
    vocab = Vocabulary(["a", "b", "c"])
    corpus = [[0, 0, 1, vocab.eos], [2, 0, vocab.eos]]
    model = train_ngram(corpus, 1, Smoothing.additive(0.0), vocab)
    probs = np.exp(model.next_logprobs([1, 2]))
    assert probs[0] == pytest.approx(3 / 7)
    assert probs[1] == pytest.approx(1 / 7)
    assert probs[2] == pytest.approx(1 / 7)
    assert probs[vocab.eos] == pytest.approx(2 / 7)
    assert probs[vocab.bos] == 0.0


def test_bigram_longest_context():
    vocab = Vocabulary(["a", "b"])
    corpus = [[vocab.bos, 0, 1, 0, 1, vocab.eos]]
    model = train_ngram(corpus, 2, Smoothing.additive(0.0), vocab)
    assert np.exp(model.next_logprobs([0]))[1] == pytest.approx(1.0)
    assert np.exp(model.next_logprobs([1]))[0] == pytest.approx(0.5)


def test_unseen_context_backoff():
    model = small_zoo(3, Smoothing.kneser_ney(0.75))
    dist = model.next_logprobs([model.vocab.unk, model.vocab.unk])
    assert is_normalized(dist)
    assert np.isfinite(dist).all()


def test_corpus_too_small():
    vocab = Vocabulary(["a"])
    with pytest.raises(CorpusTooSmall):
        train_ngram([[vocab.bos, vocab.bos, 0]], 3, Smoothing.additive(0.1), vocab)


def test_invalid_order():
    with pytest.raises(InvalidOrder):
        train_ngram([[0, 0]], 0, Smoothing.additive(0.1), Vocabulary(["a"]))


def test_train_vocab_mismatch():
    with pytest.raises(VocabMismatch):
        train_ngram([[0, 9]], 1, Smoothing.additive(0.1), Vocabulary(["a"]))


def test_context_vocab_mismatch():
    model = uniform_model(Vocabulary.synthetic(3))
    with pytest.raises(VocabMismatch):
        model.next_logprobs([0, 6])


def test_smoothing_range():
    with pytest.raises(InvalidParameter):
        Smoothing.kneser_ney(1.5)
    with pytest.raises(InvalidParameter):
        Smoothing.additive(-0.1)
    with pytest.raises(InvalidParameter):
        Smoothing("witten-bell", 0.1)


def test_temperature_identity():
    dist = log_dist([0.5, 0.3, 0.2])
    assert np.max(np.abs(apply_temperature(dist, 1.0) - dist)) <= 1e-12


def test_temperature_sharpens():
    dist = log_dist([0.5, 0.3, 0.2])
    sharp = apply_temperature(dist, 0.5)
    flat = apply_temperature(dist, 2.0)
    assert is_normalized(sharp) and is_normalized(flat)
    assert sharp[0] > dist[0] > flat[0]
    assert int(np.argmax(sharp)) == 0


def test_temperature_zero_probability():
    dist = log_dist([0.5, 0.5, 0.0])
    assert apply_temperature(dist, 0.5)[2] == -np.inf


def test_temperature_non_positive():
    with pytest.raises(NonPositiveTemperature):
        apply_temperature(log_dist([0.5, 0.5]), 0.0)


def test_sequence_logprob_1():
    vocab = Vocabulary.synthetic(2)
    model = SyntheticTableModel(vocab, {(0,): padded(vocab, [0.25, 0.75])}, default=padded(vocab, [0.5, 0.5]))
    expected = math.log(0.5) + math.log(0.75) + math.log(0.5)
    assert sequence_logprob(model, [0, 1, 0]) == pytest.approx(expected)


def test_sequence_logprob_chain():
    vocab = Vocabulary.synthetic(2)
    model = chain_model(vocab, {0: 1, 1: 0})
    assert sequence_logprob(model, [0, 1, 0, 1]) == pytest.approx(-math.log(len(vocab)))


def test_sequence_logprob_empty():
    with pytest.raises(InvalidParameter):
        sequence_logprob(uniform_model(Vocabulary.synthetic(2)), [])


def test_table_model_rejects_unnormalized():
    vocab = Vocabulary.synthetic(2)
    with pytest.raises(InvalidParameter):
        SyntheticTableModel(vocab, {(0,): np.log(np.full(len(vocab), 0.5))})


def test_table_model_copies_input():
    vocab = Vocabulary.synthetic(2)
    dist = padded(vocab, [0.5, 0.5])
    model = SyntheticTableModel(vocab, {(0,): dist})
    dist[0] = 0.0
    assert model.next_logprobs([0])[0] == pytest.approx(math.log(0.5))
