from functools import lru_cache
from itertools import product

import numpy as np
import pytest

from lib.decoding.decoder import decode, decode_beam, generate, score_candidates
from lib.decoding.filters import TopK
from lib.decoding.strategy import CD, DecodeConfig, Greedy, MacdConsensus, MacdMean, Nucleus
from lib.ensemble import TopRank
from lib.errors import InvalidParameter
from lib.fake import ensemble_of, padded, random_table_model, toy_zoo, uniform_model
from lib.lm import SyntheticTableModel
from lib.vocab import Vocabulary

ABC = Vocabulary(["a", "b", "c"])


@lru_cache(maxsize=None)
def zoo():
    return toy_zoo(seed=5, prompts=10)


def delayed_reward_model():
    return SyntheticTableModel(ABC, {
        (2,): padded(ABC, [0.6, 0.4, 0.0]),
        (0,): padded(ABC, [0.5, 0.3, 0.2]),
        (1,): padded(ABC, [0.0, 0.0, 1.0])
    })


def exhaustive(expert, ensemble, prompt, strategy, width, steps):
    """幅width以内の候補木を全て展開し、累積スコアが最大の系列を返します。"""
    eos = expert.vocab.eos
    completed = []

    def expand(tokens, score):
        if len(tokens) == steps or (tokens and tokens[-1] == eos):
            completed.append((tokens, score))
            return
        context = list(prompt) + list(tokens)
        scored = score_candidates(expert.next_logprobs(context), ensemble, context, strategy, width=width)
        for token, step_score in zip(scored.candidates.ids, scored.scores):
            expand(tokens + (int(token),), score + float(step_score))

    expand((), 0.0)
    return min(completed, key=lambda item: (-item[1], item[0]))


def test_width_1_is_decode():
    z = zoo()
    strategies = [Greedy(), CD(0.5, TopK(8)), MacdMean(0.3, TopK(8)), MacdConsensus(0.5, TopK(8), TopRank(5))]
    for prompt, strategy in product(z.prompts, strategies):
        config = DecodeConfig(strategy, max_new_tokens=20)
        expected, _ = decode(z.expert, z.ensemble, prompt, config)
        tokens, trace = decode_beam(z.expert, z.ensemble, prompt, config, beam_width=1)
        assert tokens == expected
        assert trace.generated == expected


def test_width_1_sampling_is_decode():
    z = zoo()
    config = DecodeConfig(Nucleus(0.9, seed=4), max_new_tokens=15)
    assert decode_beam(z.expert, None, z.prompts[0], config)[0] == decode(z.expert, None, z.prompts[0], config)[0]


def test_sampling_rejects_wide_beam():
    z = zoo()
    with pytest.raises(InvalidParameter):
        decode_beam(z.expert, None, z.prompts[0], DecodeConfig(Nucleus(0.9, seed=4)), beam_width=2)


def test_invalid_width():
    with pytest.raises(InvalidParameter):
        decode_beam(delayed_reward_model(), None, [2], DecodeConfig(Greedy()), beam_width=0)
    with pytest.raises(InvalidParameter):
        MacdMean(beam_width=0)


def test_delayed_reward():
    expert = delayed_reward_model()
    config = DecodeConfig(Greedy(), max_new_tokens=3)
    greedy_tokens, greedy_trace = decode(expert, None, [2], config)
    tokens, trace = decode_beam(expert, None, [2], config, beam_width=2)
    assert greedy_tokens == [0, 0, 0]
    assert tokens == [1, 2, 0]
    assert trace.score == pytest.approx(np.log(0.4) + np.log(0.6))
    assert trace.score >= greedy_trace.score - 1e-9
    assert [step.position for step in trace.steps] == [1, 2, 3]
    best, score = exhaustive(expert, None, [2], Greedy(), 2, 3)
    assert list(best) == tokens
    assert score == pytest.approx(trace.score)


def pruned_greedy_model():
    """2ステップ目で幅2のビームから幅1の経路が落ち、残った経路が3ステップ目で伸びないモデル"""
    vocab = Vocabulary.synthetic(4)
    uniform = padded(vocab, [0.25, 0.25, 0.25, 0.25])
    return SyntheticTableModel(vocab, {
        (3,): padded(vocab, [0.40, 0.35, 0.25, 0.0]),
        (3, 0): uniform,
        (3, 1): padded(vocab, [0.0, 0.0, 0.5, 0.5]),
        (0, 0): padded(vocab, [1.0, 0.0, 0.0, 0.0])
    }, window=2)


def test_beam_never_below_width_1():
    expert = pruned_greedy_model()
    ensemble = ensemble_of([uniform_model(expert.vocab)])
    for strategy in (Greedy(), MacdMean(0.0, TopK(3))):
        config = DecodeConfig(strategy, max_new_tokens=3)
        greedy_tokens, greedy_trace = decode(expert, ensemble, [3], config)
        tokens, trace = decode_beam(expert, ensemble, [3], config, beam_width=2)
        assert greedy_tokens == [0, 0, 0]
        assert greedy_trace.score == pytest.approx(np.log(0.4) + np.log(0.25))
        assert trace.score >= greedy_trace.score - 1e-9
        assert tokens == greedy_tokens
    ensemble.close()


def test_exhaustive_width():
    rng = np.random.default_rng(13)
    vocab = Vocabulary.synthetic(4)
    k = 3
    for _ in range(20):
        expert = random_table_model(rng, vocab)
        ensemble = ensemble_of([random_table_model(rng, vocab, zeros=2) for _ in range(2)], [0.5, 1.0])
        prompt = [int(rng.integers(0, 4))]
        for strategy in (MacdMean(0.5, TopK(k)), MacdConsensus(0.7, TopK(k), TopRank(2))):
            config = DecodeConfig(strategy, max_new_tokens=3)
            tokens, trace = decode_beam(expert, ensemble, prompt, config, beam_width=k ** 3)
            best, score = exhaustive(expert, ensemble, prompt, strategy, k, 3)
            assert tuple(tokens) == best
            assert trace.score == score
            greedy_score = decode(expert, ensemble, prompt, config)[1].score
            assert trace.score >= greedy_score - 1e-9
        ensemble.close()


def test_generate_uses_beam():
    z = zoo()
    strategy = MacdMean(0.3, TopK(6), beam_width=3)
    config = DecodeConfig(strategy, max_new_tokens=12)
    for prompt in z.prompts[:3]:
        assert generate(z.expert, z.ensemble, prompt, config)[0] \
               == \
               decode_beam(z.expert, z.ensemble, prompt, config)[0]
