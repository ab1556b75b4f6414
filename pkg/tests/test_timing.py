from types import SimpleNamespace

import pytest

from lib.decoding.decoder import decode
from lib.decoding.filters import TopK
from lib.decoding.strategy import DecodeConfig, Greedy, MacdMean
from lib.ensemble import AmateurEnsemble, Member
from lib.errors import InvalidParameter
from lib.fake import toy_zoo
from lib.metrics import time_decode


def test_time_decode_counts():
    calls = []

    def runner(prompt):
        calls.append(list(prompt))
        return [], SimpleNamespace(amateur_ms=2.0)

    prompts = [[1], [2], [3]]
    summary = time_decode(runner, prompts, repetitions=4, warmup=1, label="fake")
    assert len(calls) == 1 + 3 * 4
    assert len(summary.per_prompt_ms) == 12
    assert summary.pass_amateur_ms == [6.0] * 4
    assert summary.median_amateur_ms == 6.0
    assert summary.prompts == 3
    assert summary.repetitions == 4
    assert summary.relative_to(summary) == 1.0


def test_time_decode_invalid():
    with pytest.raises(InvalidParameter):
        time_decode(lambda prompt: ([], None), [[1]], repetitions=0)
    with pytest.raises(InvalidParameter):
        time_decode(lambda prompt: ([], None), [])


def test_greedy_has_no_amateur_time():
    z = toy_zoo(seed=3, prompts=5)
    config = DecodeConfig(Greedy(), max_new_tokens=10)
    summary = time_decode(lambda prompt: decode(z.expert, None, prompt, config), z.prompts, repetitions=2)
    assert summary.median_amateur_ms == 0.0
    assert summary.mean_ms > 0.0
    assert summary.total_s > 0.0


def test_sequential_cost_scales_with_k():
    z = toy_zoo(seed=3, prompts=10)
    member = Member(z.expert, 0.5, "same")
    config = DecodeConfig(MacdMean(0.1, TopK(10)), max_new_tokens=40)

    def amateur_ms(k):
        ensemble = AmateurEnsemble([member] * k)
        summary = time_decode(lambda prompt: decode(z.expert, ensemble, prompt, config), z.prompts,
                              repetitions=5, warmup=2)
        ensemble.close()
        return summary.median_amateur_ms

    ratio = amateur_ms(4) / amateur_ms(1)
    assert 2.5 <= ratio <= 6.0
