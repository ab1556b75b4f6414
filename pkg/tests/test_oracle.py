import numpy as np

from lib.decoding.decoder import decode_step
from lib.decoding.filters import TopK
from lib.decoding.scoring import cd_score, macd_consensus_score, macd_mean_score
from lib.decoding.strategy import CD, MacdConsensus, MacdMean
from lib.ensemble import LogProbThreshold, TopRank
from lib.fake import ensemble_of, random_instance, uniform_model
from lib.lm import apply_temperature

INSTANCES = 1000


def ranked(dist):
    return sorted(range(len(dist)), key=lambda x: (-dist[x], x))


def oracle_scores(expert_dist, amateur_dists, strategy):
    """全候補のスコアを定義どおりに1つずつ計算します。"""
    candidates = ranked(expert_dist)[:strategy.filter.k]
    K = len(amateur_dists)
    scores = {}
    for x in candidates:
        e = float(expert_dist[x])
        if isinstance(strategy, CD):
            scores[x] = cd_score(e, float(amateur_dists[0][x]), strategy.alpha)
        elif isinstance(strategy, MacdMean):
            scores[x] = macd_mean_score(e, [float(dist[x]) for dist in amateur_dists], strategy.alpha)
        elif isinstance(strategy.vote_rule, TopRank):
            votes = sum(x in ranked(dist)[:strategy.vote_rule.r] for dist in amateur_dists)
            scores[x] = macd_consensus_score(e, votes / K, strategy.alpha)
        else:
            votes = sum(float(dist[x]) > strategy.vote_rule.tau_c for dist in amateur_dists)
            scores[x] = macd_consensus_score(e, votes / K, strategy.alpha)
    return scores


def oracle(expert_dist, amateur_dists, strategy):
    scores = oracle_scores(expert_dist, amateur_dists, strategy)
    return max(scores, key=lambda x: (scores[x], expert_dist[x], -x))


def test_oracle_equality():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(INSTANCES):
        instance = random_instance(rng)
        ensemble = ensemble_of(instance.amateurs, instance.temperatures)
        expert_dist = instance.expert.next_logprobs(instance.context)
        amateur_dists = [
            apply_temperature(model.next_logprobs(instance.context), t)
            for model, t in zip(instance.amateurs, instance.temperatures)
        ]
        tau_c = float(rng.uniform(-4.0, -0.5))
        strategies = [
            CD(instance.alpha, TopK(instance.k)),
            MacdMean(instance.alpha, TopK(instance.k)),
            MacdConsensus(instance.alpha, TopK(instance.k), TopRank(instance.r)),
            MacdConsensus(instance.alpha, TopK(instance.k), LogProbThreshold(tau_c))
        ]
        for strategy in strategies:
            token, step = decode_step(instance.expert, ensemble, instance.context, strategy)
            assert token == oracle(expert_dist, amateur_dists, strategy)
            expected = oracle_scores(expert_dist, amateur_dists, strategy)
            assert sorted(step.candidates) == sorted(expected)
            for x, score in zip(step.candidates, step.scores):
                assert abs(score - expected[x]) <= 1e-12
            checked += 1
        ensemble.close()
    assert checked == 4 * INSTANCES


def test_oracle_with_equal_expert_scores():
    # エキスパートが一様なら同点の解消規則がそのまま効く
    rng = np.random.default_rng(7)
    for _ in range(100):
        instance = random_instance(rng)
        uniform = uniform_model(instance.vocab)
        ensemble = ensemble_of(instance.amateurs, instance.temperatures)
        expert_dist = uniform.next_logprobs(instance.context)
        amateur_dists = [
            apply_temperature(model.next_logprobs(instance.context), t)
            for model, t in zip(instance.amateurs, instance.temperatures)
        ]
        strategy = MacdConsensus(instance.alpha, TopK(instance.k), TopRank(instance.r))
        token, _ = decode_step(uniform, ensemble, instance.context, strategy)
        assert token == oracle(expert_dist, amateur_dists, strategy)
        ensemble.close()
