from dataclasses import dataclass, field
from time import perf_counter
from typing import Any, Dict, List, Optional, Sequence, Tuple
import json
import logging
import math

import numpy as np

from lib.decoding.candidates import CandidateSet
from lib.decoding.filters import apply_filter, filter_topk, Joint
from lib.decoding.sampling import greedy, nucleus_support, sample_from, topk_support, typical_support
from lib.decoding.scoring import cd_score, macd_consensus_score, macd_mean_score
from lib.decoding.strategy import (
    CD,
    DecodeConfig,
    Greedy,
    MacdConsensus,
    MacdMean,
    Nucleus,
    StrategySpec,
    TopKSample,
    Typical,
    beam_width_of,
    is_contrastive,
    is_stochastic
)
from lib.ensemble import (
    DEFAULT_FLOOR,
    SEQUENTIAL,
    AmateurEnsemble,
    TopRank,
    consensus_ratio,
    evaluate_candidates,
    floor_logp,
    mean_amateur_logp
)
from lib.errors import InvalidParameter
from lib.lm.base import LanguageModel, LogProbs
from lib.vocab import TokenSequence

logger = logging.getLogger(__name__)

TRACE_SCHEMA = 1


def _json_float(value: float) -> Optional[float]:
    # JSONは-infを表せない
    return value if math.isfinite(value) else None


@dataclass
class StepTrace:
    """
    1トークン分の記録

    penaltyはCDならアマチュアの対数確率、MacdMeanなら平均、MacdConsensusなら合意率です。
    サンプリング系の戦略ではscoresがNoneになります。
    """
    position: int
    candidates: List[int]
    expert_logp: List[float]
    penalty: Optional[List[float]]
    scores: Optional[List[float]]
    chosen: int
    duration_ms: float
    amateur_ms: float = 0.0

    @property
    def chosen_score(self) -> Optional[float]:
        if self.scores is None:
            return None
        return self.scores[self.candidates.index(self.chosen)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "position": self.position,
            "candidates": self.candidates,
            "expert_logp": [_json_float(x) for x in self.expert_logp],
            "penalty": None if self.penalty is None else [_json_float(x) for x in self.penalty],
            "scores": None if self.scores is None else [_json_float(x) for x in self.scores],
            "chosen": self.chosen,
            "duration_ms": self.duration_ms,
            "amateur_ms": self.amateur_ms
        }


@dataclass
class DecodeTrace:
    strategy: str
    prompt: List[int]
    steps: List[StepTrace] = field(default_factory=list)

    @property
    def generated(self) -> TokenSequence:
        return [step.chosen for step in self.steps]

    @property
    def score(self) -> Optional[float]:
        """選んだトークンのスコアの累積和"""
        total = 0.0
        for step in self.steps:
            value = step.chosen_score
            if value is None:
                return None
            total += value
        return total

    @property
    def duration_ms(self) -> float:
        return sum(step.duration_ms for step in self.steps)

    @property
    def amateur_ms(self) -> float:
        return sum(step.amateur_ms for step in self.steps)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": TRACE_SCHEMA,
            "strategy": self.strategy,
            "prompt": self.prompt,
            "generated": self.generated,
            "steps": [step.to_dict() for step in self.steps]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)


@dataclass(frozen=True)
class ScoredCandidates:
    candidates: CandidateSet
    penalty: Optional[np.ndarray]
    scores: np.ndarray
    amateur_ms: float = 0.0

    def ranking(self) -> np.ndarray:
        """スコアの降順、同点ならエキスパートの対数確率の降順、さらに同点ならTokenIdの昇順"""
        return np.lexsort((self.candidates.ids, -self.candidates.expert_logp, -self.scores))

    def best(self) -> int:
        return int(self.ranking()[0])

    def step_trace(self, position: int, chosen: int, duration_ms: float) -> StepTrace:
        return StepTrace(
            position=position,
            candidates=self.candidates.tolist(),
            expert_logp=[float(x) for x in self.candidates.expert_logp],
            penalty=None if self.penalty is None else [float(x) for x in self.penalty],
            scores=[float(x) for x in self.scores],
            chosen=chosen,
            duration_ms=duration_ms,
            amateur_ms=self.amateur_ms
        )


def score_candidates(dist: LogProbs,
                     ensemble: Optional[AmateurEnsemble],
                     context: Sequence[int],
                     strategy: StrategySpec,
                     mode: str = SEQUENTIAL,
                     floor: float = DEFAULT_FLOOR,
                     width: int = 1) -> ScoredCandidates:
    """
    候補を絞り込み、戦略に従って全候補のスコアを計算します。

    :param dist: エキスパートの対数確率
    :param ensemble: アマチュアの組 (対比系の戦略で必須)
    :param context: 文脈
    :param strategy: Greedy もしくは対比系の戦略
    :param mode: アマチュアの評価モード
    :param floor: アマチュアの-infを切り上げる下限
    :param width: Greedyで残す候補数 (ビーム探索用)
    :return: スコア付きの候補
    """
    if isinstance(strategy, Greedy):
        candidates = filter_topk(dist, width)
        return ScoredCandidates(candidates, None, candidates.expert_logp.copy())
    if not isinstance(strategy, (CD, MacdMean, MacdConsensus)):
        raise InvalidParameter(f"{strategy.name} はスコア計算に対応していません。")
    if ensemble is None:
        raise InvalidParameter(f"{strategy.name} にはアマチュアが必要です。")

    amateur_ms = 0.0
    vote_rule = strategy.vote_rule if isinstance(strategy, MacdConsensus) else None
    start = perf_counter()
    candidates = apply_filter(strategy.filter, dist, ensemble, context, mode, vote_rule)
    if isinstance(strategy.filter, Joint):
        amateur_ms += (perf_counter() - start) * 1000

    start = perf_counter()
    expert_logp = candidates.expert_logp
    penalty: np.ndarray
    if isinstance(strategy, CD):
        amateur_logp = ensemble.member_logprobs(0, context)[candidates.ids]
        amateur_ms += (perf_counter() - start) * 1000
        penalty = floor_logp(amateur_logp, floor)
        scores = cd_score(expert_logp, amateur_logp, strategy.alpha, floor)
    elif isinstance(strategy, MacdMean):
        evaluation = evaluate_candidates(ensemble, context, candidates, mode, keep_full=False)
        amateur_ms += (perf_counter() - start) * 1000
        penalty = mean_amateur_logp(evaluation, floor)
        scores = macd_mean_score(expert_logp, list(evaluation.per_member_logp), strategy.alpha, floor)
    else:
        evaluation = evaluate_candidates(ensemble, context, candidates, mode,
                                         keep_full=isinstance(strategy.vote_rule, TopRank))
        penalty = consensus_ratio(evaluation, strategy.vote_rule)
        amateur_ms += (perf_counter() - start) * 1000
        scores = macd_consensus_score(expert_logp, penalty, strategy.alpha)

    return ScoredCandidates(candidates, penalty, np.asarray(scores, dtype=np.float64), amateur_ms)


def _sample_support(dist: LogProbs, strategy: StrategySpec) -> np.ndarray:
    if isinstance(strategy, TopKSample):
        return topk_support(dist, strategy.k)
    if isinstance(strategy, Nucleus):
        return nucleus_support(dist, strategy.p)
    if isinstance(strategy, Typical):
        return typical_support(dist, strategy.tau_t)
    raise InvalidParameter(f"{strategy.name} はサンプリング戦略ではありません。")


def decode_step(expert: LanguageModel,
                ensemble: Optional[AmateurEnsemble],
                context: Sequence[int],
                strategy: StrategySpec,
                rng: Optional[np.random.Generator] = None,
                mode: str = SEQUENTIAL,
                floor: float = DEFAULT_FLOOR) -> Tuple[int, StepTrace]:
    """
    次のトークンを1つ選びます。

    :param expert: エキスパート
    :param ensemble: アマチュアの組
    :param context: プロンプトを含む文脈
    :param strategy: デコード戦略
    :param rng: サンプリング系の戦略で使う乱数生成器
    :param mode: アマチュアの評価モード
    :param floor: アマチュアの-infを切り上げる下限
    :return: 選んだTokenIdとその記録
    """
    start = perf_counter()
    dist = expert.next_logprobs(context)
    position = len(context)

    if is_stochastic(strategy):
        if rng is None:
            raise InvalidParameter(f"{strategy.name} には乱数生成器が必要です。")
        support = _sample_support(dist, strategy)
        token = sample_from(dist, support, rng)
        trace = StepTrace(
            position=position,
            candidates=[int(i) for i in support],
            expert_logp=[float(x) for x in dist[support]],
            penalty=None,
            scores=None,
            chosen=token,
            duration_ms=(perf_counter() - start) * 1000
        )
        return token, trace

    if isinstance(strategy, Greedy):
        token = greedy(dist)
        scored = ScoredCandidates(CandidateSet.from_ids(dist, np.array([token])), None, dist[[token]])
        return token, scored.step_trace(position, token, (perf_counter() - start) * 1000)

    scored = score_candidates(dist, ensemble, context, strategy, mode, floor)
    token = int(scored.candidates.ids[scored.best()])
    return token, scored.step_trace(position, token, (perf_counter() - start) * 1000)


def _prepare(expert: LanguageModel,
             ensemble: Optional[AmateurEnsemble],
             prompt: Sequence[int],
             config: DecodeConfig) -> int:
    if not prompt:
        raise InvalidParameter("プロンプトが空です。")
    expert.check_context(prompt)
    if is_contrastive(config.strategy):
        if ensemble is None:
            raise InvalidParameter(f"{config.strategy.name} にはアマチュアが必要です。")
        ensemble.check_vocab(expert.vocab)
    return expert.vocab.eos if config.eos is None else config.eos


def decode(expert: LanguageModel,
           ensemble: Optional[AmateurEnsemble],
           prompt: Sequence[int],
           config: DecodeConfig) -> Tuple[TokenSequence, DecodeTrace]:
    """
    終端トークンが出るかmax_new_tokensに達するまでトークンを1つずつ選びます。

    :param expert: エキスパート
    :param ensemble: アマチュアの組 (対比系の戦略で必須)
    :param prompt: 空でないプロンプト
    :param config: デコードの設定
    :return: 生成されたトークン列 (プロンプトを含まない) と記録
    """
    eos = _prepare(expert, ensemble, prompt, config)
    strategy = config.strategy
    rng = np.random.default_rng(strategy.seed) if isinstance(strategy, (TopKSample, Nucleus, Typical)) else None

    context = list(prompt)
    trace = DecodeTrace(strategy.name, list(prompt))
    for _ in range(config.max_new_tokens):
        token, step = decode_step(expert, ensemble, context, strategy, rng, config.ensemble_mode, config.logp_floor)
        context.append(token)
        trace.steps.append(step)
        if token == eos:
            break

    logger.debug("%s: %d tokens in %.1fms", strategy.name, len(trace.steps), trace.duration_ms)
    return trace.generated, trace


@dataclass(frozen=True)
class Hypothesis:
    tokens: Tuple[int, ...]
    score: float
    steps: Tuple[StepTrace, ...] = ()


def decode_beam(expert: LanguageModel,
                ensemble: Optional[AmateurEnsemble],
                prompt: Sequence[int],
                config: DecodeConfig,
                beam_width: Optional[int] = None) -> Tuple[TokenSequence, DecodeTrace]:
    """
    ステップごとのスコアの累積和でビーム探索をします。

    候補の絞り込みは仮説ごとに行います。終端トークンで終わった仮説はビームの枠を使ったまま
    完了扱いになり、最後に完了した仮説と残りの仮説から累積スコアが最大のものを返します。
    幅1の経路(decodeの結果)も比較に加えるので、返す仮説のスコアがそれを下回ることはありません。

    :param expert: エキスパート
    :param ensemble: アマチュアの組
    :param prompt: 空でないプロンプト
    :param config: デコードの設定
    :param beam_width: ビーム幅 (省略時は戦略のbeam_width)
    :return: 生成されたトークン列と、選ばれた仮説の記録
    """
    strategy = config.strategy
    width = beam_width_of(strategy) if beam_width is None else beam_width
    if width < 1:
        raise InvalidParameter(f"ビーム幅は1以上にしてください。(指定: {width})")
    if is_stochastic(strategy):
        if width != 1:
            raise InvalidParameter(f"{strategy.name} はビーム探索に対応していません。")
        return decode(expert, ensemble, prompt, config)

    eos = _prepare(expert, ensemble, prompt, config)
    beams = [Hypothesis((), 0.0)]
    finished: List[Hypothesis] = []
    for t in range(config.max_new_tokens):
        expansions = []
        for rank, hypothesis in enumerate(beams):
            start = perf_counter()
            context = list(prompt) + list(hypothesis.tokens)
            dist = expert.next_logprobs(context)
            scored = score_candidates(dist, ensemble, context, strategy,
                                      config.ensemble_mode, config.logp_floor, width)
            duration_ms = (perf_counter() - start) * 1000
            for m in range(len(scored.candidates)):
                token = int(scored.candidates.ids[m])
                step_score = float(scored.scores[m])
                expert_lp = float(scored.candidates.expert_logp[m])
                key = (-(hypothesis.score + step_score), -step_score, -expert_lp, rank, token)
                expansions.append((key, hypothesis, scored, token, step_score, duration_ms))

        expansions.sort(key=lambda item: item[0])
        beams = []
        for _, hypothesis, scored, token, step_score, duration_ms in expansions[:width]:
            step = scored.step_trace(len(prompt) + t, token, duration_ms)
            child = Hypothesis(hypothesis.tokens + (token,), hypothesis.score + step_score, hypothesis.steps + (step,))
            if token == eos:
                finished.append(child)
            else:
                beams.append(child)
        if not beams:
            break

    greedy_tokens, greedy_trace = decode(expert, ensemble, prompt, config)
    greedy_path = Hypothesis(tuple(greedy_tokens), greedy_trace.score or 0.0, tuple(greedy_trace.steps))
    best = min(finished + beams + [greedy_path], key=lambda h: (-h.score, h.tokens))
    trace = DecodeTrace(strategy.name, list(prompt), list(best.steps))
    logger.debug("%s beam=%d: %d tokens, score %.4f", strategy.name, width, len(best.tokens), best.score)
    return list(best.tokens), trace


def generate(expert: LanguageModel,
             ensemble: Optional[AmateurEnsemble],
             prompt: Sequence[int],
             config: DecodeConfig) -> Tuple[TokenSequence, DecodeTrace]:
    if beam_width_of(config.strategy) > 1:
        return decode_beam(expert, ensemble, prompt, config)
    return decode(expert, ensemble, prompt, config)
