from dataclasses import dataclass, field
from time import perf_counter
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from more_itertools import windowed

from lib.errors import InvalidParameter
from lib.lm.base import LanguageModel
from lib.vocab import TokenSequence

logger = logging.getLogger(__name__)

DISTINCT_ORDERS = (2, 3, 4)
REPETITION_N = 4


def ngrams(seq: Sequence[int], n: int) -> List[Tuple[int, ...]]:
    if n < 1:
        raise InvalidParameter(f"nは1以上にしてください。(指定: {n})")
    if len(seq) < n:
        return []
    return [tuple(gram) for gram in windowed(seq, n)]  # type: ignore


def distinct_n(seq: Sequence[int], n: int) -> float:
    """
    異なるn-gramの数 / n-gramの総数

    n-gramが1つもない場合は1.0です。

    :param seq: TokenId列
    :param n: n
    :return: 0以上1以下の比率
    """
    grams = ngrams(seq, n)
    if not grams:
        return 1.0
    return len(set(grams)) / len(grams)


def diversity(seq: Sequence[int]) -> float:
    """distinct-2, 3, 4 の積"""
    value = 1.0
    for n in DISTINCT_ORDERS:
        value *= distinct_n(seq, n)
    return value


def repetition_rate(seq: Sequence[int], n: int = REPETITION_N, window: int = 0) -> float:
    """
    それより前に同じn-gramが現れている位置の割合

    :param seq: TokenId列
    :param n: n
    :param window: 直前何個のn-gramを見るか (0なら先頭から全部)
    :return: 0以上1以下の比率
    """
    if window < 0:
        raise InvalidParameter(f"windowは0以上にしてください。(指定: {window})")
    grams = ngrams(seq, n)
    if not grams:
        return 0.0
    repeated = 0
    seen = set()
    for i, gram in enumerate(grams):
        if window:
            if gram in grams[max(0, i - window):i]:
                repeated += 1
        elif gram in seen:
            repeated += 1
        seen.add(gram)
    return repeated / len(grams)


def expert_nll_per_token(expert: LanguageModel, seq: Sequence[int], context_len: int = 1) -> float:
    """
    先頭context_len個を文脈として、残りのトークンの平均負対数尤度(nats)を求めます。

    :param expert: エキスパート
    :param seq: TokenId列 (長さ2以上)
    :param context_len: 予測しない先頭のトークン数 (1以上)
    :return: トークンあたりのNLL
    """
    if len(seq) < 2:
        raise InvalidParameter("NLLの計算には2トークン以上必要です。")
    if not 1 <= context_len < len(seq):
        raise InvalidParameter(f"context_lenは1以上{len(seq)}未満です。(指定: {context_len})")
    expert.check_context(seq)
    total = 0.0
    for t in range(context_len, len(seq)):
        total -= float(expert.next_logprobs(seq[:t])[seq[t]])
    return total / (len(seq) - context_len)


def perplexity(nll: float) -> float:
    if nll > 700:
        return math.inf
    return math.exp(nll)


@dataclass(frozen=True)
class MetricsReport:
    """
    1つの生成結果(もしくはその平均)の指標

    mauveとcoherenceは計算しないので常に空欄です。
    """
    distinct: Dict[int, float]
    diversity: float
    repetition_rate: float
    expert_nll: float
    mean_ms: Optional[float] = None
    total_s: Optional[float] = None
    rel_speed: Optional[float] = None

    @property
    def perplexity(self) -> float:
        return perplexity(self.expert_nll)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "distinct": {str(n): value for n, value in sorted(self.distinct.items())},
            "diversity": self.diversity,
            "repetition_rate": self.repetition_rate,
            "expert_nll": self.expert_nll,
            "perplexity": self.perplexity if math.isfinite(self.perplexity) else None,
            "mean_ms": self.mean_ms,
            "total_s": self.total_s,
            "rel_speed": self.rel_speed
        }


def measure(expert: LanguageModel, prompt: Sequence[int], generated: Sequence[int]) -> MetricsReport:
    """
    生成されたトークン列の指標を計算します。NLLはプロンプトを文脈として計算します。

    :param expert: エキスパート
    :param prompt: プロンプト
    :param generated: 生成されたトークン列
    :return: 指標
    """
    nll = expert_nll_per_token(expert, list(prompt) + list(generated), len(prompt)) if generated else 0.0
    return MetricsReport(
        distinct={n: distinct_n(generated, n) for n in DISTINCT_ORDERS},
        diversity=diversity(generated),
        repetition_rate=repetition_rate(generated),
        expert_nll=nll
    )


def mean_report(reports: Sequence[MetricsReport]) -> MetricsReport:
    """各指標の算術平均 (入力の順に足し合わせます)"""
    if not reports:
        raise InvalidParameter("平均をとる指標がありません。")
    count = len(reports)
    return MetricsReport(
        distinct={n: sum(r.distinct[n] for r in reports) / count for n in DISTINCT_ORDERS},
        diversity=sum(r.diversity for r in reports) / count,
        repetition_rate=sum(r.repetition_rate for r in reports) / count,
        expert_nll=sum(r.expert_nll for r in reports) / count
    )


@dataclass(frozen=True)
class TimingSummary:
    """
    :param per_prompt_ms: 全反復・全プロンプトの所要時間
    :param pass_amateur_ms: 反復ごとのアマチュア評価時間の合計
    """
    per_prompt_ms: List[float]
    pass_amateur_ms: List[float]
    prompts: int
    repetitions: int
    workers: int = 1
    label: str = ""

    @property
    def mean_ms(self) -> float:
        return float(np.mean(self.per_prompt_ms))

    @property
    def std_ms(self) -> float:
        return float(np.std(self.per_prompt_ms))

    @property
    def total_s(self) -> float:
        """1回分(全プロンプト)の平均所要秒数"""
        return float(np.sum(self.per_prompt_ms)) / self.repetitions / 1000

    @property
    def median_amateur_ms(self) -> float:
        return float(np.median(self.pass_amateur_ms))

    def relative_to(self, baseline: "TimingSummary") -> float:
        return self.mean_ms / baseline.mean_ms


# (prompt) -> (生成トークン, 記録)。記録はamateur_msを持つ
Runner = Callable[[Sequence[int]], Tuple[TokenSequence, Any]]


def time_decode(runner: Runner,
                prompts: Sequence[Sequence[int]],
                repetitions: int = 1,
                warmup: int = 1,
                workers: int = 1,
                label: str = "") -> TimingSummary:
    """
    デコードループだけの所要時間を測ります。ウォームアップの実行は集計しません。

    :param runner: プロンプトを1つデコードする関数
    :param prompts: プロンプトのリスト
    :param repetitions: 反復回数
    :param warmup: 最初に捨てる実行回数 (プロンプト単位)
    :param workers: 記録用のワーカー数
    :param label: 記録用の名前
    :return: 集計結果
    """
    if repetitions < 1:
        raise InvalidParameter(f"repetitionsは1以上にしてください。(指定: {repetitions})")
    if not prompts:
        raise InvalidParameter("計測するプロンプトがありません。")

    for prompt in prompts[:warmup]:
        runner(prompt)

    per_prompt_ms: List[float] = []
    pass_amateur_ms: List[float] = []
    for _ in range(repetitions):
        amateur_ms = 0.0
        for prompt in prompts:
            start = perf_counter()
            _, trace = runner(prompt)
            per_prompt_ms.append((perf_counter() - start) * 1000)
            amateur_ms += float(getattr(trace, "amateur_ms", 0.0))
        pass_amateur_ms.append(amateur_ms)

    summary = TimingSummary(per_prompt_ms, pass_amateur_ms, len(prompts), repetitions, workers, label)
    logger.info("timed %s: %.2fms/prompt (sd %.2f) over %d prompts x %d",
                label or "runner", summary.mean_ms, summary.std_ms, len(prompts), repetitions)
    return summary


@dataclass
class Row:
    """レポートの1行"""
    method: str
    domain: str
    report: MetricsReport
    extra: Dict[str, Any] = field(default_factory=dict)
