from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from lib.errors import InvalidParameter, NonPositiveTemperature, VocabMismatch
from lib.vocab import Vocabulary

# 語彙全体に対する自然対数の確率。確率0のトークンは-inf
LogProbs = np.ndarray

NORMALIZATION_TOLERANCE = 1e-6


class LanguageModel:
    """
    自己回帰言語モデルの共通インターフェース

    構築後は不変で、複数スレッドから同時に問い合わせできます。
    """
    vocab: Vocabulary

    def _next_logprobs(self, context: Sequence[int]) -> LogProbs:
        raise NotImplementedError

    def check_context(self, context: Sequence[int]) -> None:
        if not len(context):
            return
        ids = np.asarray(context)
        size = len(self.vocab)
        if ids.min() < 0 or ids.max() >= size:
            bad = int(ids[(ids < 0) | (ids >= size)][0])
            raise VocabMismatch(f"TokenId {bad} は語彙サイズ {size} の範囲外です。")

    def next_logprobs(self, context: Sequence[int]) -> LogProbs:
        """
        文脈に続く次トークンの対数確率を返します。

        :param context: 直前までのTokenId列
        :return: 長さ|V|の正規化済み対数確率
        """
        self.check_context(context)
        return self._next_logprobs(context)


def next_logprobs(model: LanguageModel, context: Sequence[int]) -> LogProbs:
    return model.next_logprobs(context)


def is_normalized(logp: LogProbs, tolerance: float = NORMALIZATION_TOLERANCE) -> bool:
    if np.isnan(logp).any():
        return False
    return bool(abs(logsumexp(logp)) <= tolerance)


def apply_temperature(dist: LogProbs, tau: float) -> LogProbs:
    """
    温度をかけて再正規化します。tau < 1で分布が尖り、tau > 1で平らになります。

    :param dist: 正規化済み対数確率
    :param tau: 温度
    :return: logp / tau を再正規化した対数確率
    """
    if not tau > 0:
        raise NonPositiveTemperature(tau)
    if tau == 1.0:
        return dist
    scaled = dist / tau
    return scaled - logsumexp(scaled)


def sequence_logprob(model: LanguageModel, seq: Sequence[int]) -> float:
    """
    系列の対数尤度 Σ log P(x_t | x_<t) を計算します。先頭トークンは空文脈で評価されます。

    :param model: 言語モデル
    :param seq: TokenId列
    :return: 対数尤度 (nats)
    """
    if not seq:
        raise InvalidParameter("空の系列の対数尤度は定義されません。")
    model.check_context(seq)
    total = 0.0
    for t in range(len(seq)):
        total += float(model.next_logprobs(seq[:t])[seq[t]])
    return total
