import numpy as np
from scipy.special import softmax

from lib.errors import InvalidParameter
from lib.lm.base import LogProbs


def probability_order(dist: LogProbs) -> np.ndarray:
    """確率の降順、同点はTokenIdの昇順"""
    ids = np.arange(len(dist))
    return np.lexsort((ids, -dist))


def greedy(dist: LogProbs) -> int:
    return int(np.argmax(dist))


def _prefix_until(order: np.ndarray, dist: LogProbs, mass: float) -> np.ndarray:
    cumulative = np.cumsum(np.exp(dist[order]))
    cutoff = int(np.searchsorted(cumulative, mass, side="left")) + 1
    return order[:min(cutoff, len(order))]


def topk_support(dist: LogProbs, k: int) -> np.ndarray:
    if k < 1:
        raise InvalidParameter(f"top-kのkは1以上にしてください。(指定: {k})")
    return probability_order(dist)[:k]


def nucleus_support(dist: LogProbs, p: float) -> np.ndarray:
    """
    確率の高い順に並べ、累積確率がp以上になる最小の接頭辞を返します。

    :param dist: 対数確率
    :param p: 累積確率のしきい値 (0 < p <= 1)
    :return: TokenIdの配列
    """
    if not 0.0 < p <= 1.0:
        raise InvalidParameter(f"nucleusのpは0より大きく1以下です。(指定: {p})")
    return _prefix_until(probability_order(dist), dist, p)


def typical_support(dist: LogProbs, tau_t: float) -> np.ndarray:
    """
    -log p がエントロピーに近い順に並べ、累積確率がtau_t以上になる最小の接頭辞を返します。

    :param dist: 対数確率
    :param tau_t: 累積確率のしきい値 (0 < tau_t <= 1)
    :return: TokenIdの配列
    """
    if not 0.0 < tau_t <= 1.0:
        raise InvalidParameter(f"typicalのtauは0より大きく1以下です。(指定: {tau_t})")
    probs = np.exp(dist)
    finite = np.isfinite(dist)
    entropy = -float(np.sum(probs[finite] * dist[finite]))
    shift = np.full(len(dist), np.inf)
    shift[finite] = np.abs(-dist[finite] - entropy)
    order = np.lexsort((np.arange(len(dist)), shift))
    return _prefix_until(order, dist, tau_t)


def sample_from(dist: LogProbs, support: np.ndarray, rng: np.random.Generator) -> int:
    """
    supportに制限して再正規化した分布からサンプリングします。

    :param dist: 対数確率
    :param support: 候補のTokenId
    :param rng: 乱数生成器
    :return: サンプリングしたTokenId
    """
    probs = softmax(dist[support])
    return int(support[rng.choice(len(support), p=probs)])


def topk_sample(dist: LogProbs, k: int, rng: np.random.Generator) -> int:
    return sample_from(dist, topk_support(dist, k), rng)


def nucleus_sample(dist: LogProbs, p: float, rng: np.random.Generator) -> int:
    return sample_from(dist, nucleus_support(dist, p), rng)


def typical_sample(dist: LogProbs, tau_t: float, rng: np.random.Generator) -> int:
    return sample_from(dist, typical_support(dist, tau_t), rng)
