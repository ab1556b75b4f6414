from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import DefaultDict, Dict, Iterable, List, Sequence, Tuple
import logging

import numpy as np

from lib.errors import CorpusTooSmall, InvalidOrder, InvalidParameter, VocabMismatch
from lib.lm.base import LanguageModel, LogProbs
from lib.vocab import Vocabulary

logger = logging.getLogger(__name__)

ADDITIVE = "additive"
KNESER_NEY = "kneser-ney"

Context = Tuple[int, ...]


@dataclass(frozen=True)
class Smoothing:
    kind: str
    param: float

    def __post_init__(self) -> None:
        if self.kind == ADDITIVE:
            if self.param < 0:
                raise InvalidParameter(f"加算スムージングのλは0以上にしてください。(指定: {self.param})")
        elif self.kind == KNESER_NEY:
            if not 0.0 <= self.param <= 1.0:
                raise InvalidParameter(f"Kneser-Neyのディスカウントは0以上1以下です。(指定: {self.param})")
        else:
            raise InvalidParameter(f"未知のスムージング: {self.kind}")

    @classmethod
    def additive(cls, lam: float = 0.01) -> "Smoothing":
        return cls(ADDITIVE, lam)

    @classmethod
    def kneser_ney(cls, discount: float = 0.75) -> "Smoothing":
        return cls(KNESER_NEY, discount)


@dataclass(frozen=True)
class CountTable:
    """ある文脈に続くトークンの出現回数 (idsは昇順)"""
    ids: np.ndarray
    counts: np.ndarray
    total: float

    @classmethod
    def from_counter(cls, counter: Dict[int, int]) -> "CountTable":
        ids = np.array(sorted(counter), dtype=np.int64)
        counts = np.array([counter[i] for i in ids], dtype=np.float64)
        return cls(ids=ids, counts=counts, total=float(counts.sum()))


# levels[h] は長さhの文脈から CountTable への辞書
Levels = List[Dict[Context, CountTable]]


class NGramModel(LanguageModel):
    """
    バックオフ付きのn-gram言語モデル

    加算スムージングでは観測済みの最長の文脈で推定し、
    Kneser-Neyでは低次の継続回数分布と補間します。
    """

    def __init__(self,
                 vocab: Vocabulary,
                 order: int,
                 smoothing: Smoothing,
                 raw: Levels,
                 continuation: Levels,
                 label: str = "") -> None:
        if order < 1:
            raise InvalidOrder(order)
        if len(raw) != order:
            raise InvalidParameter(f"カウント表の段数({len(raw)})が次数({order})と一致しません。")
        self.vocab = vocab
        self.order = order
        self.smoothing = smoothing
        self.raw = raw
        self.continuation = continuation
        self.label = label
        self._base = self._base_probs()

    def __repr__(self) -> str:
        return f"<NGramModel order={self.order} smoothing={self.smoothing.kind}({self.smoothing.param}) label={self.label!r}>"

    def trailing(self, context: Sequence[int]) -> Context:
        if self.order == 1:
            return ()
        return tuple(context[-(self.order - 1):])

    def _scatter(self, table: CountTable, fill: float) -> np.ndarray:
        probs = np.full(len(self.vocab), fill, dtype=np.float64)
        probs[table.ids] += table.counts
        return probs

    def _base_probs(self) -> np.ndarray:
        """Kneser-Neyの最下段 (一様分布と補間したユニグラム)"""
        if self.smoothing.kind != KNESER_NEY:
            return np.empty(0)
        table = None
        if self.order > 1 and self.continuation:
            table = self.continuation[0].get(())
        if table is None:
            table = self.raw[0][()]
        return self._interpolate(table, np.full(len(self.vocab), 1.0 / len(self.vocab)))

    def _interpolate(self, table: CountTable, lower: np.ndarray) -> np.ndarray:
        discount = self.smoothing.param
        probs = np.zeros(len(self.vocab), dtype=np.float64)
        probs[table.ids] = table.counts - discount
        probs /= table.total
        probs += (discount * len(table.ids) / table.total) * lower
        return probs

    def _additive(self, context: Context) -> np.ndarray:
        lam = self.smoothing.param
        for h in range(len(context), -1, -1):
            table = self.raw[h].get(context[len(context) - h:])
            if table is None:
                continue
            probs = self._scatter(table, lam)
            return probs / (table.total + lam * len(self.vocab))
        raise CorpusTooSmall("ユニグラムのカウントがありません。")

    def _kneser_ney(self, context: Context) -> np.ndarray:
        probs = self._base
        for h in range(1, len(context) + 1):
            levels = self.raw if h == self.order - 1 else self.continuation
            table = levels[h].get(context[len(context) - h:])
            if table is None:
                continue
            probs = self._interpolate(table, probs)
        return probs

    def _next_logprobs(self, context: Sequence[int]) -> LogProbs:
        trailing = self.trailing(context)
        if self.smoothing.kind == ADDITIVE:
            probs = self._additive(trailing)
        else:
            probs = self._kneser_ney(trailing)
        with np.errstate(divide="ignore"):
            return np.log(probs)


def _freeze(counters: List[DefaultDict[Context, Counter]]) -> Levels:
    return [
        {context: CountTable.from_counter(counter) for context, counter in sorted(level.items())}
        for level in counters
    ]


def train_ngram(corpus: Iterable[Sequence[int]],
                order: int,
                smoothing: Smoothing,
                vocab: Vocabulary,
                label: str = "") -> NGramModel:
    """
    n-gramモデルを学習します。

    各系列の全位置を予測対象として数えます。ただし<s>は文脈としてのみ扱います。

    :param corpus: TokenId列の列 (1文書1系列)
    :param order: 次数 (1でユニグラム)
    :param smoothing: スムージングの指定
    :param vocab: 語彙
    :param label: モデルのラベル
    :return: 学習したモデル
    """
    if order < 1:
        raise InvalidOrder(order)

    size = len(vocab)
    raw: List[DefaultDict[Context, Counter]] = [defaultdict(Counter) for _ in range(order)]
    targets = 0
    for seq in corpus:
        seq = list(seq)
        for i, token in enumerate(seq):
            if not 0 <= token < size:
                raise VocabMismatch(f"TokenId {token} は語彙サイズ {size} の範囲外です。")
            if token == vocab.bos:
                continue
            targets += 1
            for h in range(min(order - 1, i) + 1):
                raw[h][tuple(seq[i - h:i])][token] += 1

    if targets < order:
        raise CorpusTooSmall(f"予測対象のトークンが{targets}個しかありません。(次数: {order})")

    continuation: List[DefaultDict[Context, Counter]] = [defaultdict(Counter) for _ in range(order - 1)]
    for h in range(order - 1):
        for context, counter in raw[h + 1].items():
            lower = continuation[h][context[1:]]
            for token in counter:
                lower[token] += 1

    logger.info("trained %d-gram model %r on %d tokens (%d contexts at top level)",
                order, label, targets, len(raw[-1]))
    return NGramModel(vocab, order, smoothing, _freeze(raw), _freeze(continuation), label)
