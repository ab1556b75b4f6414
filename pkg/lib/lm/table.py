from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from lib.errors import InvalidParameter
from lib.lm.base import LanguageModel, LogProbs, is_normalized
from lib.vocab import Vocabulary


class SyntheticTableModel(LanguageModel):
    """
    文脈の末尾window個のトークンから分布を引くだけの決定的なモデル

    登録されていない文脈ではdefaultを返します。テストのオラクル用です。
    """

    def __init__(self,
                 vocab: Vocabulary,
                 table: Dict[Tuple[int, ...], LogProbs],
                 default: Optional[LogProbs] = None,
                 window: int = 1) -> None:
        if window < 0:
            raise InvalidParameter(f"windowは0以上にしてください。(指定: {window})")
        self.vocab = vocab
        self.window = window
        if default is None:
            default = np.full(len(vocab), -np.log(len(vocab)))
        self.table = {key: self._validate(dist) for key, dist in table.items()}
        self.default = self._validate(default)

    def _validate(self, dist: LogProbs) -> LogProbs:
        dist = np.array(dist, dtype=np.float64)
        if dist.shape != (len(self.vocab),):
            raise InvalidParameter(f"分布の長さ{dist.shape}が語彙サイズ{len(self.vocab)}と一致しません。")
        if not is_normalized(dist):
            raise InvalidParameter("分布が正規化されていません。")
        dist.setflags(write=False)
        return dist

    def key(self, context: Sequence[int]) -> Tuple[int, ...]:
        if self.window == 0:
            return ()
        return tuple(context[-self.window:])

    def _next_logprobs(self, context: Sequence[int]) -> LogProbs:
        return self.table.get(self.key(context), self.default)
