from dataclasses import dataclass
from typing import List

import numpy as np

from lib.errors import EmptyCandidateSet, InvalidParameter
from lib.lm.base import LogProbs


@dataclass(frozen=True)
class CandidateSet:
    """
    もっともらしさの制約を通過したトークン集合と、そのエキスパート対数確率

    ids[m] と expert_logp[m] が対応します。
    """
    ids: np.ndarray
    expert_logp: np.ndarray

    def __post_init__(self) -> None:
        if len(self.ids) == 0:
            raise EmptyCandidateSet()
        if len(self.ids) != len(self.expert_logp):
            raise InvalidParameter("idsとexpert_logpの長さが一致しません。")
        if len(np.unique(self.ids)) != len(self.ids):
            raise InvalidParameter("候補に重複したトークンがあります。")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_ids(cls, dist: LogProbs, ids: np.ndarray) -> "CandidateSet":
        ids = np.asarray(ids, dtype=np.int64)
        return cls(ids=ids, expert_logp=dist[ids])

    def subset(self, mask: np.ndarray) -> "CandidateSet":
        return CandidateSet(ids=self.ids[mask], expert_logp=self.expert_logp[mask])

    def tolist(self) -> List[int]:
        return [int(i) for i in self.ids]
