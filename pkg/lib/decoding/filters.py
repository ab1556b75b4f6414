from dataclasses import dataclass
from typing import Optional, Sequence, Union
import logging

import numpy as np

from lib.decoding.candidates import CandidateSet
from lib.ensemble import (
    SEQUENTIAL,
    AmateurEnsemble,
    TopRank,
    VoteRule,
    consensus_ratio,
    evaluate_candidates,
    top_r_mask
)
from lib.errors import InvalidK, InvalidParameter, NegativeDelta
from lib.lm.base import LogProbs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TopK:
    k: int = 50

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidK(self.k)


@dataclass(frozen=True)
class DeltaMargin:
    delta: float

    def __post_init__(self) -> None:
        if not self.delta >= 0:
            raise NegativeDelta(self.delta)


@dataclass(frozen=True)
class Joint:
    """
    deltaのマージンを満たし、かつ合意率がcr_cap未満の候補だけを残します。

    cr_capが1を超えると合意率の条件は常に真になります。
    """
    delta: float
    cr_cap: float = 1.0
    vote_rule: Optional[VoteRule] = None

    def __post_init__(self) -> None:
        if not self.delta >= 0:
            raise NegativeDelta(self.delta)
        if not self.cr_cap > 0:
            raise InvalidParameter(f"cr_capは正の値にしてください。(指定: {self.cr_cap})")


FilterSpec = Union[TopK, DeltaMargin, Joint]


def sort_descending(dist: LogProbs, ids: np.ndarray) -> np.ndarray:
    """対数確率の降順、同点はTokenIdの昇順に並べます。"""
    return ids[np.lexsort((ids, -dist[ids]))]


def filter_topk(dist: LogProbs, k: int) -> CandidateSet:
    """
    エキスパートの上位k個を候補にします。

    :param dist: エキスパートの対数確率
    :param k: 個数
    :return: 降順に並んだ候補集合
    """
    if k < 1:
        raise InvalidK(k)
    ids = np.flatnonzero(top_r_mask(dist, min(k, len(dist))))
    return CandidateSet.from_ids(dist, sort_descending(dist, ids))


def filter_delta_margin(dist: LogProbs, delta: float) -> CandidateSet:
    """
    最大の対数確率からdelta以内のトークンを候補にします。

    :param dist: エキスパートの対数確率
    :param delta: マージン (math.infで有限の対数確率を持つ全トークン)
    :return: 降順に並んだ候補集合
    """
    if not delta >= 0:
        raise NegativeDelta(delta)
    best = dist.max()
    mask = (dist >= best - delta) & np.isfinite(dist)
    mask[int(np.argmax(dist))] = True
    return CandidateSet.from_ids(dist, sort_descending(dist, np.flatnonzero(mask)))


def filter_joint(dist: LogProbs,
                 delta: float,
                 ensemble: AmateurEnsemble,
                 vote_rule: VoteRule,
                 cr_cap: float,
                 context: Sequence[int],
                 mode: str = SEQUENTIAL) -> CandidateSet:
    """
    マージンの条件と合意率の条件を両方満たす候補を残します。空になる場合はマージンだけの結果を返します。

    :param dist: エキスパートの対数確率
    :param delta: マージン
    :param ensemble: アマチュアの組
    :param vote_rule: 合意率の投票ルール
    :param cr_cap: 合意率の上限 (未満なら残す)
    :param context: 文脈
    :param mode: アマチュアの評価モード
    :return: 候補集合
    """
    if not cr_cap > 0:
        raise InvalidParameter(f"cr_capは正の値にしてください。(指定: {cr_cap})")
    survivors = filter_delta_margin(dist, delta)
    evaluation = evaluate_candidates(ensemble, context, survivors, mode, keep_full=isinstance(vote_rule, TopRank))
    keep = consensus_ratio(evaluation, vote_rule) < cr_cap
    if not keep.any():
        logger.debug("joint filter emptied %d candidates; falling back to the margin set", len(survivors))
        return survivors
    return survivors.subset(keep)


def apply_filter(spec: FilterSpec,
                 dist: LogProbs,
                 ensemble: Optional[AmateurEnsemble] = None,
                 context: Sequence[int] = (),
                 mode: str = SEQUENTIAL,
                 vote_rule: Optional[VoteRule] = None) -> CandidateSet:
    if isinstance(spec, TopK):
        return filter_topk(dist, spec.k)
    if isinstance(spec, DeltaMargin):
        return filter_delta_margin(dist, spec.delta)
    if ensemble is None:
        raise InvalidParameter("Jointフィルタにはアマチュアが必要です。")
    rule = spec.vote_rule or vote_rule or TopRank()
    return filter_joint(dist, spec.delta, ensemble, rule, spec.cr_cap, context, mode)
