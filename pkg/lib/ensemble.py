from concurrent.futures import ThreadPoolExecutor
from configparser import ConfigParser
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union
import logging

import numpy as np

from lib.decoding.candidates import CandidateSet
from lib.errors import ConfigError, InvalidParameter, MissingFullDistributions, VocabMismatch
from lib.lm.base import LanguageModel, LogProbs, apply_temperature
from lib.vocab import Vocabulary

logger = logging.getLogger(__name__)

SEQUENTIAL = "sequential"
PARALLEL = "parallel"
MODES = (SEQUENTIAL, PARALLEL)

DEFAULT_TEMPERATURE = 0.5
DEFAULT_FLOOR = -30.0


@dataclass(frozen=True)
class Member:
    model: LanguageModel
    temperature: float = DEFAULT_TEMPERATURE
    label: str = ""


@dataclass(frozen=True)
class TopRank:
    """アマチュアの上位r個に入っていれば1票"""
    r: int = 10

    def __post_init__(self) -> None:
        if self.r < 1:
            raise InvalidParameter(f"rは1以上にしてください。(指定: {self.r})")


@dataclass(frozen=True)
class LogProbThreshold:
    """アマチュアの対数確率がtau_cを超えていれば1票"""
    tau_c: float


VoteRule = Union[TopRank, LogProbThreshold]


class AmateurEnsemble:
    """
    K個のアマチュアモデルの組

    メンバーの順番は固定で、集計はこの順番で行います。

    :param members: アマチュアのリスト
    :param workers: parallelモードのワーカー数 (省略時はK)
    """

    def __init__(self, members: Sequence[Member], workers: Optional[int] = None) -> None:
        if not members:
            raise InvalidParameter("アマチュアは1つ以上必要です。")
        self.members = tuple(members)
        self.vocab: Vocabulary = self.members[0].model.vocab
        for member in self.members[1:]:
            if member.model.vocab != self.vocab:
                raise VocabMismatch(f"アマチュア {member.label!r} の語彙が他のメンバーと異なります。")
        self.workers = workers or len(self.members)
        self.executor = ThreadPoolExecutor(max_workers=self.workers)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def K(self) -> int:
        return len(self.members)

    @property
    def labels(self) -> List[str]:
        return [member.label for member in self.members]

    def close(self) -> None:
        self.executor.shutdown(wait=True)

    def check_vocab(self, vocab: Vocabulary) -> None:
        if vocab != self.vocab:
            raise VocabMismatch("エキスパートとアマチュアの語彙が異なります。")

    def head(self, k: int) -> "AmateurEnsemble":
        if not 1 <= k <= self.K:
            raise InvalidParameter(f"先頭{k}個のアマチュアは取り出せません。(K={self.K})")
        return AmateurEnsemble(self.members[:k], self.workers)

    def select(self, indices: Sequence[int]) -> "AmateurEnsemble":
        return AmateurEnsemble([self.members[i] for i in indices], self.workers)

    def member_logprobs(self, index: int, context: Sequence[int]) -> LogProbs:
        member = self.members[index]
        return apply_temperature(member.model.next_logprobs(context), member.temperature)

    def full_logprobs(self, context: Sequence[int], mode: str = SEQUENTIAL) -> List[LogProbs]:
        """
        全メンバーの温度適用後の分布を、メンバー順に返します。

        :param context: 文脈
        :param mode: sequential もしくは parallel
        :return: K個の分布
        """
        query: Callable[[int], LogProbs] = lambda index: self.member_logprobs(index, context)  # noqa: E731
        if mode == SEQUENTIAL:
            return [query(index) for index in range(self.K)]
        if mode == PARALLEL:
            return list(self.executor.map(query, range(self.K)))
        raise InvalidParameter(f"未知のモード: {mode}")


@dataclass(frozen=True)
class AmateurEvaluation:
    """
    K×Mのアマチュア対数確率

    full_distsはTopRankの投票に使う全語彙分布です。
    """
    ids: np.ndarray
    per_member_logp: np.ndarray
    full_dists: Optional[List[LogProbs]] = None

    @property
    def K(self) -> int:
        return int(self.per_member_logp.shape[0])

    @property
    def M(self) -> int:
        return int(self.per_member_logp.shape[1])


def evaluate_candidates(ensemble: AmateurEnsemble,
                        context: Sequence[int],
                        candidates: CandidateSet,
                        mode: str = SEQUENTIAL,
                        keep_full: bool = True) -> AmateurEvaluation:
    """
    候補トークンそれぞれについて、全アマチュアの対数確率を求めます。

    :param ensemble: アマチュアの組
    :param context: 文脈
    :param candidates: 候補集合
    :param mode: sequential もしくは parallel (結果は同一)
    :param keep_full: 全語彙分布を保持するか
    :return: K×Mの評価結果
    """
    if int(candidates.ids.max()) >= len(ensemble.vocab):
        raise VocabMismatch("候補トークンがアマチュアの語彙の範囲外です。")
    dists = ensemble.full_logprobs(context, mode)
    matrix = np.stack([dist[candidates.ids] for dist in dists])
    return AmateurEvaluation(
        ids=candidates.ids,
        per_member_logp=matrix,
        full_dists=dists if keep_full else None
    )


def top_r_mask(logp: LogProbs, r: int) -> np.ndarray:
    """
    対数確率の上位r個を表すマスクを返します。境界の同点はTokenIdの小さい方を優先します。

    :param logp: 全語彙の対数確率
    :param r: 個数
    :return: 長さ|V|のboolマスク
    """
    size = len(logp)
    mask = np.zeros(size, dtype=bool)
    if r >= size:
        mask[:] = True
        return mask
    kth = np.partition(logp, size - r)[size - r]
    above = logp > kth
    mask |= above
    remaining = r - int(above.sum())
    ties = np.flatnonzero(logp == kth)[:remaining]
    mask[ties] = True
    return mask


def count_votes(evaluation: AmateurEvaluation,
                rule: VoteRule,
                full_dists: Optional[List[LogProbs]] = None) -> np.ndarray:
    if isinstance(rule, TopRank):
        dists = full_dists if full_dists is not None else evaluation.full_dists
        if dists is None:
            raise MissingFullDistributions()
        votes = np.zeros(evaluation.M, dtype=np.int64)
        for dist in dists:
            votes += top_r_mask(dist, rule.r)[evaluation.ids]
        return votes
    return (evaluation.per_member_logp > rule.tau_c).sum(axis=0).astype(np.int64)


def consensus_ratio(evaluation: AmateurEvaluation,
                    rule: VoteRule,
                    full_dists: Optional[List[LogProbs]] = None) -> np.ndarray:
    """
    候補ごとの合意率 CR(x) = 票数 / K を返します。

    :param evaluation: アマチュアの評価結果
    :param rule: 投票のルール
    :param full_dists: TopRank用の全語彙分布 (省略時はevaluationのもの)
    :return: 長さMの合意率
    """
    return count_votes(evaluation, rule, full_dists) / evaluation.K


def floor_logp(logp: np.ndarray, floor: float = DEFAULT_FLOOR) -> np.ndarray:
    return np.maximum(logp, floor)


def mean_amateur_logp(evaluation: AmateurEvaluation, floor: float = DEFAULT_FLOOR) -> np.ndarray:
    """
    候補ごとのアマチュア対数確率の平均。-infはfloorに切り上げてから、メンバー順に左から足します。

    :param evaluation: アマチュアの評価結果
    :param floor: 切り上げる下限
    :return: 長さMの平均
    """
    rows = floor_logp(evaluation.per_member_logp, floor)
    total = rows[0].copy()
    for row in rows[1:]:
        total += row
    return total / evaluation.K


def load_manifest(path: Union[str, Path],
                  loader: Callable[[Path], LanguageModel],
                  workers: Optional[int] = None) -> AmateurEnsemble:
    """
    アマチュアのマニフェスト(INI)を読み込みます。

    :param path: マニフェストのパス
    :param loader: モデルファイルを読み込む関数
    :param workers: parallelモードのワーカー数
    :return: 読み込んだアマチュアの組
    """
    path = Path(path)
    parser = ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"{path} を読み込めません。")
    members = []
    for section in parser.sections():
        if not section.startswith("member."):
            continue
        item = parser[section]
        if "path" not in item:
            raise ConfigError(f"[{section}] にpathがありません。")
        model = loader(path.parent / item["path"])
        members.append(Member(
            model=model,
            temperature=item.getfloat("temperature", DEFAULT_TEMPERATURE),
            label=item.get("label", "")
        ))
    logger.info("loaded %d amateurs from %s", len(members), path)
    return AmateurEnsemble(members, workers)


def write_manifest(path: Union[str, Path], entries: Sequence[dict]) -> None:
    """
    :param path: 書き出し先
    :param entries: path, temperature, label を持つ辞書のリスト (メンバー順)
    """
    parser = ConfigParser()
    for i, entry in enumerate(entries):
        parser[f"member.{i}"] = {
            "path": str(entry["path"]),
            "temperature": repr(float(entry["temperature"])),
            "label": str(entry.get("label", ""))
        }
    with open(path, "w", encoding="utf-8") as f:
        parser.write(f)
