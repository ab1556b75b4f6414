from dataclasses import dataclass, field
from typing import Optional, Union

from lib.decoding.filters import FilterSpec, TopK
from lib.ensemble import DEFAULT_FLOOR, MODES, SEQUENTIAL, TopRank, VoteRule
from lib.errors import InvalidK, InvalidParameter


def _check_alpha(alpha: float) -> None:
    if not alpha >= 0:
        raise InvalidParameter(f"alphaは0以上にしてください。(指定: {alpha})")


def _check_beam(width: int) -> None:
    if width < 1:
        raise InvalidParameter(f"ビーム幅は1以上にしてください。(指定: {width})")


@dataclass(frozen=True)
class Greedy:
    name = "greedy"


@dataclass(frozen=True)
class TopKSample:
    k: int
    seed: int
    name = "topk"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidK(self.k)


@dataclass(frozen=True)
class Nucleus:
    p: float
    seed: int
    name = "nucleus"

    def __post_init__(self) -> None:
        if not 0.0 < self.p <= 1.0:
            raise InvalidParameter(f"pは0より大きく1以下です。(指定: {self.p})")


@dataclass(frozen=True)
class Typical:
    tau_t: float
    seed: int
    name = "typical"

    def __post_init__(self) -> None:
        if not 0.0 < self.tau_t <= 1.0:
            raise InvalidParameter(f"tau_tは0より大きく1以下です。(指定: {self.tau_t})")


@dataclass(frozen=True)
class CD:
    """先頭のアマチュア1つだけを使う対比デコーディング"""
    alpha: float = 0.1
    filter: FilterSpec = field(default_factory=TopK)
    beam_width: int = 1
    name = "cd"

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        _check_beam(self.beam_width)


@dataclass(frozen=True)
class MacdMean:
    alpha: float = 0.1
    filter: FilterSpec = field(default_factory=TopK)
    beam_width: int = 1
    name = "macd-mean"

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        _check_beam(self.beam_width)


@dataclass(frozen=True)
class MacdConsensus:
    alpha: float = 0.1
    filter: FilterSpec = field(default_factory=TopK)
    vote_rule: VoteRule = field(default_factory=TopRank)
    beam_width: int = 1
    name = "macd-consensus"

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        _check_beam(self.beam_width)


StrategySpec = Union[Greedy, TopKSample, Nucleus, Typical, CD, MacdMean, MacdConsensus]
Contrastive = Union[CD, MacdMean, MacdConsensus]

STOCHASTIC = (TopKSample, Nucleus, Typical)
CONTRASTIVE = (CD, MacdMean, MacdConsensus)


def is_contrastive(strategy: StrategySpec) -> bool:
    return isinstance(strategy, CONTRASTIVE)


def is_stochastic(strategy: StrategySpec) -> bool:
    return isinstance(strategy, STOCHASTIC)


def beam_width_of(strategy: StrategySpec) -> int:
    if isinstance(strategy, CONTRASTIVE):
        return strategy.beam_width
    return 1


@dataclass(frozen=True)
class DecodeConfig:
    """
    1回のデコードの設定

    :param strategy: デコード戦略
    :param max_new_tokens: 生成する最大トークン数
    :param eos: 終端トークン (Noneならエキスパートの語彙の</s>)
    :param ensemble_mode: アマチュアの評価モード
    :param logp_floor: アマチュアの-infを切り上げる下限
    """
    strategy: StrategySpec
    max_new_tokens: int = 256
    eos: Optional[int] = None
    ensemble_mode: str = SEQUENTIAL
    logp_floor: float = DEFAULT_FLOOR

    def __post_init__(self) -> None:
        if self.max_new_tokens < 1:
            raise InvalidParameter(f"max_new_tokensは1以上にしてください。(指定: {self.max_new_tokens})")
        if self.ensemble_mode not in MODES:
            raise InvalidParameter(f"未知のモード: {self.ensemble_mode}")
