from typing import Sequence, Union

import numpy as np

from lib.ensemble import DEFAULT_FLOOR
from lib.errors import CrOutOfRange, InvalidParameter

# 候補1つならfloat、候補全体ならnp.ndarray
Score = Union[float, np.ndarray]


def _check_alpha(alpha: float) -> None:
    if not alpha >= 0:
        raise InvalidParameter(f"alphaは0以上にしてください。(指定: {alpha})")


def cd_score(expert_lp: Score, amateur_lp: Score, alpha: float, floor: float = DEFAULT_FLOOR) -> Score:
    """
    アマチュア1つの対比スコア expert_lp - alpha * amateur_lp

    :param expert_lp: エキスパートの対数確率
    :param amateur_lp: アマチュアの対数確率 (floor未満は切り上げ)
    :param alpha: ペナルティの強さ
    :return: スコア
    """
    _check_alpha(alpha)
    return expert_lp - alpha * np.maximum(amateur_lp, floor)


def macd_mean_score(expert_lp: Score,
                    amateur_lps: Sequence[Score],
                    alpha: float,
                    floor: float = DEFAULT_FLOOR) -> Score:
    """
    アマチュアの対数確率の平均をペナルティにしたスコア。K=1ではcd_scoreと一致します。

    amateur_lpsの要素を候補の配列にすれば、全候補のスコアをまとめて計算します。

    :param expert_lp: エキスパートの対数確率
    :param amateur_lps: K個のアマチュアの対数確率 (メンバー順)
    :param alpha: ペナルティの強さ
    :return: スコア
    """
    _check_alpha(alpha)
    if len(amateur_lps) == 0:
        raise InvalidParameter("アマチュアの対数確率が空です。")
    total = np.maximum(amateur_lps[0], floor)
    for lp in amateur_lps[1:]:
        total = total + np.maximum(lp, floor)
    return expert_lp - alpha * (total / len(amateur_lps))


def macd_consensus_score(expert_lp: Score, cr: Score, alpha: float) -> Score:
    """
    合意率をペナルティにしたスコア expert_lp - alpha * cr

    :param expert_lp: エキスパートの対数確率
    :param cr: 合意率 (0以上1以下)
    :param alpha: ペナルティの強さ
    :return: スコア
    """
    _check_alpha(alpha)
    values = np.asarray(cr)
    outside = values[~((values >= 0.0) & (values <= 1.0))]
    if outside.size:
        raise CrOutOfRange(float(outside.flat[0]))
    return expert_lp - alpha * cr
