"""
テスト用の合成モデルとコーパス
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from lib.ensemble import AmateurEnsemble, Member
from lib.lm.base import LogProbs
from lib.lm.ngram import NGramModel, Smoothing, train_ngram
from lib.lm.table import SyntheticTableModel
from lib.vocab import TokenSequence, Vocabulary, build_vocab, tokenize
from lib.zoo import encode_documents


def log_dist(probs: Sequence[float]) -> LogProbs:
    """確率(正規化前でもよい)を対数確率にします。0は-infになります。"""
    values = np.asarray(probs, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.log(values / values.sum())


def padded(vocab: Vocabulary, probs: Sequence[float]) -> LogProbs:
    """通常トークンの確率を与え、特殊トークンは確率0にします。"""
    full = np.zeros(len(vocab))
    full[:len(probs)] = probs
    return log_dist(full)


def one_hot(vocab: Vocabulary, token: int) -> LogProbs:
    probs = np.zeros(len(vocab))
    probs[token] = 1.0
    return log_dist(probs)


def random_dist(rng: np.random.Generator, size: int, zeros: int = 0) -> LogProbs:
    """
    ディリクレ分布から対数確率を作ります。

    :param rng: 乱数生成器
    :param size: 語彙サイズ
    :param zeros: 確率0にするトークンの数 (size未満)
    :return: 対数確率
    """
    probs = rng.dirichlet(np.full(size, 0.5))
    if zeros:
        probs[rng.choice(size, size=min(zeros, size - 1), replace=False)] = 0.0
    return log_dist(probs)


def constant_model(vocab: Vocabulary, dist: LogProbs) -> SyntheticTableModel:
    return SyntheticTableModel(vocab, {}, default=dist, window=0)


def uniform_model(vocab: Vocabulary) -> SyntheticTableModel:
    return SyntheticTableModel(vocab, {})


def chain_model(vocab: Vocabulary, successor: Dict[int, int]) -> SyntheticTableModel:
    """直前のトークンから次のトークンが確定するモデル。未登録の文脈では一様分布です。"""
    return SyntheticTableModel(vocab, {(token,): one_hot(vocab, nxt) for token, nxt in successor.items()})


def random_table_model(rng: np.random.Generator, vocab: Vocabulary, zeros: int = 0) -> SyntheticTableModel:
    """直前の1トークンごとにランダムな分布を持つモデル"""
    size = len(vocab)
    table = {(token,): random_dist(rng, size, zeros) for token in range(size)}
    return SyntheticTableModel(vocab, table, default=random_dist(rng, size, zeros))


def ensemble_of(models: Sequence[SyntheticTableModel],
                temperatures: Optional[Sequence[float]] = None,
                workers: Optional[int] = None) -> AmateurEnsemble:
    temperatures = temperatures or [1.0] * len(models)
    return AmateurEnsemble(
        [Member(model, temperature, f"a{i}") for i, (model, temperature) in enumerate(zip(models, temperatures))],
        workers
    )


@dataclass
class OracleInstance:
    """オラクルとの比較に使うランダムな問題"""
    vocab: Vocabulary
    expert: SyntheticTableModel
    amateurs: List[SyntheticTableModel]
    temperatures: List[float]
    context: List[int]
    alpha: float
    k: int
    r: int


def random_instance(rng: np.random.Generator, max_vocab: int = 20, max_amateurs: int = 4) -> OracleInstance:
    """
    語彙20以下、アマチュア4個以下のランダムな問題を作ります。

    分布の一部は確率0を含みます。

    :param rng: 乱数生成器
    :param max_vocab: 語彙サイズの上限 (特殊トークン込み)
    :param max_amateurs: アマチュアの数の上限
    :return: 問題
    """
    vocab = Vocabulary.synthetic(int(rng.integers(1, max_vocab - 2)))
    size = len(vocab)
    zeros = int(rng.integers(0, size // 2 + 1))
    expert = random_table_model(rng, vocab)
    count = int(rng.integers(1, max_amateurs + 1))
    amateurs = [random_table_model(rng, vocab, zeros) for _ in range(count)]
    temperatures = [float(rng.choice([0.5, 1.0, 1.5])) for _ in range(count)]
    context = [int(x) for x in rng.integers(0, size, size=int(rng.integers(1, 5)))]
    return OracleInstance(
        vocab=vocab,
        expert=expert,
        amateurs=amateurs,
        temperatures=temperatures,
        context=context,
        alpha=float(rng.uniform(0.0, 1.0)),
        k=int(rng.integers(1, size + 2)),
        r=int(rng.integers(1, size + 1))
    )


def zipf_source(rng: np.random.Generator,
                size: int,
                successors: int = 8) -> Tuple[List[str], np.ndarray, np.ndarray]:
    """
    語彙の出現頻度がZipf則に従う、疎なマルコフ連鎖の文書生成源を作ります。

    :param rng: 乱数生成器
    :param size: 単語数
    :param successors: 各単語の後に続きうる単語の数
    :return: 単語, 各単語の後続候補 (size×successors), その確率
    """
    words = [f"t{i}" for i in range(size)]
    weights = 1.0 / np.arange(1, size + 1)
    weights /= weights.sum()
    nexts = np.stack([rng.choice(size, size=successors, replace=False, p=weights) for _ in range(size)])
    probs = rng.dirichlet(np.full(successors, 0.7), size=size)
    return words, nexts, probs


def generate_documents(rng: np.random.Generator,
                       documents: int,
                       length: Tuple[int, int] = (40, 120),
                       size: int = 400,
                       source: Optional[Tuple[List[str], np.ndarray, np.ndarray]] = None) -> List[str]:
    """
    合成コーパスの文書を作ります。

    :param rng: 乱数生成器
    :param documents: 文書数
    :param length: 文書の単語数の範囲
    :param size: 単語数 (sourceがない場合)
    :param source: zipf_sourceの戻り値
    :return: 1文書1文字列のリスト
    """
    words, nexts, probs = source or zipf_source(rng, size)
    lines = []
    for _ in range(documents):
        current = int(rng.integers(len(words)))
        tokens = [words[current]]
        for _ in range(int(rng.integers(length[0], length[1]))):
            current = int(nexts[current][rng.choice(len(probs[current]), p=probs[current])])
            tokens.append(words[current])
        lines.append(" ".join(tokens))
    return lines


def write_documents(path: Union[str, Path], lines: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    return path


@dataclass
class ToyZoo:
    expert: NGramModel
    ensemble: AmateurEnsemble
    prompts: List[TokenSequence]

    @property
    def vocab(self) -> Vocabulary:
        return self.expert.vocab


def toy_zoo(seed: int = 0,
            documents: int = 150,
            prompts: int = 20,
            prompt_len: int = 6,
            amateur_orders: Sequence[int] = (1, 2, 2)) -> ToyZoo:
    """
    合成コーパスで学習した小さなn-gramの組

    エキスパートはKneser-Neyの3-gram、アマチュアは加算スムージングです。
    2個目以降の最後のアマチュアはコーパスの前半だけで学習されます。

    :param seed: 乱数のシード
    :param documents: 学習用の文書数
    :param prompts: プロンプトの数 (学習用とは別に生成します)
    :param prompt_len: プロンプトのトークン数
    :param amateur_orders: アマチュアの次数
    :return: エキスパート, アマチュア, プロンプト
    """
    rng = np.random.default_rng(seed)
    source = zipf_source(rng, 60)
    train = generate_documents(rng, documents, length=(15, 40), source=source)
    vocab = build_vocab(train)
    expert = train_ngram(encode_documents(train, vocab, 3), 3, Smoothing.kneser_ney(0.75), vocab, "expert")

    members = []
    last = len(amateur_orders) - 1
    for i, order in enumerate(amateur_orders):
        corpus = train[:len(train) // 2] if 0 < i == last else train
        model = train_ngram(encode_documents(corpus, vocab, order), order, Smoothing.additive(0.01), vocab, f"a{i}")
        members.append(Member(model, 0.5, f"a{i}"))

    held_out = generate_documents(rng, prompts, length=(prompt_len, prompt_len + 5), source=source)
    return ToyZoo(expert, AmateurEnsemble(members), [tokenize(doc, vocab)[:prompt_len] for doc in held_out])
