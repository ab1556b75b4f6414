from collections import Counter
from typing import Dict, Iterable, List, Sequence

from lib.errors import EmptyCorpus, InvalidParameter

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
SPECIALS = (BOS, EOS, UNK)

TokenSequence = List[int]


def split_words(text: str) -> List[str]:
    return text.lower().split()


class Vocabulary:
    """
    トークン文字列とTokenIdの相互変換表

    通常のトークンが先頭に並び、特殊トークン(<s>, </s>, <unk>)は末尾に置かれます。
    """

    def __init__(self, tokens: Sequence[str]) -> None:
        self.tokens: List[str] = list(tokens)
        for special in SPECIALS:
            if special not in self.tokens:
                self.tokens.append(special)
        self.index: Dict[str, int] = {token: i for i, token in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise InvalidParameter("語彙に重複したトークンがあります。")
        self.bos = self.index[BOS]
        self.eos = self.index[EOS]
        self.unk = self.index[UNK]

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Vocabulary):
            return other.tokens == self.tokens
        return False

    def __hash__(self) -> int:
        return hash(tuple(self.tokens))

    @classmethod
    def synthetic(cls, size: int) -> "Vocabulary":
        """
        w0, w1, ... という名前の通常トークンを持つテスト用の語彙を作ります。

        :param size: 通常トークンの数
        :return: 語彙 (特殊トークンを含めると size + 3)
        """
        return cls([f"w{i}" for i in range(size)])

    def lookup(self, token: str) -> int:
        return self.index.get(token, self.unk)

    def is_special(self, token_id: int) -> bool:
        return token_id in (self.bos, self.eos, self.unk)


def tokenize(text: str, vocab: Vocabulary) -> TokenSequence:
    """
    空白区切りでトークン化します。小文字化され、語彙にない単語は<unk>になります。

    :param text: 入力テキスト
    :param vocab: 語彙
    :return: TokenIdの列
    """
    return [vocab.lookup(word) for word in split_words(text)]


def detokenize(ids: Sequence[int], vocab: Vocabulary) -> str:
    return " ".join(vocab.tokens[i] for i in ids)


def build_vocab(corpus: Iterable[str], min_count: int = 1) -> Vocabulary:
    """
    コーパスから語彙を構築します。

    出現回数の降順、同数なら辞書順に並べます。

    :param corpus: 1行1文書のテキスト
    :param min_count: 語彙に入れる最小出現回数
    :return: 構築した語彙
    """
    if min_count < 1:
        raise InvalidParameter(f"min_countは1以上にしてください。(指定: {min_count})")
    counts: Counter = Counter()
    for line in corpus:
        counts.update(word for word in split_words(line) if word not in SPECIALS)
    if not counts:
        raise EmptyCorpus()

    kept = [(word, count) for word, count in counts.items() if count >= min_count]
    kept.sort(key=lambda item: (-item[1], item[0]))
    return Vocabulary([word for word, _ in kept])
