from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union
import logging

from lib.config import AmateurSpec, ExperimentConfig
from lib.database.database import load_model, save_model
from lib.ensemble import AmateurEnsemble, load_manifest, write_manifest
from lib.errors import IoError, ModelNotFound
from lib.lm.ngram import NGramModel, train_ngram
from lib.vocab import TokenSequence, Vocabulary, build_vocab, tokenize

logger = logging.getLogger(__name__)

EXPERT_FILE = "expert.db"
MANIFEST_FILE = "ensemble.ini"


def amateur_file(label: str) -> str:
    return f"amateur-{label}.db"


def read_documents(path: Union[str, Path]) -> List[str]:
    """
    1行1文書のテキストファイルを読み込みます。空行は無視されます。

    :param path: ファイルのパス
    :return: 文書のリスト
    """
    try:
        with open(path, encoding="utf-8") as f:
            return [line.strip() for line in f if line.strip()]
    except OSError as e:
        raise IoError(f"{path}: {e}")


def encode_documents(documents: Sequence[str], vocab: Vocabulary, order: int) -> List[TokenSequence]:
    """文書ごとに先頭へ<s>をorder-1個、末尾に</s>を付けます。"""
    padding = [vocab.bos] * (order - 1)
    return [padding + tokenize(document, vocab) + [vocab.eos] for document in documents]


def train_amateur(spec: AmateurSpec, config: ExperimentConfig,
                  documents: Sequence[str], vocab: Vocabulary) -> NGramModel:
    if spec.bias:
        documents = read_documents(config.resolve(spec.bias))
        logger.info("amateur %r uses bias corpus %s (%d documents)", spec.label, spec.bias, len(documents))
    corpus = encode_documents(documents, vocab, spec.order)
    return train_ngram(corpus, spec.order, spec.smoothing_spec, vocab, spec.label)


def train_zoo(config: ExperimentConfig) -> List[Path]:
    """
    語彙を作り、エキスパートと全アマチュアを学習して保存します。

    :param config: 実験設定
    :return: 書き出したファイル (モデル, マニフェスト)
    """
    documents = read_documents(config.resolve(config.data.train))
    vocab = build_vocab(documents, config.data.min_count)
    logger.info("vocabulary: %d tokens from %d documents", len(vocab), len(documents))

    zoo_dir = config.zoo_dir
    expert = train_ngram(
        encode_documents(documents, vocab, config.expert.order),
        config.expert.order,
        config.expert.smoothing_spec,
        vocab,
        "expert"
    )
    written = [zoo_dir / EXPERT_FILE]
    save_model(expert, written[0])

    entries = []
    for spec in config.amateurs:
        model = train_amateur(spec, config, documents, vocab)
        path = zoo_dir / amateur_file(spec.label)
        save_model(model, path)
        written.append(path)
        entries.append(dict(path=amateur_file(spec.label), temperature=spec.temperature, label=spec.label))

    manifest = zoo_dir / MANIFEST_FILE
    try:
        write_manifest(manifest, entries)
    except OSError as e:
        raise IoError(f"{manifest}: {e}")
    written.append(manifest)
    return written


@dataclass
class Zoo:
    expert: NGramModel
    ensemble: Optional[AmateurEnsemble]

    @property
    def vocab(self) -> Vocabulary:
        return self.expert.vocab

    def close(self) -> None:
        if self.ensemble is not None:
            self.ensemble.close()


def load_zoo(config: ExperimentConfig, workers: Optional[int] = None) -> Zoo:
    """
    学習済みのエキスパートとアマチュアを読み込みます。

    :param config: 実験設定
    :param workers: parallelモードのワーカー数 (省略時は設定のworkers)
    :return: 読み込んだモデル
    """
    zoo_dir = config.zoo_dir
    expert = load_model(zoo_dir / EXPERT_FILE)
    manifest = zoo_dir / MANIFEST_FILE
    if not manifest.is_file():
        raise ModelNotFound(str(manifest))
    ensemble = None
    if config.amateurs:
        ensemble = load_manifest(manifest, load_model, config.decode.workers if workers is None else workers)
        ensemble.check_vocab(expert.vocab)
    return Zoo(expert, ensemble)
