from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Tuple, Union
import logging

from sqlalchemy import create_engine, insert
from sqlalchemy.engine import Engine
from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import Session, sessionmaker

from lib.database.base import Base
from lib.database.models import FORMAT_VERSION, ModelInfo, NGramCount, VocabToken
from lib.database.query import select_counts, select_model_info, select_vocab_tokens
from lib.errors import IoError, ModelNotFound
from lib.lm.ngram import CountTable, Levels, NGramModel, Smoothing
from lib.vocab import Vocabulary

logger = logging.getLogger(__name__)

RAW = "raw"
CONTINUATION = "cont"
INSERT_CHUNK = 20000


def encode_context(context: Tuple[int, ...]) -> str:
    return " ".join(str(i) for i in context)


def decode_context(text: str) -> Tuple[int, ...]:
    return tuple(int(i) for i in text.split())


class Database:
    """
    n-gramモデル1つ分のSQLiteファイル

    :param path: ファイルのパス
    """

    def __init__(self, path: Union[str, Path]) -> None:
        self.path = Path(path)
        self.engine: Engine = create_engine(f"sqlite:///{self.path}")
        self.Session = sessionmaker(self.engine, expire_on_commit=False, class_=Session)

    def close(self) -> None:
        self.engine.dispose()

    def create(self) -> None:
        Base.metadata.create_all(self.engine)


def count_rows(kind: str, model_id: int, levels: Levels) -> List[dict]:
    rows = []
    for level, tables in enumerate(levels):
        for context in sorted(tables):
            table = tables[context]
            encoded = encode_context(context)
            for token_id, count in zip(table.ids.tolist(), table.counts.tolist()):
                rows.append(dict(model_id=model_id, kind=kind, level=level, context=encoded,
                                 token_id=token_id, count=int(count)))
    return rows


def save_model(model: NGramModel, path: Union[str, Path]) -> None:
    """
    モデルをファイルに保存します。既存のファイルは上書きされます。

    同じモデルからは同じバイト列のファイルが作られます。

    :param model: 保存するモデル
    :param path: 保存先
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.exists():
            path.unlink()
        db = Database(path)
        db.create()
        with db.Session() as session:
            with session.begin():
                info = ModelInfo(
                    id=1,
                    format_version=FORMAT_VERSION,
                    order=model.order,
                    smoothing=model.smoothing.kind,
                    param=model.smoothing.param,
                    label=model.label
                )
                session.add(info)
                session.flush()
                session.execute(
                    insert(VocabToken),
                    [dict(token_id=i, model_id=1, token=token) for i, token in enumerate(model.vocab.tokens)]
                )
                rows = count_rows(RAW, 1, model.raw) + count_rows(CONTINUATION, 1, model.continuation)
                for start in range(0, len(rows), INSERT_CHUNK):
                    session.execute(insert(NGramCount), rows[start:start + INSERT_CHUNK])
        db.close()
    except (OSError, SQLAlchemyError) as e:
        raise IoError(f"{path}: {e}")
    logger.info("saved %r to %s", model, path)


def load_levels(session: Session, kind: str, size: int) -> Levels:
    grouped: List[Dict[Tuple[int, ...], Dict[int, int]]] = [defaultdict(dict) for _ in range(size)]
    for level, context, token_id, count in session.execute(select_counts(kind)):
        grouped[level][decode_context(context)][token_id] = count
    return [
        {context: CountTable.from_counter(counter) for context, counter in sorted(tables.items())}
        for tables in grouped
    ]


def load_model(path: Union[str, Path]) -> NGramModel:
    """
    ファイルからモデルを読み込みます。

    :param path: モデルファイル
    :return: 読み込んだモデル
    """
    path = Path(path)
    if not path.is_file():
        raise ModelNotFound(str(path))
    db = Database(path)
    try:
        with db.Session() as session:
            info = session.execute(select_model_info()).scalars().first()
            if info is None:
                raise IoError(f"{path}: モデル情報がありません。")
            if info.format_version != FORMAT_VERSION:
                raise IoError(f"{path}: 未対応のフォーマット(version {info.format_version})です。")
            tokens = [token for _, token in session.execute(select_vocab_tokens())]
            raw = load_levels(session, RAW, info.order)
            continuation = load_levels(session, CONTINUATION, info.order - 1)
    except SQLAlchemyError as e:
        raise IoError(f"{path}: {e}")
    finally:
        db.close()

    model = NGramModel(Vocabulary(tokens), info.order, Smoothing(info.smoothing, info.param),
                       raw, continuation, info.label)
    logger.info("loaded %r from %s", model, path)
    return model
