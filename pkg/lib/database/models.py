# type: ignore
from sqlalchemy import (
    Integer,
    Column,
    String,
    Float,
    ForeignKey,
    UniqueConstraint
)

from lib.database.base import Base

FORMAT_VERSION = 1


class ModelInfo(Base):
    __tablename__ = "model_info"

    id = Column(Integer, primary_key=True)
    format_version = Column(Integer, nullable=False, default=FORMAT_VERSION)
    order = Column(Integer, nullable=False)  # n-gramの次数
    smoothing = Column(String, nullable=False)  # additive / kneser-ney
    param = Column(Float, nullable=False)  # λ もしくは ディスカウント
    label = Column(String, nullable=False, default="")


class VocabToken(Base):
    __tablename__ = "vocab_tokens"

    token_id = Column(Integer, primary_key=True, autoincrement=False)
    model_id = Column(Integer, ForeignKey('model_info.id'), nullable=False)
    token = Column(String, nullable=False, unique=True)


class NGramCount(Base):
    __tablename__ = "ngram_counts"
    __table_args__ = (UniqueConstraint('kind', 'level', 'context', 'token_id'), {})

    id = Column(Integer, primary_key=True)
    model_id = Column(Integer, ForeignKey('model_info.id'), nullable=False)

    kind = Column(String, nullable=False)  # raw: 出現回数 / cont: 継続回数
    level = Column(Integer, nullable=False)  # 文脈の長さ
    context = Column(String, nullable=False)  # 空白区切りのTokenId
    token_id = Column(Integer, nullable=False)
    count = Column(Integer, nullable=False)
