from sqlalchemy import select
from sqlalchemy.sql import Select

from lib.database.models import ModelInfo, VocabToken, NGramCount


def select_model_info() -> Select:
    return select(ModelInfo).order_by(ModelInfo.id)


def select_vocab_tokens() -> Select:
    return select(VocabToken.token_id, VocabToken.token).order_by(VocabToken.token_id)


def select_counts(kind: str) -> Select:
    return select(NGramCount.level, NGramCount.context, NGramCount.token_id, NGramCount.count) \
        .where(NGramCount.kind == kind) \
        .order_by(NGramCount.level, NGramCount.context, NGramCount.token_id)
