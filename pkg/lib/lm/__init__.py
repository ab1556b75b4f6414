from lib.lm.base import (  # noqa
    LanguageModel,
    LogProbs,
    apply_temperature,
    is_normalized,
    next_logprobs,
    sequence_logprob
)
from lib.lm.ngram import NGramModel, Smoothing, train_ngram  # noqa
from lib.lm.table import SyntheticTableModel  # noqa
