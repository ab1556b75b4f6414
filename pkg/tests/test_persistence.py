import numpy as np
import pytest
from sqlalchemy import update

from lib.database.database import Database, load_model, save_model
from lib.database.models import ModelInfo
from lib.errors import IoError, ModelNotFound
from lib.fake import generate_documents
from lib.lm import Smoothing, train_ngram
from lib.vocab import build_vocab
from lib.zoo import encode_documents


def trained(order=3, smoothing=Smoothing.kneser_ney(0.75)):
    rng = np.random.default_rng(11)
    documents = generate_documents(rng, 40, length=(10, 20), size=30)
    vocab = build_vocab(documents)
    return train_ngram(encode_documents(documents, vocab, order), order, smoothing, vocab, "expert")


def test_round_trip_1(tmp_path):
    model = trained()
    save_model(model, tmp_path / "expert.db")
    loaded = load_model(tmp_path / "expert.db")
    assert loaded.vocab == model.vocab
    assert loaded.order == model.order
    assert loaded.smoothing == model.smoothing
    assert loaded.label == "expert"

    rng = np.random.default_rng(0)
    for _ in range(200):
        context = rng.integers(0, len(model.vocab), size=int(rng.integers(0, 4))).tolist()
        assert np.array_equal(loaded.next_logprobs(context), model.next_logprobs(context))


def test_round_trip_additive(tmp_path):
    model = trained(2, Smoothing.additive(0.01))
    save_model(model, tmp_path / "bigram.db")
    loaded = load_model(tmp_path / "bigram.db")
    assert np.array_equal(loaded.next_logprobs([0]), model.next_logprobs([0]))


def test_byte_identical(tmp_path):
    save_model(trained(), tmp_path / "a.db")
    save_model(trained(), tmp_path / "b.db")
    assert (tmp_path / "a.db").read_bytes() == (tmp_path / "b.db").read_bytes()


def test_overwrite(tmp_path):
    path = tmp_path / "model.db"
    save_model(trained(2), path)
    save_model(trained(3), path)
    assert load_model(path).order == 3


def test_missing_model(tmp_path):
    with pytest.raises(ModelNotFound):
        load_model(tmp_path / "nothing.db")


def test_unsupported_version(tmp_path):
    path = tmp_path / "model.db"
    save_model(trained(), path)
    db = Database(path)
    with db.Session() as session:
        with session.begin():
            session.execute(update(ModelInfo).values(format_version=99))
    db.close()
    with pytest.raises(IoError):
        load_model(path)
