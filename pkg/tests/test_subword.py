import logging

import numpy as np
import pytest

from mathgcl.errors import EmptyCorpus
from mathgcl.subword import (NegativeSampler, SkipgramConfig, embed_token,
                             fnv1a, load_table, save_table, token_ngrams,
                             train_subword_skipgram)
from mathgcl.walks import WalkCorpus


def cos(a, b):
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


@pytest.fixture(scope="module")
def cooccurrence_table():
    # A and B always share a window; C and D likewise; A never sees C
    sequences = [["TOKA", "TOKB"]] * 150 + [["TOKC", "TOKD"]] * 150
    corpus = WalkCorpus(sequences, walk_length=1, walks_per_node=1, seed=0)
    return train_subword_skipgram(corpus, SkipgramConfig(seed=42))


def test_vector_dimension_is_100(cooccurrence_table):
    for token in ("TOKA", "TOKB", "TOKC"):
        vec = cooccurrence_table.embed(token)
        assert vec.shape == (100,)
        assert np.isfinite(vec).all()


def test_cooccurring_tokens_closer(cooccurrence_table):
    a = cooccurrence_table.embed("TOKA")
    b = cooccurrence_table.embed("TOKB")
    c = cooccurrence_table.embed("TOKC")
    assert cos(a, b) > cos(a, c)


def test_training_determinism():
    sequences = [["V!a", "REL!NEXT", "V!b"], ["V!b", "REL!NEXT", "V!a"]] * 30
    corpus = WalkCorpus(sequences, 2, 1, 0)
    t1 = train_subword_skipgram(corpus, SkipgramConfig(seed=7, epochs=2))
    t2 = train_subword_skipgram(corpus, SkipgramConfig(seed=7, epochs=2))
    for token in t1.vocab:
        assert np.array_equal(t1.vocab[token], t2.vocab[token])
    t3 = train_subword_skipgram(corpus, SkipgramConfig(seed=8, epochs=2))
    assert any(not np.array_equal(t1.vocab[k], t3.vocab[k]) for k in t1.vocab)


def test_oov_composition_deterministic(cooccurrence_table):
    first = cooccurrence_table.embed("V!qq")
    second = cooccurrence_table.embed("V!qq")
    assert np.array_equal(first, second)
    assert first.shape == (100,)


def test_empty_token_warns(cooccurrence_table, caplog):
    with caplog.at_level(logging.WARNING):
        vec = embed_token(cooccurrence_table, "")
    assert np.array_equal(vec, np.zeros(100))
    assert any("n-grams" in record.message for record in caplog.records)


def test_empty_corpus_rejected():
    with pytest.raises(EmptyCorpus):
        train_subword_skipgram(WalkCorpus([], 1, 1, 0))
    with pytest.raises(EmptyCorpus):
        train_subword_skipgram(WalkCorpus([["x"]], 1, 1, 0), SkipgramConfig(min_count=5))


def test_ngram_extraction():
    grams = token_ngrams("V!a", bucket_space=1000)
    # "<V!a>" has three 3-grams, two 4-grams, one 5-gram
    assert len(grams) == 6
    assert token_ngrams("", 1000) == []
    assert all(0 <= g < 1000 for g in grams)


def test_fnv1a_reference_values():
    # published FNV-1a 32-bit test vectors
    assert fnv1a(b"") == 0x811C9DC5
    assert fnv1a(b"a") == 0xE40C292C
    assert fnv1a(b"foobar") == 0xBF9CF968


def test_negative_sampler_three_quarters_power():
    counts = np.array([1000, 300, 80, 20, 5])
    sampler = NegativeSampler(counts)
    rng = np.random.default_rng(0)
    draws = sampler.draw(rng, 100_000)
    empirical = np.bincount(draws, minlength=5) / 100_000
    expected = counts ** 0.75 / (counts ** 0.75).sum()
    assert (np.abs(empirical - expected) / expected < 0.05).all()


def test_persistence_roundtrip(tmp_path, cooccurrence_table):
    path = tmp_path / "table.mgte"
    save_table(cooccurrence_table, path)
    loaded = load_table(path)
    assert loaded.dim == cooccurrence_table.dim
    assert loaded.bucket_space == cooccurrence_table.bucket_space
    assert set(loaded.vocab) == set(cooccurrence_table.vocab)
    for token in loaded.vocab:
        # float32 round-trip
        assert np.allclose(loaded.vocab[token], cooccurrence_table.vocab[token],
                           atol=1e-6)
    probe = "V!zz"
    assert np.allclose(loaded.embed(probe),
                       np.asarray(cooccurrence_table.embed(probe), dtype=np.float32),
                       atol=1e-6)


def test_save_is_byte_deterministic(tmp_path, cooccurrence_table):
    p1, p2 = tmp_path / "a.mgte", tmp_path / "b.mgte"
    save_table(cooccurrence_table, p1)
    save_table(cooccurrence_table, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_magic_header(tmp_path, cooccurrence_table):
    path = tmp_path / "table.mgte"
    save_table(cooccurrence_table, path)
    assert path.read_bytes()[:4] == b"MGTE"
