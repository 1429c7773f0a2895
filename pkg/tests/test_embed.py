"""Hashing embedder, cosine similarity, and the remote embedding client."""

import math

import numpy as np
import pytest
from helpers import LocalServer

from advmia.embed import DIM, Embedding, HashEmbedder, RemoteEmbedder, cosine, embed_hash
from advmia.errors import (
    DegenerateEmbeddingError,
    EmptyInputError,
    ProtocolError,
    ValidationError,
)


def unit(index):
    values = np.zeros(DIM)
    values[index] = 1.0
    return Embedding(values)


def test_embedding_enforces_dimension():
    with pytest.raises(ValidationError):
        Embedding(np.zeros(512))


def test_embedding_rejects_non_finite():
    values = np.zeros(DIM)
    values[3] = np.nan
    with pytest.raises(ValidationError):
        Embedding(values)


def test_embed_hash_deterministic():
    a = embed_hash("def f(x): return x", seed=3)
    b = embed_hash("def f(x): return x", seed=3)
    assert np.array_equal(a.values, b.values)
    c = embed_hash("def f(x): return x", seed=4)
    assert not np.array_equal(a.values, c.values)


def test_embed_hash_order_invariant():
    # mean pooling ignores token order
    a = embed_hash("alpha beta", seed=0)
    b = embed_hash("beta alpha", seed=0)
    assert np.allclose(a.values, b.values)


def test_embed_hash_single_token_is_unit():
    e = embed_hash("lonely", seed=0)
    assert abs(e.norm - 1.0) < 1e-12


def test_embed_hash_norm_at_most_one():
    for text in ("a b c", "x = 1\ny = x + 2", '"s" + \'t\''):
        assert embed_hash(text, seed=1).norm <= 1.0 + 1e-12


def test_embed_hash_rejects_empty():
    with pytest.raises(EmptyInputError):
        embed_hash("   \n", seed=0)


def test_cosine_identity_and_orthogonal():
    v = embed_hash("x = 1", seed=0)
    assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)
    assert cosine(unit(0), unit(1)) == pytest.approx(0.0, abs=1e-12)


def test_cosine_hand_case():
    a = unit(0)
    values = np.zeros(DIM)
    values[0] = 1.0
    values[1] = 1.0
    b = Embedding(values)
    # oracle: (1*1 + 0*1) / (1 * sqrt(2))
    expected = 1.0 / math.sqrt(2.0)
    assert cosine(a, b) == pytest.approx(expected, abs=1e-9)
    assert round(cosine(a, b), 8) == 0.70710678


def test_cosine_symmetric_and_scale_invariant():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = Embedding(rng.standard_normal(DIM))
        b = Embedding(rng.standard_normal(DIM))
        assert abs(cosine(a, b) - cosine(b, a)) < 1e-12
        scaled = Embedding(a.values * 37.5)
        assert cosine(scaled, b) == pytest.approx(cosine(a, b), abs=1e-9)


def test_cosine_zero_norm_errors():
    with pytest.raises(DegenerateEmbeddingError):
        cosine(Embedding(np.zeros(DIM)), unit(0))


def test_cosine_clamped():
    v = unit(5)
    neg = Embedding(-v.values)
    assert cosine(v, neg) == -1.0


def test_hash_embedder_wraps_embed_hash():
    embedder = HashEmbedder(seed=9)
    assert np.array_equal(embedder.embed("q = 1").values, embed_hash("q = 1", seed=9).values)


def test_remote_embedder_accepts_valid_vector():
    vector = [0.25] * DIM
    with LocalServer({"/embed": lambda body: (200, {"vector": vector})}) as server:
        e = RemoteEmbedder(server.url).embed("anything")
        assert e.values.shape == (DIM,)
        assert e.values[0] == 0.25


def test_remote_embedder_rejects_wrong_dimension():
    with LocalServer({"/embed": lambda body: (200, {"vector": [0.1] * 512})}) as server:
        with pytest.raises(ProtocolError, match="512"):
            RemoteEmbedder(server.url).embed("x")


def test_remote_embedder_rejects_non_finite():
    vector = [0.0] * DIM
    vector[7] = float("nan")
    with LocalServer({"/embed": lambda body: (200, {"vector": vector})}) as server:
        with pytest.raises(ValidationError):
            RemoteEmbedder(server.url).embed("x")
