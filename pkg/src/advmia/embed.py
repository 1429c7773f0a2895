"""Code-to-vector embedding and cosine similarity.

Two embedders share one interface: a deterministic hashing embedder (each
distinct token hashes to a fixed unit vector; a snippet is the mean over
its token sequence) and a client for a remote embedding service.  Both
produce 768-dimensional vectors.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateEmbeddingError, EmptyInputError, ProtocolError, ValidationError
from .seeding import derive_seed

log = logging.getLogger(__name__)

DIM = 768
MAX_TOKENS = 4096

_TOKEN_RE = re.compile(
    r"[A-Za-z_][A-Za-z0-9_]*"          # identifiers / keywords
    r"|\d+(?:\.\d+)?"                  # numbers
    r'|"(?:\\.|[^"\\])*"'              # double-quoted strings
    r"|'(?:\\.|[^'\\])*'"              # single-quoted strings
    r"|[^\s\w]"                        # single operator / punctuation chars
)


@dataclass
class Embedding:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (DIM,):
            raise ValidationError(f"embedding must have dimension {DIM}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("embedding contains non-finite entries")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


@lru_cache(maxsize=200_000)
def _token_vector_cached(seed: int, token: str) -> np.ndarray:
    rng = np.random.default_rng(derive_seed(seed, "token", token))
    vec = rng.standard_normal(DIM)
    return vec / np.linalg.norm(vec)


def embed_hash(text: str, seed: int = 0) -> Embedding:
    """Average-pool fixed pseudo-random unit vectors over the token sequence."""
    if not text.strip():
        raise EmptyInputError("cannot embed empty or whitespace-only text")
    tokens = tokenize(text)
    if len(tokens) > MAX_TOKENS:
        log.warning("truncating input of %d tokens to %d", len(tokens), MAX_TOKENS)
        tokens = tokens[:MAX_TOKENS]
    if not tokens:
        raise EmptyInputError("text contains no embeddable tokens")
    acc = np.zeros(DIM)
    for token in tokens:
        acc += _token_vector_cached(seed, token)
    return Embedding(acc / len(tokens))


def cosine(a: Embedding, b: Embedding) -> float:
    """Cosine similarity of two embeddings, clamped to [-1, 1]."""
    na, nb = a.norm, b.norm
    if na == 0.0 or nb == 0.0:
        raise DegenerateEmbeddingError("cosine of a zero-norm embedding is undefined")
    if a.values is b.values or np.array_equal(a.values, b.values):
        return 1.0  # identical inputs: skip the rounding of dot/norm
    value = float(np.dot(a.values, b.values) / (na * nb))
    return max(-1.0, min(1.0, value))


class HashEmbedder:
    """Deterministic embedder; makes the whole pipeline dependency-free."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def embed(self, text: str) -> Embedding:
        return embed_hash(text, self.seed)


class RemoteEmbedder:
    """Client for an HTTP embedding service (POST /embed {text} -> {vector})."""

    def __init__(self, base_url: str, timeout: float = 30.0, max_attempts: int = 3,
                 backoff: float = 0.25):
        from .victim import post_json  # shared HTTP plumbing

        self._post = post_json
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff

    def embed(self, text: str) -> Embedding:
        payload = self._post(
            f"{self.base_url}/embed",
            {"text": text},
            timeout=self.timeout,
            max_attempts=self.max_attempts,
            backoff=self.backoff,
        )
        if "vector" not in payload:
            raise ProtocolError("embedding response missing field 'vector'")
        vector = payload["vector"]
        if not isinstance(vector, list) or len(vector) != DIM:
            raise ProtocolError(
                f"embedding service returned dimension {len(vector) if isinstance(vector, list) else '?'}, expected {DIM}"
            )
        return Embedding(np.asarray(vector, dtype=np.float64))


def embed_remote(text: str, base_url: str, **kwargs) -> Embedding:
    return RemoteEmbedder(base_url, **kwargs).embed(text)
