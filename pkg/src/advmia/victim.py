"""Black-box access to the completion model under audit.

Two victims share one interface: ``complete`` (greedy completion with
per-token log-probabilities) and ``score`` (teacher-forcing
log-probabilities for arbitrary text, used by the perplexity-rank
baseline).

The simulator is a deterministic test double encoding the behavioral
contrast the attack exploits: a memorized sample produces the *same*
slightly-noised completion for its original prefix and all perturbed
variants, while a non-memorized sample's output is resampled per prompt
string, so perturbations visibly destabilize it.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from random import Random

import requests

from .corpus import Corpus
from .errors import (
    ProtocolError,
    TransportError,
    UnsupportedCapabilityError,
    ValidationError,
)
from .perturb import DEAD_LOOP_HEADERS, FALSE_PREDICATES
from .seeding import derive_seed


@dataclass
class CompletionRecord:
    prompt_id: str
    text: str
    tokens: list[str]
    token_logprobs: list[float]

    def validate(self):
        if len(self.tokens) != len(self.token_logprobs):
            raise ValidationError(
                f"{self.prompt_id!r}: {len(self.tokens)} tokens but "
                f"{len(self.token_logprobs)} log-probabilities"
            )
        for lp in self.token_logprobs:
            if lp > 0:
                raise ValidationError(f"{self.prompt_id!r}: positive log-probability {lp!r}")

    def to_dict(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "text": self.text,
            "tokens": self.tokens,
            "token_logprobs": self.token_logprobs,
        }


@dataclass
class SimVictimConfig:
    memorized_ids: set[str] = field(default_factory=set)
    member_noise: float = 0.02
    nonmember_noise: float = 0.30
    member_logprob: float = -0.6
    nonmember_logprob: float = -0.6
    jitter: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.memorized_ids = set(self.memorized_ids)
        if not 0 <= self.member_noise <= 1 or not 0 <= self.nonmember_noise <= 1:
            raise ValidationError("noise rates must be in [0, 1]")
        if self.member_noise >= self.nonmember_noise:
            raise ValidationError("member_noise must be strictly below nonmember_noise")
        if self.member_logprob > 0 or self.nonmember_logprob > 0:
            raise ValidationError("log-probability levels must be <= 0")
        if self.jitter < 0:
            raise ValidationError("jitter must be >= 0")


# ---------------------------------------------------------------------------
# Prompt canonicalization for the simulator
# ---------------------------------------------------------------------------

_DEAD_HEADERS = frozenset(
    [f"if {pred}:" for pred in FALSE_PREDICATES] + list(DEAD_LOOP_HEADERS)
)
_RENAME_UNDO_RE = re.compile(r"\b([A-Za-z_][A-Za-z0-9_]*)_\d{4}\b")
_PRINT_LINE_RE = re.compile(r"^print\(.*\)$")
_SIMPLE_DECL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*\s*=\s*(?:[A-Za-z_][A-Za-z0-9_]*|-?\d+)$")
_WORD_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

_REPLACEMENT_WORDS = (
    "alpha", "beta", "gamma", "delta", "omega", "sigma",
    "kappa", "theta", "zeta", "lumen", "pivot", "quark",
)


def canonical_skeleton(text: str) -> str:
    """Collapse a (possibly perturbed) prompt to a transform-invariant key.

    Drops lines matching the injectable templates (dead branches/loops and
    their bodies, print statements, one-term declarations), undoes
    ``name_<4 digits>`` renames, and strips indentation.  Applied to both
    the registered prefixes and incoming prompts, so over-matching removes
    the same lines on both sides.
    """
    lines = text.split("\n")
    kept: list[str] = []
    skip_next = False
    for line in lines:
        if skip_next:
            skip_next = False
            continue
        stripped = line.strip()
        if stripped in _DEAD_HEADERS:
            skip_next = True
            continue
        stripped = _RENAME_UNDO_RE.sub(r"\1", stripped)
        if not stripped:
            continue
        if _PRINT_LINE_RE.match(stripped) or _SIMPLE_DECL_RE.match(stripped):
            continue
        kept.append(stripped)
    return "\n".join(kept)


def _word_spans(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in re.finditer(r"\w+", text)]


class SimulatedVictim:
    """Deterministic victim with configurable member/non-member stability."""

    def __init__(self, config: SimVictimConfig, corpus: Corpus):
        unknown = config.memorized_ids - set(corpus.ids())
        if unknown:
            raise ValidationError(f"memorized ids not in corpus: {sorted(unknown)[:5]}")
        self.config = config
        self.corpus = corpus
        self._by_prompt_key: dict[str, str] = {}
        self._by_score_key: dict[str, str] = {}
        for sample in corpus.samples:
            self._by_prompt_key.setdefault(canonical_skeleton(sample.prefix), sample.id)
            for key_text in (
                sample.suffix,
                sample.prefix,
                sample.prefix + "\n" + sample.suffix,
                sample.prefix + sample.suffix,
            ):
                self._by_score_key.setdefault(canonical_skeleton(key_text), sample.id)

    # -- internals ---------------------------------------------------------

    def _corrupt(self, text: str, rate: float, key: tuple) -> str:
        rng = Random(derive_seed(self.config.seed, "noise", *key))
        out = []
        cursor = 0
        for start, end in _word_spans(text):
            out.append(text[cursor:start])
            token = text[start:end]
            if rng.random() < rate:
                token = rng.choice(_REPLACEMENT_WORDS)
            out.append(token)
            cursor = end
        out.append(text[cursor:])
        return "".join(out)

    def _logprobs(self, n: int, level: float, key: tuple) -> list[float]:
        rng = Random(derive_seed(self.config.seed, "lp", *key))
        jitter = self.config.jitter
        return [min(0.0, level + jitter * rng.uniform(-1.0, 1.0)) for _ in range(n)]

    # -- public surface ------------------------------------------------------

    def complete(self, prompt: str, prompt_id: str, max_tokens: int = 256) -> CompletionRecord:
        if not prompt:
            raise ValidationError("prompt is empty")
        sample_id = self._by_prompt_key.get(canonical_skeleton(prompt))
        if sample_id is None:
            text = "pass"
            level, key = self.config.nonmember_logprob, ("unknown", prompt)
        else:
            suffix = self.corpus[sample_id].suffix
            if sample_id in self.config.memorized_ids:
                # keyed on the sample only: every perturbed prompt of a
                # memorized sample yields the same completion
                key = ("member", sample_id)
                text = self._corrupt(suffix, self.config.member_noise, key)
                level = self.config.member_logprob
            else:
                key = ("nonmember", sample_id, prompt)
                text = self._corrupt(suffix, self.config.nonmember_noise, key)
                level = self.config.nonmember_logprob
        tokens = _WORD_TOKEN_RE.findall(text)
        if len(tokens) > max_tokens:
            spans = [m.span() for m in _WORD_TOKEN_RE.finditer(text)]
            text = text[: spans[max_tokens - 1][1]]
            tokens = tokens[:max_tokens]
        record = CompletionRecord(
            prompt_id=prompt_id,
            text=text,
            tokens=tokens,
            token_logprobs=self._logprobs(len(tokens), level, key),
        )
        record.validate()
        return record

    def score(self, text: str) -> list[float]:
        """Flat per-token log-probabilities at the class level of the
        matched sample (teacher-forcing mode)."""
        if not text:
            raise ValidationError("cannot score empty text")
        sample_id = self._by_score_key.get(canonical_skeleton(text))
        if sample_id is not None and sample_id in self.config.memorized_ids:
            level = self.config.member_logprob
        else:
            level = self.config.nonmember_logprob
        n = len(_WORD_TOKEN_RE.findall(text))
        return [level] * max(1, n)


def sim_victim(config: SimVictimConfig, corpus: Corpus) -> SimulatedVictim:
    return SimulatedVictim(config, corpus)


# ---------------------------------------------------------------------------
# Remote victim
# ---------------------------------------------------------------------------

def post_json(url: str, payload: dict, timeout: float, max_attempts: int,
              backoff: float, headers: dict | None = None) -> dict:
    """POST with bounded retries and exponential backoff; 4xx responses
    are not retried."""
    last_error = None
    for attempt in range(1, max_attempts + 1):
        try:
            response = requests.post(url, json=payload, timeout=timeout, headers=headers)
        except requests.RequestException as exc:
            last_error = exc
            if attempt < max_attempts:
                time.sleep(backoff * 2 ** (attempt - 1))
            continue
        if response.status_code in (404, 501):
            raise UnsupportedCapabilityError(f"endpoint {url} is not supported by the server")
        if 400 <= response.status_code < 500:
            raise ProtocolError(f"{url} rejected the request: HTTP {response.status_code}")
        if response.status_code >= 500:
            last_error = ProtocolError(f"HTTP {response.status_code} from {url}")
            if attempt < max_attempts:
                time.sleep(backoff * 2 ** (attempt - 1))
            continue
        try:
            return response.json()
        except ValueError as exc:
            raise ProtocolError(f"{url} returned non-JSON body") from exc
    raise TransportError(f"POST {url} failed: {last_error}", attempts=max_attempts)


class RemoteVictim:
    """HTTP client for a completion endpoint.

    Protocol: POST /complete {prompt, max_tokens, temperature} ->
    {text, tokens, token_logprobs}; POST /score {text} ->
    {tokens, token_logprobs}.  Prompts are transmitted byte-identically;
    the bearer token, if any, comes from the environment.
    """

    def __init__(self, base_url: str, timeout: float = 60.0, max_attempts: int = 3,
                 backoff: float = 0.25, token_env: str = "MIA_API_TOKEN"):
        import os

        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff
        token = os.environ.get(token_env)
        self.headers = {"Authorization": f"Bearer {token}"} if token else None

    def _post(self, path: str, payload: dict) -> dict:
        return post_json(
            f"{self.base_url}{path}", payload,
            timeout=self.timeout, max_attempts=self.max_attempts,
            backoff=self.backoff, headers=self.headers,
        )

    def complete(self, prompt: str, prompt_id: str, max_tokens: int = 256) -> CompletionRecord:
        if not prompt:
            raise ValidationError("prompt is empty")
        payload = self._post("/complete", {"prompt": prompt, "max_tokens": max_tokens, "temperature": 0})
        for fieldname in ("text", "tokens", "token_logprobs"):
            if fieldname not in payload:
                raise ProtocolError(f"completion response missing field {fieldname!r}")
        record = CompletionRecord(
            prompt_id=prompt_id,
            text=str(payload["text"]),
            tokens=[str(t) for t in payload["tokens"]],
            token_logprobs=[float(v) for v in payload["token_logprobs"]],
        )
        record.validate()
        return record

    def score(self, text: str) -> list[float]:
        if not text:
            raise ValidationError("cannot score empty text")
        payload = self._post("/score", {"text": text})
        if "token_logprobs" not in payload:
            raise ProtocolError("score response missing field 'token_logprobs'")
        return [float(v) for v in payload["token_logprobs"]]
