"""Pipeline configuration: one JSON document plus flag overrides.

The victim endpoint credential is never stored here; the remote client
reads it from the environment (``MIA_API_TOKEN``).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .perturb import FAMILIES

TOOL_VERSION = "0.1.0"


@dataclass
class VictimSpec:
    type: str = "simulator"  # "simulator" | "remote"
    url: str | None = None
    memorized_ids: list[str] | None = None  # None: all train_pool samples
    member_noise: float = 0.02
    nonmember_noise: float = 0.30
    member_logprob: float = -0.6
    nonmember_logprob: float = -0.6
    jitter: float = 0.5

    def validate(self):
        if self.type not in ("simulator", "remote"):
            raise ValidationError(f"victim type must be simulator or remote, got {self.type!r}")
        if self.type == "remote" and not self.url:
            raise ValidationError("remote victim requires a url")


@dataclass
class EmbedderSpec:
    type: str = "hash"  # "hash" | "remote"
    url: str | None = None

    def validate(self):
        if self.type not in ("hash", "remote"):
            raise ValidationError(f"embedder type must be hash or remote, got {self.type!r}")
        if self.type == "remote" and not self.url:
            raise ValidationError("remote embedder requires a url")


@dataclass
class PipelineConfig:
    seed: int = 0
    victim: VictimSpec = field(default_factory=VictimSpec)
    embedder: EmbedderSpec = field(default_factory=EmbedderSpec)
    known_fraction: float = 0.2
    max_tokens: int = 256
    max_prompt_chars: int | None = None  # None: no client-side context limit
    concurrency_limit: int = 1
    feature_mask: list[int] | None = None
    perturbation_mask: list[str] | None = None

    def validate(self):
        self.victim.validate()
        self.embedder.validate()
        if not 0 < self.known_fraction <= 1:
            raise ValidationError(f"known_fraction must be in (0, 1], got {self.known_fraction}")
        if self.concurrency_limit < 1:
            raise ValidationError("concurrency_limit must be >= 1")
        if self.max_prompt_chars is not None and self.max_prompt_chars < 1:
            raise ValidationError("max_prompt_chars must be >= 1 when set")
        for idx in self.feature_mask or ():
            if not 0 <= idx <= 26:
                raise ValidationError(f"feature_mask index {idx} outside [0, 26]")
        for family in self.perturbation_mask or ():
            if family not in FAMILIES:
                raise ValidationError(f"perturbation_mask family {family!r} not one of {FAMILIES}")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "victim": {
                "type": self.victim.type,
                "url": self.victim.url,
                "memorized_ids": self.victim.memorized_ids,
                "member_noise": self.victim.member_noise,
                "nonmember_noise": self.victim.nonmember_noise,
                "member_logprob": self.victim.member_logprob,
                "nonmember_logprob": self.victim.nonmember_logprob,
                "jitter": self.victim.jitter,
            },
            "embedder": {"type": self.embedder.type, "url": self.embedder.url},
            "known_fraction": self.known_fraction,
            "max_tokens": self.max_tokens,
            "max_prompt_chars": self.max_prompt_chars,
            "concurrency_limit": self.concurrency_limit,
            "feature_mask": self.feature_mask,
            "perturbation_mask": self.perturbation_mask,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        victim = VictimSpec(**data.get("victim", {}))
        embedder = EmbedderSpec(**data.get("embedder", {}))
        config = cls(
            seed=int(data.get("seed", 0)),
            victim=victim,
            embedder=embedder,
            known_fraction=float(data.get("known_fraction", 0.2)),
            max_tokens=int(data.get("max_tokens", 256)),
            max_prompt_chars=data.get("max_prompt_chars"),
            concurrency_limit=int(data.get("concurrency_limit", 1)),
            feature_mask=data.get("feature_mask"),
            perturbation_mask=data.get("perturbation_mask"),
        )
        config.validate()
        return config

    def config_hash(self) -> str:
        doc = self.to_dict()
        # execution-only knobs cannot change artifact content
        doc.pop("concurrency_limit", None)
        canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def load_config(path: str | Path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"config {path}: top level must be an object")
    return PipelineConfig.from_dict(data)
