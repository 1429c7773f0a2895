"""Benchmark ingestion and member/non-member split construction.

A corpus holds (prefix, suffix) pairs drawn from two pools: ``train_pool``
(candidate members, i.e. data the victim was trained on) and ``test_pool``
(non-members).  Membership labels are derived from a :class:`SplitPlan`,
never stored on samples, so one corpus can serve many split seeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from .errors import CapacityError, DuplicateIdError, ParseError, ValidationError

ORIGINS = ("train_pool", "test_pool")


@dataclass(frozen=True)
class Sample:
    """One code-completion pair: prefix (model input) and suffix (ground truth)."""

    id: str
    prefix: str
    suffix: str
    origin: str

    def validate(self):
        if not self.prefix.rstrip():
            raise ValidationError(f"sample {self.id!r}: empty prefix")
        if not self.suffix.rstrip():
            raise ValidationError(f"sample {self.id!r}: empty suffix")
        if self.origin not in ORIGINS:
            raise ValidationError(f"sample {self.id!r}: unknown origin {self.origin!r}")


@dataclass
class Corpus:
    samples: list[Sample]
    name: str = "corpus"
    _by_id: dict[str, Sample] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_id = {}
        for sample in self.samples:
            if sample.id in self._by_id:
                raise DuplicateIdError(f"duplicate sample id {sample.id!r}")
            self._by_id[sample.id] = sample

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, sample_id: str) -> Sample:
        return self._by_id[sample_id]

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._by_id

    def ids(self, origin: str | None = None) -> list[str]:
        return [s.id for s in self.samples if origin is None or s.origin == origin]


@dataclass
class SplitPlan:
    """Balanced train/eval id lists for the partial-knowledge threat model."""

    known_fraction: float
    seed: int
    train_members: list[str]
    train_nonmembers: list[str]
    eval_members: list[str]
    eval_nonmembers: list[str]

    def all_ids(self) -> list[str]:
        return self.train_members + self.train_nonmembers + self.eval_members + self.eval_nonmembers

    def label_of(self, sample_id: str) -> str | None:
        if sample_id in set(self.train_members) | set(self.eval_members):
            return "member"
        if sample_id in set(self.train_nonmembers) | set(self.eval_nonmembers):
            return "nonmember"
        return None

    def to_dict(self) -> dict:
        return {
            "known_fraction": self.known_fraction,
            "seed": self.seed,
            "train_members": self.train_members,
            "train_nonmembers": self.train_nonmembers,
            "eval_members": self.eval_members,
            "eval_nonmembers": self.eval_nonmembers,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SplitPlan":
        return cls(
            known_fraction=float(data["known_fraction"]),
            seed=int(data["seed"]),
            train_members=list(data["train_members"]),
            train_nonmembers=list(data["train_nonmembers"]),
            eval_members=list(data["eval_members"]),
            eval_nonmembers=list(data["eval_nonmembers"]),
        )


def parse_sample(record: dict, line_number: int | None = None) -> Sample:
    for key in ("id", "prefix", "suffix", "origin"):
        if key not in record:
            raise ParseError(f"missing field {key!r}", line_number)
    sample = Sample(
        id=str(record["id"]),
        prefix=str(record["prefix"]).rstrip(),
        suffix=str(record["suffix"]).rstrip(),
        origin=str(record["origin"]),
    )
    sample.validate()
    return sample


def ingest(path: str | Path, format: str = "jsonl", name: str | None = None) -> Corpus:
    """Read a JSONL corpus file, preserving order and stripping trailing
    whitespace from prefixes and suffixes."""
    if format != "jsonl":
        raise ValidationError(f"unsupported corpus format {format!r}")
    path = Path(path)
    samples = []
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_number) from exc
            if not isinstance(record, dict):
                raise ParseError("record is not an object", line_number)
            samples.append(parse_sample(record, line_number))
    return Corpus(samples=samples, name=name or path.stem)


def make_split(corpus: Corpus, known_fraction: float, seed: int) -> SplitPlan:
    """Sample the adversary's known members and balance the remaining pools.

    ``known_fraction`` of the train pool becomes the classifier's member
    training set, matched by an equal-size draw from the test pool; the
    leftovers form the evaluation split, truncated by seeded sampling so
    both eval lists are the same length.  Pure function of its arguments.
    """
    if not 0 < known_fraction <= 1:
        raise ValidationError(f"known_fraction must be in (0, 1], got {known_fraction}")
    train_pool = corpus.ids("train_pool")
    test_pool = corpus.ids("test_pool")
    if not train_pool or not test_pool:
        raise ValidationError(
            f"corpus needs samples in both pools, got {len(train_pool)} train_pool "
            f"and {len(test_pool)} test_pool"
        )

    n_known = max(1, int(known_fraction * len(train_pool)))
    if len(test_pool) < n_known:
        raise CapacityError(
            f"test_pool has {len(test_pool)} samples, cannot balance {n_known} known members"
        )

    rng = Random(seed)
    train_members = rng.sample(train_pool, n_known)
    train_nonmembers = rng.sample(test_pool, n_known)

    taken = set(train_members)
    eval_members = [sid for sid in train_pool if sid not in taken]
    taken = set(train_nonmembers)
    eval_nonmembers = [sid for sid in test_pool if sid not in taken]
    n_eval = min(len(eval_members), len(eval_nonmembers))
    if len(eval_members) > n_eval:
        eval_members = rng.sample(eval_members, n_eval)
    if len(eval_nonmembers) > n_eval:
        eval_nonmembers = rng.sample(eval_nonmembers, n_eval)

    return SplitPlan(
        known_fraction=known_fraction,
        seed=seed,
        train_members=train_members,
        train_nonmembers=train_nonmembers,
        eval_members=eval_members,
        eval_nonmembers=eval_nonmembers,
    )
