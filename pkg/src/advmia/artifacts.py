"""Stage artifacts: self-describing JSON/JSONL files.

Every artifact embeds a meta record carrying its kind, the producing
stage, the tool version, the seed, and the configuration hash, so
downstream stages can verify provenance and refuse mismatched inputs.
JSONL artifacts put the meta object on the first line; JSON documents
hold it under the "meta" key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .config import TOOL_VERSION, PipelineConfig
from .errors import DependencyError, ParseError, ValidationError

# artifact kind -> stage that produces it
PRODUCERS = {
    "corpus": "ingest",
    "split": "ingest",
    "variants": "perturb",
    "responses": "query",
    "features": "featurize",
    "model": "train",
    "predictions": "infer",
    "report": "evaluate",
}


@dataclass
class Meta:
    kind: str
    stage: str
    tool_version: str
    seed: int
    config_hash: str
    extra: dict | None = None

    def to_dict(self) -> dict:
        doc = {
            "kind": self.kind,
            "stage": self.stage,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "config_hash": self.config_hash,
        }
        if self.extra:
            doc.update(self.extra)
        return doc

    @classmethod
    def from_dict(cls, data: dict) -> "Meta":
        known = {"kind", "stage", "tool_version", "seed", "config_hash"}
        extra = {k: v for k, v in data.items() if k not in known}
        return cls(
            kind=str(data.get("kind", "")),
            stage=str(data.get("stage", "")),
            tool_version=str(data.get("tool_version", "")),
            seed=int(data.get("seed", 0)),
            config_hash=str(data.get("config_hash", "")),
            extra=extra or None,
        )


def make_meta(kind: str, config: PipelineConfig, extra: dict | None = None) -> Meta:
    return Meta(
        kind=kind,
        stage=PRODUCERS[kind],
        tool_version=TOOL_VERSION,
        seed=config.seed,
        config_hash=config.config_hash(),
        extra=extra,
    )


def dump_compact(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def write_jsonl(path: str | Path, meta: Meta, records: list[dict]):
    lines = [dump_compact({"meta": meta.to_dict()})]
    lines.extend(dump_compact(record) for record in records)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_jsonl(path: str | Path) -> tuple[Meta, list[dict]]:
    path = Path(path)
    records = []
    meta = None
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path.name}: invalid JSON: {exc.msg}", line_number) from exc
            if line_number == 1 and isinstance(obj, dict) and "meta" in obj:
                meta = Meta.from_dict(obj["meta"])
                continue
            records.append(obj)
    if meta is None:
        raise ValidationError(f"{path} is missing its meta line; not a stage artifact")
    return meta, records


def write_json(path: str | Path, meta: Meta, payload: dict):
    doc = {"meta": meta.to_dict(), **payload}
    Path(path).write_text(dump_compact(doc) + "\n", encoding="utf-8")


def read_json(path: str | Path) -> tuple[Meta, dict]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path.name}: invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict) or "meta" not in doc:
        raise ValidationError(f"{path} is missing its meta object; not a stage artifact")
    meta = Meta.from_dict(doc.pop("meta"))
    return meta, doc


@dataclass
class LoadedArtifact:
    meta: Meta
    payload: object
    path: Path

    def __iter__(self):
        # allow `meta, payload = loaded[kind]` unpacking
        return iter((self.meta, self.payload))


def load_inputs(paths: list[str | Path]) -> dict[str, LoadedArtifact]:
    """Read artifacts and index them by kind (duplicate kinds are rejected)."""
    loaded: dict[str, LoadedArtifact] = {}
    for path in paths:
        path = Path(path)
        if not path.exists():
            raise DependencyError(f"input artifact {path} does not exist")
        if path.suffix == ".jsonl":
            meta, payload = read_jsonl(path)
        else:
            meta, payload = read_json(path)
        if meta.kind in loaded:
            raise ValidationError(f"two inputs of kind {meta.kind!r} given")
        loaded[meta.kind] = LoadedArtifact(meta, payload, path)
    return loaded


def require(loaded: dict, kind: str):
    if kind not in loaded:
        stage = PRODUCERS.get(kind, "?")
        raise DependencyError(
            f"missing required {kind!r} artifact; run the {stage!r} stage first",
            required_stage=stage,
        )
    return loaded[kind]


def check_config_hash(loaded: dict, config: PipelineConfig, force: bool = False):
    """Refuse inputs produced under a different configuration unless forced."""
    if force:
        return
    expected = config.config_hash()
    for kind, (meta, _) in loaded.items():
        if meta.config_hash and meta.config_hash != expected:
            raise ValidationError(
                f"{kind} artifact was produced with config hash {meta.config_hash}, "
                f"current config hashes to {expected}; rerun upstream stages or pass --force"
            )
