"""Stage implementations and end-to-end orchestration.

The pipeline is stage-wise because victim querying is the expensive,
networked step (12 queries per sample) and must be resumable: every stage
reads the previous stage's artifact files and writes its own.  With the
simulated victim and the hashing embedder the whole pipeline is a
deterministic function of (config, corpus).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import artifacts, corpus as corpus_mod, metrics, mlpcls
from .config import PipelineConfig
from .embed import HashEmbedder, RemoteEmbedder
from .errors import DependencyError, UnsupportedCapabilityError, ValidationError
from .features import build_features, masked_values, perplexity
from .metrics import MEMBER, Prediction
from .perturb import generate_variants
from .victim import CompletionRecord, RemoteVictim, SimVictimConfig, sim_victim

log = logging.getLogger(__name__)

STAGES = ("ingest", "perturb", "query", "featurize", "train", "infer", "evaluate")


def _make_embedder(config: PipelineConfig):
    if config.embedder.type == "hash":
        return HashEmbedder(seed=config.seed)
    return RemoteEmbedder(config.embedder.url)


def _make_victim(config: PipelineConfig, corpus: corpus_mod.Corpus):
    if config.victim.type == "remote":
        return RemoteVictim(config.victim.url)
    spec = config.victim
    memorized = spec.memorized_ids
    if memorized is None:
        memorized = corpus.ids("train_pool")
    sim_config = SimVictimConfig(
        memorized_ids=set(memorized),
        member_noise=spec.member_noise,
        nonmember_noise=spec.nonmember_noise,
        member_logprob=spec.member_logprob,
        nonmember_logprob=spec.nonmember_logprob,
        jitter=spec.jitter,
        seed=config.seed,
    )
    return sim_victim(sim_config, corpus)


def _corpus_from_records(records: list[dict]) -> corpus_mod.Corpus:
    samples = [corpus_mod.parse_sample(r) for r in records]
    return corpus_mod.Corpus(samples=samples)


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def stage_ingest(config: PipelineConfig, in_paths: list[Path], out_path: Path) -> Path:
    """Normalize a raw corpus file and derive the split plan.

    Writes the corpus artifact to ``out_path`` and the split plan next to
    it as ``<out>.split.json``.
    """
    if not in_paths:
        raise DependencyError("ingest requires the raw corpus JSONL as input")
    corpus = corpus_mod.ingest(in_paths[0])
    split = corpus_mod.make_split(corpus, config.known_fraction, config.seed)
    artifacts.write_jsonl(
        out_path,
        artifacts.make_meta("corpus", config, {"n_samples": len(corpus)}),
        [
            {"id": s.id, "prefix": s.prefix, "suffix": s.suffix, "origin": s.origin}
            for s in corpus.samples
        ],
    )
    artifacts.write_json(split_path_for(out_path), artifacts.make_meta("split", config), split.to_dict())
    return out_path


def split_path_for(corpus_path: Path) -> Path:
    return corpus_path.with_name(corpus_path.stem + ".split.json")


def stage_perturb(config: PipelineConfig, in_paths: list[Path], out_path: Path,
                  force: bool = False) -> Path:
    loaded = artifacts.load_inputs(in_paths)
    artifacts.check_config_hash(loaded, config, force=force)
    _, records = artifacts.require(loaded, "corpus")
    corpus = _corpus_from_records(records)
    rows = []
    for sample in corpus.samples:
        for variant in generate_variants(sample, config.seed):
            rows.append(
                {
                    "parent_id": variant.parent_id,
                    "index": variant.index,
                    "kind": variant.transform.kind,
                    "form": variant.transform.form,
                    "text": variant.text,
                }
            )
    artifacts.write_jsonl(out_path, artifacts.make_meta("variants", config), rows)
    return out_path


def stage_query(config: PipelineConfig, in_paths: list[Path], out_path: Path,
                force: bool = False) -> Path:
    """Query the victim with the original prefix and all variants, plus a
    scoring pass over prefix+suffix for the perplexity-rank baseline."""
    loaded = artifacts.load_inputs(in_paths)
    artifacts.check_config_hash(loaded, config, force=force)
    _, corpus_records = artifacts.require(loaded, "corpus")
    _, variant_records = artifacts.require(loaded, "variants")
    corpus = _corpus_from_records(corpus_records)
    victim = _make_victim(config, corpus)

    prompts = [(s.id, s.prefix) for s in corpus.samples]
    for row in variant_records:
        prompts.append((f"{row['parent_id']}#{row['index']}", row["text"]))

    limit = config.max_prompt_chars

    def run_complete(item):
        prompt_id, prompt = item
        truncated = limit is not None and len(prompt) > limit
        if truncated:
            # keep the tail: the code adjacent to the completion point
            prompt = prompt[-limit:]
        record = victim.complete(prompt, prompt_id, max_tokens=config.max_tokens)
        return record, truncated

    if config.concurrency_limit > 1:
        with ThreadPoolExecutor(max_workers=config.concurrency_limit) as pool:
            completions = list(pool.map(run_complete, prompts))
    else:
        completions = [run_complete(item) for item in prompts]

    rows = []
    for rec, truncated in completions:
        row = dict(rec.to_dict(), mode="complete")
        if truncated:
            row["prompt_truncated"] = True
        rows.append(row)

    scoring_available = True
    score_rows = []
    for sample in corpus.samples:
        try:
            logprobs = victim.score(sample.prefix + "\n" + sample.suffix)
        except UnsupportedCapabilityError:
            scoring_available = False
            log.warning("victim does not support scoring; perplexity-rank baseline unavailable")
            break
        score_rows.append(
            {
                "prompt_id": sample.id,
                "mode": "score",
                "text": "",
                "tokens": [],
                "token_logprobs": logprobs,
            }
        )
    if scoring_available:
        rows.extend(score_rows)

    rows.sort(key=_response_sort_key)
    meta = artifacts.make_meta("responses", config, {"scoring_available": scoring_available})
    artifacts.write_jsonl(out_path, meta, rows)
    return out_path


def _response_sort_key(row: dict):
    prompt_id = row["prompt_id"]
    if "#" in prompt_id:
        base, _, idx = prompt_id.partition("#")
        return (base, 1, int(idx), row["mode"])
    return (prompt_id, 0, -1, row["mode"])


def stage_featurize(config: PipelineConfig, in_paths: list[Path], out_path: Path,
                    force: bool = False) -> Path:
    loaded = artifacts.load_inputs(in_paths)
    artifacts.check_config_hash(loaded, config, force=force)
    _, corpus_records = artifacts.require(loaded, "corpus")
    _, response_records = artifacts.require(loaded, "responses")
    _, split_doc = artifacts.require(loaded, "split")
    corpus = _corpus_from_records(corpus_records)
    split = corpus_mod.SplitPlan.from_dict(split_doc)
    embedder = _make_embedder(config)

    completions = {
        row["prompt_id"]: row for row in response_records if row.get("mode") == "complete"
    }

    def featurize_sample(sample):
        base_row = completions.get(sample.id)
        if base_row is None:
            raise ValidationError(f"responses artifact lacks a completion for {sample.id!r}")
        perturbed = []
        for index in range(11):
            row = completions.get(f"{sample.id}#{index}")
            if row is None:
                raise ValidationError(
                    f"responses artifact lacks variant {index} for {sample.id!r}"
                )
            perturbed.append(_record_from_row(row))
        fv = build_features(sample.suffix, _record_from_row(base_row), perturbed, embedder)
        values, _kept = masked_values(fv, config.feature_mask, config.perturbation_mask)
        return {
            "sample_id": sample.id,
            "label": split.label_of(sample.id),
            "features": values,
            "degenerate_variants": fv.degenerate_variants,
        }

    if config.concurrency_limit > 1:
        with ThreadPoolExecutor(max_workers=config.concurrency_limit) as pool:
            rows = list(pool.map(featurize_sample, corpus.samples))
    else:
        rows = [featurize_sample(sample) for sample in corpus.samples]
    dim = len(rows[-1]["features"]) if rows else None
    meta = artifacts.make_meta(
        "features",
        config,
        {
            "dim": dim,
            "feature_mask": sorted(config.feature_mask or []),
            "perturbation_mask": sorted(config.perturbation_mask or []),
        },
    )
    artifacts.write_jsonl(out_path, meta, rows)
    return out_path


def _record_from_row(row: dict) -> CompletionRecord:
    record = CompletionRecord(
        prompt_id=row["prompt_id"],
        text=row["text"],
        tokens=list(row["tokens"]),
        token_logprobs=[float(v) for v in row["token_logprobs"]],
    )
    record.validate()
    return record


def stage_train(config: PipelineConfig, in_paths: list[Path], out_path: Path,
                force: bool = False) -> Path:
    loaded = artifacts.load_inputs(in_paths)
    artifacts.check_config_hash(loaded, config, force=force)
    features_meta, feature_records = artifacts.require(loaded, "features")
    _, split_doc = artifacts.require(loaded, "split")
    split = corpus_mod.SplitPlan.from_dict(split_doc)

    by_id = {row["sample_id"]: row for row in feature_records}
    dataset = []
    for sample_id in split.train_members + split.train_nonmembers:
        row = by_id.get(sample_id)
        if row is None:
            raise ValidationError(f"features artifact lacks sample {sample_id!r}")
        if row["label"] is None:
            raise ValidationError(f"training sample {sample_id!r} has no label")
        dataset.append((row["features"], row["label"]))

    dim = (features_meta.extra or {}).get("dim") or len(dataset[0][0])
    model_config = mlpcls.MlpConfig(input_dim=int(dim), seed=config.seed)
    model = mlpcls.train(mlpcls.init(model_config), dataset)
    mlpcls.save_model(model, out_path, meta=artifacts.make_meta("model", config).to_dict())
    return out_path


def stage_infer(config: PipelineConfig, in_paths: list[Path], out_path: Path,
                force: bool = False) -> Path:
    loaded = artifacts.load_inputs(in_paths)
    artifacts.check_config_hash(loaded, config, force=force)
    _, feature_records = artifacts.require(loaded, "features")
    _, split_doc = artifacts.require(loaded, "split")
    model = mlpcls.load_model(artifacts.require(loaded, "model").path)
    split = corpus_mod.SplitPlan.from_dict(split_doc)

    by_id = {row["sample_id"]: row for row in feature_records}
    rows = []
    for sample_id in sorted(split.eval_members + split.eval_nonmembers):
        row = by_id.get(sample_id)
        if row is None:
            raise ValidationError(f"features artifact lacks eval sample {sample_id!r}")
        label, member_prob = mlpcls.predict(model, row["features"])
        rows.append(
            {
                "sample_id": sample_id,
                "truth": row["label"],
                "score": member_prob,
                "label": label,
            }
        )
    artifacts.write_jsonl(out_path, artifacts.make_meta("predictions", config), rows)
    return out_path


def stage_evaluate(config: PipelineConfig, in_paths: list[Path], out_path: Path,
                   force: bool = False) -> Path:
    loaded = artifacts.load_inputs(in_paths)
    artifacts.check_config_hash(loaded, config, force=force)
    _, prediction_records = artifacts.require(loaded, "predictions")
    _, response_records = artifacts.require(loaded, "responses")
    _, corpus_records = artifacts.require(loaded, "corpus")
    corpus = _corpus_from_records(corpus_records)

    predictions = [
        Prediction(
            sample_id=row["sample_id"],
            truth=row["truth"],
            score=float(row["score"]),
            label=row["label"],
        )
        for row in prediction_records
    ]
    report = metrics.evaluate(predictions)

    eval_ids = [p.sample_id for p in predictions]
    truths = {p.sample_id: p.truth for p in predictions}
    completions = {
        row["prompt_id"]: row for row in response_records if row.get("mode") == "complete"
    }
    scores = {
        row["prompt_id"]: row for row in response_records if row.get("mode") == "score"
    }

    baselines: dict[str, dict | None] = {}

    gt_preds = []
    for sample_id in eval_ids:
        base = completions.get(sample_id)
        if base is None:
            raise ValidationError(f"responses artifact lacks a completion for {sample_id!r}")
        call = metrics.gt_match(corpus[sample_id].suffix, base["text"])
        gt_preds.append(
            Prediction(sample_id, truths[sample_id], 1.0 if call == MEMBER else 0.0, call)
        )
    gt_counts = metrics.confusion(gt_preds)
    baselines["gt_match"] = {
        "tpr": gt_counts.tpr,
        "fpr": gt_counts.fpr,
        "auc": metrics.auc(gt_preds),
    }

    if all(sample_id in scores for sample_id in eval_ids):
        scored = [
            (sample_id, perplexity(scores[sample_id]["token_logprobs"]))
            for sample_id in eval_ids
        ]
        rank_labels = metrics.ppl_rank(scored)
        ppl_preds = [
            Prediction(sample_id, truths[sample_id], 1.0 / (1.0 + ppl), rank_labels[sample_id])
            for sample_id, ppl in scored
        ]
        ppl_counts = metrics.confusion(ppl_preds)
        baselines["ppl_rank"] = {
            "tpr": ppl_counts.tpr,
            "fpr": ppl_counts.fpr,
            "auc": metrics.auc(ppl_preds),
        }
    else:
        log.warning("no scoring responses found; perplexity-rank baseline skipped")
        baselines["ppl_rank"] = None

    payload = dict(report.to_dict(), baselines=baselines)
    artifacts.write_json(out_path, artifacts.make_meta("report", config), payload)
    return out_path


_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "perturb": stage_perturb,
    "query": stage_query,
    "featurize": stage_featurize,
    "train": stage_train,
    "infer": stage_infer,
    "evaluate": stage_evaluate,
}


def run_stage(stage: str, config: PipelineConfig, in_paths: list[str | Path],
              out_path: str | Path, force: bool = False) -> Path:
    if stage not in _STAGE_FUNCS:
        raise ValidationError(f"unknown stage {stage!r}; expected one of {STAGES}")
    config.validate()
    func = _STAGE_FUNCS[stage]
    paths = [Path(p) for p in in_paths]
    if stage == "ingest":
        return func(config, paths, Path(out_path))
    return func(config, paths, Path(out_path), force=force)


# ---------------------------------------------------------------------------
# One-shot synthetic end-to-end run
# ---------------------------------------------------------------------------

def simulate(config: PipelineConfig, n_members: int, n_nonmembers: int,
             workdir: str | Path | None = None) -> metrics.EvalReport:
    """Generate a synthetic corpus, run every stage, return the report.

    The corpus is built from seeded small executable programs; the first
    ``n_members`` are the simulated victim's training set (its memorized
    ids) unless the config pins an explicit memorized set, in which case
    pool membership follows that set.
    """
    from . import synth

    if n_members < 4 or n_nonmembers < 4:
        raise ValidationError("simulate requires at least 4 members and 4 nonmembers")
    config.validate()
    if config.victim.type != "simulator":
        raise ValidationError("simulate only runs against the simulated victim")

    import tempfile

    if workdir is None:
        tmp = tempfile.TemporaryDirectory(prefix="mia-simulate-")
        base = Path(tmp.name)
    else:
        tmp = None
        base = Path(workdir)
        base.mkdir(parents=True, exist_ok=True)

    try:
        programs = synth.generate_programs(n_members + n_nonmembers, config.seed)
        if config.victim.memorized_ids is not None:
            memorized = set(config.victim.memorized_ids)
            samples = [
                corpus_mod.Sample(
                    id=p.id, prefix=p.prefix, suffix=p.suffix,
                    origin="train_pool" if p.id in memorized else "test_pool",
                )
                for p in programs
            ]
        else:
            samples = synth.programs_to_samples(programs, n_members)

        raw_path = base / "raw.jsonl"
        raw_lines = [
            artifacts.dump_compact(
                {"id": s.id, "prefix": s.prefix, "suffix": s.suffix, "origin": s.origin}
            )
            for s in samples
        ]
        raw_path.write_text("\n".join(raw_lines) + "\n", encoding="utf-8")

        corpus_path = base / "corpus.jsonl"
        split_path = base / "corpus.split.json"
        variants_path = base / "variants.jsonl"
        responses_path = base / "responses.jsonl"
        features_path = base / "features.jsonl"
        model_path = base / "model.json"
        predictions_path = base / "predictions.jsonl"
        report_path = base / "report.json"

        run_stage("ingest", config, [raw_path], corpus_path)
        run_stage("perturb", config, [corpus_path], variants_path)
        run_stage("query", config, [corpus_path, variants_path], responses_path)
        run_stage("featurize", config, [corpus_path, responses_path, split_path], features_path)
        run_stage("train", config, [features_path, split_path], model_path)
        run_stage("infer", config, [model_path, features_path, split_path], predictions_path)
        run_stage("evaluate", config, [predictions_path, responses_path, corpus_path], report_path)

        _, report_doc = artifacts.read_json(report_path)
        counts = report_doc["counts"]
        return metrics.EvalReport(
            tpr=report_doc["tpr"],
            fpr=report_doc["fpr"],
            auc=report_doc["auc"],
            roc_points=[tuple(p) for p in report_doc["roc_points"]],
            counts=(counts["tp"], counts["fp"], counts["tn"], counts["fn"]),
            baselines=report_doc["baselines"],
        )
    finally:
        if tmp is not None:
            tmp.cleanup()
