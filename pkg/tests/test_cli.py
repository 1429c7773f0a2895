"""Stage orchestration and the command-line surface."""

import json

import pytest

from advmia.artifacts import read_json, read_jsonl
from advmia.cli import main
from advmia.config import PipelineConfig, VictimSpec, load_config
from advmia.errors import DependencyError, ValidationError
from advmia.pipeline import run_stage, simulate
from advmia.synth import generate_programs, programs_to_samples


def write_raw_corpus(path, n_members=4, n_nonmembers=4, seed=11):
    programs = generate_programs(n_members + n_nonmembers, seed)
    samples = programs_to_samples(programs, n_members)
    lines = [
        json.dumps({"id": s.id, "prefix": s.prefix, "suffix": s.suffix, "origin": s.origin})
        for s in samples
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return samples


@pytest.fixture
def config():
    return PipelineConfig(seed=42, known_fraction=0.25)


@pytest.fixture
def staged(tmp_path, config):
    """Run ingest -> perturb -> query and return the artifact paths."""
    raw = tmp_path / "raw.jsonl"
    write_raw_corpus(raw)
    paths = {
        "corpus": tmp_path / "corpus.jsonl",
        "split": tmp_path / "corpus.split.json",
        "variants": tmp_path / "variants.jsonl",
        "responses": tmp_path / "responses.jsonl",
        "features": tmp_path / "features.jsonl",
        "model": tmp_path / "model.json",
        "predictions": tmp_path / "predictions.jsonl",
        "report": tmp_path / "report.json",
    }
    run_stage("ingest", config, [raw], paths["corpus"])
    run_stage("perturb", config, [paths["corpus"]], paths["variants"])
    run_stage("query", config, [paths["corpus"], paths["variants"]], paths["responses"])
    return paths


def test_ingest_writes_corpus_and_split(tmp_path, config):
    raw = tmp_path / "raw.jsonl"
    samples = write_raw_corpus(raw)
    out = tmp_path / "corpus.jsonl"
    run_stage("ingest", config, [raw], out)
    meta, records = read_jsonl(out)
    assert meta.kind == "corpus"
    assert meta.config_hash == config.config_hash()
    assert len(records) == len(samples)
    split_meta, split_doc = read_json(tmp_path / "corpus.split.json")
    assert split_meta.kind == "split"
    assert len(split_doc["train_members"]) == 1  # 0.25 of 4
    assert len(split_doc["train_nonmembers"]) == 1


def test_perturb_emits_eleven_variants_per_sample(staged):
    meta, records = read_jsonl(staged["variants"])
    assert meta.kind == "variants"
    assert len(records) == 8 * 11
    first = records[0]
    assert set(first) == {"parent_id", "index", "kind", "form", "text"}


def test_query_emits_completions_and_scores(staged):
    meta, records = read_jsonl(staged["responses"])
    completions = [r for r in records if r["mode"] == "complete"]
    scores = [r for r in records if r["mode"] == "score"]
    assert len(completions) == 8 * 12
    assert len(scores) == 8
    assert (meta.extra or {}).get("scoring_available") is True


def test_featurize_default_dimension(staged, config):
    run_stage(
        "featurize", config,
        [staged["corpus"], staged["responses"], staged["split"]],
        staged["features"],
    )
    meta, records = read_jsonl(staged["features"])
    assert (meta.extra or {}).get("dim") == 27
    assert all(len(r["features"]) == 27 for r in records)
    labels = {r["label"] for r in records}
    assert labels <= {"member", "nonmember", None}


def test_featurize_perturbation_mask_dimension(staged, tmp_path):
    masked_config = PipelineConfig(seed=42, known_fraction=0.25, perturbation_mask=["IDL"])
    out = tmp_path / "masked.jsonl"
    run_stage(
        "featurize", masked_config,
        [staged["corpus"], staged["responses"], staged["split"]],
        out, force=True,
    )
    meta, records = read_jsonl(out)
    assert (meta.extra or {}).get("dim") == 27 - 3 * 2
    assert all(len(r["features"]) == 21 for r in records)


def test_full_stage_chain_and_report(staged, config):
    run_stage("featurize", config,
              [staged["corpus"], staged["responses"], staged["split"]], staged["features"])
    run_stage("train", config, [staged["features"], staged["split"]], staged["model"])
    run_stage("infer", config,
              [staged["model"], staged["features"], staged["split"]], staged["predictions"])
    run_stage("evaluate", config,
              [staged["predictions"], staged["responses"], staged["corpus"]], staged["report"])
    meta, report = read_json(staged["report"])
    assert meta.kind == "report"
    assert set(report) >= {"tpr", "fpr", "auc", "counts", "roc_points", "baselines"}
    assert set(report["baselines"]) == {"gt_match", "ppl_rank"}
    assert report["baselines"]["gt_match"] is not None


def test_evaluate_without_predictions_names_infer(staged, config):
    with pytest.raises(DependencyError) as excinfo:
        run_stage("evaluate", config,
                  [staged["responses"], staged["corpus"]], staged["report"])
    assert excinfo.value.required_stage == "infer"
    assert "infer" in str(excinfo.value)


def test_train_without_features_names_featurize(staged, config):
    with pytest.raises(DependencyError) as excinfo:
        run_stage("train", config, [staged["split"]], staged["model"])
    assert excinfo.value.required_stage == "featurize"


def test_config_hash_mismatch_refused_unless_forced(staged, tmp_path):
    other = PipelineConfig(seed=43, known_fraction=0.25)
    out = tmp_path / "f.jsonl"
    with pytest.raises(ValidationError, match="config hash"):
        run_stage("featurize", other,
                  [staged["corpus"], staged["responses"], staged["split"]], out)
    run_stage("featurize", other,
              [staged["corpus"], staged["responses"], staged["split"]], out, force=True)
    assert out.exists()


def test_stage_artifacts_deterministic(tmp_path, config):
    outputs = []
    for name in ("a", "b"):
        raw = tmp_path / f"raw_{name}.jsonl"
        write_raw_corpus(raw)
        corpus = tmp_path / f"corpus_{name}.jsonl"
        variants = tmp_path / f"variants_{name}.jsonl"
        run_stage("ingest", config, [raw], corpus)
        run_stage("perturb", config, [corpus], variants)
        outputs.append(variants.read_bytes())
    assert outputs[0] == outputs[1]


def test_query_concurrency_does_not_change_output(tmp_path, staged, config):
    parallel = PipelineConfig(seed=42, known_fraction=0.25, concurrency_limit=8)
    out = tmp_path / "responses_parallel.jsonl"
    run_stage("query", parallel, [staged["corpus"], staged["variants"]], out, )
    sequential = staged["responses"].read_text().splitlines()[1:]
    concurrent = out.read_text().splitlines()[1:]
    assert sequential == concurrent  # meta differs (config hash), records must not


def test_query_truncates_oversized_prompts_and_flags_them(staged, tmp_path):
    tight = PipelineConfig(seed=42, known_fraction=0.25, max_prompt_chars=40)
    out = tmp_path / "responses_tight.jsonl"
    run_stage("query", tight, [staged["corpus"], staged["variants"]], out, force=True)
    _, records = read_jsonl(out)
    flagged = [r for r in records if r.get("prompt_truncated")]
    assert flagged, "expected at least one truncated prompt"
    assert all(r["mode"] == "complete" for r in flagged)


def test_simulate_returns_report_with_baselines():
    report = simulate(PipelineConfig(seed=1), 5, 5)
    assert report.baselines is not None
    assert 0.0 <= report.auc <= 1.0
    assert report.counts[0] + report.counts[3] == 4  # eval members


def test_simulate_validates_counts():
    with pytest.raises(ValidationError):
        simulate(PipelineConfig(seed=1), 3, 50)


def test_simulate_memorize_everything_fails_at_split():
    all_ids = [f"prog_{i:04d}" for i in range(10)]
    config = PipelineConfig(seed=1, victim=VictimSpec(memorized_ids=all_ids))
    with pytest.raises(ValidationError):
        simulate(config, 5, 5)


def test_simulate_rejects_remote_victim():
    config = PipelineConfig(seed=1, victim=VictimSpec(type="remote", url="http://x"))
    with pytest.raises(ValidationError):
        simulate(config, 5, 5)


# --- argparse surface -------------------------------------------------------

def test_cli_ingest_and_exit_codes(tmp_path):
    raw = tmp_path / "raw.jsonl"
    write_raw_corpus(raw)
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"seed": 42, "known_fraction": 0.25}))
    out = tmp_path / "corpus.jsonl"
    code = main(["ingest", "--config", str(config_path), "--in", str(raw), "--out", str(out)])
    assert code == 0
    assert out.exists()


def test_cli_missing_dependency_exit_code_2(tmp_path):
    raw = tmp_path / "raw.jsonl"
    write_raw_corpus(raw)
    corpus = tmp_path / "corpus.jsonl"
    assert main(["ingest", "--in", str(raw), "--out", str(corpus), "--seed", "42"]) == 0
    # evaluate without its inputs: dependency error -> exit 2
    code = main(["evaluate", "--in", str(corpus), "--out", str(tmp_path / "r.json"), "--seed", "42"])
    assert code == 2


def test_cli_validation_error_exit_code_1(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "a", "prefix": "", "suffix": "x", "origin": "train_pool"}\n')
    code = main(["ingest", "--in", str(bad), "--out", str(tmp_path / "c.jsonl"), "--seed", "1"])
    assert code == 1


def test_cli_simulate_writes_report(tmp_path):
    out = tmp_path / "report.json"
    code = main([
        "simulate", "--seed", "7", "--members", "4", "--nonmembers", "4",
        "--out", str(out),
    ])
    assert code == 0
    doc = json.loads(out.read_text())
    assert "auc" in doc and "baselines" in doc


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "config.json"
    doc = {
        "seed": 9,
        "victim": {"type": "simulator", "member_noise": 0.05, "nonmember_noise": 0.4},
        "embedder": {"type": "hash"},
        "known_fraction": 0.2,
        "perturbation_mask": ["VR"],
    }
    path.write_text(json.dumps(doc))
    config = load_config(path)
    assert config.seed == 9
    assert config.victim.member_noise == 0.05
    assert config.perturbation_mask == ["VR"]
    assert config.config_hash() == load_config(path).config_hash()
