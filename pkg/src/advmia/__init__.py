"""Membership-inference auditing for black-box code completion models.

The attack perturbs a code prefix with semantics-preserving rewrites,
queries the victim with the original and all perturbed prompts, and
trains a classifier on similarity/perplexity features of the responses:
memorized training samples keep producing near-identical completions
under perturbation while unseen samples drift.
"""

from .config import PipelineConfig, TOOL_VERSION
from .corpus import Corpus, Sample, SplitPlan, ingest, make_split
from .embed import Embedding, HashEmbedder, RemoteEmbedder, cosine, embed_hash
from .features import FeatureVector, build_features, normalized_perplexity, perplexity
from .metrics import EvalReport, Prediction, auc, confusion, gt_match, ppl_rank
from .mlpcls import MlpConfig, MlpModel, predict, train
from .perturb import PerturbedVariant, TransformKind, generate_variants
from .pipeline import run_stage, simulate
from .victim import CompletionRecord, RemoteVictim, SimVictimConfig, sim_victim

__version__ = TOOL_VERSION

__all__ = [
    "Corpus",
    "Sample",
    "SplitPlan",
    "ingest",
    "make_split",
    "Embedding",
    "HashEmbedder",
    "RemoteEmbedder",
    "cosine",
    "embed_hash",
    "FeatureVector",
    "build_features",
    "perplexity",
    "normalized_perplexity",
    "EvalReport",
    "Prediction",
    "auc",
    "confusion",
    "gt_match",
    "ppl_rank",
    "MlpConfig",
    "MlpModel",
    "train",
    "predict",
    "TransformKind",
    "PerturbedVariant",
    "generate_variants",
    "CompletionRecord",
    "SimVictimConfig",
    "sim_victim",
    "RemoteVictim",
    "PipelineConfig",
    "run_stage",
    "simulate",
    "TOOL_VERSION",
]
