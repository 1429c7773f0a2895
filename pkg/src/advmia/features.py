"""Behavioral feature extraction: perplexity and the 27-dim feature vector.

For one sample the victim is queried 12 times (original prefix + 11
perturbed variants).  The feature vector packs, in fixed order:

    [ sim_base,
      sim_1 .. sim_11,  mean(sim),  std(sim),      # mean/std over all 12
      nppl_1 .. nppl_11, mean(nppl), std(nppl) ]   # over the 11 variants

where sim_* is cosine similarity between the ground-truth suffix and a
completion, and nppl_* is the perplexity of a perturbed completion
relative to the unperturbed one.  Standard deviations are population
(divide by n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .embed import cosine
from .errors import ArityError, EmptyInputError, ValidationError

N_VARIANTS = 11
DIM = 27

# Indices of the summary statistics in the flattened vector.
IDX_SIM_BASE = 0
IDX_SIM_MEAN = 12
IDX_SIM_STD = 13
IDX_PPL_MEAN = 25
IDX_PPL_STD = 26


def perplexity(token_logprobs: list[float]) -> float:
    """exp of the negative mean token log-probability; >= 1 by construction."""
    if not token_logprobs:
        raise EmptyInputError("perplexity of an empty sequence is undefined")
    for lp in token_logprobs:
        if not math.isfinite(lp):
            raise ValidationError(f"non-finite log-probability {lp!r}")
        if lp > 0:
            raise ValidationError(f"log-probability {lp!r} is positive")
    return math.exp(-sum(token_logprobs) / len(token_logprobs))


def normalized_perplexity(ppl_i: float, ppl_base: float) -> float:
    """Relative perplexity change of a perturbed completion vs the base one."""
    if ppl_base < 1.0:
        raise ValidationError(
            f"base perplexity {ppl_base!r} is below 1; upstream log-probabilities are corrupt"
        )
    return (ppl_i - ppl_base) / ppl_base


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _pstd(values: list[float]) -> float:
    if min(values) == max(values):
        return 0.0  # exact; float accumulation would leave ~1e-16 dust
    mu = _mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))


@dataclass
class FeatureVector:
    sim_base: float
    sim_perturbed: list[float]
    sim_mean: float
    sim_std: float
    ppl_perturbed: list[float]
    ppl_mean: float
    ppl_std: float
    label: str | None = None
    degenerate_variants: list[int] = field(default_factory=list)

    def to_list(self) -> list[float]:
        values = (
            [self.sim_base]
            + list(self.sim_perturbed)
            + [self.sim_mean, self.sim_std]
            + list(self.ppl_perturbed)
            + [self.ppl_mean, self.ppl_std]
        )
        if len(values) != DIM:
            raise ArityError(f"feature vector has {len(values)} entries, expected {DIM}")
        return values


def build_features(y: str, base, perturbed: list, embedder) -> FeatureVector:
    """Assemble the feature vector from the 12 completion records.

    ``base`` and each element of ``perturbed`` need ``.text`` and
    ``.token_logprobs``; ``perturbed`` must hold exactly 11 records in
    variant-index order.  An empty completion text contributes similarity
    0 and is flagged rather than raising.
    """
    if len(perturbed) != N_VARIANTS:
        raise ArityError(f"expected {N_VARIANTS} perturbed records, got {len(perturbed)}")
    if not y.strip():
        raise EmptyInputError("ground-truth suffix is empty")

    degenerate: list[int] = []
    v_y = embedder.embed(y)

    def sim_of(text: str, index: int) -> float:
        if not text.strip():
            degenerate.append(index)
            return 0.0
        return cosine(v_y, embedder.embed(text))

    sim_base = sim_of(base.text, -1)  # index -1 flags a degenerate base completion
    sims = [sim_of(rec.text, i) for i, rec in enumerate(perturbed)]

    ppl_base = perplexity(base.token_logprobs) if base.token_logprobs else None
    nppls = []
    for i, rec in enumerate(perturbed):
        if ppl_base is None or not rec.token_logprobs:
            # empty completion: already flagged via its empty text
            nppls.append(0.0)
            continue
        nppls.append(normalized_perplexity(perplexity(rec.token_logprobs), ppl_base))

    sim_pool = [sim_base] + sims
    return FeatureVector(
        sim_base=sim_base,
        sim_perturbed=sims,
        sim_mean=_mean(sim_pool),
        sim_std=_pstd(sim_pool),
        ppl_perturbed=nppls,
        ppl_mean=_mean(nppls),
        ppl_std=_pstd(nppls),
        degenerate_variants=degenerate,
    )


def masked_values(fv: FeatureVector, feature_mask=None, perturbation_mask=None):
    """Flatten a feature vector under the RQ-style ablation masks.

    ``perturbation_mask`` drops whole transform families: the affected
    variant slots lose both their similarity and relative-perplexity
    entries and the four summary statistics are recomputed over the
    survivors.  ``feature_mask`` then drops individual positions, indexed
    against the unmasked 27-entry layout.  Returns (values, kept_indices).
    """
    from .perturb import FAMILY_SLOTS, SLOT_FAMILIES

    perturbation_mask = set(perturbation_mask or ())
    feature_mask = set(feature_mask or ())
    for family in perturbation_mask:
        if family not in FAMILY_SLOTS:
            raise ValidationError(f"unknown perturbation family {family!r}")
    for idx in feature_mask:
        if not 0 <= idx < DIM:
            raise ValidationError(f"feature mask index {idx} outside [0, {DIM - 1}]")
    if len(perturbation_mask) == len(FAMILY_SLOTS):
        raise ValidationError("perturbation_mask cannot drop every family")

    surviving = [i for i in range(N_VARIANTS) if SLOT_FAMILIES[i] not in perturbation_mask]
    sims = [fv.sim_perturbed[i] for i in surviving]
    nppls = [fv.ppl_perturbed[i] for i in surviving]
    sim_pool = [fv.sim_base] + sims

    entries: list[tuple[int, float]] = [(IDX_SIM_BASE, fv.sim_base)]
    entries += [(1 + i, fv.sim_perturbed[i]) for i in surviving]
    entries += [(IDX_SIM_MEAN, _mean(sim_pool)), (IDX_SIM_STD, _pstd(sim_pool))]
    entries += [(14 + i, fv.ppl_perturbed[i]) for i in surviving]
    entries += [(IDX_PPL_MEAN, _mean(nppls)), (IDX_PPL_STD, _pstd(nppls))]

    kept = [(idx, val) for idx, val in entries if idx not in feature_mask]
    return [val for _, val in kept], [idx for idx, _ in kept]
