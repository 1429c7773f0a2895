"""Attack evaluation: confusion counts, ROC/AUC, and the two reference
baselines (exact-match and perplexity ranking).

AUC is computed by sweeping thresholds over the distinct scores and
integrating the ROC with the trapezoid rule.  Tied scores are processed
in one step, which makes the result identical to midrank pair counting.
The integration runs in exact integer arithmetic (``auc_exact`` returns
the rational), so the result depends only on the ordering of scores
(monotone-transform invariant) and negating the truth labels yields
exactly the complement; ``auc`` is the correctly rounded float of that
rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .errors import ValidationError

MEMBER = "member"
NONMEMBER = "nonmember"


@dataclass(frozen=True)
class Prediction:
    sample_id: str
    truth: str
    score: float
    label: str

    def validate(self):
        if self.truth not in (MEMBER, NONMEMBER) or self.label not in (MEMBER, NONMEMBER):
            raise ValidationError(f"prediction {self.sample_id!r}: bad truth/label")
        if not math.isfinite(self.score) or not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"prediction {self.sample_id!r}: score {self.score!r} outside [0, 1]")


class Confusion(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int
    tpr: float
    fpr: float


@dataclass
class EvalReport:
    tpr: float
    fpr: float
    auc: float
    roc_points: list[tuple[float, float]]
    counts: tuple[int, int, int, int]  # (tp, fp, tn, fn)
    baselines: dict | None = None

    def to_dict(self) -> dict:
        doc = {
            "tpr": self.tpr,
            "fpr": self.fpr,
            "auc": self.auc,
            "counts": {
                "tp": self.counts[0],
                "fp": self.counts[1],
                "tn": self.counts[2],
                "fn": self.counts[3],
            },
            "roc_points": [[f, t] for f, t in self.roc_points],
        }
        if self.baselines is not None:
            doc["baselines"] = self.baselines
        return doc


def _check_two_classes(predictions: list[Prediction]):
    truths = {p.truth for p in predictions}
    if truths != {MEMBER, NONMEMBER}:
        raise ValidationError("evaluation requires at least one member and one nonmember")


def confusion(predictions: list[Prediction]) -> Confusion:
    """Counts and rates from the hard labels (member = positive class)."""
    _check_two_classes(predictions)
    tp = fp = tn = fn = 0
    for p in predictions:
        if p.truth == MEMBER:
            if p.label == MEMBER:
                tp += 1
            else:
                fn += 1
        else:
            if p.label == MEMBER:
                fp += 1
            else:
                tn += 1
    return Confusion(tp, fp, tn, fn, tpr=tp / (tp + fn), fpr=fp / (fp + tn))


def _roc_steps(predictions: list[Prediction]) -> tuple[list[tuple[int, int]], int, int]:
    """Cumulative (fp, tp) counts at each distinct score threshold,
    descending, starting from (0, 0)."""
    _check_two_classes(predictions)
    n_pos = sum(1 for p in predictions if p.truth == MEMBER)
    n_neg = len(predictions) - n_pos
    by_score: dict[float, list[int]] = {}
    for p in predictions:
        if not math.isfinite(p.score):
            raise ValidationError(f"non-finite score for {p.sample_id!r}")
        bucket = by_score.setdefault(p.score, [0, 0])
        bucket[0 if p.truth == MEMBER else 1] += 1
    steps = [(0, 0)]
    fp = tp = 0
    for score in sorted(by_score, reverse=True):
        d_tp, d_fp = by_score[score]
        tp += d_tp
        fp += d_fp
        steps.append((fp, tp))
    return steps, n_pos, n_neg


def roc_points(predictions: list[Prediction]) -> list[tuple[float, float]]:
    steps, n_pos, n_neg = _roc_steps(predictions)
    return [(fp / n_neg, tp / n_pos) for fp, tp in steps]


def auc_exact(predictions: list[Prediction]) -> Fraction:
    """Trapezoid area under the ROC over distinct-score thresholds, as an
    exact rational."""
    steps, n_pos, n_neg = _roc_steps(predictions)
    twice_area = 0
    for (fp0, tp0), (fp1, tp1) in zip(steps[:-1], steps[1:]):
        twice_area += (fp1 - fp0) * (tp0 + tp1)
    return Fraction(twice_area, 2 * n_pos * n_neg)


def auc(predictions: list[Prediction]) -> float:
    return float(auc_exact(predictions))


def gt_match(y: str, y_hat: str) -> str:
    """Exact-match membership call, ignoring trailing whitespace per line
    and trailing blank lines."""

    def normalize(text: str) -> str:
        lines = [line.rstrip() for line in text.split("\n")]
        while lines and lines[-1] == "":
            lines.pop()
        return "\n".join(lines)

    return MEMBER if normalize(y) == normalize(y_hat) else NONMEMBER


def ppl_rank(scored: list[tuple[str, float]]) -> dict[str, str]:
    """Label the lowest-perplexity half of the samples as members.

    Ties break by sample id so the split is deterministic; with n samples
    the ceil(n/2) best-ranked become members.
    """
    if not scored:
        raise ValidationError("ppl_rank requires at least one scored sample")
    for sample_id, ppl in scored:
        if not math.isfinite(ppl):
            raise ValidationError(f"non-finite perplexity for {sample_id!r}")
    ranked = sorted(scored, key=lambda item: (item[1], item[0]))
    cutoff = (len(ranked) + 1) // 2
    return {
        sample_id: (MEMBER if rank < cutoff else NONMEMBER)
        for rank, (sample_id, _) in enumerate(ranked)
    }


def evaluate(predictions: list[Prediction]) -> EvalReport:
    for p in predictions:
        p.validate()
    counts = confusion(predictions)
    return EvalReport(
        tpr=counts.tpr,
        fpr=counts.fpr,
        auc=auc(predictions),
        roc_points=roc_points(predictions),
        counts=(counts.tp, counts.fp, counts.tn, counts.fn),
    )
