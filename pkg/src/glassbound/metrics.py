"""Pixel metrics for glass segmentation: IoU, Acc, F-beta, MAE and BER.

IoU, Acc and BER pool confusion counts over every pixel of the set; MAE and
F-beta are computed per image and averaged.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

BETA_SQ = 0.3


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def n_p(self) -> int:
        return self.tp + self.fn

    @property
    def n_n(self) -> int:
        return self.tn + self.fp

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn,
                               self.fp + other.fp, self.fn + other.fn)


def _pair(pred, gt):
    pred, gt = np.asarray(pred), np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    return pred, gt


def confusion(pred, gt) -> ConfusionCounts:
    pred, gt = _pair(pred, gt)
    p, g = pred.astype(bool), gt.astype(bool)
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return ConfusionCounts(tp=tp, tn=p.size - tp - fp - fn, fp=fp, fn=fn)


def iou(c: ConfusionCounts) -> float:
    union = c.tp + c.fp + c.fn
    # both empty: nothing to get wrong
    return 1.0 if union == 0 else c.tp / union


def accuracy(c: ConfusionCounts) -> float:
    return (c.tp + c.tn) / c.total


def f_beta_flagged(c: ConfusionCounts, beta_sq: float = BETA_SQ) -> tuple[float, bool]:
    """Return ``(F_beta, degenerate)``; degenerate cases score 0."""
    if c.tp == 0 or c.tp + c.fp == 0 or c.tp + c.fn == 0:
        return 0.0, True
    precision = c.tp / (c.tp + c.fp)
    recall = c.tp / (c.tp + c.fn)
    return (1 + beta_sq) * precision * recall / (beta_sq * precision + recall), False


def f_beta(c: ConfusionCounts, beta_sq: float = BETA_SQ) -> float:
    return f_beta_flagged(c, beta_sq)[0]


def mae(pred_prob, gt) -> float:
    """Mean absolute error of a probability map against a binary mask."""
    pred_prob, gt = _pair(pred_prob, gt)
    pred_prob = pred_prob.astype(np.float64)
    if pred_prob.size and (pred_prob.min() < 0 or pred_prob.max() > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    return float(np.abs(pred_prob - gt.astype(np.float64)).mean())


def ber(c: ConfusionCounts) -> float:
    """Balance error rate in percent; needs both classes present in the GT."""
    if c.n_p == 0 or c.n_n == 0:
        raise ValueError("BER undefined without both glass and non-glass pixels")
    return (1.0 - 0.5 * (c.tp / c.n_p + c.tn / c.n_n)) * 100.0


@dataclass
class MetricsReport:
    iou: float
    acc: float
    f_beta: float
    mae: float
    ber: Optional[float]
    n_images: int
    per_category: dict[str, "MetricsReport"] = field(default_factory=dict)
    m_iou: Optional[float] = None
    m_ber: Optional[float] = None
    degenerate_images: list = field(default_factory=list)
    ber_excluded: list = field(default_factory=list)

    def summary(self) -> dict:
        keys = ("iou", "acc", "f_beta", "mae", "ber", "n_images", "m_iou", "m_ber")
        return {k: getattr(self, k) for k in keys}

    def to_json(self) -> dict:
        return {
            "overall": self.summary(),
            "per_category": {k: v.summary() for k, v in self.per_category.items()},
            "degenerate_images": list(self.degenerate_images),
            "ber_excluded": list(self.ber_excluded),
        }


@dataclass
class ImageResult:
    name: str
    category: Optional[str]
    counts: ConfusionCounts
    f_beta: float
    degenerate: bool
    mae: float

    def row(self) -> dict:
        ber_value = ber(self.counts) if self.counts.n_p and self.counts.n_n else None
        return {"name": self.name, "category": self.category or "",
                **asdict(self.counts), "iou": iou(self.counts), "f_beta": self.f_beta,
                "mae": self.mae, "ber": ber_value, "degenerate": self.degenerate}


def score_image(pred_prob, gt, threshold: float = 0.5, name: str = "",
                category: Optional[str] = None) -> ImageResult:
    pred_prob, gt = _pair(pred_prob, gt)
    c = confusion(np.asarray(pred_prob) > threshold, gt)
    fb, degenerate = f_beta_flagged(c)
    return ImageResult(name, category, c, fb, degenerate, mae(pred_prob, gt))


def aggregate(results: Sequence[ImageResult]) -> MetricsReport:
    if not results:
        raise ValueError("cannot aggregate an empty result set")
    pooled = ConfusionCounts()
    ber_pool = ConfusionCounts()
    excluded = []
    for r in results:
        pooled = pooled + r.counts
        if r.counts.n_p == 0 or r.counts.n_n == 0:
            excluded.append(r.name)
        else:
            ber_pool = ber_pool + r.counts
    return MetricsReport(
        iou=iou(pooled),
        acc=accuracy(pooled),
        f_beta=float(np.mean([r.f_beta for r in results])),
        mae=float(np.mean([r.mae for r in results])),
        ber=ber(ber_pool) if ber_pool.total else None,
        n_images=len(results),
        degenerate_images=[r.name for r in results if r.degenerate],
        ber_excluded=excluded,
    )


def evaluate_results(results: Sequence[ImageResult]) -> MetricsReport:
    """Overall report plus per-category reports and their means."""
    report = aggregate(results)
    groups: dict[str, list[ImageResult]] = defaultdict(list)
    for r in results:
        if r.category:
            groups[r.category].append(r)
    if groups:
        report.per_category = {k: aggregate(v) for k, v in sorted(groups.items())}
        cats = list(report.per_category.values())
        report.m_iou = float(np.mean([c.iou for c in cats]))
        bers = [c.ber for c in cats if c.ber is not None]
        report.m_ber = float(np.mean(bers)) if bers else None
    return report


def evaluate_set(pairs: Iterable, threshold: float = 0.5) -> MetricsReport:
    """Evaluate ``(pred_prob, gt[, category[, name]])`` tuples."""
    results = []
    for i, pair in enumerate(pairs):
        pred_prob, gt, *rest = pair
        category = rest[0] if rest else None
        name = rest[1] if len(rest) > 1 else str(i)
        results.append(score_image(pred_prob, gt, threshold, name, category))
    if not results:
        raise ValueError("evaluate_set needs at least one prediction/ground-truth pair")
    return evaluate_results(results)
