from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import torch

from ..data import BandSpec, GlassDataset
from ..metrics import MetricsReport, evaluate_results, score_image
from ..model import GlassNet, ModelConfig
from .checkpoint import load_checkpoint

CSV_COLUMNS = ("name", "category", "tp", "tn", "fp", "fn", "iou", "f_beta", "mae", "ber", "degenerate")


@torch.no_grad()
def predict_dataset(model: GlassNet, dataset: GlassDataset, batch_size: int = 8):
    """Yield ``(sample, probability map)`` on the un-flipped view of every item."""
    model.eval()
    for start in range(0, len(dataset), batch_size):
        idx = range(start, min(start + batch_size, len(dataset)))
        batch = dataset.collate(idx)
        probs = model.predict(batch["image"])[:, 0].numpy()
        for i, p in zip(idx, probs):
            yield dataset.sample(i), p


def evaluate_model(model: GlassNet, dataset: GlassDataset, threshold: float = 0.5,
                   csv_path=None) -> MetricsReport:
    results = []
    for sample, prob in predict_dataset(model, dataset):
        results.append(score_image(prob, sample.regions.merged, threshold, sample.name, sample.category))
    report = evaluate_results(results)
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            w.writeheader()
            for r in results:
                w.writerow(r.row())
    return report


def evaluate(checkpoint, dataset, threshold: float = 0.5, csv_path=None,
             expected: Optional[ModelConfig] = None) -> MetricsReport:
    """Evaluate a checkpoint path (or a loaded model) on a dataset.

    Raw items are resized to the checkpoint's training resolution.
    """
    if isinstance(checkpoint, GlassNet):
        model, target = checkpoint, None
    else:
        model, meta = load_checkpoint(checkpoint, expected)
        target = meta.get("train_config", {}).get("target_size")
    if not isinstance(dataset, GlassDataset):
        if target is None:
            raise ValueError("raw items need a checkpoint that records its target_size")
        tc = meta.get("train_config", {})
        bands = BandSpec(tc.get("t_in", 5), tc.get("t_ex", 5), tc.get("sigma", 3.0), tc.get("kernel_size", 9))
        dataset = GlassDataset(dataset, target, bands, hflip_prob=0.0)
    elif target is not None and dataset.spec.target_size != target:
        # the network would run, but not at the resolution it was trained for
        raise ValueError(f"dataset resolution {dataset.spec.target_size} differs from checkpoint's {target}")
    return evaluate_model(model, dataset, threshold, csv_path)
