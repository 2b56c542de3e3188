from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from ..data import BandSpec, GlassDataset
from ..losses import joint_loss
from ..metrics import MetricsReport
from ..model import GlassNet
from .checkpoint import load_checkpoint, load_optimizer_state, save_checkpoint
from .config import TrainConfig

log = logging.getLogger(__name__)

LOSS_COLUMNS = ("step", "l_b", "l_in", "l_ex", "l_body", "l_m", "total", "lr")


class NonFiniteLossError(RuntimeError):
    pass


def lr_schedule(step: int, total_steps: int, cfg: TrainConfig) -> float:
    """Poly decay ``lr0 * (1 - step/total)^power``."""
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return cfg.lr0 * (1.0 - step / total_steps) ** cfg.poly_power


@dataclass
class RunRecord:
    config: dict
    losses: list[dict] = field(default_factory=list)
    val_reports: list[MetricsReport] = field(default_factory=list)
    checkpoints: dict[str, str] = field(default_factory=dict)
    model: Optional[GlassNet] = None
    steps: int = 0
    total_steps: int = 0

    def loss_at(self, step: int) -> dict:
        for row in self.losses:
            if row["step"] == step:
                return row
        raise KeyError(step)


def build_dataset(items, cfg: TrainConfig, train: bool = True) -> GlassDataset:
    bands = BandSpec(cfg.t_in, cfg.t_ex, cfg.sigma, cfg.kernel_size)
    return GlassDataset(items, cfg.target_size, bands, cfg.hflip_prob if train else 0.0, cfg.seed)


def make_optimizer(model, cfg: TrainConfig) -> torch.optim.SGD:
    return torch.optim.SGD(model.parameters(), lr=cfg.lr0, momentum=cfg.momentum,
                           weight_decay=cfg.weight_decay)


def _selection_score(report: MetricsReport) -> float:
    return report.m_iou if report.m_iou is not None else report.iou


def _dump_batch(out_dir, step, batch_index, batch):
    if out_dir is None:
        return None
    path = Path(out_dir) / f"nonfinite_step{step}_batch{batch_index}.npz"
    np.savez(path, **{k: v.numpy() for k, v in batch.items()})
    return path


def train(cfg: TrainConfig, dataset, val=None, out_dir=None, resume=None,
          stop_after: Optional[int] = None) -> RunRecord:
    """SGD with poly decay over the joint loss.

    ``dataset``/``val`` are :class:`GlassDataset` or lists of ``RawItem``.
    With ``out_dir`` set, writes ``losses.csv``, ``last.npz`` (each epoch),
    and ``best.npz`` (best validation mIoU, or IoU without categories).
    ``stop_after`` ends the run early after that many steps without changing
    the schedule, which is what a resumed run needs to match.
    """
    if not isinstance(dataset, GlassDataset):
        dataset = build_dataset(dataset, cfg, train=True)
    if val is not None and not isinstance(val, GlassDataset):
        val = build_dataset(val, cfg, train=False)
    out_dir = Path(out_dir) if out_dir is not None else (Path(cfg.out_dir) if cfg.out_dir else None)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(cfg.seed)
    steps_per_epoch = dataset.steps_per_epoch(cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    if cfg.max_steps is not None:
        total_steps = min(total_steps, cfg.max_steps)

    if resume is not None:
        model, meta = load_checkpoint(resume, cfg.model_config())
        start = int(meta["step"])
        optimizer = make_optimizer(model, cfg)
        load_optimizer_state(resume, optimizer)
    else:
        model = GlassNet(cfg.model_config())
        optimizer = make_optimizer(model, cfg)
        start = 0

    record = RunRecord(config=cfg.to_dict(), model=model, steps=start, total_steps=total_steps)
    writer = None
    if out_dir is not None:
        fh = open(out_dir / "losses.csv", "a" if resume else "w", newline="")
        writer = csv.DictWriter(fh, fieldnames=LOSS_COLUMNS)
        if not resume:
            writer.writeheader()
    best = -math.inf
    step = start
    end = total_steps if stop_after is None else min(total_steps, stop_after)
    try:
        for epoch in range(start // steps_per_epoch, cfg.epochs):
            model.train()
            for b, idx in enumerate(dataset.batches(epoch, cfg.batch_size)):
                if epoch * steps_per_epoch + b < step:
                    continue
                if step >= end:
                    break
                batch = dataset.collate(idx, epoch)
                lr = lr_schedule(step, total_steps, cfg)
                for group in optimizer.param_groups:
                    group["lr"] = lr
                ie, fb = model(batch["image"])
                bundle = joint_loss(ie, fb, batch, cfg.loss_variant)
                total = bundle.total
                if not torch.isfinite(total):
                    dump = _dump_batch(out_dir, step, b, batch)
                    raise NonFiniteLossError(
                        f"non-finite loss {bundle.as_floats()} at step {step}, epoch {epoch}, "
                        f"batch index {b} (samples {list(map(int, idx))}); batch dumped to {dump}")
                optimizer.zero_grad(set_to_none=True)
                total.backward()
                optimizer.step()
                row = {"step": step, **bundle.as_floats(), "lr": lr}
                record.losses.append(row)
                if writer:
                    writer.writerow(row)
                step += 1
            record.steps = step
            epoch_done = step == (epoch + 1) * steps_per_epoch or step >= end
            if val is not None and epoch_done:
                from .evaluate import evaluate_model
                report = evaluate_model(model, val, cfg.threshold)
                record.val_reports.append(report)
                log.info("epoch %d step %d val iou %.4f", epoch, step, report.iou)
                score = _selection_score(report)
                if out_dir is not None and score > best:
                    best = score
                    record.checkpoints["best"] = str(save_checkpoint(
                        out_dir / "best.npz", model, optimizer, step=step, train_config=cfg.to_dict()))
            if out_dir is not None:
                record.checkpoints["last"] = str(save_checkpoint(
                    out_dir / "last.npz", model, optimizer, step=step, train_config=cfg.to_dict()))
            if step >= end:
                break
    finally:
        if writer:
            fh.close()
    model.eval()
    return record
