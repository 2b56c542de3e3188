"""One training run per setting of an ablation axis, merged into one table."""

from __future__ import annotations

import csv
import logging

from ..losses import LOSS_VARIANTS
from ..model import ABLATION_MODES
from .config import TrainConfig
from .evaluate import evaluate_model
from .train import build_dataset, train

log = logging.getLogger(__name__)

AXES = {
    "boundary_mode": [("ablation", m) for m in ABLATION_MODES],
    "loss_variant": [("loss_variant", v) for v in ("bce", "dice", "contour")],
    "thickness": [("thickness", t) for t in (3, 4, 5, 6, 7)],
}
TABLE_COLUMNS = ("axis", "setting", "iou", "acc", "f_beta", "mae", "ber", "m_iou", "m_ber", "steps", "error")

assert {v for _, v in AXES["loss_variant"]} == set(LOSS_VARIANTS)


def _configure(base: TrainConfig, key, value) -> TrainConfig:
    if key == "thickness":
        return base.with_(t_in=value, t_ex=value)
    return base.with_(**{key: value})


def ablation_sweep(base: TrainConfig, axis: str, train_items, eval_items=None, out_csv=None) -> list[dict]:
    """Train and evaluate once per setting of ``axis``.

    Evaluation uses ``eval_items`` (default: the training items) at the
    un-flipped view.  A failing run yields a row with ``error`` set and the
    sweep moves on.
    """
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {sorted(AXES)}")
    rows = []
    for key, value in AXES[axis]:
        row = {"axis": axis, "setting": f"{value}px" if key == "thickness" else value}
        try:
            cfg = _configure(base, key, value)
            run = train(cfg, train_items)
            report = evaluate_model(run.model, build_dataset(eval_items or train_items, cfg, train=False),
                                    cfg.threshold)
            row.update(report.summary())
            row["steps"] = run.steps
        except Exception as exc:  # noqa: BLE001 - one bad setting must not end the sweep
            log.exception("sweep setting %s=%s failed", key, value)
            row["error"] = f"{type(exc).__name__}: {exc}"
        row.pop("n_images", None)
        rows.append({c: row.get(c) for c in TABLE_COLUMNS})
    if out_csv is not None:
        write_table(rows, out_csv)
    return rows


def write_table(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
