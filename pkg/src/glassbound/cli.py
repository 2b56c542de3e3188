"""Command-line entry points.

    glassbound decompose-gt --masks DIR --out DIR [--t-in 5 --t-ex 5 --sigma 3.0 --kernel 9]
    glassbound metrics --pred DIR --gt DIR [--prob] [--threshold 0.5] --report out.json
    glassbound synth --kind mixed_scene --n 50 --size 128 --seed 1 --out DIR
    glassbound train --config cfg.json
    glassbound eval --ckpt PATH --data DIR --report out.json
    glassbound sweep --axis thickness --config cfg.json --out table.csv

``decompose-gt`` is also installed as a standalone command.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image


def _decompose(args) -> int:
    from .maskops import batch_decompose

    summary = batch_decompose(args.masks, args.out, args.t_in, args.t_ex, args.sigma, args.kernel)
    print(json.dumps({"processed": summary.processed, "errors": summary.errors}, indent=2))
    return 0 if not summary.errors else 1


def _read_prediction(path, prob: bool) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    if prob:
        return arr / 255.0
    if not np.isin(arr, (0, 255)).all():
        raise ValueError(f"{path}: binary prediction must be 0/255 (use --prob for probability maps)")
    return arr / 255.0


def _metrics(args) -> int:
    from .maskops import MaskError, read_mask_png
    from .metrics import evaluate_results, score_image

    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    cats = {}
    if args.categories:
        for line in Path(args.categories).read_text().splitlines():
            if line.strip():
                name, cat = line.split("\t", 1)
                cats[name.strip()] = cat.strip()
    results, errors = [], {}
    for gt_path in sorted(gt_dir.glob("*.png")):
        pred_path = pred_dir / gt_path.name
        try:
            if not pred_path.exists():
                raise FileNotFoundError(f"no prediction {pred_path.name}")
            gt = read_mask_png(gt_path)
            pred = _read_prediction(pred_path, args.prob)
            results.append(score_image(pred, gt, args.threshold, gt_path.name, cats.get(gt_path.name)))
        except (MaskError, ValueError, OSError) as exc:
            errors[gt_path.name] = str(exc)
    if not results:
        print("no prediction/ground-truth pairs could be scored", file=sys.stderr)
        return 1
    report = evaluate_results(results).to_json()
    report["errors"] = errors
    Path(args.report).write_text(json.dumps(report, indent=2))
    print(json.dumps(report["overall"], indent=2))
    return 0


def _synth(args) -> int:
    from .data import write_dataset
    from .harness.sources import fixture_items

    items = fixture_items(args.kind, args.n, args.size, args.seed)
    write_dataset(args.out, args.split, items)
    print(f"wrote {len(items)} {args.kind} fixtures to {Path(args.out) / args.split}")
    return 0


def _train(args) -> int:
    from .harness import TrainConfig, train
    from .harness.sources import items_from_config

    cfg = TrainConfig.load(args.config)
    out_dir = Path(args.out or cfg.out_dir or "runs/latest")
    train_items, val_items = items_from_config(cfg)
    run = train(cfg, train_items, val_items, out_dir=out_dir, resume=args.resume)
    summary = {
        "config": cfg.to_dict(),
        "steps": run.steps,
        "final_loss": run.losses[-1] if run.losses else None,
        "checkpoints": run.checkpoints,
        "val": [r.to_json() for r in run.val_reports],
    }
    (out_dir / "run.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps({k: summary[k] for k in ("steps", "final_loss", "checkpoints")}, indent=2))
    return 0


def _eval(args) -> int:
    from .data import load_dataset
    from .harness import evaluate

    listing = load_dataset(args.data, args.split)
    if not listing.items:
        print(f"no usable pairs in {args.data}/{args.split}", file=sys.stderr)
        return 1
    report = evaluate(args.ckpt, listing.items, args.threshold, csv_path=args.csv)
    out = report.to_json()
    out["skipped"] = listing.errors
    Path(args.report).write_text(json.dumps(out, indent=2))
    print(json.dumps(out["overall"], indent=2))
    return 0


def _sweep(args) -> int:
    from .harness import TrainConfig, ablation_sweep
    from .harness.sources import items_from_config

    cfg = TrainConfig.load(args.config)
    train_items, val_items = items_from_config(cfg)
    rows = ablation_sweep(cfg.with_(out_dir=None), args.axis, train_items, val_items, out_csv=args.out)
    for r in rows:
        print(r)
    return 0 if not any(r["error"] for r in rows) else 1


def _add_decompose_args(p):
    p.add_argument("--masks", required=True, help="directory of 0/255 PNG masks")
    p.add_argument("--out", required=True)
    p.add_argument("--t-in", type=int, default=5)
    p.add_argument("--t-ex", type=int, default=5)
    p.add_argument("--sigma", type=float, default=3.0)
    p.add_argument("--kernel", type=int, default=9)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glassbound")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose-gt", help="write region masks and weight maps for a mask folder")
    _add_decompose_args(p)
    p.set_defaults(func=_decompose)

    p = sub.add_parser("metrics", help="score a folder of predictions")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--prob", action="store_true", help="predictions are 8-bit probability maps")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--categories", help="TSV of filename<TAB>category")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_metrics)

    p = sub.add_parser("synth", help="write synthetic glass fixtures in dataset layout")
    p.add_argument("--kind", default="mixed_scene", choices=("framed_window", "frameless_cup", "mixed_scene"))
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--split", default="train")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_synth)

    p = sub.add_parser("train", help="train from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="run directory (overrides out_dir in the config)")
    p.add_argument("--resume", help="checkpoint to resume from")
    p.set_defaults(func=_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--csv", help="per-image CSV output")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_eval)

    p = sub.add_parser("sweep", help="ablation sweep along one axis")
    p.add_argument("--axis", required=True, choices=("boundary_mode", "loss_variant", "thickness"))
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="comparison table CSV")
    p.set_defaults(func=_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


def decompose_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="decompose-gt")
    _add_decompose_args(parser)
    return _decompose(parser.parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
