from __future__ import annotations

import logging

from ..data import RawItem, load_dataset, synth_set
from .config import TrainConfig

log = logging.getLogger(__name__)


def fixture_items(kind="mixed_scene", n=20, size=128, seed=0, mix=None, prefix="synth") -> list[RawItem]:
    fixtures = synth_set(kind, n, size, seed, mix)
    return [RawItem(f"{prefix}{i:04d}.png", f.image, f.mask, f.kind) for i, f in enumerate(fixtures)]


def items_from_config(cfg: TrainConfig):
    """``(train_items, val_items or None)`` from the config's data source."""
    if cfg.data and cfg.synthetic:
        raise ValueError("config sets both 'data' and 'synthetic'; pick one")
    if cfg.synthetic:
        spec = dict(cfg.synthetic)
        val_n = spec.pop("val_n", 0)
        spec.setdefault("size", cfg.target_size)
        train_items = fixture_items(**spec)
        val_items = None
        if val_n:
            val_spec = {**spec, "n": val_n, "seed": spec.get("seed", 0) + 10_000, "prefix": "val"}
            val_items = fixture_items(**val_spec)
        return train_items, val_items
    if cfg.data:
        root = cfg.data["root"]
        train = load_dataset(root, cfg.data.get("train_split", "train"))
        if not train.items:
            raise ValueError(f"no usable training pairs under {root}")
        val_split = cfg.data.get("val_split", "val")
        val = load_dataset(root, val_split) if val_split else None
        return train.items, (val.items if val is not None and val.items else None)
    raise ValueError("config needs a 'data' or 'synthetic' section")
