"""Checkpoints as a single ``.npz`` archive.

Weights are stored under ``model/<state-dict key>``, SGD momentum buffers
under ``optim/<param index>``, and a JSON block under ``__meta__`` holding
``version``, the model config and the training config/step.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from ..model import BACKBONES, GlassNet, ModelConfig

VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, model: GlassNet, optimizer: Optional[torch.optim.Optimizer] = None,
                    **meta) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {f"model/{k}": v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    if optimizer is not None:
        params = [p for g in optimizer.param_groups for p in g["params"]]
        for i, p in enumerate(params):
            buf = optimizer.state.get(p, {}).get("momentum_buffer")
            if buf is not None:
                arrays[f"optim/{i}"] = buf.detach().cpu().numpy()
    block = {"version": VERSION, "model_config": model.config.to_dict(), **meta}
    arrays["__meta__"] = np.array(json.dumps(block))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_meta(path) -> dict:
    with np.load(path, allow_pickle=False) as z:
        if "__meta__" not in z:
            raise CheckpointError(f"{path}: no metadata block")
        meta = json.loads(str(z["__meta__"]))
    if "version" not in meta:
        raise CheckpointError(f"{path}: metadata has no version field")
    if meta["version"] != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {meta['version']}")
    return meta


def load_checkpoint(path, expected: Optional[ModelConfig] = None):
    """Rebuild the model stored at ``path``; returns ``(model, meta)``.

    Raises :class:`CheckpointError` if the stored config disagrees with
    ``expected`` or the weights do not fit the rebuilt network.
    """
    meta = read_meta(path)
    cfg = ModelConfig(**meta["model_config"])
    if cfg.backbone not in BACKBONES:
        raise CheckpointError(f"{path}: unknown backbone {cfg.backbone!r}")
    if expected is not None and expected.to_dict() != cfg.to_dict():
        diff = {k: (v, expected.to_dict()[k]) for k, v in cfg.to_dict().items() if expected.to_dict()[k] != v}
        raise CheckpointError(f"{path}: config mismatch (stored, expected): {diff}")
    model = GlassNet(cfg)
    with np.load(path, allow_pickle=False) as z:
        state = {k[len("model/"):]: torch.from_numpy(z[k].copy()) for k in z.files if k.startswith("model/")}
        own = model.state_dict()
        missing, extra = set(own) - set(state), set(state) - set(own)
        if missing or extra:
            raise CheckpointError(f"{path}: weights do not match network "
                                  f"(missing {sorted(missing)[:3]}, unexpected {sorted(extra)[:3]})")
        for k, v in state.items():
            if own[k].shape != v.shape:
                raise CheckpointError(f"{path}: {k} has shape {tuple(v.shape)}, network expects {tuple(own[k].shape)}")
        model.load_state_dict(state)
    return model, meta


def load_optimizer_state(path, optimizer: torch.optim.Optimizer) -> None:
    """Restore SGD momentum buffers saved alongside the weights."""
    params = [p for g in optimizer.param_groups for p in g["params"]]
    with np.load(path, allow_pickle=False) as z:
        for i, p in enumerate(params):
            key = f"optim/{i}"
            if key in z.files:
                buf = torch.from_numpy(z[key].copy())
                if buf.shape != p.shape:
                    raise CheckpointError(f"{path}: momentum buffer {i} does not fit parameter shape")
                optimizer.state[p]["momentum_buffer"] = buf
