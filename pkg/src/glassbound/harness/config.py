"""Training configuration and its JSON form.

Example ``cfg.json``::

    {
      "preset": "toy",
      "epochs": 25,
      "synthetic": {"kind": "mixed_scene", "n": 20, "size": 128, "seed": 1},
      "out_dir": "runs/toy"
    }

Keys mirror :class:`TrainConfig`; ``preset`` picks the starting values.  The
data source is either ``"data": {"root": DIR, "train_split": "train",
"val_split": "val"}`` or ``"synthetic": {...}`` as above.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from ..losses import LOSS_VARIANTS
from ..model import ABLATION_MODES, ModelConfig


@dataclass
class TrainConfig:
    lr0: float = 0.01
    momentum: float = 0.9
    poly_power: float = 0.9
    weight_decay: float = 0.0
    epochs: int = 16
    max_steps: Optional[int] = None
    batch_size: int = 4
    output_stride: int = 16
    target_size: int = 512
    hflip_prob: float = 0.5
    ablation: str = "in_ex"
    t_in: int = 5
    t_ex: int = 5
    sigma: float = 3.0
    kernel_size: int = 9
    loss_variant: str = "contour"
    seed: int = 0
    threshold: float = 0.5
    model: dict = field(default_factory=dict)
    data: Optional[dict] = None
    synthetic: Optional[dict] = None
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.lr0 <= 0:
            raise ValueError(f"lr0 must be positive, got {self.lr0}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.ablation not in ABLATION_MODES:
            raise ValueError(f"ablation must be one of {ABLATION_MODES}, got {self.ablation!r}")
        if self.loss_variant not in LOSS_VARIANTS:
            raise ValueError(f"loss_variant must be one of {LOSS_VARIANTS}, got {self.loss_variant!r}")
        if self.t_in < 1 or self.t_ex < 1:
            raise ValueError("band thicknesses must be >= 1")
        if self.target_size % 32:
            raise ValueError(f"target_size must be divisible by 32, got {self.target_size}")
        if self.output_stride not in (8, 16):
            raise ValueError(f"output_stride must be 8 or 16, got {self.output_stride}")

    def model_config(self) -> ModelConfig:
        return ModelConfig(output_stride=self.output_stride, ablation=self.ablation, **self.model)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        preset = d.pop("preset", None)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        base = dict(PRESETS[preset]) if preset else {}
        if preset and preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        base.update(d)
        return cls(**base)

    @classmethod
    def load(cls, path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


PRESETS = {
    # main Trans10k protocol
    "paper": {"lr0": 0.01, "epochs": 16, "target_size": 512, "batch_size": 8},
    # ablation protocol: half learning rate, total batch 8, 40 epochs
    "paper_ablation": {"lr0": 0.005, "epochs": 40, "target_size": 512, "batch_size": 8},
    "gdd": {"lr0": 0.003, "epochs": 200, "target_size": 416},
    "msd": {"lr0": 0.002, "epochs": 160, "target_size": 384},
    # desk-scale runs on synthetic fixtures
    "toy": {"lr0": 0.01, "epochs": 25, "target_size": 128, "batch_size": 4},
}
