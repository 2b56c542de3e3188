from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .attention import AttentionBlock
from .backbone import conv_bn_relu

ABLATION_MODES = ("in_only", "ex_only", "in_ex")


@dataclass
class FbamOutput:
    f_en: torch.Tensor
    alpha: torch.Tensor
    refined_m: torch.Tensor
    p_m: torch.Tensor

    @property
    def beta(self):
        return 1.0 - self.alpha


class BoundaryGate(nn.Module):
    """Per-channel logit from two plain 3x3 convs, GAP, 1x1-BN-ReLU-1x1.

    The 3x3 convs and the last 1x1 carry no activation.
    """

    def __init__(self, channels):
        super().__init__()
        self.convs = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.Conv2d(channels, channels, 3, padding=1),
        )
        self.squeeze = nn.Sequential(
            nn.Conv2d(channels, channels, 1, bias=False),
            nn.BatchNorm2d(channels),
            nn.ReLU(inplace=True),
        )
        self.out = nn.Conv2d(channels, channels, 1)

    def forward(self, x):
        pooled = F.adaptive_avg_pool2d(self.convs(x), 1)
        return self.out(self.squeeze(pooled))


class FBAM(nn.Module):
    """Sigmoid-gated fusion of the band features, then attention refinement
    of the merged feature with the fused boundary feature as query."""

    def __init__(self, channels, reduction=8, heads=1, mode="in_ex"):
        super().__init__()
        if mode not in ABLATION_MODES:
            raise ValueError(f"unknown ablation mode {mode!r}; expected one of {ABLATION_MODES}")
        self.mode = mode
        self.gate = BoundaryGate(channels)
        self.fuse = conv_bn_relu(channels, channels)
        self.transfer = nn.Sequential(conv_bn_relu(channels, channels), conv_bn_relu(channels, channels))
        self.attention = AttentionBlock(channels, channels, reduction, heads)
        self.head = nn.Conv2d(channels, 1, 1)

    def gate_logits(self, f_in):
        return self.gate(f_in)

    def forward(self, f_in, f_ex, f_m, out_size=None):
        if not (f_in.shape == f_ex.shape == f_m.shape):
            raise ValueError(f"FBAM inputs differ in shape: {tuple(f_in.shape)}, "
                             f"{tuple(f_ex.shape)}, {tuple(f_m.shape)}")
        n, c = f_in.shape[:2]
        if self.mode == "in_ex":
            alpha = torch.sigmoid(self.gate(f_in))
        else:
            value = 1.0 if self.mode == "in_only" else 0.0
            alpha = f_in.new_full((n, c, 1, 1), value)
        beta = 1.0 - alpha
        f_en = self.fuse(alpha * f_in + beta * f_ex)
        refined = self.attention(self.transfer(f_en), f_m)
        p_m = self.head(refined)
        if out_size is not None and p_m.shape[-2:] != tuple(out_size):
            p_m = F.interpolate(p_m, size=out_size, mode="bilinear", align_corners=False)
        return FbamOutput(f_en=f_en, alpha=alpha, refined_m=refined, p_m=p_m)
