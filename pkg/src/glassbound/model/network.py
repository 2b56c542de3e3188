from dataclasses import asdict, dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .backbone import ToyBackbone, conv_bn_relu
from .fbam import ABLATION_MODES, FBAM
from .iebam import IEBAM

# image statistics of the [0, 1] input are recentred inside the network
_MEAN = (0.485, 0.456, 0.406)
_STD = (0.229, 0.224, 0.225)


@dataclass
class ModelConfig:
    backbone: str = "toy"
    output_stride: int = 16
    widths: tuple = (16, 32, 64, 128)
    aspp_channels: int = 64
    channels: int = 32
    reduction: int = 8
    heads: int = 1
    ablation: str = "in_ex"

    def __post_init__(self):
        self.widths = tuple(self.widths)
        if self.ablation not in ABLATION_MODES:
            raise ValueError(f"unknown ablation mode {self.ablation!r}")
        if self.output_stride not in (8, 16):
            raise ValueError(f"output_stride must be 8 or 16, got {self.output_stride}")

    def to_dict(self):
        d = asdict(self)
        d["widths"] = list(self.widths)
        return d


BACKBONES = {"toy": lambda cfg: ToyBackbone(cfg.widths, cfg.aspp_channels, cfg.output_stride)}


class GlassNet(nn.Module):
    """Backbone -> IEBAM -> FBAM, all logits returned at input resolution.

    IEBAM runs at the stride-4 resolution of ``layer1``: ``f_low`` fuses
    layers 1 and 2, ``f_input`` projects layer 4 and ``f_high`` projects the
    ASPP output.
    """

    def __init__(self, config=None, backbone=None):
        super().__init__()
        self.config = config or ModelConfig()
        cfg = self.config
        self.backbone = backbone if backbone is not None else BACKBONES[cfg.backbone](cfg)
        ch = self.backbone.channels
        c = cfg.channels
        self.low_proj = conv_bn_relu(ch["layer1"] + ch["layer2"], c, 1)
        self.input_proj = conv_bn_relu(ch["layer4"], c, 1)
        self.high_proj = conv_bn_relu(ch["aspp"], c, 1)
        self.iebam = IEBAM(c, cfg.reduction, cfg.heads)
        self.fbam = FBAM(c, cfg.reduction, cfg.heads, mode=cfg.ablation)
        self.register_buffer("mean", torch.tensor(_MEAN).view(1, 3, 1, 1), persistent=False)
        self.register_buffer("std", torch.tensor(_STD).view(1, 3, 1, 1), persistent=False)

    def features(self, image):
        pyr = self.backbone((image - self.mean) / self.std)
        size = pyr.layer1.shape[-2:]
        layer2 = F.interpolate(pyr.layer2, size=size, mode="bilinear", align_corners=False)
        f_low = self.low_proj(torch.cat([pyr.layer1, layer2], dim=1))
        return pyr, self.input_proj(pyr.layer4), f_low, self.high_proj(pyr.aspp)

    def forward(self, image):
        size = image.shape[-2:]
        _, f_input, f_low, f_high = self.features(image)
        ie = self.iebam(f_input, f_low, f_high, out_size=size)
        fb = self.fbam(ie.f_in, ie.f_ex, ie.f_m, out_size=size)
        return ie, fb

    @torch.no_grad()
    def predict(self, image):
        """Glass probability map for an N×3×H×W batch in [0, 1]."""
        return torch.sigmoid(self(image)[1].p_m)
