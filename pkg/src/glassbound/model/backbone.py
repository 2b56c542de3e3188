"""Toy multi-level backbone with ASPP, shaped like a DeepLabV3+ encoder."""

from dataclasses import dataclass

import torch
import torch.nn as nn


def conv_bn_relu(cin, cout, k=3, stride=1, dilation=1):
    pad = dilation * (k // 2)
    return nn.Sequential(
        nn.Conv2d(cin, cout, k, stride=stride, padding=pad, dilation=dilation, bias=False),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
    )


@dataclass
class FeaturePyramid:
    layer1: torch.Tensor
    layer2: torch.Tensor
    layer3: torch.Tensor
    layer4: torch.Tensor
    aspp: torch.Tensor
    output_stride: int


class ASPP(nn.Module):
    def __init__(self, cin, cout, rates=(1, 2, 4)):
        super().__init__()
        self.branches = nn.ModuleList(
            [conv_bn_relu(cin, cout, 1)] + [conv_bn_relu(cin, cout, 3, dilation=r) for r in rates[1:]]
        )
        self.project = conv_bn_relu(cout * len(rates), cout, 1)

    def forward(self, x):
        return self.project(torch.cat([b(x) for b in self.branches], dim=1))


class ToyBackbone(nn.Module):
    """Four strided conv stages (strides 4/8/16/16 at OS 16) plus a 3-rate ASPP.

    At OS 8 the last two stages keep stride 8 and dilate instead, and the
    ASPP rates double.  Any module with the same ``channels`` attribute and a
    ``forward(image) -> FeaturePyramid`` can stand in for it.
    """

    name = "toy"

    def __init__(self, widths=(16, 32, 64, 128), aspp_channels=64, output_stride=16):
        super().__init__()
        if output_stride not in (8, 16):
            raise ValueError(f"output_stride must be 8 or 16, got {output_stride}")
        w1, w2, w3, w4 = widths
        self.output_stride = output_stride
        d3, d4 = (1, 2) if output_stride == 16 else (2, 4)
        s3 = 2 if output_stride == 16 else 1
        self.layer1 = nn.Sequential(conv_bn_relu(3, w1, stride=2), conv_bn_relu(w1, w1, stride=2))
        self.layer2 = nn.Sequential(conv_bn_relu(w1, w2, stride=2), conv_bn_relu(w2, w2))
        self.layer3 = nn.Sequential(conv_bn_relu(w2, w3, stride=s3), conv_bn_relu(w3, w3, dilation=d3))
        self.layer4 = nn.Sequential(conv_bn_relu(w3, w4, dilation=d3), conv_bn_relu(w4, w4, dilation=d4))
        scale = 16 // output_stride
        self.aspp = ASPP(w4, aspp_channels, rates=(1, 2 * scale, 4 * scale))
        self.channels = {"layer1": w1, "layer2": w2, "layer3": w3, "layer4": w4, "aspp": aspp_channels}

    def forward(self, image):
        h, w = image.shape[-2:]
        if h % 32 or w % 32:
            raise ValueError(f"input height and width must be divisible by 32, got {h}x{w}")
        x1 = self.layer1(image)
        x2 = self.layer2(x1)
        x3 = self.layer3(x2)
        x4 = self.layer4(x3)
        return FeaturePyramid(x1, x2, x3, x4, self.aspp(x4), self.output_stride)
