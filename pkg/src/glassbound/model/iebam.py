from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .attention import AttentionBlock
from .backbone import conv_bn_relu


@dataclass
class IebamOutput:
    f_b: torch.Tensor
    f_in: torch.Tensor
    f_ex: torch.Tensor
    f_body: torch.Tensor
    f_m: torch.Tensor
    p_b: torch.Tensor
    p_in: torch.Tensor
    p_ex: torch.Tensor
    p_body: torch.Tensor

    def __post_init__(self):
        if not torch.allclose(self.f_m, self.f_body + self.f_in, rtol=0, atol=0, equal_nan=True):
            raise ValueError("merged feature must equal body + internal features")


class BandBranch(nn.Module):
    """conv([F_b; F_low]) twice, attention between the two, then a 3x3 conv."""

    def __init__(self, channels, reduction=8, heads=1):
        super().__init__()
        self.query_conv = conv_bn_relu(2 * channels, channels)
        self.context_conv = conv_bn_relu(2 * channels, channels)
        self.attention = AttentionBlock(channels, channels, reduction, heads)
        self.out_conv = conv_bn_relu(channels, channels)

    def forward(self, f_b, f_low):
        x = torch.cat([f_b, f_low], dim=1)
        return self.out_conv(self.attention(self.query_conv(x), self.context_conv(x)))


class IEBAM(nn.Module):
    """Internal/external boundary attention.

    All three inputs are resized to ``f_low``'s resolution.  The body feature
    is built from ``f_input`` minus the internal band feature only, and the
    merged feature is body + internal.
    """

    def __init__(self, channels, reduction=8, heads=1):
        super().__init__()
        self.channels = channels
        self.boundary_conv = conv_bn_relu(2 * channels, channels)
        self.internal = BandBranch(channels, reduction, heads)
        self.external = BandBranch(channels, reduction, heads)
        self.body_conv = conv_bn_relu(2 * channels, channels)
        self.head_b = nn.Conv2d(channels, 1, 1)
        self.head_in = nn.Conv2d(channels, 1, 1)
        self.head_ex = nn.Conv2d(channels, 1, 1)
        self.head_body = nn.Conv2d(channels, 1, 1)

    def _check(self, name, x):
        if x.shape[1] != self.channels:
            raise ValueError(f"{name} has {x.shape[1]} channels, IEBAM built for {self.channels}")

    def forward(self, f_input, f_low, f_high, out_size=None):
        for name, x in (("f_input", f_input), ("f_low", f_low), ("f_high", f_high)):
            self._check(name, x)
        size = f_low.shape[-2:]
        if f_input.shape[-2:] != size:
            f_input = F.interpolate(f_input, size=size, mode="bilinear", align_corners=False)
        if f_high.shape[-2:] != size:
            f_high = F.interpolate(f_high, size=size, mode="bilinear", align_corners=False)

        f_b = self.boundary_conv(torch.cat([f_input, f_low], dim=1))
        f_in = self.internal(f_b, f_low)
        f_ex = self.external(f_b, f_low)
        residual = f_input - f_in
        f_body = self.body_conv(torch.cat([f_high, residual], dim=1))
        f_m = f_body + f_in

        def head(conv, x):
            y = conv(x)
            if out_size is not None and y.shape[-2:] != tuple(out_size):
                y = F.interpolate(y, size=out_size, mode="bilinear", align_corners=False)
            return y

        return IebamOutput(
            f_b=f_b, f_in=f_in, f_ex=f_ex, f_body=f_body, f_m=f_m,
            p_b=head(self.head_b, f_b),
            p_in=head(self.head_in, f_in),
            p_ex=head(self.head_ex, f_ex),
            p_body=head(self.head_body, f_body),
        )
