"""Joint five-head objective: dice on the boundary, contour-weighted BCE on the
internal/external bands, plain BCE on body and merged predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F

EPS = 1e-6
LOG_FLOOR = math.log(1e-12)
LOSS_VARIANTS = ("contour", "bce", "dice")


def _match(logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    if logits.shape != target.shape:
        raise ValueError(f"shape mismatch: logits {tuple(logits.shape)} vs target {tuple(target.shape)}")
    return target.to(logits.dtype)


def dice_loss(logits: torch.Tensor, gt: torch.Tensor, eps: float = EPS) -> torch.Tensor:
    """``1 - 2 sum(p g) / (sum p^2 + sum g^2 + eps)``, per sample then averaged."""
    g = _match(logits, gt)
    p = torch.sigmoid(logits)
    dims = tuple(range(1, p.dim())) if p.dim() > 2 else tuple(range(p.dim()))
    inter = (p * g).sum(dims)
    denom = (p * p).sum(dims) + (g * g).sum(dims) + eps
    return (1.0 - 2.0 * inter / denom).mean()


def contour_loss(logits: torch.Tensor, gt: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Spatially weighted BCE, averaged over pixels.

    log-probabilities are floored at log(1e-12).
    """
    g = _match(logits, gt)
    w = _match(logits, weights)
    log_p = F.logsigmoid(logits).clamp(min=LOG_FLOOR)
    log_not_p = F.logsigmoid(-logits).clamp(min=LOG_FLOOR)
    return -(w * (g * log_p + (1.0 - g) * log_not_p)).mean()


def bce_loss(logits: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    return contour_loss(logits, gt, torch.ones_like(logits))


@dataclass
class LossBundle:
    l_b: torch.Tensor
    l_in: torch.Tensor
    l_ex: torch.Tensor
    l_body: torch.Tensor
    l_m: torch.Tensor

    @property
    def total(self) -> torch.Tensor:
        return self.l_b + self.l_in + self.l_ex + self.l_body + self.l_m

    def as_floats(self) -> dict[str, float]:
        out = {k: float(getattr(self, k).detach()) for k in ("l_b", "l_in", "l_ex", "l_body", "l_m")}
        out["total"] = float(self.total.detach())
        return out


def band_loss(logits, gt, weights, variant: str = "contour") -> torch.Tensor:
    if variant == "contour":
        return contour_loss(logits, gt, weights)
    if variant == "bce":
        return bce_loss(logits, gt)
    if variant == "dice":
        return dice_loss(logits, gt)
    raise ValueError(f"unknown loss variant {variant!r}; expected one of {LOSS_VARIANTS}")


def joint_loss(iebam, fbam, targets: dict, variant: str = "contour") -> LossBundle:
    """Sum of the five supervision terms.

    ``targets`` holds N×1×H×W tensors keyed ``boundary``, ``internal``,
    ``external``, ``body``, ``merged``, ``w_in``, ``w_ex``.
    """
    shape = fbam.p_m.shape
    for head in (iebam.p_b, iebam.p_in, iebam.p_ex, iebam.p_body):
        if head.shape != shape:
            raise ValueError(f"prediction heads disagree in resolution: {tuple(head.shape)} vs {tuple(shape)}")
    if targets["merged"].shape != shape:
        raise ValueError(f"targets at {tuple(targets['merged'].shape)} but predictions at {tuple(shape)}")
    return LossBundle(
        l_b=dice_loss(iebam.p_b, targets["boundary"]),
        l_in=band_loss(iebam.p_in, targets["internal"], targets["w_in"], variant),
        l_ex=band_loss(iebam.p_ex, targets["external"], targets["w_ex"], variant),
        l_body=bce_loss(iebam.p_body, targets["body"]),
        l_m=bce_loss(fbam.p_m, targets["merged"]),
    )
