"""Dataset folders, the flip/resize augmentation and training samples.

Layout::

    root/{train,val,test}/images/*.{jpg,png}
    root/{train,val,test}/masks/*.png      # 0 / 255, same stem as the image
    root/categories.tsv                    # optional: filename<TAB>category

Region bands and weight maps are always computed from the augmented mask.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from ..maskops import MaskError, RegionDecomposition, decompose, read_mask_png, weight_maps

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")


@dataclass
class RawItem:
    name: str
    image: np.ndarray            # H×W×3 float32 in [0, 1]
    mask: np.ndarray             # H×W uint8 {0, 1}
    category: Optional[str] = None


@dataclass
class SplitListing:
    items: list[RawItem] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]


def read_categories(root) -> dict[str, str]:
    path = Path(root) / "categories.tsv"
    if not path.exists():
        return {}
    cats = {}
    for line in path.read_text().splitlines():
        if line.strip():
            name, cat = line.split("\t", 1)
            cats[name.strip()] = cat.strip()
    return cats


def read_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0


def load_dataset(root, split: str) -> SplitListing:
    """Read every image/mask pair of ``root/split`` in lexicographic order.

    Pairs with a missing, non-binary or differently sized mask are recorded in
    ``errors`` and skipped.
    """
    if split not in SPLITS:
        raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
    root = Path(root)
    image_dir, mask_dir = root / split / "images", root / split / "masks"
    cats = read_categories(root)
    out = SplitListing()
    paths = sorted(p for p in image_dir.glob("*") if p.suffix.lower() in IMAGE_SUFFIXES) if image_dir.is_dir() else []
    if not paths:
        log.warning("no images found in %s", image_dir)
        return out
    for path in paths:
        mask_path = mask_dir / f"{path.stem}.png"
        if not mask_path.exists():
            out.errors[path.name] = f"missing mask {mask_path.name}"
            continue
        try:
            mask = read_mask_png(mask_path)
            image = read_image(path)
        except (MaskError, OSError) as exc:
            out.errors[path.name] = str(exc)
            continue
        if image.shape[:2] != mask.shape:
            out.errors[path.name] = f"image {image.shape[:2]} and mask {mask.shape} differ in size"
            continue
        out.items.append(RawItem(path.name, image, mask, cats.get(path.name)))
    for name, err in out.errors.items():
        log.warning("skipped %s: %s", name, err)
    return out


def write_dataset(root, split: str, items: Sequence[RawItem]) -> None:
    """Write items in the folder layout (PNG images and masks)."""
    root = Path(root)
    (root / split / "images").mkdir(parents=True, exist_ok=True)
    (root / split / "masks").mkdir(parents=True, exist_ok=True)
    cat_lines = []
    for it in items:
        stem = Path(it.name).stem
        Image.fromarray(np.round(it.image * 255).astype(np.uint8)).save(root / split / "images" / f"{stem}.png")
        Image.fromarray(it.mask * np.uint8(255), mode="L").save(root / split / "masks" / f"{stem}.png")
        if it.category:
            cat_lines.append(f"{stem}.png\t{it.category}")
    if cat_lines:
        with open(root / "categories.tsv", "a") as fh:
            fh.write("\n".join(cat_lines) + "\n")


@dataclass(frozen=True)
class AugmentSpec:
    target_size: int = 512
    hflip_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.target_size <= 0 or self.target_size % 32:
            raise ValueError(f"target_size must be a positive multiple of 32, got {self.target_size}")
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise ValueError("hflip_prob must lie in [0, 1]")


def resize(image: np.ndarray, mask: np.ndarray, size: int):
    """Bilinear image, nearest-neighbour mask, both to ``size``×``size``."""
    if image.shape[:2] != (size, size):
        t = torch.from_numpy(np.ascontiguousarray(image)).permute(2, 0, 1)[None]
        t = F.interpolate(t, size=(size, size), mode="bilinear", align_corners=False)
        image = t[0].permute(1, 2, 0).clamp(0, 1).numpy()
    if mask.shape != (size, size):
        m = torch.from_numpy(np.ascontiguousarray(mask)).float()[None, None]
        mask = F.interpolate(m, size=(size, size), mode="nearest")[0, 0].numpy().astype(np.uint8)
    return np.ascontiguousarray(image, dtype=np.float32), np.ascontiguousarray(mask, dtype=np.uint8)


def augment(image: np.ndarray, mask: np.ndarray, spec: AugmentSpec, rng=None):
    """Resize to ``spec.target_size`` then flip both horizontally with ``hflip_prob``."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    image, mask = resize(image, mask, spec.target_size)
    if rng.random() < spec.hflip_prob:
        image, mask = image[:, ::-1].copy(), mask[:, ::-1].copy()
    return image, mask


@dataclass
class Sample:
    image: np.ndarray              # 3×H×W float32
    regions: RegionDecomposition
    w_in: np.ndarray
    w_ex: np.ndarray
    category: Optional[str] = None
    name: str = ""


@dataclass(frozen=True)
class BandSpec:
    t_in: int = 5
    t_ex: int = 5
    sigma: float = 3.0
    kernel_size: int = 9


def make_sample(image, mask, bands: BandSpec = BandSpec(), category=None, name="") -> Sample:
    regions = decompose(mask, bands.t_in, bands.t_ex)
    w_in, w_ex = weight_maps(regions, bands.sigma, bands.kernel_size)
    return Sample(np.ascontiguousarray(image.transpose(2, 0, 1)), regions, w_in, w_ex, category, name)


TARGET_KEYS = ("boundary", "internal", "external", "body", "merged")


class GlassDataset:
    """Augmented samples, deterministic in ``(seed, epoch, index)``.

    Resizing is fixed per item, so only the flip varies across epochs; the two
    variants of each item are cached.
    """

    def __init__(self, items: Sequence[RawItem], target_size: int, bands: BandSpec = BandSpec(),
                 hflip_prob: float = 0.5, seed: int = 0):
        if not items:
            raise ValueError("dataset is empty")
        self.items = list(items)
        self.spec = AugmentSpec(target_size, hflip_prob, seed)
        self.bands = bands
        self._cached = lru_cache(maxsize=None)(self._build)

    def __len__(self):
        return len(self.items)

    def _build(self, index: int, flip: bool) -> Sample:
        it = self.items[index]
        image, mask = resize(it.image, it.mask, self.spec.target_size)
        if flip:
            image, mask = image[:, ::-1].copy(), mask[:, ::-1].copy()
        return make_sample(image, mask, self.bands, it.category, it.name)

    def flip_for(self, index: int, epoch: int) -> bool:
        rng = np.random.default_rng([self.spec.seed, epoch, index])
        return bool(rng.random() < self.spec.hflip_prob)

    def sample(self, index: int, epoch: Optional[int] = None) -> Sample:
        """Augmented sample; ``epoch=None`` gives the un-flipped evaluation view."""
        flip = False if epoch is None else self.flip_for(index, epoch)
        return self._cached(index, flip)

    def order(self, epoch: int) -> np.ndarray:
        return np.random.default_rng([self.spec.seed, epoch, 2**20]).permutation(len(self))

    def batches(self, epoch: int, batch_size: int):
        """Shuffled index batches for one epoch; a trailing batch of one is dropped."""
        order = self.order(epoch)
        for i in range(0, len(order), batch_size):
            idx = order[i:i + batch_size]
            if len(idx) == 1 and len(order) > 1:
                continue
            yield idx

    def collate(self, indices, epoch: Optional[int] = None) -> dict[str, torch.Tensor]:
        samples = [self.sample(int(i), epoch) for i in indices]
        batch = {"image": torch.from_numpy(np.stack([s.image for s in samples]))}
        for key in TARGET_KEYS:
            batch[key] = torch.from_numpy(np.stack([getattr(s.regions, key) for s in samples])[:, None]).float()
        batch["w_in"] = torch.from_numpy(np.stack([s.w_in for s in samples])[:, None])
        batch["w_ex"] = torch.from_numpy(np.stack([s.w_ex for s in samples])[:, None])
        return batch

    def steps_per_epoch(self, batch_size: int) -> int:
        return sum(1 for _ in self.batches(0, batch_size))
