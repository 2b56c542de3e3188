"""Ground-truth region decomposition and contour weight maps.

A glass mask is split into a 1-px real boundary, an internal band (inside
the mask), an external band (outside the mask, sharing the real boundary),
their union, and the body (mask minus internal band).  Out-of-image pixels
are never treated as background, so objects cut by the frame have no
boundary along the frame.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

log = logging.getLogger(__name__)

_CROSS = ndimage.generate_binary_structure(2, 1)

REGION_SUFFIXES = {
    "real_boundary": "real",
    "internal": "in",
    "external": "ex",
    "boundary": "b",
    "body": "body",
}


class MaskError(ValueError):
    """Raised for masks that are not binary or have incompatible shapes."""


def as_binary_mask(data) -> np.ndarray:
    """Validate ``data`` as an H×W {0,1} mask and return it as uint8."""
    arr = np.asarray(data)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise MaskError(f"mask must be a non-empty 2-D array, got shape {arr.shape}")
    if arr.dtype == bool:
        return arr.astype(np.uint8)
    if not np.isin(arr, (0, 1)).all():
        raise MaskError("mask values must be exactly 0 or 1")
    return arr.astype(np.uint8)


@dataclass(frozen=True)
class RegionDecomposition:
    real_boundary: np.ndarray
    internal: np.ndarray
    external: np.ndarray
    boundary: np.ndarray
    body: np.ndarray
    merged: np.ndarray
    t_in: int
    t_ex: int

    def regions(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in REGION_SUFFIXES}

    def check(self) -> None:
        """Raise ``ValueError`` if the five regions break their set relations."""
        m = self.merged.astype(bool)
        i = self.internal.astype(bool)
        e = self.external.astype(bool)
        r = self.real_boundary.astype(bool)
        b = self.body.astype(bool)
        broken = [name for name, ok in (
            ("internal | body == mask", np.array_equal(i | b, m)),
            ("internal & body empty", not (i & b).any()),
            ("internal & external == real", np.array_equal(i & e, r)),
            ("boundary == internal | external", np.array_equal(self.boundary.astype(bool), i | e)),
            ("external & mask == real", np.array_equal(e & m, r)),
        ) if not ok]
        if broken:
            raise ValueError(f"region invariants violated: {', '.join(broken)}")


def _distance_to_zero(mask: np.ndarray) -> np.ndarray:
    # scipy returns garbage when there is no zero at all
    if mask.all():
        return np.full(mask.shape, np.inf)
    return ndimage.distance_transform_edt(mask)


def real_boundary(mask) -> np.ndarray:
    """Foreground pixels with at least one 4-neighbour in the background."""
    m = as_binary_mask(mask).astype(bool)
    eroded = ndimage.binary_erosion(m, structure=_CROSS, border_value=1)
    return (m & ~eroded).astype(np.uint8)


def decompose(mask, t_in: int = 5, t_ex: int = 5) -> RegionDecomposition:
    """Split ``mask`` into boundary bands of thickness ``t_in`` / ``t_ex``.

    Distances are Euclidean between pixel centres.  The internal band holds
    foreground pixels within ``t_in`` of the background; the external band
    holds background pixels within ``t_ex - 1`` of the foreground plus the
    shared real boundary, so the full boundary is ``t_in + t_ex - 1`` thick.
    """
    if t_in < 1 or t_ex < 1:
        raise ValueError(f"thicknesses must be >= 1, got t_in={t_in}, t_ex={t_ex}")
    m = as_binary_mask(mask).astype(bool)

    d_bg = _distance_to_zero(m)
    d_fg = _distance_to_zero(~m)

    real = real_boundary(m).astype(bool)
    internal = m & (d_bg <= t_in)
    external = real | (~m & (d_fg <= t_ex - 1))
    return RegionDecomposition(
        real_boundary=real.astype(np.uint8),
        internal=internal.astype(np.uint8),
        external=external.astype(np.uint8),
        boundary=(internal | external).astype(np.uint8),
        body=(m & ~internal).astype(np.uint8),
        merged=m.astype(np.uint8),
        t_in=t_in,
        t_ex=t_ex,
    )


def gaussian_kernel(sigma: float, kernel_size: int) -> np.ndarray:
    """Normalised 2-D Gaussian kernel (sums to 1)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError(f"kernel_size must be a positive odd integer, got {kernel_size}")
    r = kernel_size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def weight_map(region, boundary, sigma: float = 3.0, kernel_size: int = 9) -> np.ndarray:
    """Contour weight map ``region * blur(boundary) + 1`` (float32, >= 1).

    The blur uses zero padding, so pixels farther than ``kernel_size // 2``
    (Chebyshev) from the boundary band get exactly 1.
    """
    region = as_binary_mask(region)
    boundary = as_binary_mask(boundary)
    if region.shape != boundary.shape:
        raise MaskError(f"incompatible masks: region {region.shape} vs boundary {boundary.shape}")
    k = gaussian_kernel(sigma, kernel_size)
    blurred = ndimage.correlate(boundary.astype(np.float64), k, mode="constant", cval=0.0)
    return (region * blurred + 1.0).astype(np.float32)


def weight_maps(regions: RegionDecomposition, sigma: float = 3.0, kernel_size: int = 9):
    """Internal and external weight maps for a decomposition."""
    w_in = weight_map(regions.internal, regions.boundary, sigma, kernel_size)
    w_ex = weight_map(regions.external, regions.boundary, sigma, kernel_size)
    return w_in, w_ex


# -- file I/O ---------------------------------------------------------------

def read_mask_png(path) -> np.ndarray:
    """Read an 8-bit single-channel 0/255 PNG as a {0,1} mask."""
    with Image.open(path) as im:
        if im.mode not in ("L", "1", "P"):
            raise MaskError(f"{path}: expected single-channel mask, got mode {im.mode}")
        arr = np.array(im.convert("L"))
    bad = ~np.isin(arr, (0, 255))
    if bad.any():
        raise MaskError(f"{path}: {int(bad.sum())} pixels are neither 0 nor 255")
    return (arr == 255).astype(np.uint8)


def write_mask_png(mask, path) -> None:
    Image.fromarray(as_binary_mask(mask) * np.uint8(255), mode="L").save(path)


def write_f32(arr, path) -> None:
    """Raw float32 map: 8-byte header (uint32 H, uint32 W, LE) then row-major data."""
    a = np.ascontiguousarray(arr, dtype="<f4")
    h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", h, w))
        fh.write(a.tobytes())


def read_f32(path) -> np.ndarray:
    with open(path, "rb") as fh:
        h, w = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != h * w:
        raise ValueError(f"{path}: header says {h}x{w} but payload has {data.size} values")
    return data.reshape(h, w).astype(np.float32)


@dataclass
class BatchSummary:
    processed: int
    errors: dict[str, str]


def batch_decompose(mask_dir, out_dir, t_in: int = 5, t_ex: int = 5,
                    sigma: float = 3.0, kernel_size: int = 9) -> BatchSummary:
    """Decompose every ``*.png`` mask in ``mask_dir`` into ``out_dir``.

    Bad files are recorded in ``summary.errors`` and skipped.
    """
    mask_dir, out_dir = Path(mask_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    processed, errors = 0, {}
    for path in sorted(mask_dir.glob("*.png")):
        try:
            mask = read_mask_png(path)
        except (MaskError, OSError) as exc:
            log.warning("skipping %s: %s", path.name, exc)
            errors[path.name] = str(exc)
            continue
        regions = decompose(mask, t_in, t_ex)
        stem = path.stem
        for name, suffix in REGION_SUFFIXES.items():
            write_mask_png(getattr(regions, name), out_dir / f"{stem}.{suffix}.png")
        w_in, w_ex = weight_maps(regions, sigma, kernel_size)
        write_f32(w_in, out_dir / f"{stem}.win.f32")
        write_f32(w_ex, out_dir / f"{stem}.wex.f32")
        processed += 1
    return BatchSummary(processed, errors)
