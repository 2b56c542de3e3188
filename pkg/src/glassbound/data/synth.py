"""Synthetic glass scenes with exact masks.

* ``framed_window``: a dark frame with a light trim line around a pane that
  shows the background blurred, dimmed and tinted.  Strong external cue.
* ``frameless_cup``: an ellipse with no frame; the background behind it is
  magnified and tinted, with a bright, heavily warped rim just inside the
  contour.  Strong internal cue, nothing outside.
* ``mixed_scene``: a window, a cup and a framed non-glass distractor whose
  interior is the untouched background.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

KINDS = ("framed_window", "frameless_cup", "mixed_scene")

FRAME_WIDTH = 5
TINT = np.array([0.55, 0.75, 1.0], dtype=np.float32)


@dataclass
class Fixture:
    image: np.ndarray        # H×W×3 float32 in [0, 1]
    mask: np.ndarray         # H×W uint8, glass = 1
    frame: np.ndarray        # H×W uint8, frame pixels of every framed object
    distractor: np.ndarray   # H×W uint8, interior of the non-glass framed object
    kind: str


def background(size: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth coloured texture with a little fine grain."""
    coarse = rng.random((size // 8 + 2, size // 8 + 2, 3))
    img = ndimage.zoom(coarse, (size / coarse.shape[0], size / coarse.shape[1], 1), order=3)
    img = img[:size, :size]
    img = ndimage.gaussian_filter(img, sigma=(2, 2, 0))
    grain = ndimage.gaussian_filter(rng.standard_normal((size, size, 3)), sigma=(0.7, 0.7, 0))
    img = 0.25 + 0.5 * (img - img.min()) / (np.ptp(img) + 1e-9) + 0.04 * grain
    return np.clip(img, 0, 1).astype(np.float32)


def _rect(shape, top, left, h, w) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    m[top:top + h, left:left + w] = True
    return m


def _ellipse(shape, cy, cx, ry, rx) -> np.ndarray:
    yy, xx = np.mgrid[:shape[0], :shape[1]]
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def _frame_around(inner: np.ndarray, width: int = FRAME_WIDTH):
    """Frame ring of ``width`` px outside ``inner`` and a 1-px trim line in its middle."""
    grown = ndimage.binary_dilation(inner, iterations=width)
    ring = grown & ~inner
    mid = ndimage.binary_dilation(inner, iterations=width // 2 + 1) & ~ndimage.binary_dilation(inner, iterations=width // 2)
    return ring, mid


def _paint_frame(img, inner, rng):
    ring, trim = _frame_around(inner)
    shade = 0.05 + 0.1 * rng.random()
    img[ring] = shade
    img[trim] = 0.9
    return ring


def _paint_window(img, bg, pane):
    blurred = ndimage.gaussian_filter(bg, sigma=(2.5, 2.5, 0))
    img[pane] = (0.55 * blurred + 0.35 * TINT)[pane]


def _paint_cup(img, bg, cup, cy, cx, rng):
    h, w = cup.shape
    yy, xx = np.mgrid[:h, :w].astype(np.float32)
    # sample the background magnified about the centre (refraction)
    zoom = 0.7
    sy = np.clip(cy + (yy - cy) * zoom, 0, h - 1)
    sx = np.clip(cx + (xx - cx) * zoom, 0, w - 1)
    dist_in = ndimage.distance_transform_edt(cup)
    rim = cup & (dist_in <= 4)
    # strong local warp confined to the rim
    wobble = 3.0 * np.sin(yy / 2.0 + rng.random() * 6.28) * np.cos(xx / 2.0)
    sy = np.where(rim, np.clip(sy + wobble, 0, h - 1), sy)
    sx = np.where(rim, np.clip(sx - wobble, 0, w - 1), sx)
    warped = np.stack([ndimage.map_coordinates(bg[..., c], [sy, sx], order=1) for c in range(3)], axis=-1)
    inner = 0.6 * warped + 0.3 * TINT
    rim_val = np.clip(0.5 * warped + 0.5, 0, 1)
    img[cup] = inner[cup]
    img[rim] = rim_val[rim]


def _place(rng, size, occupied, h, w, margin):
    """Random top-left for an h×w box (plus margin) that avoids ``occupied``, or None."""
    if h + 2 * margin > size or w + 2 * margin > size:
        return None
    for _ in range(100):
        top = int(rng.integers(margin, size - h - margin + 1))
        left = int(rng.integers(margin, size - w - margin + 1))
        box = _rect(occupied.shape, top - margin, left - margin, h + 2 * margin, w + 2 * margin)
        if not (box & occupied).any():
            occupied |= box
            return top, left
    return None


def render_fixture(kind: str, size: int = 128, seed: int = 0) -> Fixture:
    if kind not in KINDS:
        raise ValueError(f"unknown fixture kind {kind!r}; expected one of {KINDS}")
    if size < 64:
        raise ValueError(f"fixture size must be >= 64, got {size}")
    rng = np.random.default_rng(seed)
    bg = background(size, rng)
    img = bg.copy()
    shape = (size, size)
    mask = np.zeros(shape, dtype=bool)
    frame = np.zeros(shape, dtype=bool)
    distractor = np.zeros(shape, dtype=bool)
    occupied = np.zeros(shape, dtype=bool)
    margin = FRAME_WIDTH + 2

    def sizes(lo, hi):
        # shrink until the object fits next to what is already placed
        a, b = (int(v) for v in rng.integers(lo, hi, size=2))
        while True:
            yield a, b
            if min(a, b) <= 4:
                raise RuntimeError("could not place object without overlap")
            a, b = max(4, a * 4 // 5), max(4, b * 4 // 5)

    def window(lo, hi):
        for h, w in sizes(lo, hi):
            pos = _place(rng, size, occupied, h, w, margin)
            if pos:
                return _rect(shape, pos[0], pos[1], h, w)

    def cup(lo, hi):
        for ry, rx in sizes(lo, hi):
            pos = _place(rng, size, occupied, 2 * ry + 1, 2 * rx + 1, 3)
            if pos:
                cy, cx = pos[0] + ry, pos[1] + rx
                return _ellipse(shape, cy, cx, ry, rx), cy, cx

    if kind == "framed_window":
        pane = window(size * 3 // 10, size * 6 // 10)
        _paint_window(img, bg, pane)
        frame |= _paint_frame(img, pane, rng)
        mask |= pane
    elif kind == "frameless_cup":
        body, cy, cx = cup(size // 6, size * 3 // 10)
        _paint_cup(img, bg, body, cy, cx, rng)
        mask |= body
    else:
        for attempt in range(20):
            # a crowded draw can leave no room for the last object; start over
            occupied[:] = False
            try:
                pane = window(size // 5, size * 3 // 10)
                fake = window(size // 5, size * 3 // 10)
                body, cy, cx = cup(size // 10, size // 6)
                break
            except RuntimeError:
                if attempt == 19:
                    raise
        _paint_window(img, bg, pane)
        frame |= _paint_frame(img, pane, rng)
        frame |= _paint_frame(img, fake, rng)
        _paint_cup(img, bg, body, cy, cx, rng)
        mask |= pane | body
        distractor |= fake

    return Fixture(
        image=np.clip(img, 0, 1).astype(np.float32),
        mask=mask.astype(np.uint8),
        frame=frame.astype(np.uint8),
        distractor=distractor.astype(np.uint8),
        kind=kind,
    )


def synth_fixture(kind: str, size: int = 128, seed: int = 0):
    """``(image H×W×3 float32, mask H×W uint8)`` for one synthetic scene."""
    fx = render_fixture(kind, size, seed)
    return fx.image, fx.mask


def synth_set(kind: str, n: int, size: int = 128, seed: int = 0,
              mix: Optional[dict] = None) -> list[Fixture]:
    """``n`` fixtures.  ``mix`` maps kinds to weights and overrides ``kind``."""
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**31 - 1, size=n)
    kinds = [kind] * n
    if mix:
        names = sorted(mix)
        p = np.array([mix[k] for k in names], dtype=float)
        kinds = list(rng.choice(names, size=n, p=p / p.sum()))
    return [render_fixture(k, size, int(s)) for k, s in zip(kinds, seeds)]
