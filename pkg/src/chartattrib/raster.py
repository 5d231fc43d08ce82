"""Image-side operations: feature-attribution masking and box overlays.

Images are (H, W, C) uint8 arrays with C in {3, 4}, interchanged as PNG
(lossless; bit-exact masking would not survive a lossy format).
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import ContractError, ValidationError
from .metrics import BoxSet, rasterize


def check_image(img: np.ndarray) -> np.ndarray:
    a = np.asarray(img)
    if a.ndim != 3 or a.shape[2] not in (3, 4):
        raise ValidationError(f"image must be (H, W, 3|4), got {a.shape}")
    if a.dtype != np.uint8:
        raise ValidationError(f"image samples must be uint8, got {a.dtype}")
    return a


def _check_frame(img: np.ndarray, s: BoxSet):
    h, w = img.shape[:2]
    if s.frame != (w, h):
        raise ContractError(f"box frame {s.frame} != image frame {(w, h)}")


def mask_outside(img: np.ndarray, s: BoxSet) -> np.ndarray:
    """Zero every pixel outside the union of the boxes.

    Pixels inside are copied unchanged on all channels. Outside, color
    channels go to 0 and alpha (if present) is forced to 255 so
    downstream consumers see black rather than transparency. An empty
    box set therefore yields an all-black image: "no evidence region"
    should visibly fail a re-answering check, not pass the chart through.
    """
    a = check_image(img)
    _check_frame(a, s)
    keep = rasterize(s).to_array()
    out = np.zeros_like(a)
    out[keep] = a[keep]
    if a.shape[2] == 4:
        out[~keep, 3] = 255
    return out


def overlay_boxes(
    img: np.ndarray,
    s: BoxSet,
    stroke: tuple[int, int, int] = (255, 0, 0),
    width: int = 1,
) -> np.ndarray:
    """Draw each box's outline (width px, grown inward) in the stroke color.

    Interiors and everything outside the boxes are untouched; repainting
    the same (set, color, width) is a no-op.
    """
    a = check_image(img)
    _check_frame(a, s)
    if width < 1:
        raise ContractError(f"stroke width must be >= 1, got {width}")
    out = a.copy()
    color = np.array(stroke, dtype=np.uint8)
    for b in s.boxes:
        t = min(width, b.x2 - b.x1, b.y2 - b.y1)  # never paint past the box
        out[b.y1 : b.y1 + t, b.x1 : b.x2, :3] = color
        out[b.y2 - t : b.y2, b.x1 : b.x2, :3] = color
        out[b.y1 : b.y2, b.x1 : b.x1 + t, :3] = color
        out[b.y1 : b.y2, b.x2 - t : b.x2, :3] = color
    return out


def load_png(path) -> np.ndarray:
    """Read a PNG as (H, W, 3|4) uint8; palette/grayscale become RGB."""
    with Image.open(path) as im:
        if im.mode not in ("RGB", "RGBA"):
            im = im.convert("RGBA" if "A" in im.mode or im.mode == "P" else "RGB")
        return np.asarray(im, dtype=np.uint8)


def save_png(img: np.ndarray, path) -> None:
    a = check_image(img)
    Image.fromarray(a, mode="RGBA" if a.shape[2] == 4 else "RGB").save(path, format="PNG")
