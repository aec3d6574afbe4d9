"""Binarisation, connected components and boundary/digit separation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

PATCH_SIZE = 28
EIGHT = np.ones((3, 3), dtype=bool)


class BlankMapError(ValueError):
    """Raised when a map has no foreground components at all."""


@dataclass
class Component:
    """One 8-connected foreground pixel group.

    ``pixels`` is an ``(area, 2)`` array of ``(row, col)``; ``bbox`` is
    inclusive ``(min_row, min_col, max_row, max_col)``; ``centroid`` is
    ``(x, y)`` in image axes with pixel centres at ``+0.5``.
    """

    id: int
    pixels: np.ndarray
    area: int
    bbox: tuple[int, int, int, int]
    centroid: tuple[float, float]


def otsu_threshold(img: np.ndarray) -> int:
    """Threshold ``t`` such that ``img < t`` is the dark (ink) class."""
    from skimage.filters import threshold_otsu

    img = np.asarray(img)
    if img.min() == img.max():
        return 128
    return int(np.floor(threshold_otsu(img))) + 1


def binarize(img: np.ndarray, threshold: int | str = 128, dark_ink: bool = True) -> np.ndarray:
    """Foreground = ``img < threshold`` for dark ink, ``img >= threshold`` otherwise.

    ``threshold="otsu"`` picks the level automatically.
    """
    img = np.asarray(img)
    if threshold == "otsu":
        threshold = otsu_threshold(img)
    if dark_ink:
        return img < threshold
    return img >= threshold


def connected_components(r: np.ndarray) -> list[Component]:
    """8-connected components ordered by bbox ``(min_row, min_col)``."""
    r = np.asarray(r, dtype=bool)
    labels, n = ndi.label(r, structure=EIGHT)
    if n == 0:
        return []
    slices = ndi.find_objects(labels)
    flat = labels.ravel()
    idx = np.flatnonzero(flat)
    lab = flat[idx]
    order = np.argsort(lab, kind="stable")
    idx = idx[order]
    counts = np.bincount(lab, minlength=n + 1)[1:]
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    width = r.shape[1]
    keys = sorted(range(n), key=lambda k: (slices[k][0].start, slices[k][1].start, k))
    comps = []
    for new_id, k in enumerate(keys):
        part = idx[starts[k]:starts[k] + counts[k]]
        rows, cols = np.divmod(part, width)
        pixels = np.column_stack((rows, cols))
        sr, sc = slices[k]
        comps.append(Component(
            id=new_id,
            pixels=pixels,
            area=int(counts[k]),
            bbox=(sr.start, sc.start, sr.stop - 1, sc.stop - 1),
            centroid=(float(cols.mean()) + 0.5, float(rows.mean()) + 0.5),
        ))
    return comps


def default_digit_area_max(comps: list[Component]) -> float:
    """Twice the median area of all components except the largest."""
    if len(comps) < 2:
        return 0.0
    areas = sorted(c.area for c in comps)[:-1]
    return 2.0 * float(np.median(areas))


def separate_boundary_and_digits(
    comps: list[Component],
    digit_area_max: float | None = None,
    noise_area_min: int = 8,
) -> tuple[Component, list[Component], list[Component]]:
    """Split components into (boundary, digits, noise).

    The boundary is the largest component (lowest id on ties). Others with
    ``noise_area_min <= area <= digit_area_max`` are digits; everything else
    is noise.
    """
    if not comps:
        raise BlankMapError("map has no foreground components")
    if digit_area_max is None:
        digit_area_max = default_digit_area_max(comps)
    boundary = min(comps, key=lambda c: (-c.area, c.id))
    digits, noise = [], []
    for c in comps:
        if c is boundary:
            continue
        if noise_area_min <= c.area <= digit_area_max:
            digits.append(c)
        else:
            noise.append(c)
    return boundary, digits, noise


def component_mask(c: Component, shape: tuple[int, int]) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    mask[c.pixels[:, 0], c.pixels[:, 1]] = True
    return mask


def extract_digit_patch(
    r: np.ndarray, c: Component, max_upscale: float = 4.0
) -> tuple[np.ndarray, tuple[float, float]]:
    """Crop a component, scale it (nearest neighbour) into a centred 28x28 patch.

    The longer bbox side is scaled to 28 pixels, but never enlarged more than
    ``max_upscale`` times. Foreground is 255 on a 0 background. The returned
    position is the component centroid in map coordinates (y up).
    """
    min_r, min_c, max_r, max_c = c.bbox
    h, w = max_r - min_r + 1, max_c - min_c + 1
    crop = np.zeros((h, w), dtype=bool)
    crop[c.pixels[:, 0] - min_r, c.pixels[:, 1] - min_c] = True
    scale = min(PATCH_SIZE / max(h, w), max_upscale)
    oh = min(PATCH_SIZE, max(1, int(round(h * scale))))
    ow = min(PATCH_SIZE, max(1, int(round(w * scale))))
    src_r = np.minimum(((np.arange(oh) + 0.5) / scale).astype(np.int64), h - 1)
    src_c = np.minimum(((np.arange(ow) + 0.5) / scale).astype(np.int64), w - 1)
    scaled = crop[np.ix_(src_r, src_c)]
    if not scaled.any():
        # sampling skipped every stroke pixel; keep a mark so the digit is not lost
        scaled[oh // 2, ow // 2] = True
    patch = np.zeros((PATCH_SIZE, PATCH_SIZE), dtype=np.uint8)
    top, left = (PATCH_SIZE - oh) // 2, (PATCH_SIZE - ow) // 2
    patch[top:top + oh, left:left + ow] = np.where(scaled, 255, 0)
    height = r.shape[0]
    cx, cy = c.centroid
    return patch, (cx, height - cy)
