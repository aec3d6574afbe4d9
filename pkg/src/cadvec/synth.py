"""Synthetic cadastral maps with exact ground truth, for tests and benchmarks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .glyphs import FONTS, Font, render_number
from .metrics import rasterize
from .polygonize import signed_area
from .vecmodel import Category, Point, VectorMap, raster_to_map


@dataclass
class SyntheticTruth:
    rings: list[list[Point]]  # per plot, closed and counterclockwise, map coordinates
    plot_numbers: list[str]  # same order as rings
    centerlines: VectorMap
    label_boxes: list[tuple[int, int, int, int]]  # inclusive (min_row, min_col, max_row, max_col)


def generate_synthetic_map(
    rows: int,
    cols: int,
    jitter: int = 0,
    digit_seed: int = 0,
    cell: int = 100,
    margin: int = 20,
    stroke: int = 3,
    font: Font = FONTS[0],
    digits: bool = True,
    shape: tuple[int, int] | None = None,
) -> tuple[np.ndarray, SyntheticTruth]:
    """Render a jittered ``rows`` x ``cols`` plot grid as a uint8 map (ink 0, paper 255).

    Grid vertices sit ``cell`` pixels apart and are displaced by up to
    ``jitter`` pixels in each axis (seeded by ``digit_seed``). Plots are
    numbered 1.. row by row from the top left, and each number is stamped
    at its plot's vertex centroid. ``shape=(height, width)`` centres the grid
    on a larger sheet.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be at least 1")
    rng = np.random.default_rng(digit_seed)
    if shape is None:
        height, width = rows * cell + 2 * margin, cols * cell + 2 * margin
        top, left = margin, margin
    else:
        height, width = shape
        top, left = (height - rows * cell) // 2, (width - cols * cell) // 2
        if top < jitter + stroke or left < jitter + stroke:
            raise ValueError(f"grid does not fit in {shape}")
    vr = top + cell * np.arange(rows + 1)[:, None] + rng.integers(-jitter, jitter + 1, (rows + 1, cols + 1))
    vc = left + cell * np.arange(cols + 1)[None, :] + rng.integers(-jitter, jitter + 1, (rows + 1, cols + 1))

    def pt(i, j) -> Point:
        x, y = raster_to_map(int(vr[i, j]), int(vc[i, j]), height)
        return (float(x), float(y))

    cats = []
    for i in range(rows + 1):
        for j in range(cols):
            cats.append(Category(len(cats) + 1, [pt(i, j), pt(i, j + 1)]))
    for j in range(cols + 1):
        for i in range(rows):
            cats.append(Category(len(cats) + 1, [pt(i, j), pt(i + 1, j)]))
    centerlines = VectorMap(cats)
    ink = rasterize(centerlines, width, height, stroke)

    rings, numbers, boxes = [], [], []
    for i in range(rows):
        for j in range(cols):
            ring = [pt(i, j), pt(i + 1, j), pt(i + 1, j + 1), pt(i, j + 1), pt(i, j)]
            if signed_area(ring) < 0:
                ring = ring[::-1]
            rings.append(ring)
            text = str(i * cols + j + 1)
            numbers.append(text)
            if not digits:
                continue
            glyph = render_number(text, font)
            cr = int(round(vr[i:i + 2, j:j + 2].mean()))
            cc = int(round(vc[i:i + 2, j:j + 2].mean()))
            r0, c0 = cr - glyph.shape[0] // 2, cc - glyph.shape[1] // 2
            ink[r0:r0 + glyph.shape[0], c0:c0 + glyph.shape[1]] |= glyph
            boxes.append((r0, c0, r0 + glyph.shape[0] - 1, c0 + glyph.shape[1] - 1))
    img = np.where(ink, 0, 255).astype(np.uint8)
    return img, SyntheticTruth(rings, numbers, centerlines, boxes)
