"""Bitmap digit glyphs used to stamp synthetic maps and build OCR corpora.

Two 5x7 designs, rendered under ten font variants (scale, weight, slant).
Every rendered glyph is a single 8-connected component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_DESIGN_A = {
    "0": [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."],
    "1": ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."],
    "2": [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"],
    "3": ["#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."],
    "4": ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."],
    "5": ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."],
    "6": ["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."],
    "7": ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."],
    "8": [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."],
    "9": [".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."],
}

_DESIGN_B = {
    "0": [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
    "1": ["..#..", ".##..", "#.#..", "..#..", "..#..", "..#..", "..#.."],
    "2": [".###.", "#...#", "....#", "..##.", ".#...", "#....", "#####"],
    "3": [".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."],
    "4": ["#...#", "#...#", "#...#", "#####", "....#", "....#", "....#"],
    "5": ["#####", "#....", "#....", "####.", "....#", "....#", "####."],
    "6": [".###.", "#....", "#....", "####.", "#...#", "#...#", ".###."],
    "7": ["#####", "....#", "....#", "...#.", "..#..", "..#..", "..#.."],
    "8": [".###.", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", ".###."],
    "9": [".###.", "#...#", "#...#", ".####", "....#", "....#", ".###."],
}

DESIGNS = {"A": _DESIGN_A, "B": _DESIGN_B}


@dataclass(frozen=True)
class Font:
    design: str
    scale: int
    bold: bool = False
    slant: float = 0.0


FONTS = (
    Font("A", 2),
    Font("A", 3),
    Font("A", 2, bold=True),
    Font("A", 3, bold=True),
    Font("A", 2, slant=0.25),
    Font("B", 2),
    Font("B", 3),
    Font("B", 2, bold=True),
    Font("B", 3, bold=True),
    Font("B", 3, slant=0.2),
)


def render_digit(digit: int | str, font: Font = FONTS[0]) -> np.ndarray:
    """Boolean bitmap of one digit, ink = True."""
    rows = DESIGNS[font.design][str(digit)]
    base = np.array([[ch == "#" for ch in row] for row in rows], dtype=bool)
    img = np.kron(base, np.ones((font.scale, font.scale), dtype=bool))
    if font.bold:
        img = np.pad(img, ((0, 0), (0, 1)))
        img[:, 1:] |= img[:, :-1].copy()
    if font.slant:
        h, w = img.shape
        extra = int(round(font.slant * (h - 1)))
        out = np.zeros((h, w + extra), dtype=bool)
        prev = None
        for r in range(h):
            shift = int(round(font.slant * (h - 1 - r)))
            out[r, shift:shift + w] |= img[r]
            if prev is not None and prev != shift:
                # also draw at the previous row's offset so strokes stay 8-connected
                out[r, prev:prev + w] |= img[r]
            prev = shift
        img = out
    return img


def render_number(text: str, font: Font = FONTS[0], spacing: int = 3) -> np.ndarray:
    """Digits side by side, bottom-aligned, ``spacing`` background columns apart."""
    glyphs = [render_digit(ch, font) for ch in text]
    height = max(g.shape[0] for g in glyphs)
    width = sum(g.shape[1] for g in glyphs) + spacing * (len(glyphs) - 1)
    out = np.zeros((height, width), dtype=bool)
    x = 0
    for g in glyphs:
        out[height - g.shape[0]:, x:x + g.shape[1]] = g
        x += g.shape[1] + spacing
    return out
