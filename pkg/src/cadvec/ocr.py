"""Digit recognition behind a 28x28-in, label+confidence-out interface.

The built-in recogniser is a nearest-centroid classifier over per-class mean
patches. Model files are little-endian::

    magic   4 bytes   b"CVDM"
    version uint32    1
    counts  10 x uint32   training samples per class
    data    10 x 784 float32  class templates, row-major, values in [0, 1]
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .glyphs import FONTS, render_digit
from .raster import PATCH_SIZE, connected_components, extract_digit_patch

MAGIC = b"CVDM"
VERSION = 1
N_CLASSES = 10
LOW_CONFIDENCE = 0.05


class ModelFormatError(ValueError):
    pass


@dataclass
class DigitDetection:
    label: int
    confidence: float
    position: tuple[float, float] = (0.0, 0.0)
    size: float = 0.0  # glyph height in pixels, 0 if unknown

    @property
    def low_confidence(self) -> bool:
        return self.confidence < LOW_CONFIDENCE


@dataclass
class RecognizerModel:
    templates: np.ndarray  # (10, 28, 28) float32 in [0, 1]
    counts: np.ndarray = field(default_factory=lambda: np.zeros(N_CLASSES, dtype=np.int64))
    temperature: float = 0.02


def _as_unit(patch) -> np.ndarray:
    arr = np.asarray(patch, dtype=np.float64)
    if arr.shape != (PATCH_SIZE, PATCH_SIZE):
        raise ValueError(f"digit patch must be {PATCH_SIZE}x{PATCH_SIZE}, got {arr.shape}")
    return arr / 255.0 if arr.max(initial=0) > 1.0 else arr


def train_baseline(samples) -> RecognizerModel:
    """Average the patches of each class into a template."""
    sums = np.zeros((N_CLASSES, PATCH_SIZE, PATCH_SIZE), dtype=np.float64)
    counts = np.zeros(N_CLASSES, dtype=np.int64)
    for patch, label in samples:
        label = int(label)
        if not 0 <= label < N_CLASSES:
            raise ValueError(f"label {label} outside 0..9")
        sums[label] += _as_unit(patch)
        counts[label] += 1
    missing = [d for d in range(N_CLASSES) if counts[d] == 0]
    if missing:
        raise ValueError(f"no training samples for labels {missing}")
    templates = (sums / counts[:, None, None]).astype(np.float32)
    return RecognizerModel(np.clip(templates, 0.0, 1.0), counts)


def distances(model: RecognizerModel, patch) -> np.ndarray:
    x = _as_unit(patch)
    diff = model.templates.astype(np.float64) - x[None]
    return (diff * diff).mean(axis=(1, 2))


def classify(model: RecognizerModel, patch) -> DigitDetection:
    """Nearest template by mean squared difference; ties go to the lower digit.

    Confidence is the gap between the two largest softmin weights of the
    distances, so it lies in [0, 1]. A blank patch gets confidence 0.
    """
    x = _as_unit(patch)
    d = distances(model, x)
    label = int(np.argmin(d))
    if not x.any():
        return DigitDetection(label, 0.0)
    w = np.exp(-(d - d.min()) / model.temperature)
    p = np.sort(w / w.sum())[::-1]
    return DigitDetection(label, float(p[0] - p[1]))


def save_model(model: RecognizerModel, path) -> None:
    data = MAGIC + struct.pack("<I", VERSION)
    data += struct.pack(f"<{N_CLASSES}I", *(int(c) for c in model.counts))
    data += model.templates.astype("<f4").tobytes()
    Path(path).write_bytes(data)


def load_model(path) -> RecognizerModel:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not a digit model (bad magic)")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise ModelFormatError(f"{path}: unsupported model version {version}")
    counts = np.array(struct.unpack_from(f"<{N_CLASSES}I", data, 8), dtype=np.int64)
    offset = 8 + 4 * N_CLASSES
    need = N_CLASSES * PATCH_SIZE * PATCH_SIZE * 4
    if len(data) - offset != need:
        raise ModelFormatError(f"{path}: expected {need} template bytes, found {len(data) - offset}")
    templates = np.frombuffer(data, dtype="<f4", offset=offset).reshape(N_CLASSES, PATCH_SIZE, PATCH_SIZE)
    return RecognizerModel(templates.astype(np.float32), counts)


# -- synthetic corpus ----------------------------------------------------------

def _jitter(glyph: np.ndarray, rng: np.random.Generator, p_add: float, p_del: float) -> np.ndarray:
    img = np.pad(glyph, 2)
    ink = img.copy()
    near = np.zeros_like(img)
    near[1:, :] |= ink[:-1, :]
    near[:-1, :] |= ink[1:, :]
    near[:, 1:] |= ink[:, :-1]
    near[:, :-1] |= ink[:, 1:]
    img |= near & ~ink & (rng.random(img.shape) < p_add)
    img &= ~(ink & (rng.random(img.shape) < p_del))
    return img


def synthetic_samples(per_font: int = 10, seed: int = 0, p_add: float = 0.08, p_del: float = 0.02,
                      fonts=FONTS):
    """Yield ``(patch, label)`` pairs: every font x digit, ``per_font`` noisy copies.

    Each copy gets random stroke pixels added and removed; only its largest
    component is kept, then it goes through :func:`extract_digit_patch` the
    same way digits cut from a map do.
    """
    rng = np.random.default_rng(seed)
    for font in fonts:
        for digit in range(N_CLASSES):
            base = render_digit(digit, font)
            for _ in range(per_font):
                img = _jitter(base, rng, p_add, p_del)
                comps = connected_components(img)
                if not comps:
                    continue
                comp = max(comps, key=lambda c: (c.area, -c.id))
                patch, _ = extract_digit_patch(img, comp)
                yield patch, digit


def baseline_model(seed: int = 0, per_font: int = 50) -> RecognizerModel:
    """Model trained on the built-in synthetic corpus (deterministic per seed)."""
    return train_baseline(synthetic_samples(per_font=per_font, seed=seed))


def confusion_matrix(model: RecognizerModel, samples) -> np.ndarray:
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for patch, label in samples:
        cm[int(label), classify(model, patch).label] += 1
    return cm
